"""Run configuration: a nested JSON document, validated in full before anything runs.

Layout (every section and key optional, defaults shown by ``RunConfig().to_dict()``)::

    {"physics": {"m": 1, "c": 1, "k": 10},
     "model": "ac-truncated", "branch": "particle",
     "grid": {"n": 4096, "length": 800},
     "experiment": {"p": null, "p0": 0.05, "sigma": 20, "t_max": 2000, "frames": 81, ...},
     "boost": {"generator": "modified", "direction": 1, "lambda_max": 1, "step": 0.001},
     "output": {"directory": null, "formats": ["json", "csv"]}}
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from dsrlab.boost import MAX_RAPIDITY, Generator
from dsrlab.errors import ConfigError, DSRError
from dsrlab.kinematics import Branch, Model, PhysParams
from dsrlab.waves import DiracModel, Equation, Grid1D

FORMATS = ("json", "csv")


@dataclass
class PhysicsSection:
    m: float = 1.0
    c: float = 1.0
    k: float = 10.0


@dataclass
class GridSection:
    n: int = 4096
    length: float = 800.0


@dataclass
class ExperimentSection:
    p: float | None = None
    p0: float = 0.05
    sigma: float = 20.0
    t_max: float = 2000.0
    frames: int = 81
    k_list: list = field(default_factory=lambda: [10.0, 20.0, 40.0, 80.0])
    split: float | None = None
    sample_count: int = 1000
    order: int = 4
    equation: str = "kg"
    dirac_model: str = "modified"


@dataclass
class BoostSection:
    generator: str = "modified"
    direction: int = 1
    lambda_max: float = 1.0
    step: float = 1e-3


@dataclass
class OutputSection:
    directory: str | None = None
    formats: list = field(default_factory=lambda: list(FORMATS))


SECTIONS = {
    "physics": PhysicsSection,
    "grid": GridSection,
    "experiment": ExperimentSection,
    "boost": BoostSection,
    "output": OutputSection,
}


@dataclass
class RunConfig:
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    model: str = "ac-truncated"
    branch: str = "particle"
    grid: GridSection = field(default_factory=GridSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    boost: BoostSection = field(default_factory=BoostSection)
    output: OutputSection = field(default_factory=OutputSection)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        cfg = cls()
        for key, value in doc.items():
            if key in SECTIONS:
                if not isinstance(value, dict):
                    raise ConfigError(f"section {key!r} must be an object")
                section = getattr(cfg, key)
                names = {f.name for f in dataclasses.fields(section)}
                for sub, v in value.items():
                    if sub not in names:
                        raise ConfigError(f"unknown key {key}.{sub!r}")
                    setattr(section, sub, v)
            elif key in ("model", "branch"):
                setattr(cfg, key, value)
            elif key == "schema_version":
                continue
            else:
                raise ConfigError(f"unknown key {key!r}")
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | os.PathLike) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # typed views; each raises a named error for bad input

    @property
    def params(self) -> PhysParams:
        ph = self.physics
        return PhysParams(_number("physics.m", ph.m), _number("physics.c", ph.c), _number("physics.k", ph.k))

    @property
    def model_tag(self) -> Model:
        return Model.parse(self.model)

    @property
    def branch_tag(self) -> Branch:
        return Branch.parse(self.branch)

    @property
    def grid_obj(self) -> Grid1D:
        n = self.grid.n
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        return Grid1D(n, _number("grid.length", self.grid.length))

    @property
    def equation(self) -> Equation:
        return Equation.parse(self.experiment.equation)

    @property
    def dirac_model(self) -> DiracModel:
        return DiracModel.parse(self.experiment.dirac_model)

    @property
    def generator(self) -> Generator:
        return Generator.parse(self.boost.generator)

    def validate(self) -> "RunConfig":
        """Check every section; raises :class:`ConfigError` naming the first bad field."""
        try:
            self.params
            self.model_tag
            self.branch_tag
            self.grid_obj
            self.equation
            self.dirac_model
            self.generator
        except ConfigError:
            raise
        except DSRError as exc:
            raise ConfigError(str(exc)) from exc
        ex = self.experiment
        if ex.p is not None:
            _number("experiment.p", ex.p)
        for name in ("p0", "t_max"):
            _number(f"experiment.{name}", getattr(ex, name))
        if ex.t_max < 0:
            raise ConfigError("experiment.t_max must be >= 0")
        if not _number("experiment.sigma", ex.sigma) > 0:
            raise ConfigError("experiment.sigma must be positive")
        _integer("experiment.frames", ex.frames, 2)
        _integer("experiment.sample_count", ex.sample_count, 1)
        _integer("experiment.order", ex.order, 2)
        if not isinstance(ex.k_list, list) or len(ex.k_list) < 2:
            raise ConfigError("experiment.k_list must be a list of at least two values")
        for k in ex.k_list:
            if not _number("experiment.k_list", k) > 0:
                raise ConfigError("experiment.k_list entries must be positive")
        if ex.split is not None and not _number("experiment.split", ex.split) > 0:
            raise ConfigError("experiment.split must be positive")
        b = self.boost
        if b.direction not in (1, 2, 3):
            raise ConfigError(f"boost.direction must be 1, 2 or 3, got {b.direction!r}")
        if not _number("boost.step", b.step) > 0:
            raise ConfigError("boost.step must be positive")
        lam = _number("boost.lambda_max", b.lambda_max)
        if not b.step <= lam <= MAX_RAPIDITY:
            raise ConfigError(f"boost.lambda_max must lie in [step, {MAX_RAPIDITY}]")
        out = self.output
        if out.directory is not None and not isinstance(out.directory, str):
            raise ConfigError("output.directory must be a string or null")
        if not isinstance(out.formats, list) or any(f not in FORMATS for f in out.formats):
            raise ConfigError(f"output.formats must be a list drawn from {FORMATS}")
        return self


def _number(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _integer(name: str, value, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def thread_count() -> int:
    """Worker threads from ``DSRLAB_THREADS``, defaulting to the usable CPU count."""
    raw = os.environ.get("DSRLAB_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"DSRLAB_THREADS must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ConfigError(f"DSRLAB_THREADS must be a positive integer, got {raw!r}")
        return n
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1
