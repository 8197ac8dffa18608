"""``dsrlab`` command line.

Every subcommand prints a JSON summary on stdout. With ``--out DIR`` it also
writes the report (JSON) and any series (CSV) there. The exit status is 0 when
every verdict passes, 1 when some verdict fails (names on stderr) and 2 for
usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from dsrlab import experiments as ex
from dsrlab.boost import CSV_COLUMNS, PhaseSpacePoint, casimir_drift, integrate_flow
from dsrlab.config import RunConfig, thread_count
from dsrlab.errors import ConfigError, DSRError, OutputError
from dsrlab.kinematics import (
    Branch,
    Model,
    effective_masses,
    group_velocity,
    particle_velocity,
    solve_dispersion,
)
from dsrlab.output import OBSERVABLE_COLUMNS, field_rows, jsonable, write_csv, write_json
from dsrlab.series import expand_energy, reciprocity_report
from dsrlab.waves import Equation

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

# flag -> (section, key); section None means a top-level key
OVERRIDES = {
    "m": ("physics", "m"), "c": ("physics", "c"), "k": ("physics", "k"),
    "model": (None, "model"), "branch": (None, "branch"),
    "n": ("grid", "n"), "length": ("grid", "length"),
    "p": ("experiment", "p"), "p0": ("experiment", "p0"), "sigma": ("experiment", "sigma"),
    "t_max": ("experiment", "t_max"), "frames": ("experiment", "frames"),
    "k_list": ("experiment", "k_list"), "split": ("experiment", "split"),
    "samples": ("experiment", "sample_count"), "order": ("experiment", "order"),
    "equation": ("experiment", "equation"), "dirac_model": ("experiment", "dirac_model"),
    "generator": ("boost", "generator"), "direction": ("boost", "direction"),
    "lambda_max": ("boost", "lambda_max"), "step": ("boost", "step"),
    "out": ("output", "directory"), "formats": ("output", "formats"),
}


class Result:
    """What a subcommand produced: a JSON payload, CSV tables and verdicts."""

    def __init__(self, name: str, payload: dict):
        self.name = name
        self.payload = payload
        self.tables: dict[str, tuple] = {}
        self.failures: list[str] = []


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--config", type=Path, help="JSON run configuration")
    g.add_argument("--m", type=float, help="rest mass")
    g.add_argument("--c", type=float, help="speed of light")
    g.add_argument("--k", type=float, help="deformation scale (energy)")
    g.add_argument("--model", help="sr, ac-exact, ac-truncated or ms")
    g.add_argument("--branch", help="particle or antiparticle")
    g.add_argument("--p", type=float, help="momentum")
    g.add_argument("--p0", type=float, help="packet central momentum")
    g.add_argument("--sigma", type=float, help="packet width")
    g.add_argument("--t-max", dest="t_max", type=float, help="evolution time")
    g.add_argument("--frames", type=int, help="number of output frames")
    g.add_argument("--n", type=int, help="grid points (power of two)")
    g.add_argument("--length", type=float, help="box length")
    g.add_argument("--k-list", dest="k_list", type=float, nargs="+", help="k values for convergence")
    g.add_argument("--split", type=float, help="assumed relative mass split for the k bound")
    g.add_argument("--samples", type=int, help="sample count for identity checks")
    g.add_argument("--order", type=int, help="series order")
    g.add_argument("--equation", help="kg or dirac")
    g.add_argument("--dirac-model", dest="dirac_model", help="ordinary or modified")
    g.add_argument("--generator", help="modified or ordinary boost")
    g.add_argument("--direction", type=int, help="boost axis 1, 2 or 3")
    g.add_argument("--lambda", dest="lambda_max", type=float, help="final rapidity")
    g.add_argument("--step", type=float, help="RK4 rapidity step")
    g.add_argument("--out", help="output directory for JSON/CSV files")
    g.add_argument("--formats", nargs="+", choices=["json", "csv"], help="file formats to write")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="dsrlab", description="Deformed-relativity kinematics lab")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)
    sub.add_parser("dispersion", parents=[common], help="energy and velocities at one momentum")
    sub.add_parser("masses", parents=[common], help="rest energies, inertial masses and CPT numbers")
    sub.add_parser("boost", parents=[common], help="boost-flow trajectory and Casimir drift")
    sub.add_parser("expand", parents=[common], help="series coefficients of E(p)")
    sub.add_parser("evolve", parents=[common], help="wavepacket evolution and observables")
    e = sub.add_parser("experiment", parents=[common], help="run a named experiment")
    e.add_argument("name", choices=sorted(ex.EXPERIMENTS) + ["all"],
                   type=lambda s: s.replace("-", "_"))
    sub.add_parser("table", parents=[common], help="velocity comparison table")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    doc = RunConfig.load(args.config).to_dict() if args.config else RunConfig().to_dict()
    for flag, (section, key) in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if section is None:
            doc[key] = value
        else:
            doc[section][key] = value
    return RunConfig.from_dict(doc)


def _p(cfg: RunConfig, default: float) -> float:
    return default if cfg.experiment.p is None else float(cfg.experiment.p)


def cmd_dispersion(cfg: RunConfig) -> Result:
    params, model, branch = cfg.params, cfg.model_tag, cfg.branch_tag
    p = _p(cfg, 0.05)
    E = solve_dispersion(params, p, branch, model)
    res = Result("dispersion", {
        "model": model.value, "branch": branch.name.lower(), "p": p, "E": E,
        "group_velocity": group_velocity(params, p, branch, model),
        "particle_velocity": particle_velocity(params, p, E),
    })
    return res


def cmd_masses(cfg: RunConfig) -> Result:
    params, model = cfg.params, cfg.model_tag
    rows = []
    for branch in Branch:
        em = effective_masses(params, branch, model)
        rows.append({"branch": branch.name.lower(), "rest_energy": em.rest_energy,
                     "inertial_mass": em.inertial_mass})
    cpt = ex.run_cpt_report(params, cfg.experiment.split)
    res = Result("masses", {"model": model.value, "masses": rows, "cpt": cpt.as_dict()})
    res.tables["masses"] = (("branch", "rest_energy", "inertial_mass"),
                            [(r["branch"], r["rest_energy"], r["inertial_mass"]) for r in rows])
    res.failures = cpt.failing()
    return res


def cmd_boost(cfg: RunConfig) -> Result:
    params, b = cfg.params, cfg.boost
    p = _p(cfg, 0.0)
    momentum = [0.0, 0.0, 0.0]
    momentum[b.direction - 1] = p
    E = solve_dispersion(params, p, cfg.branch_tag, Model.AC_EXACT)
    traj = integrate_flow(params, PhaseSpacePoint(E, tuple(momentum)), b.direction, cfg.generator,
                          b.lambda_max, b.step)
    drift = casimir_drift(traj)
    end = traj.end
    res = Result("boost", {
        "generator": cfg.generator.value, "direction": b.direction, "lambda_max": b.lambda_max,
        "step": b.step, "start": {"E": E, "p": momentum}, "end": {"E": end.E, "p": list(end.p)},
        "casimir_drift": drift,
    })
    res.tables["trajectory"] = (CSV_COLUMNS, traj.rows())
    if cfg.generator.value == "modified" and drift > 1e-9:
        res.failures.append("boost.casimir_drift")
    return res


def cmd_expand(cfg: RunConfig) -> Result:
    params, model, branch = cfg.params, cfg.model_tag, cfg.branch_tag
    series = expand_energy(params, branch, model, cfg.experiment.order)
    payload = {"model": model.value, "branch": branch.name.lower(),
               "coefficients": [float(c) for c in series.coefficients]}
    payload["reciprocity"] = reciprocity_report(params).as_dict()
    res = Result("expand", payload)
    res.tables["coefficients"] = (("power", "coefficient"), list(enumerate(series.coefficients)))
    return res


def cmd_evolve(cfg: RunConfig) -> Result:
    params, grid, e = cfg.params, cfg.grid_obj, cfg.experiment
    branch, equation = cfg.branch_tag, cfg.equation
    model = cfg.model_tag if equation is Equation.KLEIN_GORDON else cfg.dirac_model
    x0 = ex.start_position(params, e.p0, e.t_max, branch)
    ex.check_packet_fits(grid, e.sigma, x0)
    times = ex.frame_times(e.t_max, e.frames)
    packet = ex.gaussian_packet(grid, x0, e.sigma, e.p0)
    run, fields = ex.evolve_packet(params, packet, times, equation, branch, model)
    drift = float(np.max(np.abs(run.norm - run.norm[0])))
    res = Result("evolve", {
        "equation": equation.value, "model": model.value, "branch": branch.name.lower(),
        "final": {"norm": run.norm[-1], "mean_x": run.mean_x[-1], "var_x": run.var_x[-1]},
        "velocity": ex.fit_velocity(times, run.mean_x) if e.frames >= 4 else None,
        "norm_drift": drift,
    })
    res.tables["observables"] = (OBSERVABLE_COLUMNS, run.rows())
    res.tables["snapshot"] = field_rows(fields[-1])
    if drift > ex.NORM_DRIFT_TOL:
        res.failures.append("evolve.norm_drift")
    return res


def _run_experiment(name: str, cfg: RunConfig) -> ex.ExperimentReport:
    params, e = cfg.params, cfg.experiment
    if name == "mass_extraction":
        return ex.run_mass_extraction(params, e.p0, e.sigma, e.t_max, cfg.grid_obj, cfg.equation,
                                      cfg.branch_tag, e.frames)
    if name == "schrodinger_equivalence":
        return ex.run_schrodinger_equivalence(params, e.p0, e.sigma, e.t_max, cfg.grid_obj,
                                              cfg.branch_tag, cfg.equation, e.frames)
    if name == "velocity_table":
        return ex.run_velocity_table(params, e.p0)
    if name == "convergence_study":
        return ex.run_convergence_study(params, _p(cfg, 0.3), e.k_list)
    if name == "cpt_report":
        return ex.run_cpt_report(params, e.split)
    if name == "dirac_consistency":
        return ex.run_dirac_consistency(params, e.sample_count, _p(cfg, 0.1))
    raise ConfigError(f"unknown experiment {name!r}")


def _report_tables(report: ex.ExperimentReport) -> dict:
    tables = {}
    for key, value in report.series.items():
        if isinstance(value, ex.PacketRun):
            tables[key] = (OBSERVABLE_COLUMNS, value.rows())
        elif key == "density_gap":
            tables[key] = (("t", "density_l2"), value)
        elif key.startswith("errors_"):
            tables[key] = (("k", "error"), value)
    return tables


def cmd_experiment(cfg: RunConfig, name: str) -> Result:
    names = sorted(ex.EXPERIMENTS) if name == "all" else [name]
    with ThreadPoolExecutor(max_workers=min(thread_count(), len(names))) as pool:
        reports = list(pool.map(lambda n: _run_experiment(n, cfg), names))
    if len(reports) == 1:
        res = Result(names[0], reports[0].as_dict())
    else:
        res = Result("experiments", {"reports": [r.as_dict() for r in reports]})
    for r in reports:
        res.failures.extend(r.failing())
        for key, table in _report_tables(r).items():
            res.tables[f"{r.name}_{key}"] = table
    return res


def cmd_table(cfg: RunConfig) -> Result:
    report = ex.run_velocity_table(cfg.params, _p(cfg, cfg.experiment.p0))
    res = Result("velocity_table", report.as_dict())
    m = report.measurements
    res.tables["table"] = (("model", "group_velocity", "particle_velocity"),
                           [("ac-truncated", m["ac_group"], m["ac_particle"]),
                            ("ms", m["ms_group"], m["ms_particle"])])
    res.failures = report.failing()
    return res


def write_outputs(result: Result, cfg: RunConfig) -> list[Path]:
    out = cfg.output
    if out.directory is None:
        return []
    root = Path(out.directory)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {root}: {exc.strerror}") from exc
    written = []
    if "json" in out.formats:
        written.append(write_json(root / f"{result.name}.json", result.payload, cfg.to_dict()))
    if "csv" in out.formats:
        for key, (header, rows) in result.tables.items():
            written.append(write_csv(root / f"{key}.csv", header, rows))
    return written


def _dumps(payload) -> str:
    return json.dumps(jsonable(payload), indent=2)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        command = args.command
        if command == "experiment":
            result = cmd_experiment(cfg, args.name)
        else:
            result = {
                "dispersion": cmd_dispersion, "masses": cmd_masses, "boost": cmd_boost,
                "expand": cmd_expand, "evolve": cmd_evolve, "table": cmd_table,
            }[command](cfg)
        written = write_outputs(result, cfg)
    except ConfigError as exc:
        print(f"dsrlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DSRError as exc:
        print(f"dsrlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(_dumps({"command": result.name, **result.payload, "files": [str(p) for p in written]}))
    if result.failures:
        print("failing verdicts: " + ", ".join(result.failures), file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK
