"""CSV and JSON writers with round-trip float precision."""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from dsrlab.errors import OutputError

SCHEMA_VERSION = 1


def format_value(value) -> str:
    """17 significant digits for floats, which round-trips any double."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Header plus one line per row, ``\\n`` terminated; no rows gives a header-only file."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"row of length {len(row)} under a {len(header)}-column header")
                w.writerow([format_value(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan; keep them readable as strings
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path: str | os.PathLike, payload: dict, config: dict | None = None) -> Path:
    """Write ``payload`` with ``schema_version`` and the run configuration attached."""
    path = Path(path)
    doc = {"schema_version": SCHEMA_VERSION, "config": config, **jsonable(payload)}
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            json.dump(jsonable(doc), fh, indent=2, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def read_json(path: str | os.PathLike) -> dict:
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)


def field_rows(field):
    """Snapshot rows ``(x, Re, Im, |psi|^2)``; spinors give both components then the density."""
    x = field.grid.x
    if hasattr(field, "upper"):
        header = ("x", "re_upper", "im_upper", "re_lower", "im_lower", "density")
        rows = zip(x, field.upper.real, field.upper.imag, field.lower.real, field.lower.imag, field.density)
    else:
        header = ("x", "re", "im", "density")
        rows = zip(x, field.values.real, field.values.imag, field.density)
    return header, rows


OBSERVABLE_COLUMNS = ("t", "norm", "mean_x", "var_x")
