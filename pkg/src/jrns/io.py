"""File formats: matrix CSV, tabular CSV, JSON metadata, config files.

Pure matrices are written comma-delimited without a header at 17 significant
digits (lossless round-trip of doubles); bit matrices use plain integers.
Tabular outputs (intervals, traces, edge lists) carry a header row.  Config
files are flat ``key = value`` lines whose keys mirror the Hyperparams field
names; unknown keys are hard errors.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from .model import Hyperparams

FLOAT_FMT = "%.17g"


def write_matrix(path, a, ints: bool = False) -> None:
    a = np.atleast_2d(np.asarray(a))
    fmt = "%d" if ints else FLOAT_FMT
    np.savetxt(path, a, fmt=fmt, delimiter=",")


def read_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if np.isnan(v):
            return ""
        return FLOAT_FMT % v
    if isinstance(v, (np.floating,)):
        return _cell(float(v))
    return str(v)


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def read_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


_HP_FIELDS = {f.name: f.type for f in dataclasses.fields(Hyperparams)}
_BOOL_FIELDS = {"adaptive_q", "adaptive_tau", "adaptive_lambda",
                "exact_mh", "per_entry_hyper"}
_INT_FIELDS = {"thin", "burnin", "iters", "seed"}


def _coerce(key: str, raw: str):
    if key in _BOOL_FIELDS:
        low = raw.strip().lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"config key {key!r} expects a boolean, got {raw!r}")
    if key in _INT_FIELDS:
        return int(raw)
    return float(raw)


def parse_config(path) -> dict:
    """Parse a flat ``key = value`` file into Hyperparams overrides."""
    overrides = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _HP_FIELDS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        overrides[key] = _coerce(key, raw.strip())
    return overrides
