"""Deterministic text outputs: CSV with a provenance header and JSON sidecars."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def config_hash(config: Mapping) -> str:
    blob = json.dumps(_plain(dict(config)), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def header_lines(experiment: str, config: Mapping | None) -> list[str]:
    lines = [f"# adqc-sim {__version__}", f"# experiment: {experiment}"]
    if config is not None:
        lines.append(f"# config_sha256: {config_hash(config)}")
    return lines


def _fmt(x) -> str:
    if isinstance(x, (str, bool, np.bool_)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, columns: Mapping[str, Sequence], experiment: str = "",
              config: Mapping | None = None) -> Path:
    """Write equal-length ``columns`` with a comment header block."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    n = {c.shape[0] for c in cols}
    if len(n) > 1:
        raise ValueError("columns must share one length")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        for line in header_lines(experiment, config):
            fh.write(line + "\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    """Read a file written by :func:`write_csv` into float columns."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    names = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return {n: data[:, i] for i, n in enumerate(names)}


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_trajectory(path, t, observables: Mapping[str, Sequence], params: Mapping) -> Path:
    """``(t_ns, observables...)`` table plus a ``.json`` sidecar with ``params``."""
    path = Path(path)
    write_csv(path, {"t_ns": t, **observables}, "trajectory", params)
    write_json(path.with_suffix(".json"), {"version": __version__, "params": params})
    return path
