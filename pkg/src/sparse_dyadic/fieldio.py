"""Field files, JSON reports and CSV tables.

A field file is a JSON header::

    {"grid": {...}, "n": 2, "q": 2.0, "encoding": "f8le", "payload": "f.bin"}

next to its payload: raw little-endian float64 in row-major ``(ncell, n)``
order, or a headerless CSV with one row per cell.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .sampled_field import GridSpec, SampledFunction, format_q

ENCODINGS = ("f8le", "csv")


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, non-finite floats as strings."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def read_json(path: Path):
    return json.loads(Path(path).read_text())


def write_csv(path: Path, rows: list[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if rows:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            for r in rows:
                writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return path


def write_field(path: Path, f: SampledFunction, encoding: str = "f8le") -> Path:
    """Write ``path`` (header) and its payload beside it; returns the header path."""
    if encoding not in ENCODINGS:
        raise ValueError(f"unknown encoding {encoding!r}")
    path = Path(path)
    payload = path.with_suffix(".bin" if encoding == "f8le" else ".csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    if encoding == "f8le":
        payload.write_bytes(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    else:
        np.savetxt(payload, f.values, delimiter=",", fmt="%.17g")
    header = {"grid": f.grid.to_json(), "n": f.n, "q": format_q(f.q), "encoding": encoding, "payload": payload.name}
    write_json(path, header)
    return path


def read_field(path: Path) -> SampledFunction:
    path = Path(path)
    header = read_json(path)
    try:
        grid = GridSpec.from_json(header["grid"])
        n = int(header["n"])
        encoding = header.get("encoding", "f8le")
        payload = path.parent / header["payload"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed field header {path}: {exc}") from exc
    if encoding == "f8le":
        raw = np.frombuffer(payload.read_bytes(), dtype="<f8")
        if raw.size != grid.ncell * n:
            raise ValueError(f"payload {payload} holds {raw.size} values, expected {grid.ncell * n}")
        values = raw.reshape(grid.ncell, n)
    elif encoding == "csv":
        values = np.loadtxt(payload, delimiter=",", ndmin=2)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    return SampledFunction(grid, values, header.get("q", 2.0))
