"""Reading and writing node fields and reports.

Node order in files is x-fastest.  Two field formats:

* CSV with header ``node,x[,y],value``.
* Raw little-endian binary: a 32-byte header (magic ``WGF1``, uint32 dim,
  two uint32 counts, two float64 spacings; unused slots are zero)
  followed by the float64 values.
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .fiber import FiberGrid

__all__ = [
    "MAGIC",
    "write_field_csv",
    "read_field_csv",
    "write_field_bin",
    "read_field_bin",
    "write_table_csv",
    "write_json",
    "read_json",
]

MAGIC = b"WGF1"
_HEADER = struct.Struct("<4sIIIdd")  # 4 + 3*4 + 2*8 = 32 bytes


def _flat(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=float).ravel(order="F")


def write_field_csv(path, grid: FiberGrid, values) -> Path:
    path = Path(path)
    values = grid.check(values)
    names = ["x", "y"][: grid.dim]
    coords = [_flat(c) for c in grid.coords]
    vals = _flat(values)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", *names, "value"])
        for k in range(grid.size):
            w.writerow([k, *(repr(float(c[k])) for c in coords), repr(float(vals[k]))])
    return path


def read_field_csv(path, grid: FiberGrid) -> np.ndarray:
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.size != grid.size:
        raise ValueError(f"{path}: {data.size} rows for a grid of {grid.size} nodes")
    order = np.argsort(data["node"])
    return data["value"][order].reshape(grid.shape, order="F")


def write_field_bin(path, grid: FiberGrid, values) -> Path:
    path = Path(path)
    values = grid.check(values)
    counts = list(grid.counts) + [0] * (2 - grid.dim)
    spacing = list(grid.spacing) + [0.0] * (2 - grid.dim)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, grid.dim, counts[0], counts[1], spacing[0], spacing[1]))
        fh.write(_flat(values).astype("<f8").tobytes())
    return path


def read_field_bin(path) -> tuple[dict, np.ndarray]:
    """Returns (header, values) with values shaped (nx[, ny])."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, dim, nx, ny, hx, hy = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if dim not in (1, 2):
        raise ValueError(f"{path}: unsupported dimension {dim}")
    counts = (nx,) if dim == 1 else (nx, ny)
    vals = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if vals.size != int(np.prod(counts)):
        raise ValueError(f"{path}: expected {int(np.prod(counts))} values, found {vals.size}")
    header = {"dim": dim, "counts": counts, "spacing": (hx,) if dim == 1 else (hx, hy)}
    return header, vals.reshape(counts, order="F").astype(float)


def write_table_csv(path, names, table) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in np.asarray(table):
            w.writerow([repr(float(v)) for v in row])
    return path


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
