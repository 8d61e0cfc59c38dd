"""Binary checkpoints and report persistence.

Checkpoint layout (all little-endian)::

    offset  size  field
    0       8     magic  b"FNLS4CKP"
    8       4     uint32 format version (1)
    12      4     uint32 dim
    16      4     uint32 points_per_axis
    20      4     uint32 reserved (0)
    24      8     float64 box_length
    32      8     float64 time
    40      8     float64 dt
    48      8     uint64 step_count
    56      16*P^n  complex field, float64 (re, im) interleaved, row-major

Reports are written as ``<stem>.json`` plus one ``<stem>_<curve>.csv`` per
curve table.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .spectral import ComplexField, make_grid

__all__ = [
    "CHECKPOINT_MAGIC",
    "CHECKPOINT_VERSION",
    "CheckpointError",
    "write_checkpoint",
    "read_checkpoint",
    "inspect_checkpoint",
    "write_report",
]

CHECKPOINT_MAGIC = b"FNLS4CKP"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<8sIIIIdddQ")


class CheckpointError(ValueError):
    pass


def write_checkpoint(path, field: ComplexField, time: float = 0.0, dt: float = 0.0, step_count: int = 0) -> Path:
    grid = field.grid
    header = _HEADER.pack(
        CHECKPOINT_MAGIC,
        CHECKPOINT_VERSION,
        grid.dim,
        grid.points_per_axis,
        0,
        grid.box_length,
        float(time),
        float(dt),
        int(step_count),
    )
    data = np.ascontiguousarray(field.physical(), dtype="<c16")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes(order="C"))
    return path


def inspect_checkpoint(path) -> dict:
    """Decode and validate the header only."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated header")
    magic, version, dim, p, _, L, time, dt, steps = _HEADER.unpack(raw)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    return {
        "version": version,
        "dim": dim,
        "points_per_axis": p,
        "box_length": L,
        "time": time,
        "dt": dt,
        "step_count": steps,
        "payload_bytes": 16 * p**dim,
    }


def read_checkpoint(path) -> tuple[ComplexField, dict]:
    meta = inspect_checkpoint(path)
    p, dim = meta["points_per_axis"], meta["dim"]
    grid = make_grid(dim, p, meta["box_length"], require_power_of_two=False)
    with open(path, "rb") as fh:
        fh.seek(_HEADER.size)
        payload = fh.read()
    if len(payload) != meta["payload_bytes"]:
        raise CheckpointError(f"{path}: payload has {len(payload)} bytes, expected {meta['payload_bytes']}")
    values = np.frombuffer(payload, dtype="<c16").astype(np.complex128).reshape(grid.shape)
    return ComplexField(grid, values), meta


def write_report(report, outdir, stem: str | None = None) -> list[Path]:
    """Write ``report`` (an :class:`~fourthnls.experiments.ExperimentReport`) as JSON + CSV."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = stem or report.kind.replace("-", "_")
    paths = [outdir / f"{stem}.json"]
    paths[0].write_text(report.to_json(), encoding="utf-8")
    for name, table in report.curves.items():
        p = outdir / f"{stem}_{name}.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(table["columns"])
            for row in table["rows"]:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        paths.append(p)
    return paths
