"""Partition serialization: raw dumps, PGM previews, PNG rendering.

The dump format is a fixed 32-byte little-endian header followed by the
one-hot indicator payload as float64:

    magic    4 bytes  b"MBOF"
    version  uint32   currently 1
    dim      uint32
    n        uint32   cells per axis
    P        uint32   phase count
    reserved uint32   zero
    period   float64

Payload is P * n^dim float64 values in C order.  Indicators rather than
labels so a dump can hold non-binary fields if the need ever arises;
read_dump recovers labels by argmax.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import ValidationError
from .grid import Partition, make_grid

MAGIC = b"MBOF"
VERSION = 1
_HEADER = struct.Struct("<4s5Id")


def write_dump(partition, path):
    grid = partition.grid
    indicators = partition.phase_indicators()
    header = _HEADER.pack(
        MAGIC, VERSION, grid.dim, grid.n, partition.phase_count, 0, grid.period
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(indicators, dtype="<f8").tobytes())


def read_dump(path):
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise ValidationError(f"dump file too short: {path}")
        magic, version, dim, n, phase_count, _, period = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise ValidationError(f"bad magic {magic!r} in {path}")
        if version != VERSION:
            raise ValidationError(f"unsupported dump version {version}")
        grid = make_grid(int(n), int(dim), float(period))
        expected = phase_count * grid.num_cells
        payload = np.frombuffer(fh.read(), dtype="<f8")
    if payload.size != expected:
        raise ValidationError(
            f"dump payload has {payload.size} values, expected {expected}"
        )
    fields = payload.reshape((phase_count,) + grid.shape)
    labels = np.argmax(fields, axis=0).astype(np.uint8)
    return Partition(grid=grid, phase_count=int(phase_count), labels=labels)


def write_pgm(partition, path):
    """Binary PGM (P5); labels mapped onto 0..255."""
    if partition.grid.dim != 2:
        raise ValidationError("PGM output needs a 2-d partition")
    p = partition.phase_count
    scale = 255.0 / max(p - 1, 1)
    pixels = np.round(partition.labels.astype(np.float64) * scale).astype(np.uint8)
    n = partition.grid.n
    with open(path, "wb") as fh:
        fh.write(f"P5\n{n} {n}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def write_png(partition, path):
    if partition.grid.dim != 2:
        raise ValidationError("PNG output needs a 2-d partition")
    import matplotlib

    matplotlib.use("Agg", force=False)
    from matplotlib import image as mpimage

    p = partition.phase_count
    mpimage.imsave(
        path,
        partition.labels,
        vmin=0,
        vmax=max(p - 1, 1),
        cmap="viridis",
        origin="lower",
    )
