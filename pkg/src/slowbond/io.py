"""Flat-file formats for trajectories and density fields.

Packed snapshot layout (little endian): ``int64 N``, ``float64 T``,
``int64 count``, then ``count`` records of ``float64 time`` followed by
``ceil(N/8)`` bytes of occupancies packed with ``numpy.packbits``.
"""
from __future__ import annotations

import csv
import struct

import numpy as np

from .fields import DensityField, cell_centers
from .lattice import Trajectory

_HEADER = struct.Struct("<qdq")


def write_snapshots_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "site", "occupancy"])
        for t, row in zip(traj.observe_at, traj.snapshots):
            ts = repr(float(t))
            for x, v in enumerate(row):
                w.writerow([ts, x, int(v)])


def read_snapshots_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return np.empty(0), np.empty((0, 0), dtype=np.uint8)
    times, first = np.unique(data[:, 0], return_index=True)
    order = np.argsort(first)
    times = times[order]
    n = int(data[:, 1].max()) + 1
    snaps = data[:, 2].reshape(times.size, n).astype(np.uint8)
    return times, snaps


def write_snapshots_packed(traj: Trajectory, path) -> None:
    n = traj.spec.n
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(n, float(traj.spec.horizon), len(traj.observe_at)))
        for t, row in zip(traj.observe_at, traj.snapshots):
            fh.write(struct.pack("<d", float(t)))
            fh.write(np.packbits(row.astype(np.uint8)).tobytes())


def read_snapshots_packed(path):
    """``(N, T, times, snapshots)`` from a packed snapshot file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    n, T, count = _HEADER.unpack_from(raw, 0)
    width = (n + 7) // 8
    pos = _HEADER.size
    times = np.empty(count)
    snaps = np.empty((count, n), dtype=np.uint8)
    for i in range(count):
        times[i] = struct.unpack_from("<d", raw, pos)[0]
        pos += 8
        bits = np.frombuffer(raw, dtype=np.uint8, count=width, offset=pos)
        snaps[i] = np.unpackbits(bits)[:n]
        pos += width
    if pos != len(raw):
        raise ValueError("trailing bytes in packed snapshot file")
    return n, T, times, snaps


def write_density_csv(rho: DensityField, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "value"])
        for u, v in zip(cell_centers(rho.m), rho.values):
            w.writerow([repr(float(u)), repr(float(v))])


def read_density_csv(path) -> DensityField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return DensityField(data[:, 1])


def write_rows_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
