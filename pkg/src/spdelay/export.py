"""Solution export: CSV and the compact SPDD binary dump.

SPDD layout (little-endian): magic ``b"SPDD"``, version byte, uint32 number of
time levels R, uint32 number of nodes C, then R level times, C node
coordinates and R*C values row by row, all float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SPDD"
VERSION = 1
_HEADER = struct.Struct("<4sBII")


class FormatError(ValueError):
    pass


def write_solution_csv(field_, path) -> None:
    """Header ``t, x_0 .. x_N``; one row per level t_n, n = -m_tau .. M."""
    x = field_.mesh.nodes
    table = np.column_stack([field_.times, field_.values])
    header = ",".join(["t"] + [repr(float(v)) for v in x])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")


@dataclass
class SolutionDump:
    times: np.ndarray
    nodes: np.ndarray
    values: np.ndarray


def write_solution_binary(field_, path) -> None:
    times = np.ascontiguousarray(field_.times, dtype="<f8")
    nodes = np.ascontiguousarray(field_.mesh.nodes, dtype="<f8")
    values = np.ascontiguousarray(field_.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, values.shape[0], values.shape[1]))
        fh.write(times.tobytes())
        fh.write(nodes.tobytes())
        fh.write(values.tobytes())


def read_solution_binary(path) -> SolutionDump:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError("file too short for an SPDD header")
    magic, version, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported SPDD version {version}")
    expected = _HEADER.size + 8 * (rows + cols + rows * cols)
    if len(blob) != expected:
        raise FormatError(f"size {len(blob)} does not match header ({expected} bytes expected)")
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    return SolutionDump(
        times=data[:rows].copy(),
        nodes=data[rows : rows + cols].copy(),
        values=data[rows + cols :].reshape(rows, cols).copy(),
    )
