"""Time marching by the method of steps: one tridiagonal solve per level."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import ThomasWorkspace
from .mesh import SpatialMesh, TimeGrid
from .problem import ProblemSpec
from .scheme import AdmissibilityReport, admissibility_check, assemble_level

log = logging.getLogger(__name__)

SCHEMES = ("hybrid", "upwind_uniform", "upwind_shishkin")


class SolverError(RuntimeError):
    pass


@dataclass
class SolveStats:
    sign_pattern_ok: bool = True
    diagonally_dominant: bool = True
    central_min: int = 0
    central_max: int = 0
    admissibility: Optional[AdmissibilityReport] = None


@dataclass(eq=False)
class SolutionField:
    """Values on levels n = -m_tau .. M (row n + m_tau) and nodes 0 .. N."""

    mesh: SpatialMesh
    timegrid: TimeGrid
    values: np.ndarray
    scheme_kind: str
    stats: SolveStats = field(default_factory=SolveStats, repr=False)

    def level(self, n: int) -> np.ndarray:
        return self.values[self.timegrid.row(n)]

    @property
    def times(self) -> np.ndarray:
        return self.timegrid.levels


def _row_kind(scheme_kind: str) -> str:
    if scheme_kind not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme_kind!r}; expected one of {SCHEMES}")
    return "hybrid" if scheme_kind == "hybrid" else "upwind"


def _check_inputs(spec: ProblemSpec, mesh: SpatialMesh, grid: TimeGrid, scheme_kind: str):
    if abs(grid.tau - spec.tau) > 1e-12 * spec.tau:
        raise ValueError(f"time grid delay {grid.tau} differs from problem delay {spec.tau}")
    if grid.T > spec.T * (1 + 1e-12):
        raise ValueError(f"time grid horizon {grid.T} exceeds problem horizon {spec.T}")
    if scheme_kind == "upwind_uniform" and not mesh.is_uniform:
        raise ValueError("upwind_uniform requires a uniform mesh (sigma = 1/2)")


def _history(spec: ProblemSpec, mesh: SpatialMesh, grid: TimeGrid) -> np.ndarray:
    levels = np.arange(-grid.m_tau, 1) * grid.dt
    return np.stack([spec.evaluate("s", mesh.nodes, t) for t in levels])


def solve(
    spec: ProblemSpec,
    mesh: SpatialMesh,
    timegrid: TimeGrid,
    scheme_kind: str = "hybrid",
    restart_from: Optional[SolutionField] = None,
) -> SolutionField:
    """March levels 1..M.  ``restart_from`` seeds every level it already holds
    (same mesh and dt, shorter horizon) and marching resumes after its last level.
    """
    kind = _row_kind(scheme_kind)
    _check_inputs(spec, mesh, timegrid, scheme_kind)
    N, m = mesh.N, timegrid.m_tau
    values = np.empty((timegrid.n_levels, N + 1))
    if restart_from is None:
        values[: m + 1] = _history(spec, mesh, timegrid)
        first = 1
    else:
        prev = restart_from.timegrid
        if not restart_from.mesh.same_nodes(mesh) or prev.dt != timegrid.dt or prev.m_tau != m:
            raise ValueError("restart field is on a different mesh or time step")
        values[: prev.n_levels] = restart_from.values
        first = prev.M + 1

    stats = SolveStats(admissibility=admissibility_check(mesh, timegrid, spec))
    if not stats.admissibility.satisfied:
        log.debug("admissibility condition fails for N=%d, dt=%g", N, timegrid.dt)
    central_counts = []
    work = ThomasWorkspace(N + 1)
    dt = timegrid.dt
    for n in range(first, timegrid.M + 1):
        t_n = n * dt
        row = timegrid.row(n)
        system = assemble_level(mesh, dt, spec, t_n, values[row - 1], values[row - m], kind)
        stats.sign_pattern_ok &= system.sign_pattern_ok()
        stats.diagonally_dominant &= system.diagonally_dominant()
        central_counts.append(int(np.count_nonzero(system.central)))
        values[row] = work.solve(system.sub, system.diag, system.sup, system.rhs)
        if not np.all(np.isfinite(values[row])):
            raise SolverError(f"non-finite values at level n={n} (t={t_n:g})")
    if central_counts:
        stats.central_min, stats.central_max = min(central_counts), max(central_counts)
    return SolutionField(mesh, timegrid, values, scheme_kind, stats)


def solve_final(spec, mesh, timegrid, scheme_kind: str = "hybrid") -> np.ndarray:
    """Final level only, keeping a ring of the last m_tau + 1 levels."""
    kind = _row_kind(scheme_kind)
    _check_inputs(spec, mesh, timegrid, scheme_kind)
    m = timegrid.m_tau
    ring = _history(spec, mesh, timegrid)  # ring[j] holds level n with n ≡ j - m (mod m + 1)
    work = ThomasWorkspace(mesh.N + 1)
    dt = timegrid.dt
    size = m + 1
    for n in range(1, timegrid.M + 1):
        prev = ring[(n - 1 + m) % size]
        delay = ring[(n - m + m) % size]
        system = assemble_level(mesh, dt, spec, n * dt, prev, delay, kind)
        ring[(n + m) % size] = work.solve(system.sub, system.diag, system.sup, system.rhs)
    return ring[(timegrid.M + m) % size].copy()


def apply_operator(field_: SolutionField, spec: ProblemSpec) -> np.ndarray:
    """Unscaled discrete operator applied to the field, levels 1..M, interior nodes."""
    grid, mesh = field_.timegrid, field_.mesh
    kind = _row_kind(field_.scheme_kind)
    out = np.empty((grid.M, mesh.N - 1))
    W = field_.values
    for n in range(1, grid.M + 1):
        row = grid.row(n)
        sys_ = assemble_level(mesh, grid.dt, spec, n * grid.dt, W[row - 1], W[row - grid.m_tau], kind)
        w = W[row]
        Aw = sys_.sub[1:-1] * w[:-2] + sys_.diag[1:-1] * w[1:-1] + sys_.sup[1:-1] * w[2:]
        out[n - 1] = (Aw - sys_.history) / grid.dt
    return out


def stability_diagnostic(field_: SolutionField, spec: ProblemSpec) -> float:
    """max_interior |U| - (max_boundary |U| + (T / beta) max |L U|); positive flags a violation."""
    grid = field_.timegrid
    W = field_.values
    interior = W[grid.m_tau + 1 :, 1:-1]
    boundary = np.concatenate([W[: grid.m_tau + 1].ravel(), W[grid.m_tau + 1 :, 0], W[grid.m_tau + 1 :, -1]])
    if interior.size == 0:
        return -float(np.max(np.abs(boundary)))
    LW = apply_operator(field_, spec)
    bound = np.max(np.abs(boundary)) + grid.T / spec.beta * np.max(np.abs(LW))
    return float(np.max(np.abs(interior)) - bound)
