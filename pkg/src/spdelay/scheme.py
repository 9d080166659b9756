"""Row assembly for one implicit Euler step.

Rows are in operator form scaled by dt: ``r_minus U_{i-1} + r_zero U_i +
r_plus U_{i+1} = rhs`` with a negative diagonal.  The hybrid scheme uses the
central stencil where ``a_i h_i < 2 eps`` and the midpoint upwind stencil
elsewhere; the upwind scheme is the plain first-order baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import SpatialMesh, TimeGrid
from .problem import PROBE_POINTS, ProblemSpec

CENTRAL = "central"
MIDPOINT = "midpoint_upwind"
UPWIND = "upwind"


@dataclass(frozen=True)
class StencilRow:
    r_minus: float
    r_zero: float
    r_plus: float
    rhs: float
    kind: str

    def sign_pattern_ok(self) -> bool:
        return (
            self.r_minus > 0
            and self.r_plus > 0
            and self.r_zero < 0
            and abs(self.r_minus) + abs(self.r_plus) < abs(self.r_zero)
        )


def _local(mesh: SpatialMesh, i: int):
    if not 1 <= i <= mesh.N - 1:
        raise IndexError(f"row {i} is not interior for N={mesh.N}")
    x = mesh.nodes
    return x[i] - x[i - 1], x[i + 1] - x[i]


def _node_values(spec: ProblemSpec, mesh: SpatialMesh, idx, t: float):
    xs = mesh.nodes[idx]
    return {name: spec.evaluate(name, xs, t) for name in ("a", "b", "c", "e", "f")}


def classify(mesh: SpatialMesh, spec: ProblemSpec, t_n: float) -> np.ndarray:
    """Interior indices i with a(x_i, t_n) h_i < 2 eps (central-difference set)."""
    i = np.arange(1, mesh.N)
    a = spec.evaluate("a", mesh.nodes[i], t_n)
    return i[a * np.diff(mesh.nodes)[:-1] < 2.0 * spec.epsilon]


def assemble_row_central(i, mesh, timegrid, spec, t_n, U_prev, U_delay) -> StencilRow:
    h, h1 = _local(mesh, i)
    v = _node_values(spec, mesh, [i], t_n)
    a, b, c, e, f = (float(v[k][0]) for k in ("a", "b", "c", "e", "f"))
    eps, dt = spec.epsilon, timegrid.dt
    if not a * h < 2.0 * eps:
        raise ValueError(f"row {i} is outside the central-difference set")
    hh = h + h1
    return StencilRow(
        r_minus=2 * eps * dt / (hh * h) - dt * a / hh,
        r_zero=-2 * eps * dt / hh * (1 / h + 1 / h1) - b - dt * c,
        r_plus=2 * eps * dt / (hh * h1) + dt * a / hh,
        rhs=dt * f - b * U_prev[i] + dt * e * U_delay[i],
        kind=CENTRAL,
    )


def assemble_row_midpoint(i, mesh, timegrid, spec, t_n, U_prev, U_delay) -> StencilRow:
    h, h1 = _local(mesh, i)
    v = _node_values(spec, mesh, [i, i + 1], t_n)
    if v["a"][0] * h < 2.0 * spec.epsilon:
        raise ValueError(f"row {i} belongs to the central-difference set")
    a, b, c, e = (0.5 * (v[k][0] + v[k][1]) for k in ("a", "b", "c", "e"))
    f0, f1 = v["f"]
    eps, dt = spec.epsilon, timegrid.dt
    hh = h + h1
    return StencilRow(
        r_minus=2 * eps * dt / (hh * h),
        r_zero=-2 * eps * dt / hh * (1 / h + 1 / h1) - a * dt / h1 - b / 2 - c * dt / 2,
        r_plus=2 * eps * dt / (hh * h1) + a * dt / h1 - b / 2 - c * dt / 2,
        rhs=dt / 2 * (f0 + f1) - b / 2 * (U_prev[i] + U_prev[i + 1]) + dt * e / 2 * (U_delay[i] + U_delay[i + 1]),
        kind=MIDPOINT,
    )


def assemble_row_upwind(i, mesh, timegrid, spec, t_n, U_prev, U_delay) -> StencilRow:
    h, h1 = _local(mesh, i)
    v = _node_values(spec, mesh, [i], t_n)
    a, b, c, e, f = (float(v[k][0]) for k in ("a", "b", "c", "e", "f"))
    eps, dt = spec.epsilon, timegrid.dt
    hh = h + h1
    return StencilRow(
        r_minus=2 * eps * dt / (hh * h),
        r_zero=-2 * eps * dt / hh * (1 / h + 1 / h1) - a * dt / h1 - b - dt * c,
        r_plus=2 * eps * dt / (hh * h1) + a * dt / h1,
        rhs=dt * f - b * U_prev[i] + dt * e * U_delay[i],
        kind=UPWIND,
    )


def assemble_row_hybrid(i, mesh, timegrid, spec, t_n, U_prev, U_delay) -> StencilRow:
    h, _ = _local(mesh, i)
    a = float(spec.evaluate("a", mesh.nodes[[i]], t_n)[0])
    if a * h < 2.0 * spec.epsilon:
        return assemble_row_central(i, mesh, timegrid, spec, t_n, U_prev, U_delay)
    return assemble_row_midpoint(i, mesh, timegrid, spec, t_n, U_prev, U_delay)


@dataclass(eq=False)
class LevelSystem:
    """Full (N+1)-row system for one time level, boundary rows included.

    ``history`` is the U_prev contribution to ``rhs`` and ``forcing`` the
    source plus delay term in unscaled operator form, so that
    ``rhs = history + dt * forcing`` on interior rows.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray
    history: np.ndarray
    forcing: np.ndarray
    central: np.ndarray

    def sign_pattern_ok(self) -> bool:
        rm, r0, rp = self.sub[1:-1], self.diag[1:-1], self.sup[1:-1]
        return bool(np.all((rm > 0) & (rp > 0) & (r0 < 0) & (np.abs(rm) + np.abs(rp) < np.abs(r0))))

    def diagonally_dominant(self) -> bool:
        rm, r0, rp = self.sub[1:-1], self.diag[1:-1], self.sup[1:-1]
        return bool(np.all(np.abs(rm) + np.abs(rp) < np.abs(r0)))


def assemble_level(
    mesh: SpatialMesh,
    dt: float,
    spec: ProblemSpec,
    t_n: float,
    U_prev: np.ndarray,
    U_delay: np.ndarray,
    kind: str = "hybrid",
) -> LevelSystem:
    """Vectorised assembly of every row at level t_n (kind: "hybrid" or "upwind")."""
    x = mesh.nodes
    N = mesh.N
    eps = spec.epsilon
    steps = np.diff(x)
    h, h1 = steps[:-1], steps[1:]
    hh = h + h1
    a = spec.evaluate("a", x, t_n)
    b = spec.evaluate("b", x, t_n)
    c = spec.evaluate("c", x, t_n)
    e = spec.evaluate("e", x, t_n)
    f = spec.evaluate("f", x, t_n)
    I = slice(1, N)

    d_minus = 2 * eps * dt / (hh * h)
    d_plus = 2 * eps * dt / (hh * h1)
    d_zero = -2 * eps * dt / hh * (1 / h + 1 / h1)

    # node-centred rows (central and upwind share reaction/time/source terms)
    hist = -b[I] * U_prev[I]
    forcing = f[I] + e[I] * U_delay[I]
    if kind == "upwind":
        central = np.zeros(N - 1, dtype=bool)
        rm = d_minus
        r0 = d_zero - a[I] * dt / h1 - b[I] - dt * c[I]
        rp = d_plus + a[I] * dt / h1
    elif kind == "hybrid":
        central = a[I] * h < 2.0 * eps
        mid = ~central
        rm = np.where(central, d_minus - dt * a[I] / hh, d_minus)
        r0 = d_zero - b[I] - dt * c[I]
        rp = d_plus + dt * a[I] / hh
        if np.any(mid):
            J = np.nonzero(mid)[0] + 1
            ah = 0.5 * (a[J] + a[J + 1])
            bh = 0.5 * (b[J] + b[J + 1])
            ch = 0.5 * (c[J] + c[J + 1])
            eh = 0.5 * (e[J] + e[J + 1])
            k = J - 1
            r0[k] = d_zero[k] - ah * dt / h1[k] - bh / 2 - ch * dt / 2
            rp[k] = d_plus[k] + ah * dt / h1[k] - bh / 2 - ch * dt / 2
            hist[k] = -bh / 2 * (U_prev[J] + U_prev[J + 1])
            forcing[k] = 0.5 * (f[J] + f[J + 1]) + eh * (0.5 * (U_delay[J] + U_delay[J + 1]))
    else:
        raise ValueError(f"unknown row kind {kind!r}")

    sub = np.zeros(N + 1)
    diag = np.ones(N + 1)
    sup = np.zeros(N + 1)
    rhs = np.empty(N + 1)
    sub[I], diag[I], sup[I] = rm, r0, rp
    rhs[I] = hist + dt * forcing
    rhs[0], rhs[N] = spec.boundary(t_n)
    return LevelSystem(sub, diag, sup, rhs, hist, forcing, central)


@dataclass(frozen=True)
class AdmissibilityReport:
    N: int
    kappa: float
    rate_condition: bool
    mesh_condition: bool
    lhs_rate: float
    rhs_rate: float
    lhs_mesh: float
    rhs_mesh: float

    @property
    def satisfied(self) -> bool:
        return self.rate_condition and self.mesh_condition


def admissibility_inequalities(N, kappa, norm_b, norm_c, dt, sigma0, norm_a0) -> AdmissibilityReport:
    """N kappa >= |b|/dt + |c| and 2 sigma0 |a0| < N / (ln N)^2."""
    lhs_rate, rhs_rate = N * kappa, norm_b / dt + norm_c
    lhs_mesh, rhs_mesh = 2 * sigma0 * norm_a0, N / math.log(N) ** 2
    return AdmissibilityReport(
        N=N,
        kappa=kappa,
        rate_condition=bool(lhs_rate >= rhs_rate),
        mesh_condition=bool(lhs_mesh < rhs_mesh),
        lhs_rate=lhs_rate,
        rhs_rate=rhs_rate,
        lhs_mesh=lhs_mesh,
        rhs_mesh=rhs_mesh,
    )


def admissibility_check(mesh: SpatialMesh, timegrid: TimeGrid, spec: ProblemSpec) -> AdmissibilityReport:
    """Probe-grid evaluation of the mesh/time-step admissibility condition.

    kappa is the minimum of a over x in [sigma, 1]; a uniform mesh has no
    sigma0, so its mesh condition is reported as failed.
    """
    ts = np.linspace(0.0, spec.T, PROBE_POINTS)
    xs = np.linspace(mesh.sigma, 1.0, PROBE_POINTS)
    xa = np.linspace(0.0, 1.0, PROBE_POINTS)
    kappa = min(float(np.min(spec.evaluate("a", xs, t))) for t in ts)
    norm_b = max(float(np.max(np.abs(spec.evaluate("b", xa, t)))) for t in ts)
    norm_c = max(float(np.max(np.abs(spec.evaluate("c", xa, t)))) for t in ts)
    norm_a0 = max(float(np.max(np.abs(spec.evaluate("a0", xa, t)))) for t in ts)
    sigma0 = mesh.sigma0 if math.isfinite(mesh.sigma0) else math.inf
    return admissibility_inequalities(mesh.N, kappa, norm_b, norm_c, timegrid.dt, sigma0, norm_a0)
