"""Property checks run by ``spdelay verify`` and by the test suite.

Each check returns a :class:`PropertyResult`; none of them raise on failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .linalg import TridiagonalSystem, dense_solve, thomas_solve
from .mesh import build_shishkin, build_timegrid, build_uniform, timegrid_for_steps
from .problem import ProblemSpec, builtin_problem
from .scheme import assemble_row_hybrid, assemble_row_upwind
from .solver import solve


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def random_dominant_system(rng: np.random.Generator, n: int) -> TridiagonalSystem:
    sub = rng.uniform(-1.0, 1.0, n)
    sup = rng.uniform(-1.0, 1.0, n)
    sub[0] = sup[-1] = 0.0
    margin = rng.uniform(0.01, 2.0, n)
    sign = rng.choice([-1.0, 1.0], n)
    diag = sign * (np.abs(sub) + np.abs(sup) + margin)
    rhs = rng.normal(size=n) * 10.0 ** rng.uniform(-3, 3)
    return TridiagonalSystem(sub, diag, sup, rhs)


def check_thomas(rng: np.random.Generator, count: int = 200, tol: float = 1e-11) -> PropertyResult:
    worst = 0.0
    for _ in range(count):
        system = random_dominant_system(rng, int(rng.integers(1, 400)))
        ref = dense_solve(system)
        err = np.max(np.abs(thomas_solve(system) - ref)) / max(np.max(np.abs(ref)), 1e-300)
        worst = max(worst, float(err))
    return PropertyResult("thomas_vs_dense", worst <= tol, f"{count} systems, max relative error {worst:.2e}")


# --------------------------------------------------------------------------
# discrete minimum principle


def manufactured_nonnegative(rng: np.random.Generator) -> tuple[ProblemSpec, int, int]:
    """Problem-1 coefficients with e <= 0, f <= 0 and nonnegative history/boundary data.

    With U_prev, U_delay >= 0 every assembled right-hand side is <= 0.
    """
    eps = 2.0 ** -rng.uniform(0, 12)
    p = int(rng.integers(1, 5))
    e0 = -rng.uniform(0, 1)
    f0, f1 = rng.uniform(0, 2, 2)
    s0, s1, s2 = rng.uniform(0, 2, 3) * (rng.uniform(size=3) > 0.35)  # some data switched off
    spec = ProblemSpec(
        epsilon=eps,
        p=p,
        a0=lambda x, t: 1.0,
        b=lambda x, t: 1.0,
        c=lambda x, t: 1.0,
        e=lambda x, t: e0,
        f=lambda x, t: -(f0 + f1 * np.power(x, 2.0)),
        s=lambda x, t: s0 * np.power(1.0 - x, 2.0) + s1 * x + s2 * (1.0 + t),
        q0=lambda t: s0 + s2 * (1.0 + t * t),
        q1=lambda t: s1 + s2,
        tau=1.0,
        T=2.0,
        alpha=1.0,
        beta=1.0,
        gamma=1.0,
        name="manufactured",
    )
    N = int(rng.choice([8, 16, 32, 64]))
    M = int(rng.choice([4, 8, 16, 32, 64]))
    return spec, N, M


def check_minimum_principle(rng: np.random.Generator, count: int = 50, tol: float = 1e-12) -> PropertyResult:
    """U >= -tol for ``count`` solves whose matrices carry the M-matrix sign pattern.

    Draws that lose the sign pattern (midpoint rows with negative r_plus) are
    outside the hypothesis of the principle; they are counted and reported.
    """
    checked = skipped = attempts = 0
    worst = np.inf
    skipped_min = np.inf
    while checked < count and attempts < 20 * count:
        attempts += 1
        spec, N, M = manufactured_nonnegative(rng)
        mesh = build_shishkin(N, spec.epsilon, 2.0, "lnN")
        field = solve(spec, mesh, timegrid_for_steps(1.0, 2.0, M), "hybrid")
        if not field.stats.sign_pattern_ok:
            skipped += 1
            skipped_min = min(skipped_min, float(field.values.min()))
            continue
        checked += 1
        worst = min(worst, float(field.values.min()))
    ok = checked == count and worst >= -tol
    detail = f"{checked} sign-pattern solves, min U = {worst:.3e}; {skipped} draws without the pattern"
    if skipped:
        detail += f" (their min U = {skipped_min:.3e})"
    return PropertyResult("minimum_principle", ok, detail)


# --------------------------------------------------------------------------
# smooth manufactured solutions

# (phi, phi', phi'') in x and (psi, psi') in t
SPACE_FACTORS = {
    "quadratic": (lambda x: (1 - x) ** 2, lambda x: -2 * (1 - x), lambda x: 2 + 0 * x),
    "exp": (lambda x: np.exp(-x), lambda x: -np.exp(-x), lambda x: np.exp(-x)),
    "cos": (np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)),
}
TIME_FACTORS = {
    "quadratic": (lambda t: 1 + t * t, lambda t: 2 * t),
    "exp": (lambda t: np.exp(-t), lambda t: -np.exp(-t)),
    "sin": (lambda t: 2 + np.sin(2 * t), lambda t: 2 * np.cos(2 * t)),
}


def manufactured_smooth(epsilon: float, space: str = "quadratic", time: str = "quadratic", p: int = 1) -> ProblemSpec:
    """Problem-1 coefficients with exact solution u = phi(x) psi(t) on [-tau, T].

    The history is u itself, so the data are smooth and compatible at every
    corner; ``spec.exact`` holds u.
    """
    phi, dphi, d2phi = SPACE_FACTORS[space]
    psi, dpsi = TIME_FACTORS[time]
    e0 = 0.5

    def forcing(x, t):
        a = np.power(x, float(p))
        return (
            epsilon * d2phi(x) * psi(t)
            + a * dphi(x) * psi(t)
            - phi(x) * dpsi(t)
            - phi(x) * psi(t)
            - e0 * phi(x) * psi(t - 1.0)
        )

    spec = ProblemSpec(
        epsilon=epsilon,
        p=p,
        a0=lambda x, t: 1.0,
        b=lambda x, t: 1.0,
        c=lambda x, t: 1.0,
        e=lambda x, t: e0,
        f=forcing,
        s=lambda x, t: phi(x) * psi(t),
        q0=lambda t: phi(0.0) * psi(t),
        q1=lambda t: phi(1.0) * psi(t),
        tau=1.0,
        T=2.0,
        alpha=1.0,
        beta=1.0,
        gamma=1.0,
        name=f"smooth_{space}_{time}",
    )
    object.__setattr__(spec, "exact", lambda x, t: phi(x) * psi(t))
    return spec


# --------------------------------------------------------------------------
# method of steps and dense reference


def check_restart(tol: float = 1e-13) -> PropertyResult:
    worst = 0.0
    for pid, eps, N, m_tau in (("problem1", 2.0**-8, 32, 16), ("problem2", 2.0**-12, 64, 8)):
        spec = builtin_problem(pid, 1, eps)
        mesh = build_shishkin(N, eps, 2.0, "minimal")
        whole = solve(spec, mesh, build_timegrid(1.0, 2.0, m_tau))
        first = solve(spec, mesh, build_timegrid(1.0, 1.0, m_tau))
        resumed = solve(spec, mesh, build_timegrid(1.0, 2.0, m_tau), restart_from=first)
        worst = max(worst, float(np.max(np.abs(whole.values - resumed.values))))
    return PropertyResult("method_of_steps_restart", worst <= tol, f"max difference {worst:.2e}")


def dense_reference(spec: ProblemSpec, mesh, timegrid, scheme_kind: str = "hybrid") -> np.ndarray:
    """Implicit Euler built row by row from the scalar assemblers, solved densely."""
    row_fn = assemble_row_hybrid if scheme_kind == "hybrid" else assemble_row_upwind
    N, m = mesh.N, timegrid.m_tau
    U = np.empty((timegrid.n_levels, N + 1))
    for j, t in enumerate(np.arange(-m, 1) * timegrid.dt):
        U[j] = spec.evaluate("s", mesh.nodes, t)
    for n in range(1, timegrid.M + 1):
        t = n * timegrid.dt
        r = timegrid.row(n)
        A = np.zeros((N + 1, N + 1))
        rhs = np.empty(N + 1)
        A[0, 0] = A[N, N] = 1.0
        rhs[0], rhs[N] = spec.boundary(t)
        for i in range(1, N):
            row = row_fn(i, mesh, timegrid, spec, t, U[r - 1], U[r - m])
            A[i, i - 1 : i + 2] = row.r_minus, row.r_zero, row.r_plus
            rhs[i] = row.rhs
        U[r] = np.linalg.solve(A, rhs)
    return U


def check_dense_reference(tol: float = 1e-12) -> PropertyResult:
    worst = 0.0
    cases = (
        ("problem1", 0.5, "hybrid", False),
        ("problem1", 2.0**-8, "hybrid", False),
        ("problem2", 2.0**-6, "upwind_shishkin", False),
        ("problem1", 2.0**-10, "upwind_uniform", True),
    )
    for pid, eps, kind, uniform in cases:
        spec = builtin_problem(pid, 1, eps)
        mesh = build_uniform(8) if uniform else build_shishkin(8, eps, 2.0, "lnN")
        grid = timegrid_for_steps(1.0, 2.0, 8)
        got = solve(spec, mesh, grid, kind).values
        ref = dense_reference(spec, mesh, grid, kind)
        worst = max(worst, float(np.max(np.abs(got - ref))))
    return PropertyResult("dense_reference_N8", worst <= tol, f"{len(cases)} configurations, max difference {worst:.2e}")


# --------------------------------------------------------------------------
# diagnostics gathered from table sweeps


def check_table_diagnostics(tables: Iterable) -> list[PropertyResult]:
    cells = [c for tb in tables for c in tb.cells]
    admissible = sum(c.diagnostics.admissible_solves for c in cells)
    solves = sum(c.diagnostics.solves for c in cells)
    sign_ok = all(c.diagnostics.sign_pattern_when_admissible for c in cells)
    dominant = all(c.diagnostics.diagonally_dominant for c in cells)
    stab = max(c.diagnostics.stability_max for c in cells)
    return [
        PropertyResult(
            "sign_pattern_when_admissible",
            sign_ok,
            f"{admissible} of {solves} solves satisfy the admissibility condition",
        ),
        PropertyResult("diagonal_dominance", dominant, f"{solves} solves, every interior row"),
        PropertyResult("stability_bound", stab <= 0.0, f"max diagnostic {stab:.3e} over {solves} solves"),
    ]


def run_suite(seed: Optional[int] = 0, tables: Optional[list] = None) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    results = [
        check_thomas(rng),
        check_minimum_principle(rng),
        check_restart(),
        check_dense_reference(),
    ]
    if tables:
        results.extend(check_table_diagnostics(tables))
    return results
