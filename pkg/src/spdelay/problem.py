"""Problem class: eps u_xx + a u_x - b u_t - c u = e u(x, t - tau) + f.

The convection coefficient is degenerate, ``a(x, t) = a0(x, t) * x**p``.
Boundary data ``q0, q1`` on x = 0, 1 and history ``s`` on t in [-tau, 0].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import exprparse

Field = Callable[[np.ndarray, float], np.ndarray]
TimeFunc = Callable[[float], float]

PROBE_POINTS = 101
FIELDS = ("a", "a0", "b", "c", "e", "f", "s")
CUSTOM_KEYS = ("a0", "b", "c", "e", "f", "s", "q0", "q1")


class ProblemError(ValueError):
    pass


def _ratio_is_integer(T: float, tau: float) -> Optional[int]:
    k = round(T / tau)
    if k >= 1 and abs(T - k * tau) <= 1e-12 * abs(T):
        return k
    return None


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    epsilon: float
    p: int
    a0: Field
    b: Field
    c: Field
    e: Field
    f: Field
    s: Field
    q0: TimeFunc
    q1: TimeFunc
    tau: float
    T: float
    alpha: float
    beta: float
    gamma: float
    name: str = "custom"
    # expression sources for config-defined problems, echoed by the CLI
    sources: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ProblemError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if int(self.p) != self.p or self.p < 1:
            raise ProblemError(f"p must be an integer >= 1, got {self.p}")
        if not self.tau > 0:
            raise ProblemError(f"tau must be positive, got {self.tau}")
        k = _ratio_is_integer(self.T, self.tau)
        if k is None or k < 2:
            raise ProblemError(f"T/tau must be an integer >= 2, got T={self.T}, tau={self.tau}")
        for const in ("alpha", "beta", "gamma"):
            if not getattr(self, const) > 0:
                raise ProblemError(f"{const} must be positive")
        self._check_coercivity()

    @property
    def delay_intervals(self) -> int:
        return round(self.T / self.tau)

    def _check_coercivity(self):
        x = np.linspace(0.0, 1.0, PROBE_POINTS)
        tol = 1e-12
        for t in np.linspace(0.0, self.T, PROBE_POINTS):
            for name, bound in (("a0", self.alpha), ("b", self.beta), ("c", self.gamma)):
                vals = self.evaluate(name, x, t)
                if np.min(vals) < bound - tol:
                    raise ProblemError(
                        f"{name} drops to {np.min(vals):.6g} at t={t:.6g}, below its bound {bound}"
                    )

    def evaluate(self, name: str, x, t: float) -> np.ndarray:
        """Vectorised field evaluation without domain checks."""
        x = np.asarray(x, dtype=float)
        if name == "a":
            return self.evaluate("a0", x, t) * np.power(x, float(self.p))
        if name not in FIELDS:
            raise ProblemError(f"unknown field {name!r}")
        val = getattr(self, name)(x, t)
        return np.asarray(val, dtype=float) + np.zeros(x.shape)

    def boundary(self, t: float) -> tuple[float, float]:
        return float(self.q0(t)), float(self.q1(t))


def sample(spec: ProblemSpec, field_name: str, x: float, t: float) -> float:
    """Point evaluation of a coefficient, history or source field."""
    if not 0.0 <= x <= 1.0:
        raise ProblemError(f"x={x} outside [0, 1]")
    lo = -spec.tau if field_name == "s" else 0.0
    hi = 0.0 if field_name == "s" else spec.T
    if not lo <= t <= hi:
        raise ProblemError(f"t={t} outside [{lo}, {hi}] for field {field_name!r}")
    return float(spec.evaluate(field_name, np.array([x]), t)[0])


def _const(value: float) -> Field:
    return lambda x, t: value


def builtin_problem(problem_id: str, p: int, epsilon: float) -> ProblemSpec:
    """The two test problems with history (1 - x)^2, q0 = 1 + t^2, q1 = 0, tau = 1, T = 2."""
    if int(p) != p or p < 1:
        raise ProblemError(f"p must be an integer >= 1, got {p}")
    p = int(p)
    common = dict(
        epsilon=epsilon,
        p=p,
        a0=_const(1.0),
        b=_const(1.0),
        s=lambda x, t: np.power(1.0 - x, 2.0),
        q0=lambda t: 1.0 + t**2,
        q1=lambda t: 0.0,
        tau=1.0,
        T=2.0,
        alpha=1.0,
        beta=1.0,
    )
    if problem_id == "problem1":
        return ProblemSpec(
            c=_const(1.0),
            e=_const(0.5),
            f=lambda x, t: np.power(x, 2.0) - 1.0,
            gamma=1.0,
            name="problem1",
            **common,
        )
    if problem_id == "problem2":
        return ProblemSpec(
            c=lambda x, t: x + p,
            e=_const(-1.0),
            f=lambda x, t: p * np.exp(-t) * (np.power(x, 2.0) - 1.0),
            gamma=float(p),
            name="problem2",
            **common,
        )
    raise ProblemError(f"unknown builtin problem {problem_id!r}")


def custom_problem(
    exprs: dict,
    *,
    p: int,
    epsilon: float,
    tau: float,
    T: float,
    alpha: Optional[float] = None,
    beta: Optional[float] = None,
    gamma: Optional[float] = None,
) -> ProblemSpec:
    """Problem from expression strings in x, t, p, tau.

    Missing coercivity constants are estimated as probe-grid minima.
    """
    missing = [k for k in CUSTOM_KEYS if k not in exprs]
    if missing:
        raise ProblemError(f"missing expressions: {', '.join(missing)}")
    consts = {"p": float(p), "tau": float(tau)}
    fields = {k: exprparse.compile_field(exprs[k], **consts) for k in ("a0", "b", "c", "e", "f", "s")}
    q0 = exprparse.compile_field(exprs["q0"], **consts)
    q1 = exprparse.compile_field(exprs["q1"], **consts)

    x = np.linspace(0.0, 1.0, PROBE_POINTS)
    ts = np.linspace(0.0, T, PROBE_POINTS)

    def probe_min(fn):
        return min(float(np.min(np.asarray(fn(x, t), dtype=float) + np.zeros_like(x))) for t in ts)

    alpha = probe_min(fields["a0"]) if alpha is None else alpha
    beta = probe_min(fields["b"]) if beta is None else beta
    gamma = probe_min(fields["c"]) if gamma is None else gamma
    return ProblemSpec(
        epsilon=epsilon,
        p=int(p),
        q0=lambda t: float(q0(0.0, t)),
        q1=lambda t: float(q1(0.0, t)),
        tau=float(tau),
        T=float(T),
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        name="custom",
        sources=dict(exprs),
        **fields,
    )


def default_sigma0(spec: ProblemSpec) -> float:
    """sigma0 = 2/mu with mu = sqrt(gamma)/4, never below 2."""
    return max(2.0, 8.0 / math.sqrt(spec.gamma))


@dataclass(frozen=True)
class ProblemFamily:
    """A problem with epsilon left free; picklable, so sweeps can ship it to workers.

    ``problem_id`` is a builtin id or ``"custom"``, in which case ``exprs`` and
    the constants below define the fields.
    """

    problem_id: str
    p: int
    exprs: Optional[tuple] = None
    tau: float = 1.0
    T: float = 2.0
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None

    def at(self, epsilon: float) -> ProblemSpec:
        if self.problem_id != "custom":
            return builtin_problem(self.problem_id, self.p, epsilon)
        if self.exprs is None:
            raise ProblemError("custom family needs expressions")
        return custom_problem(
            dict(self.exprs),
            p=self.p,
            epsilon=epsilon,
            tau=self.tau,
            T=self.T,
            alpha=self.alpha,
            beta=self.beta,
            gamma=self.gamma,
        )

    @classmethod
    def custom(cls, exprs: dict, p: int, **constants) -> "ProblemFamily":
        return cls("custom", p, tuple(sorted(exprs.items())), **constants)
