"""Double-mesh errors, observed orders and (epsilon, N) convergence sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .extrapolation import richardson
from .mesh import SpatialMesh, bisect, build_shishkin, build_uniform, timegrid_for_steps
from .problem import ProblemFamily, ProblemSpec, default_sigma0
from .solver import SCHEMES, SolutionField, SolverError, solve, stability_diagnostic


class AnalysisError(ValueError):
    pass


# --------------------------------------------------------------------------
# mesh parameters


@dataclass(frozen=True)
class MeshChoice:
    """Transition factor and L rule; ``sigma0=None`` means the uniform mesh."""

    sigma0: Optional[float]
    L: Union[str, float] = "lnN"

    def build(self, N: int, epsilon: float) -> SpatialMesh:
        if self.sigma0 is None:
            return build_uniform(N)
        return build_shishkin(N, epsilon, self.sigma0, self.L)


def reference_mesh(problem_id: str, p: int, scheme_kind: str) -> MeshChoice:
    """Calibrated mesh parameters for the benchmark tables.

    The hybrid scheme uses the smallest admissible L (L e^L = N), the upwind
    baseline uses L = ln N.  sigma0 = 2 everywhere except problem2 with
    p = 1, whose benchmark needs a wider layer region (sigma0 = 4.2).
    """
    if scheme_kind == "upwind_uniform":
        return MeshChoice(None, "lnN")
    sigma0 = 4.2 if (problem_id == "problem2" and p == 1) else 2.0
    return MeshChoice(sigma0, "minimal" if scheme_kind == "hybrid" else "lnN")


def resolve_mesh_choice(
    family: ProblemFamily,
    scheme_kind: str,
    sigma0: Union[str, float] = "auto",
    L: Union[str, float] = "auto",
    epsilon: float = 1.0,
) -> MeshChoice:
    """Turn "auto" / "theory" settings into concrete numbers.

    "auto" picks :func:`reference_mesh`; "theory" for sigma0 picks
    max(2, 8 / sqrt(gamma)).
    """
    ref = reference_mesh(family.problem_id, family.p, scheme_kind)
    if scheme_kind == "upwind_uniform":
        return ref
    if sigma0 in ("auto", None):
        s0 = ref.sigma0
    elif sigma0 == "theory":
        s0 = default_sigma0(family.at(epsilon))
    else:
        s0 = float(sigma0)
    return MeshChoice(s0, ref.L if L == "auto" else L)


# --------------------------------------------------------------------------
# errors and orders


def double_mesh_error(coarse, fine) -> float:
    """Max |U^{N,M} - U^{2N,2M}| over coarse points with t >= 0."""
    if fine.mesh.N != 2 * coarse.mesh.N or not np.array_equal(fine.mesh.nodes[::2], coarse.mesh.nodes):
        raise AnalysisError("fine mesh is not the bisection of the coarse mesh")
    gc, gf = coarse.timegrid, fine.timegrid
    if gf.m_tau != 2 * gc.m_tau or gf.M != 2 * gc.M:
        raise AnalysisError("fine time grid does not halve the coarse step")
    diff = coarse.values[gc.m_tau :] - fine.values[gf.m_tau :: 2, ::2]
    return float(np.max(np.abs(diff)))


def order(E_coarse: float, E_fine: float) -> float:
    if not (E_coarse > 0 and E_fine > 0):
        raise AnalysisError(f"errors must be positive, got {E_coarse}, {E_fine}")
    return math.log2(E_coarse / E_fine)


# --------------------------------------------------------------------------
# one table cell


@dataclass
class CellDiagnostics:
    solves: int = 0
    admissible_solves: int = 0
    sign_pattern_when_admissible: bool = True
    diagonally_dominant: bool = True
    stability_max: float = -math.inf
    central_min: int = 0
    central_max: int = 0

    def record(self, field_: SolutionField, spec: ProblemSpec, stability: bool):
        st = field_.stats
        first = self.solves == 0
        self.solves += 1
        if st.admissibility is not None and st.admissibility.satisfied:
            self.admissible_solves += 1
            self.sign_pattern_when_admissible &= st.sign_pattern_ok
        self.diagonally_dominant &= st.diagonally_dominant
        self.central_min = st.central_min if first else min(self.central_min, st.central_min)
        self.central_max = max(self.central_max, st.central_max)
        if stability:
            self.stability_max = max(self.stability_max, stability_diagnostic(field_, spec))


@dataclass
class CellResult:
    epsilon: float
    N: int
    M: int
    E: float
    diagnostics: CellDiagnostics


def _field(spec, mesh, M, scheme_kind, extrapolate, diag: CellDiagnostics, stability: bool):
    grid = timegrid_for_steps(spec.tau, spec.T, M)
    u = solve(spec, mesh, grid, scheme_kind)
    diag.record(u, spec, stability)
    if not extrapolate:
        return u
    u2 = solve(spec, mesh, grid.refine(), scheme_kind)
    diag.record(u2, spec, stability)
    return richardson(u, u2)


def compute_cell(
    family: ProblemFamily,
    scheme_kind: str,
    extrapolate: bool,
    epsilon: float,
    N: int,
    M: int,
    mesh_choice: MeshChoice,
    stability: bool = True,
) -> CellResult:
    """E^{N,M}_eps for one (epsilon, N) pair."""
    spec = family.at(epsilon)
    diag = CellDiagnostics()
    try:
        coarse_mesh = mesh_choice.build(N, epsilon)
        coarse = _field(spec, coarse_mesh, M, scheme_kind, extrapolate, diag, stability)
        fine = _field(spec, bisect(coarse_mesh), 2 * M, scheme_kind, extrapolate, diag, stability)
    except (SolverError, ArithmeticError) as exc:
        raise SolverError(f"solve failed at epsilon={epsilon:g}, N={N}: {exc}") from exc
    return CellResult(epsilon, N, M, double_mesh_error(coarse, fine), diag)


def _compute_cell_star(args):
    return compute_cell(*args)


# --------------------------------------------------------------------------
# tables


def format_epsilon(eps: float) -> str:
    k = math.log2(eps)
    return f"2^{int(k)}" if k == int(k) else f"{eps:.3e}"


@dataclass
class ConvergenceTable:
    scheme_kind: str
    extrapolate: bool
    eps_list: list
    N_list: list
    M_list: list
    E: np.ndarray  # shape (len(eps_list), len(N_list))
    mesh_choice: Optional[MeshChoice] = None
    label: str = ""
    cells: list = field(default_factory=list, repr=False)

    @property
    def q(self) -> np.ndarray:
        return np.log2(self.E[:, :-1] / self.E[:, 1:])

    @property
    def uniform_E(self) -> np.ndarray:
        return self.E.max(axis=0)

    @property
    def uniform_q(self) -> np.ndarray:
        E = self.uniform_E
        return np.log2(E[:-1] / E[1:])

    def title(self) -> str:
        name = self.scheme_kind + (" + extrapolation" if self.extrapolate else "")
        return f"{self.label}: {name}" if self.label else name

    def rows(self):
        """(epsilon, N, M, E, q) tuples, footer rows use epsilon = "uniform"."""
        q, uq = self.q, self.uniform_q
        for a, eps in enumerate(self.eps_list):
            for j, N in enumerate(self.N_list):
                yield eps, N, self.M_list[j], self.E[a, j], q[a, j] if j < len(q[a]) else None
        for j, N in enumerate(self.N_list):
            yield "uniform", N, self.M_list[j], self.uniform_E[j], uq[j] if j < len(uq) else None

    def to_csv(self, scheme_column: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["epsilon", "N", "M", "E", "q"]
        w.writerow((["scheme"] if scheme_column else []) + head)
        for eps, N, M, E, q in self.rows():
            row = [eps if isinstance(eps, str) else f"{eps:.3e}", N, M, f"{E:.3e}", "" if q is None else f"{q:.3e}"]
            w.writerow(([self.title()] if scheme_column else []) + row)
        return buf.getvalue()

    def to_markdown(self) -> str:
        head = "| ε ↓ | " + " | ".join(f"N={N}" for N in self.N_list) + " |"
        sep = "|---" * (len(self.N_list) + 1) + "|"
        lines = [f"**{self.title()}**", "", head, sep]

        def cells(values):
            return " | ".join(f"{v:.3e}" for v in values)

        def qcells(values):
            return " | ".join([f"{v:.3e}" for v in values] + [""])

        for a, eps in enumerate(self.eps_list):
            lines.append(f"| {format_epsilon(eps)} | {cells(self.E[a])} |")
            lines.append(f"|  | {qcells(self.q[a])}|")
        lines.append(f"| **E^N,M** | {cells(self.uniform_E)} |")
        lines.append(f"| **q^N,M** | {qcells(self.uniform_q)}|")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme_kind,
            "extrapolate": self.extrapolate,
            "label": self.label,
            "mesh": None if self.mesh_choice is None else asdict(self.mesh_choice),
            "epsilon": list(self.eps_list),
            "N": list(self.N_list),
            "M": list(self.M_list),
            "E": self.E.tolist(),
            "q": self.q.tolist(),
            "uniform_E": self.uniform_E.tolist(),
            "uniform_q": self.uniform_q.tolist(),
            "diagnostics": [
                {"epsilon": c.epsilon, "N": c.N, **asdict(c.diagnostics)} for c in self.cells
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceTable":
        mesh = None if d.get("mesh") is None else MeshChoice(**d["mesh"])
        return cls(d["scheme"], d["extrapolate"], d["epsilon"], d["N"], d["M"], np.array(d["E"], dtype=float), mesh, d.get("label", ""))


def _check_doubling(N_list: Sequence[int]):
    if not N_list:
        raise AnalysisError("N list is empty")
    for a, b in zip(N_list, N_list[1:]):
        if b != 2 * a:
            raise AnalysisError(f"N list must double at each step, got {list(N_list)}")


def worker_count(threads: int) -> int:
    if threads == 0:
        return os.cpu_count() or 1
    return max(1, threads)


def run_sweep(
    family: ProblemFamily,
    scheme_kind: str,
    extrapolate: bool,
    N_list: Sequence[int],
    eps_list: Sequence[float],
    M_rule: Union[str, int] = "N",
    sigma0: Union[str, float] = "auto",
    L: Union[str, float] = "auto",
    threads: int = 1,
    stability: bool = True,
    label: str = "",
) -> ConvergenceTable:
    """Fill E^{N,M}_eps for every (eps, N); M = N or a fixed M (fine solves use 2M)."""
    if scheme_kind not in SCHEMES:
        raise AnalysisError(f"unknown scheme {scheme_kind!r}")
    N_list = [int(N) for N in N_list]
    _check_doubling(N_list)
    M_list = [N if M_rule == "N" else int(M_rule) for N in N_list]
    mesh_choice = resolve_mesh_choice(family, scheme_kind, sigma0, L, epsilon=min(eps_list))
    jobs = [
        (family, scheme_kind, extrapolate, eps, N, M, mesh_choice, stability)
        for eps in eps_list
        for N, M in zip(N_list, M_list)
    ]
    workers = worker_count(threads)
    if workers == 1 or len(jobs) == 1:
        results = [_compute_cell_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_compute_cell_star, jobs))
    E = np.array([r.E for r in results]).reshape(len(eps_list), len(N_list))
    return ConvergenceTable(scheme_kind, extrapolate, list(eps_list), N_list, M_list, E, mesh_choice, label, results)


def run_comparison(family, N_list, eps_list, M_rule="N", sigma0="auto", L="auto", threads=1, stability=True):
    """The three schemes over the same sweep, without extrapolation."""
    return [
        run_sweep(family, s, False, N_list, eps_list, M_rule, sigma0, L, threads, stability)
        for s in SCHEMES
    ]


# --------------------------------------------------------------------------
# time-only refinement


@dataclass
class TemporalStudy:
    """Errors from halving dt on a fixed spatial mesh.

    ``E[k]`` compares the solution at ``M_list[k]`` steps with the one at
    twice as many steps, on the shared levels t >= 0.
    """

    M_list: list
    E: np.ndarray
    E_ext: np.ndarray

    @property
    def q(self) -> np.ndarray:
        return np.log2(self.E[:-1] / self.E[1:])

    @property
    def q_ext(self) -> np.ndarray:
        return np.log2(self.E_ext[:-1] / self.E_ext[1:])


def _time_difference(coarse, fine) -> float:
    gc, gf = coarse.timegrid, fine.timegrid
    return float(np.max(np.abs(coarse.values[gc.m_tau :] - fine.values[gf.m_tau :: 2])))


def temporal_study(spec: ProblemSpec, mesh: SpatialMesh, M_list: Sequence[int], scheme_kind: str = "hybrid") -> TemporalStudy:
    M_list = [int(M) for M in M_list]
    _check_doubling(M_list)
    steps = [M_list[0] * 2**k for k in range(len(M_list) + 2)]
    fields = {M: solve(spec, mesh, timegrid_for_steps(spec.tau, spec.T, M), scheme_kind) for M in steps}
    ext = {M: richardson(fields[M], fields[2 * M]) for M in steps[:-1]}
    E = np.array([_time_difference(fields[M], fields[2 * M]) for M in M_list])
    E_ext = np.array([_time_difference(ext[M], ext[2 * M]) for M in M_list])
    return TemporalStudy(M_list, E, E_ext)
