"""Piecewise-uniform layer-adapted spatial mesh and uniform time grids."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Union

import numpy as np


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpatialMesh:
    N: int
    nodes: np.ndarray
    sigma: float
    L: float
    sigma0: float
    h_fine: float
    h_coarse: float

    @property
    def steps(self) -> np.ndarray:
        """h_i = x_i - x_{i-1}, i = 1..N (index 0 of the result is h_1)."""
        return np.diff(self.nodes)

    @property
    def is_uniform(self) -> bool:
        return self.sigma == 0.5

    def same_nodes(self, other: "SpatialMesh") -> bool:
        if self.N != other.N:
            return False
        return bool(np.all(np.abs(self.nodes - other.nodes) <= np.spacing(np.abs(self.nodes))))


def admissible_L_band(N: int) -> tuple[float, float]:
    return math.log(math.log(N)), math.log(N)


def minimal_L(N: int) -> float:
    """Smallest admissible L: the root of L exp(L) = N (principal Lambert W)."""
    L = math.log(N) - math.log(math.log(N))
    for _ in range(50):
        step = (L - N * math.exp(-L)) / (1.0 + L)
        L -= step
        if abs(step) < 1e-15 * L:
            break
    return L


def resolve_L(N: int, L: Union[None, str, float]) -> float:
    """Map an L choice ("lnN", "minimal" or a number) to its value for this N."""
    lo, hi = admissible_L_band(N)
    if L is None or L == "lnN":
        return hi
    if L == "minimal":
        return minimal_L(N)
    if isinstance(L, str):
        raise MeshError(f"unknown L choice {L!r}; expected 'lnN', 'minimal' or a number")
    L = float(L)
    if not (lo < L <= hi):
        raise MeshError(f"L={L} outside admissible band ({lo:.6g}, {hi:.6g}] for N={N}")
    if math.exp(-L) > L / N * (1 + 1e-12):
        raise MeshError(f"L={L} violates exp(-L) <= L/N for N={N}")
    return L


def transition_point(N: int, epsilon: float, sigma0: float, L: float) -> float:
    return min(0.5, sigma0 * math.sqrt(epsilon) * L)


def _piecewise_nodes(N: int, sigma: float) -> np.ndarray:
    half = N // 2
    frac = np.arange(half + 1) / half
    nodes = np.empty(N + 1)
    nodes[: half + 1] = sigma * frac
    nodes[half:] = sigma + (1.0 - sigma) * frac
    nodes[half] = sigma
    nodes[-1] = 1.0
    return nodes


def build_shishkin(
    N: int,
    epsilon: float,
    sigma0: float = 2.0,
    L: Union[None, str, float] = None,
) -> SpatialMesh:
    """Modified Shishkin mesh: N/2 intervals on [0, sigma] and N/2 on [sigma, 1].

    ``L`` is ``None`` / ``"lnN"`` for L = ln N, ``"minimal"`` for the root of
    L exp(L) = N, or a number inside the admissible band ln(ln N) < L <= ln N
    with exp(-L) <= L/N.
    """
    if int(N) != N or N < 4 or N % 2:
        raise MeshError(f"N must be an even integer >= 4, got {N}")
    N = int(N)
    if not sigma0 > 0:
        raise MeshError(f"sigma0 must be positive, got {sigma0}")
    L = resolve_L(N, L)
    sigma = transition_point(N, epsilon, sigma0, L)
    return SpatialMesh(
        N=N,
        nodes=_piecewise_nodes(N, sigma),
        sigma=sigma,
        L=L,
        sigma0=sigma0,
        h_fine=2.0 * sigma / N,
        h_coarse=2.0 * (1.0 - sigma) / N,
    )


def build_uniform(N: int) -> SpatialMesh:
    if int(N) != N or N < 4 or N % 2:
        raise MeshError(f"N must be an even integer >= 4, got {N}")
    N = int(N)
    return SpatialMesh(
        N=N,
        nodes=_piecewise_nodes(N, 0.5),
        sigma=0.5,
        L=math.log(N),
        sigma0=math.nan,
        h_fine=1.0 / N,
        h_coarse=1.0 / N,
    )


def bisect(mesh: SpatialMesh) -> SpatialMesh:
    """Halve every interval; parent nodes are kept bit-for-bit."""
    nodes = np.empty(2 * mesh.N + 1)
    nodes[::2] = mesh.nodes
    nodes[1::2] = 0.5 * (mesh.nodes[:-1] + mesh.nodes[1:])
    return SpatialMesh(
        N=2 * mesh.N,
        nodes=nodes,
        sigma=mesh.sigma,
        L=mesh.L,
        sigma0=mesh.sigma0,
        h_fine=mesh.h_fine / 2,
        h_coarse=mesh.h_coarse / 2,
    )


def write_mesh_csv(mesh: SpatialMesh, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "x_i", "h_i"])
        for i, x in enumerate(mesh.nodes):
            h = x - mesh.nodes[i - 1] if i else 0.0
            w.writerow([i, repr(float(x)), repr(float(h))])


@dataclass(frozen=True)
class TimeGrid:
    tau: float
    T: float
    m_tau: int
    M: int
    dt: float

    @property
    def levels(self) -> np.ndarray:
        """t_n = n dt for n = -m_tau .. M."""
        return np.arange(-self.m_tau, self.M + 1) * self.dt

    def row(self, n: int) -> int:
        """Storage row of time level n."""
        return n + self.m_tau

    @property
    def n_levels(self) -> int:
        return self.M + self.m_tau + 1

    def refine(self) -> "TimeGrid":
        return build_timegrid(self.tau, self.T, 2 * self.m_tau)


def build_timegrid(tau: float, T: float, m_tau: int) -> TimeGrid:
    if int(m_tau) != m_tau or m_tau < 1:
        raise MeshError(f"m_tau must be a positive integer, got {m_tau}")
    k = round(T / tau)
    if k < 1 or abs(T - k * tau) > 1e-12 * abs(T):
        raise MeshError(f"T/tau must be an integer, got T={T}, tau={tau}")
    m_tau = int(m_tau)
    return TimeGrid(tau=tau, T=T, m_tau=m_tau, M=k * m_tau, dt=tau / m_tau)


def timegrid_for_steps(tau: float, T: float, M: int) -> TimeGrid:
    """Grid with M steps on [0, T]; M must be a multiple of T/tau."""
    k = round(T / tau)
    if k < 1 or M % k:
        raise MeshError(f"M={M} is not a multiple of T/tau={T / tau:g}")
    return build_timegrid(tau, T, M // k)


def spatial_mesh(N: int, epsilon: float, sigma0: float, L=None, uniform: bool = False) -> SpatialMesh:
    return build_uniform(N) if uniform else build_shishkin(N, epsilon, sigma0, L)


__all__ = [
    "MeshError",
    "SpatialMesh",
    "TimeGrid",
    "bisect",
    "build_shishkin",
    "build_timegrid",
    "build_uniform",
    "minimal_L",
    "resolve_L",
    "spatial_mesh",
    "timegrid_for_steps",
    "write_mesh_csv",
]
