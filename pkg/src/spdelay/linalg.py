"""Tridiagonal solves without pivoting (Thomas algorithm)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


class SingularSystemError(ArithmeticError):
    def __init__(self, row: int):
        super().__init__(f"zero pivot in row {row}")
        self.row = row


@dataclass(eq=False)
class TridiagonalSystem:
    """sub[0] and sup[n-1] are ignored."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if n < 1:
            raise ValueError("empty system")
        for name in ("sub", "sup", "rhs"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected {n}")

    @property
    def n(self) -> int:
        return len(self.diag)

    def to_dense(self) -> np.ndarray:
        n = self.n
        A = np.diag(np.asarray(self.diag, dtype=float))
        if n > 1:
            A[np.arange(1, n), np.arange(n - 1)] = self.sub[1:]
            A[np.arange(n - 1), np.arange(1, n)] = self.sup[:-1]
        return A

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.sub[1:] * x[:-1]
        y[:-1] += self.sup[:-1] * x[1:]
        return y


@njit(cache=True)
def _thomas(sub, diag, sup, rhs, out, cp):
    n = diag.shape[0]
    piv = diag[0]
    if piv == 0.0:
        return 0
    cp[0] = sup[0] / piv
    out[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i] * cp[i - 1]
        if piv == 0.0:
            return i
        cp[i] = sup[i] / piv
        out[i] = (rhs[i] - sub[i] * out[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        out[i] -= cp[i] * out[i + 1]
    return -1


class ThomasWorkspace:
    """Reusable buffers for repeated solves of size n."""

    def __init__(self, n: int):
        self.cp = np.empty(n)

    def solve(self, sub, diag, sup, rhs) -> np.ndarray:
        out = np.empty(len(diag))
        bad = _thomas(sub, diag, sup, rhs, out, self.cp)
        if bad >= 0:
            raise SingularSystemError(bad)
        return out


def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    arrays = [np.ascontiguousarray(a, dtype=float) for a in (system.sub, system.diag, system.sup, system.rhs)]
    return ThomasWorkspace(system.n).solve(*arrays)


def dense_solve(system: TridiagonalSystem) -> np.ndarray:
    """LAPACK solve of the assembled dense matrix, used as a test oracle."""
    return np.linalg.solve(system.to_dense(), np.asarray(system.rhs, dtype=float))
