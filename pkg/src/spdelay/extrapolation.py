"""Richardson extrapolation in time: U_ext = 2 U(2M) - U(M) on the coarse levels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import SpatialMesh, TimeGrid
from .solver import SolutionField


class ExtrapolationError(ValueError):
    pass


@dataclass(eq=False)
class ExtrapolatedField:
    """Same layout as the coarse SolutionField; ``provenance`` is (M, 2M)."""

    mesh: SpatialMesh
    timegrid: TimeGrid
    values: np.ndarray
    scheme_kind: str
    provenance: tuple

    def level(self, n: int) -> np.ndarray:
        return self.values[self.timegrid.row(n)]

    @property
    def times(self) -> np.ndarray:
        return self.timegrid.levels


def richardson(coarse: SolutionField, fine: SolutionField) -> ExtrapolatedField:
    if not coarse.mesh.same_nodes(fine.mesh):
        raise ExtrapolationError("coarse and fine solves use different spatial meshes")
    gc, gf = coarse.timegrid, fine.timegrid
    if gf.M != 2 * gc.M or gf.m_tau != 2 * gc.m_tau:
        raise ExtrapolationError(
            f"time steps must double: coarse (M={gc.M}, m_tau={gc.m_tau}), fine (M={gf.M}, m_tau={gf.m_tau})"
        )
    if coarse.scheme_kind != fine.scheme_kind:
        raise ExtrapolationError("coarse and fine solves use different schemes")
    values = 2.0 * fine.values[::2] - coarse.values
    return ExtrapolatedField(coarse.mesh, gc, values, coarse.scheme_kind, (gc.M, gf.M))
