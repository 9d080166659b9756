"""Hybrid finite differences on layer-adapted meshes for singularly perturbed
parabolic delay convection-diffusion problems with degenerate convection."""

from .extrapolation import ExtrapolatedField, richardson
from .mesh import TimeGrid, SpatialMesh, bisect, build_shishkin, build_timegrid, build_uniform
from .problem import ProblemFamily, ProblemSpec, builtin_problem, custom_problem, sample
from .solver import SolutionField, solve, stability_diagnostic

__version__ = "0.1.0"
