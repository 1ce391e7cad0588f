"""First stability eigenvalue of CMC surfaces in space forms and E(kappa, tau) spaces."""

from .ambient import AmbientSpace
from .bounds import all_bounds, sharpest_bound
from .kernels import BACKEND
from .spectrum import SpectrumResult, assemble_jacobi, lowest_eigenpairs, solve
from .surface import build_mesh, clifford_torus, hopf_torus, round_sphere, slice_sphere

__all__ = [
    "BACKEND",
    "AmbientSpace",
    "SpectrumResult",
    "all_bounds",
    "assemble_jacobi",
    "build_mesh",
    "clifford_torus",
    "hopf_torus",
    "lowest_eigenpairs",
    "round_sphere",
    "sharpest_bound",
    "slice_sphere",
    "solve",
]
