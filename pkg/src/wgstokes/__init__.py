"""Lowest-order weak Galerkin finite elements for the 2D Stokes equations.

Two solution paths share one discretization: the coupled saddle-point
system (:func:`solve_saddle`) and a reduced SPD system on an explicit basis
of discretely divergence-free velocities (:func:`solve_divfree`).
"""
from .analysis import convergence_study, error_norms, project_exact
from .assembly import IncompatibleDataError, assemble
from .divfree import build_divfree_basis, recover_pressure, solve_divfree
from .mesh import Mesh, MeshError, build_unit_square_mesh, read_mesh, refine_uniform
from .problems import get_problem
from .saddle import solve_saddle

__version__ = "0.1.0"

__all__ = [
    "Mesh", "MeshError", "build_unit_square_mesh", "read_mesh", "refine_uniform",
    "assemble", "IncompatibleDataError", "solve_saddle", "solve_divfree",
    "build_divfree_basis", "recover_pressure", "error_norms", "project_exact",
    "convergence_study", "get_problem",
]
