"""The coupled velocity-pressure solve."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linsolve
from .assembly import SaddleSystem, WeakField, assemble
from .mesh import Mesh


@dataclass
class StokesSolution:
    mesh: Mesh
    velocity: WeakField
    pressure: np.ndarray | None
    report: linsolve.SolveReport
    system: SaddleSystem | None = None


def zero_mean(m: Mesh, p: np.ndarray) -> np.ndarray:
    """Shift a cellwise constant function to zero (area weighted) mean."""
    return p - np.dot(m.areas, p) / m.areas.sum()


def solve_saddle_system(system: SaddleSystem, solver: str = "direct",
                        tol: float | None = None, maxit: int | None = None,
                        pin: int = 0):
    """Solve the pinned symmetric saddle system.

    Returns free velocity dofs, zero-mean pressure and the solve report.
    ``solver`` is ``"direct"`` (sparse LU), ``"minres"`` or ``"dense"``.
    """
    K = system.matrix(pin)
    rhs = system.rhs(pin)
    if solver == "minres":
        areas = np.delete(system.mesh.areas, pin)
        precond = np.concatenate([linsolve.jacobi(system.A), areas / system.nu])
        x, report = linsolve.minres_solve(K, rhs, tol, maxit, precond)
    elif solver == "direct":
        x, report = linsolve.direct_solve(K, rhs)
    elif solver == "dense":
        x, report = linsolve.dense_solve(K, rhs)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    nf = system.dofs.n_free
    U = x[:nf]
    # the symmetric form solves for -P
    p = np.insert(-x[nf:], pin, 0.0)
    return U, zero_mean(system.mesh, p), report


def solve_saddle(m: Mesh, problem, solver: str = "direct",
                 tol: float | None = None, maxit: int | None = None) -> StokesSolution:
    """Assemble and solve the saddle-point system for ``problem`` on ``m``."""
    system = assemble(m, problem)
    U, p, report = solve_saddle_system(system, solver, tol, maxit)
    return StokesSolution(m, system.velocity(U), p, report, system)


def discrete_divergence(system: SaddleSystem, velocity: WeakField) -> np.ndarray:
    """``b(u_h, phi_T)`` for every triangle, boundary values included."""
    return system.B_all.T @ velocity.to_vector()
