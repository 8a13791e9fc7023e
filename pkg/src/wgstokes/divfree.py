"""Discretely divergence-free basis and the reduced SPD solve.

The basis of ``D_h`` has three kinds of columns:

1. the cell functions, in both velocity components;
2. for each interior edge, the unit tangent placed on that edge;
3. for each interior vertex ``P``, the sum over the edges ``e`` leaving ``P``
   of ``n_e / |e|``, with ``n_e`` the edge direction away from ``P`` rotated
   counterclockwise by 90 degrees.

Each hull triangle of ``P`` sees an outflow of +1 through one spoke and -1
through the other, so the weak divergence vanishes elementwise.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import linsolve
from .assembly import DofMap, WeakField, assemble, boundary_values
from .mesh import Mesh
from .saddle import zero_mean

logger = logging.getLogger(__name__)

CELL, TANGENT, VERTEX = 1, 2, 3


class MultiplyConnectedError(ValueError):
    """The vertex/edge/cell basis does not span ``D_h`` on domains with holes."""


@dataclass(frozen=True)
class DivFreeBasis:
    C: sp.csc_matrix
    kinds: np.ndarray     # CELL, TANGENT or VERTEX per column
    entities: np.ndarray  # triangle, edge or vertex id per column
    hulls: dict           # interior vertex -> spoke edge ids, counterclockwise

    @property
    def n_columns(self) -> int:
        return self.C.shape[1]

    def expand(self, z: np.ndarray) -> np.ndarray:
        """Free velocity dofs of the combination ``C z``."""
        return self.C @ z


def build_divfree_basis(m: Mesh) -> DivFreeBasis:
    """Assemble the sparse map from reduced coordinates to free velocity dofs."""
    if not m.is_simply_connected:
        raise MultiplyConnectedError(
            f"mesh has {m.n_holes} hole(s); the divergence-free basis is "
            "incomplete there, use the saddle-point solver instead")
    dofs = DofMap.of(m)
    nt, ne = m.n_triangles, m.n_interior_edges
    rows, cols, vals = [], [], []

    # type 1: cell dofs, component 1 then component 2
    for k in range(2):
        rows.append(dofs.cell_dof(np.arange(nt), k))
        cols.append(k * nt + np.arange(nt))
        vals.append(np.ones(nt))

    # type 2: tangents on interior edges
    edges = np.arange(ne)
    tan = m.edge_tangents[:ne]
    for k in range(2):
        rows.append(dofs.edge_dof(edges, k))
        cols.append(2 * nt + edges)
        vals.append(tan[:, k])

    # type 3: vertex hulls
    interior_v = np.flatnonzero(~m.boundary_vertex)
    col_of = -np.ones(m.n_vertices, dtype=np.int64)
    col_of[interior_v] = 2 * nt + ne + np.arange(len(interior_v))
    ends = m.edges[:ne]
    centre = np.concatenate([ends[:, 0], ends[:, 1]])
    other = np.concatenate([ends[:, 1], ends[:, 0]])
    spoke = np.concatenate([edges, edges])
    keep = ~m.boundary_vertex[centre]
    centre, other, spoke = centre[keep], other[keep], spoke[keep]
    d = m.vertices[other] - m.vertices[centre]
    length = m.edge_lengths[spoke]
    n_ccw = np.column_stack([-d[:, 1], d[:, 0]]) / length[:, None]
    for k in range(2):
        rows.append(dofs.edge_dof(spoke, k))
        cols.append(col_of[centre])
        vals.append(n_ccw[:, k] / length)

    angle = np.arctan2(d[:, 1], d[:, 0])
    order = np.lexsort((angle, centre))
    split = np.flatnonzero(np.diff(centre[order])) + 1
    hulls = {int(centre[g[0]]): spoke[g].tolist()
             for g in np.split(order, split) if len(g)}

    ncol = 2 * nt + ne + len(interior_v)
    C = sp.csc_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(dofs.n_free, ncol))
    kinds = np.concatenate([np.full(2 * nt, CELL), np.full(ne, TANGENT),
                            np.full(len(interior_v), VERTEX)])
    entities = np.concatenate([np.arange(nt), np.arange(nt), edges, interior_v])
    return DivFreeBasis(C, kinds, entities, hulls)


def columnwise_divergence(m: Mesh, basis: DivFreeBasis, B=None) -> np.ndarray:
    """Largest per-triangle weak divergence of each basis column."""
    if B is None:
        from .assembly import divergence_matrix

        dofs = DofMap.of(m)
        B = divergence_matrix(m)[dofs.free_indices()]
    areas = m.areas
    div = (B.T @ basis.C).tocsc()  # b(column, phi_T) = |T| * div on T
    div = sp.diags(1.0 / areas) @ div
    return np.asarray(abs(div).max(axis=0).todense()).ravel()


def _check_homogeneous(m: Mesh, problem) -> None:
    if problem.homogeneous:
        return
    ub = boundary_values(m, problem.g)
    if np.abs(ub).max(initial=0.0) > 1e-14:
        raise ValueError(
            f"{problem.name} has non-homogeneous boundary data; the "
            "divergence-free solver needs u = 0 on the boundary")


def solve_divfree(m: Mesh, problem, tol: float | None = None,
                  maxit: int | None = None, basis: DivFreeBasis | None = None,
                  solver: str = "cg"):
    """Solve ``C^T A C z = C^T F`` and return ``(velocity, report)``.

    ``solver="cg"`` uses Jacobi-preconditioned CG.  The reduced matrix
    conditioning grows quickly under refinement, so ``"direct"`` (sparse
    LU) is available for fine meshes where CG stalls short of ``tol``.
    """
    _check_homogeneous(m, problem)
    if basis is None:
        basis = build_divfree_basis(m)
    system = assemble(m, problem, check_compatibility=False)
    C = basis.C
    K = (C.T @ system.A @ C).tocsr()
    rhs = C.T @ system.F1
    if solver == "cg":
        z, report = linsolve.cg_solve(K, rhs, tol, maxit)
    elif solver == "direct":
        z, report = linsolve.direct_solve(K, rhs)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    u = WeakField.from_free(system.dofs, C @ z, system.u_boundary)
    return u, report


def reduced_matrix(m: Mesh, problem, basis: DivFreeBasis | None = None):
    if basis is None:
        basis = build_divfree_basis(m)
    system = assemble(m, problem, check_compatibility=False)
    return (basis.C.T @ system.A @ basis.C).tocsr()


def recover_pressure(m: Mesh, u: WeakField, problem, rtol: float = 1e-6):
    """Least-squares pressure with ``B p = A u - F``, shifted to zero mean.

    Solves the normal equations with the first pressure pinned.  Warns if
    the residual exceeds ``rtol * ||F||``, i.e. ``u`` is not a discrete
    solution.
    """
    system = assemble(m, problem, check_compatibility=False)
    r = system.A @ u.free_vector(system.dofs) - system.F1
    B = system.B
    N = (B.T @ B).tocsc()
    rhs = B.T @ r
    p = np.zeros(m.n_triangles)
    if m.n_triangles > 1:
        p[1:] = spla.spsolve(N[1:, 1:], rhs[1:])
    res = np.linalg.norm(B @ p - r)
    scale = np.linalg.norm(system.F1)
    if res > rtol * max(scale, np.finfo(float).tiny):
        warnings.warn(f"pressure recovery residual {res:.3e} exceeds "
                      f"{rtol:g} * ||F|| = {rtol * scale:.3e}", RuntimeWarning,
                      stacklevel=2)
    return zero_mean(m, p)
