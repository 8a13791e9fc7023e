"""Degree-of-freedom numbering and assembly of the saddle-point system.

Scalar dofs are numbered cells first (``[0, N_T)``), then interior edges
(``[N_T, N_T + N_E)``), then boundary edges.  Vector dofs are blocked by
component.  Boundary edge values are fixed to the edge averages of the
Dirichlet data and eliminated, which leaves

    A U - B P = F1,   B^T U = F2

over the ``2 (N_T + N_E)`` free velocity dofs and ``N_T`` cell pressures.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernel
from .mesh import Mesh

logger = logging.getLogger(__name__)

EDGE_QUADRATURE_POINTS = 5


class IncompatibleDataError(ValueError):
    """Boundary data with nonzero net flux; the constrained system is inconsistent."""


@dataclass(frozen=True)
class DofMap:
    n_cells: int
    n_interior_edges: int
    n_boundary_edges: int

    @classmethod
    def of(cls, m: Mesh) -> "DofMap":
        return cls(m.n_triangles, m.n_interior_edges, m.n_boundary_edges)

    @property
    def n_scalar_free(self) -> int:
        return self.n_cells + self.n_interior_edges

    @property
    def n_scalar(self) -> int:
        return self.n_scalar_free + self.n_boundary_edges

    @property
    def n_free(self) -> int:
        """Free velocity dofs, ``2 (N_T + N_E)``."""
        return 2 * self.n_scalar_free

    @property
    def n_all(self) -> int:
        return 2 * self.n_scalar

    @property
    def n_pressure(self) -> int:
        return self.n_cells

    def cell_dof(self, t, k: int = 0, free: bool = True):
        return k * (self.n_scalar_free if free else self.n_scalar) + np.asarray(t)

    def edge_dof(self, e, k: int = 0, free: bool = True):
        e = np.asarray(e)
        if free and np.any(e >= self.n_interior_edges):
            raise IndexError("boundary edges carry no free dofs")
        n = self.n_scalar_free if free else self.n_scalar
        return k * n + self.n_cells + e

    def free_indices(self) -> np.ndarray:
        """Positions of the free dofs inside the full vector."""
        base = np.arange(self.n_scalar_free)
        return np.concatenate([base, self.n_scalar + base])

    def boundary_indices(self) -> np.ndarray:
        base = np.arange(self.n_scalar_free, self.n_scalar)
        return np.concatenate([base, self.n_scalar + base])


@dataclass
class WeakField:
    """A weak vector function: one value per triangle and one per edge."""

    cell: np.ndarray  # (N_T, 2)
    edge: np.ndarray  # (n_edges, 2), interior edges first

    def to_vector(self) -> np.ndarray:
        """Full dof vector (boundary edges included), blocked by component."""
        return np.concatenate([self.cell[:, 0], self.edge[:, 0],
                               self.cell[:, 1], self.edge[:, 1]])

    @classmethod
    def from_vector(cls, dofs: DofMap, v: np.ndarray) -> "WeakField":
        v = np.asarray(v, dtype=float)
        if len(v) != dofs.n_all:
            raise ValueError(f"expected {dofs.n_all} dofs, got {len(v)}")
        n, nt = dofs.n_scalar, dofs.n_cells
        c0, c1 = v[:n], v[n:]
        return cls(np.column_stack([c0[:nt], c1[:nt]]),
                   np.column_stack([c0[nt:], c1[nt:]]))

    @classmethod
    def from_free(cls, dofs: DofMap, free: np.ndarray,
                  boundary: np.ndarray | None = None) -> "WeakField":
        """Combine free dofs with boundary edge values of shape (n_bdry, 2)."""
        v = np.zeros(dofs.n_all)
        v[dofs.free_indices()] = free
        if boundary is not None:
            v[dofs.boundary_indices()] = np.asarray(boundary).T.ravel()
        return cls.from_vector(dofs, v)

    def free_vector(self, dofs: DofMap) -> np.ndarray:
        return self.to_vector()[dofs.free_indices()]


def scalar_stiffness(m: Mesh) -> sp.csr_matrix:
    """Assembled weak-gradient stiffness over all scalar dofs (nu = 1)."""
    nt = m.n_triangles
    S = kernel.mesh_stiffness_blocks(m)
    local = np.column_stack([np.arange(nt), nt + m.tri_edges])  # (N_T, 4)
    rows = np.repeat(local, 4, axis=1).ravel()
    cols = np.tile(local, (1, 4)).ravel()
    n = nt + m.n_edges
    M = sp.coo_matrix((S.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M.sum_duplicates()
    return M


def triple_norm_matrix(m: Mesh) -> sp.csr_matrix:
    """``a(., .)`` with nu = 1 over all vector dofs, boundary edges included."""
    S = scalar_stiffness(m)
    return sp.block_diag([S, S], format="csr")


def divergence_matrix(m: Mesh) -> sp.csr_matrix:
    """``B[i, t] = b(Theta_i, phi_t)`` over all vector dofs.

    Built from the global edge normals and the per-triangle signs, so cell
    rows are structurally zero.
    """
    nt, n = m.n_triangles, m.n_triangles + m.n_edges
    flux = (m.tri_edge_signs[..., None] * m.edge_lengths[m.tri_edges][..., None]
            * m.edge_normals[m.tri_edges])  # (N_T, 3, 2) = |e| n_out
    rows = (nt + m.tri_edges).ravel()
    cols = np.repeat(np.arange(nt), 3)
    blocks = [sp.coo_matrix((flux[..., k].ravel(), (rows + k * n, cols)),
                            shape=(2 * n, nt)) for k in range(2)]
    return (blocks[0] + blocks[1]).tocsr()


def boundary_values(m: Mesh, g, npts: int = EDGE_QUADRATURE_POINTS) -> np.ndarray:
    """Edge averages of ``g`` on the boundary edges, shape (n_bdry, 2)."""
    bdry = np.arange(m.n_interior_edges, m.n_edges)
    return kernel.edge_averages(m, g, bdry, npts)


def boundary_flux(m: Mesh, ub: np.ndarray) -> float:
    """Net outward flux of piecewise constant boundary values."""
    bdry = np.arange(m.n_interior_edges, m.n_edges)
    et = m.edge_triangles[bdry, 0]
    # outward normal of the domain = outward normal of the only neighbour
    loc = np.argmax(m.tri_edges[et] == bdry[:, None], axis=1)
    n_out = m.outward_normals[et, loc]
    return float(np.sum(m.edge_lengths[bdry] * np.einsum("ek,ek->e", ub, n_out)))


@dataclass
class SaddleSystem:
    mesh: Mesh
    dofs: DofMap
    A: sp.csr_matrix
    B: sp.csr_matrix
    F1: np.ndarray
    F2: np.ndarray
    nu: float
    u_boundary: np.ndarray
    A_all: sp.csr_matrix
    B_all: sp.csr_matrix

    def matrix(self, pin: int | None = 0) -> sp.csr_matrix:
        """Symmetric form ``[[A, B], [B^T, 0]]`` acting on ``(U, -P)``.

        With ``pin`` set, that pressure column and continuity row are dropped.
        """
        B = self.B
        if pin is not None:
            B = B[:, np.delete(np.arange(B.shape[1]), pin)]
        return sp.bmat([[self.A, B], [B.T, None]], format="csr")

    def rhs(self, pin: int | None = 0) -> np.ndarray:
        F2 = self.F2 if pin is None else np.delete(self.F2, pin)
        return np.concatenate([self.F1, F2])

    def velocity(self, U_free: np.ndarray) -> WeakField:
        return WeakField.from_free(self.dofs, U_free, self.u_boundary)


def assemble(m: Mesh, problem, npts: int = EDGE_QUADRATURE_POINTS,
             check_compatibility: bool = True) -> SaddleSystem:
    """Assemble the boundary-eliminated saddle-point system for ``problem`` on ``m``."""
    dofs = DofMap.of(m)
    free = dofs.free_indices()
    bnd = dofs.boundary_indices()

    A_all = triple_norm_matrix(m) * problem.nu
    B_all = divergence_matrix(m)

    if getattr(problem, "homogeneous", False):
        ub = np.zeros((m.n_boundary_edges, 2))
    else:
        ub = boundary_values(m, problem.g, npts)
    if check_compatibility and m.n_boundary_edges:
        flux = boundary_flux(m, ub)
        perimeter = m.edge_lengths[m.n_interior_edges:].sum()
        scale = perimeter * max(1.0, float(np.abs(ub).max()))
        if abs(flux) > 1e-10 * scale:
            raise IncompatibleDataError(
                f"boundary data has net flux {flux:.3e}; "
                "incompressible flow needs zero")
    u_bdry = ub.T.ravel()

    F_all = np.zeros(dofs.n_all)
    cell_load = kernel.integrate_cells(m, problem.f, degree=4)  # (N_T, 2)
    F_all[dofs.cell_dof(np.arange(m.n_triangles), 0, free=False)] = cell_load[:, 0]
    F_all[dofs.cell_dof(np.arange(m.n_triangles), 1, free=False)] = cell_load[:, 1]

    A = A_all[free][:, free].tocsr()
    B = B_all[free].tocsr()
    F1 = F_all[free]
    F2 = np.zeros(m.n_triangles)
    if np.any(u_bdry):
        F1 = F1 - A_all[free][:, bnd] @ u_bdry
        F2 = -(B_all[bnd].T @ u_bdry)
    return SaddleSystem(mesh=m, dofs=dofs, A=A, B=B, F1=F1, F2=F2,
                        nu=problem.nu, u_boundary=ub, A_all=A_all, B_all=B_all)


def export_matrix_market(system: SaddleSystem, prefix) -> None:
    """Write ``<prefix>_A.mtx`` and ``<prefix>_B.mtx``."""
    from scipy.io import mmwrite

    mmwrite(f"{prefix}_A.mtx", system.A)
    mmwrite(f"{prefix}_B.mtx", system.B)
