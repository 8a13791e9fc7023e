"""Weak gradients, weak divergences and local matrices of the P0 weak Galerkin element.

On a triangle ``T`` the scalar basis consists of the cell function ``phi_T``
(1 in the interior, 0 on the edges) and the three edge functions ``psi_e``.
Their weak gradients live in RT0 and have the form ``alpha (x - x_T) + beta``:

* ``grad_w phi_T = -C_T (x - x_T)``
* ``grad_w psi_e = (C_T / 3)(x - x_T) + (|e| / |T|) n_e``

with ``n_e`` the outward normal of ``T`` on ``e``.  Since
``int_T (x - x_T) dx = 0``, all local integrals have closed forms.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import Mesh, TriGeometry


@dataclass(frozen=True)
class LinearVectorField:
    """The field ``alpha * (x - centroid) + beta`` restricted to one triangle."""

    alpha: float
    beta: np.ndarray
    centroid: np.ndarray

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.stack([self.alpha * (x - self.centroid[0]) + self.beta[0],
                         self.alpha * (y - self.centroid[1]) + self.beta[1]])

    def __add__(self, other: "LinearVectorField") -> "LinearVectorField":
        return LinearVectorField(self.alpha + other.alpha,
                                 self.beta + other.beta, self.centroid)

    def __rmul__(self, c: float) -> "LinearVectorField":
        return LinearVectorField(c * self.alpha, c * self.beta, self.centroid)

    @property
    def divergence(self) -> float:
        return 2.0 * self.alpha


@dataclass(frozen=True)
class LocalMatrices:
    """Local stiffness over ``(phi_T, psi_0, psi_1, psi_2)`` and divergence rows.

    ``D[k, e]`` is the weak divergence of the edge function of local edge
    ``e`` in velocity component ``k``.
    """

    S: np.ndarray
    D: np.ndarray
    area: float


def weak_gradient_cell_basis(g: TriGeometry) -> LinearVectorField:
    return LinearVectorField(-g.ct, np.zeros(2), g.centroid)


def weak_gradient_edge_basis(g: TriGeometry, e: int) -> LinearVectorField:
    return LinearVectorField(g.ct / 3.0, g.lengths[e] / g.area * g.normals[e],
                             g.centroid)


def weak_divergence_edge_basis(g: TriGeometry, e: int, k: int) -> float:
    """Weak divergence on ``T`` of the edge function with unit value in component ``k``.

    Uses ``T``'s outward normal; callers working with the global normal
    apply the edge sign themselves.
    """
    return g.lengths[e] * g.normals[e][k] / g.area


def local_matrices(g: TriGeometry) -> LocalMatrices:
    S = stiffness_blocks(np.array([g.area]), np.array([g.ct]),
                         g.lengths[None], g.normals[None])[0]
    D = (g.lengths[:, None] * g.normals / g.area).T
    return LocalMatrices(S=S, D=D, area=g.area)


def stiffness_blocks(area, ct, lengths, normals) -> np.ndarray:
    """Closed-form 4x4 local stiffness matrices for many triangles at once.

    Parameters
    ----------
    area, ct : (N,) arrays
    lengths : (N, 3) array
    normals : (N, 3, 2) array of outward unit normals

    Returns
    -------
    (N, 4, 4) array, ordered ``(phi_T, psi_0, psi_1, psi_2)``.
    """
    n = len(area)
    m = area * ct
    S = np.empty((n, 4, 4))
    S[:, 0, 0] = 2.0 * m
    S[:, 0, 1:] = -2.0 / 3.0 * m[:, None]
    S[:, 1:, 0] = S[:, 0, 1:]
    ln = lengths[..., None] * normals
    S[:, 1:, 1:] = (2.0 / 9.0 * m)[:, None, None] \
        + np.einsum("tik,tjk->tij", ln, ln) / area[:, None, None]
    return S


def mesh_stiffness_blocks(m: Mesh) -> np.ndarray:
    return stiffness_blocks(m.areas, m.ct, m.tri_edge_lengths, m.outward_normals)


# -- quadrature ---------------------------------------------------------------

# barycentric points and weights (weights sum to 1)
_EDGE_MIDPOINT_RULE = (
    np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]),
    np.full(3, 1.0 / 3.0),
)

_a1, _b1 = 0.445948490915964886318, 0.108103018168070227363
_a2, _b2 = 0.091576213509770743460, 0.816847572980458513080
_w1, _w2 = 0.223381589678011065716, 0.109951743655321600950
_DUNAVANT4 = (
    np.array([[_a1, _a1, _b1], [_a1, _b1, _a1], [_b1, _a1, _a1],
              [_a2, _a2, _b2], [_a2, _b2, _a2], [_b2, _a2, _a2]]),
    np.array([_w1] * 3 + [_w2] * 3),
)

TRIANGLE_RULES = {2: _EDGE_MIDPOINT_RULE, 4: _DUNAVANT4}


def triangle_rule(degree: int):
    """Barycentric points and weights of the rule exact to ``degree``."""
    try:
        return TRIANGLE_RULES[degree]
    except KeyError:
        raise ValueError(f"no triangle rule for degree {degree}; "
                         f"use one of {sorted(TRIANGLE_RULES)}") from None


def quadrature(g: TriGeometry, f: Callable, degree: int = 4) -> float:
    """Integrate the scalar field ``f(x, y)`` over one triangle."""
    bary, w = triangle_rule(degree)
    pts = bary @ g.vertices
    return float(g.area * np.dot(w, f(pts[:, 0], pts[:, 1])))


def integrate_cells(m: Mesh, f: Callable, degree: int = 4) -> np.ndarray:
    """Integral of ``f`` over each triangle.

    ``f(x, y)`` receives flat arrays and may return shape ``(npts,)`` or
    ``(ncomp, npts)``; the result has shape ``(N_T,)`` or ``(N_T, ncomp)``.
    """
    bary, w = triangle_rule(degree)
    pts = np.einsum("qv,tvk->tqk", bary, m.tri_coords)
    vals = np.asarray(f(pts[..., 0].ravel(), pts[..., 1].ravel()), dtype=float)
    nq = len(w)
    if vals.ndim == 1:
        return m.areas * (vals.reshape(-1, nq) @ w)
    vals = vals.reshape(len(vals), -1, nq)
    return (m.areas[:, None] * np.einsum("ctq,q->tc", vals, w))


def gauss_legendre(npts: int):
    """Points in [0, 1] and weights summing to 1."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def edge_averages(m: Mesh, f: Callable, edges=None, npts: int = 5) -> np.ndarray:
    """Mean value of ``f`` over each edge, shape (n_edges,) or (n_edges, ncomp)."""
    if edges is None:
        edges = np.arange(m.n_edges)
    s, w = gauss_legendre(npts)
    a = m.vertices[m.edges[edges, 0]]
    b = m.vertices[m.edges[edges, 1]]
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    vals = np.asarray(f(pts[..., 0].ravel(), pts[..., 1].ravel()), dtype=float)
    if vals.ndim == 1:
        return vals.reshape(len(edges), npts) @ w
    vals = vals.reshape(len(vals), len(edges), npts)
    return np.einsum("ceq,q->ec", vals, w)
