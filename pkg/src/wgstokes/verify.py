"""Self-checks run by ``wg-stokes verify``.

Each suite returns a :class:`SuiteResult`; the kernel suite compares the
closed forms against weak gradients obtained by solving the defining
relation on the RT0 space with quadrature, which shares no code with
:mod:`wgstokes.kernel`'s closed forms.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import kernel, mesh as meshmod, problems
from .assembly import DofMap, divergence_matrix
from .divfree import build_divfree_basis, columnwise_divergence

DIV_TOL = 1e-13
KERNEL_TOL = 1e-12


@dataclass
class SuiteResult:
    name: str
    passed: bool = True
    details: list = field(default_factory=list)

    def check(self, ok: bool, what: str) -> None:
        self.details.append(("ok  " if ok else "FAIL") + " " + what)
        self.passed &= bool(ok)

    def __str__(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"
        return "\n".join([head] + ["    " + d for d in self.details])


def default_meshes(sizes=(2, 4, 8)):
    for n in sizes:
        for diag in ("NE", "NW"):
            yield f"n={n} {diag}", meshmod.build_unit_square_mesh(n, diag)
    yield "step n=2", problems.BACKWARD_STEP.mesh(2)


def inject_normal_fault(m: meshmod.Mesh) -> meshmod.Mesh:
    """Copy of ``m`` with one edge sign flipped on an edge at an interior vertex."""
    nint = m.n_interior_edges
    ends = m.edges[:nint]
    e = int(np.flatnonzero(~m.boundary_vertex[ends].all(axis=1))[0])
    t = m.edge_triangles[e, 0]
    signs = m.tri_edge_signs.copy()
    signs[t, list(m.tri_edges[t]).index(e)] *= -1
    return dataclasses.replace(m, tri_edge_signs=signs, _cache={})


# -- suites -------------------------------------------------------------------

def mesh_suite(meshes) -> SuiteResult:
    res = SuiteResult("mesh")
    for name, m in meshes:
        issues = meshmod.check_mesh(m)
        res.check(not issues, f"{name}: invariants {'; '.join(issues) or 'hold'}")
        r = meshmod.refine_uniform(m)
        rel = abs(r.areas.sum() - m.areas.sum()) / m.areas.sum()
        res.check(rel <= 1e-13 and r.euler_defect == 0,
                  f"{name}: refinement keeps area (rel {rel:.1e}) and Euler identity")
    return res


def random_triangles(count: int, seed: int = 0, min_area: float = 1e-3):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        p = rng.uniform(-1.0, 1.0, (3, 2))
        a = 0.5 * ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1])
                   - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0]))
        if abs(a) > min_area:
            out.append(p)
    return out


def _rt0_fields(g):
    # basis of RT0: (1,0), (0,1), x - x_T
    c = g.centroid
    return [lambda x, y: np.stack([np.ones_like(x), np.zeros_like(x)]),
            lambda x, y: np.stack([np.zeros_like(x), np.ones_like(x)]),
            lambda x, y: np.stack([x - c[0], y - c[1]])]


_RT0_DIV = np.array([0.0, 0.0, 2.0])


def _dot_integral(g, f1, f2, degree=2):
    return kernel.quadrature(g, lambda x, y: np.sum(f1(x, y) * f2(x, y), axis=0), degree)


def _edge_flux(g, e, tau):
    # int_e tau . n ds with the midpoint rule (exact for linear tau)
    a, b = g.vertices[(e + 1) % 3], g.vertices[(e + 2) % 3]
    mid = 0.5 * (a + b)
    return g.lengths[e] * float(tau(mid[0:1], mid[1:2])[:, 0] @ g.normals[e])


def oracle_weak_gradients(g):
    """Weak gradients of ``(phi_T, psi_0, psi_1, psi_2)`` as RT0 coefficients.

    Solves ``(grad_w v, tau) = -(v_0, div tau) + <v_b, tau . n>`` for all
    ``tau`` in RT0 with quadrature-built Gram matrix and right-hand side.
    """
    taus = _rt0_fields(g)
    G = np.array([[_dot_integral(g, s, t) for t in taus] for s in taus])
    rhs = np.empty((3, 4))
    rhs[:, 0] = -g.area * _RT0_DIV
    for e in range(3):
        rhs[:, 1 + e] = [_edge_flux(g, e, t) for t in taus]
    return np.linalg.solve(G, rhs), taus


def kernel_oracle_errors(g):
    """Relative mismatches of closed forms against the oracle on one triangle.

    Returns ``(stiffness, divergence, weak_gradient, ct)``.
    """
    coef, taus = oracle_weak_gradients(g)

    def field(j):
        return lambda x, y: sum(coef[i, j] * taus[i](x, y) for i in range(3))

    S_oracle = np.array([[_dot_integral(g, field(i), field(j)) for j in range(4)]
                         for i in range(4)])
    loc = kernel.local_matrices(g)
    err_s = np.abs(loc.S - S_oracle).max() / np.abs(S_oracle).max()

    # weak divergence against q = 1: |T| div_w v = sum_e |e| v_b . n_e
    D_oracle = np.array([[_edge_flux(g, e, lambda x, y, k=k: np.eye(2)[k][:, None]
                                     * np.ones_like(x)) / g.area
                          for e in range(3)] for k in range(2)])
    err_d = np.abs(loc.D - D_oracle).max() / np.abs(D_oracle).max()

    closed = [kernel.weak_gradient_cell_basis(g)] + \
        [kernel.weak_gradient_edge_basis(g, e) for e in range(3)]
    bary, _ = kernel.triangle_rule(4)
    pts = bary @ g.vertices
    scale = max(np.abs(field(j)(pts[:, 0], pts[:, 1])).max() for j in range(4))
    err_g = max(np.abs(closed[j](pts[:, 0], pts[:, 1])
                       - field(j)(pts[:, 0], pts[:, 1])).max() for j in range(4)) / scale

    c = g.centroid
    moment = kernel.quadrature(g, lambda x, y: (x - c[0])**2 + (y - c[1])**2, 4)
    err_c = abs(g.ct - 2 * g.area / moment) / g.ct
    return err_s, err_d, err_g, err_c


def kernel_suite(count: int = 100, seed: int = 0) -> SuiteResult:
    res = SuiteResult("kernel oracle")
    errs = np.array([kernel_oracle_errors(meshmod.geometry_from_points(p))
                     for p in random_triangles(count, seed)])
    worst = errs.max(axis=0)
    for name, w in zip(("local stiffness", "local divergence",
                        "weak gradient fields", "C_T"), worst):
        res.check(w <= KERNEL_TOL, f"{name}: worst relative error {w:.1e} "
                  f"over {count} triangles")
    return res


def divfree_suite(meshes) -> SuiteResult:
    res = SuiteResult("divergence-free kernel")
    for name, m in meshes:
        if not m.is_simply_connected:
            continue
        basis = build_divfree_basis(m)
        B = divergence_matrix(m)[DofMap.of(m).free_indices()]
        div = columnwise_divergence(m, basis, B).max(initial=0.0)
        nt, ne, nv = m.n_triangles, m.n_interior_edges, m.n_interior_vertices
        dim_ok = basis.n_columns == 2 * nt + ne + nv == 2 * (nt + ne) - nt + 1
        res.check(div <= DIV_TOL, f"{name}: max column divergence {div:.1e}")
        res.check(dim_ok, f"{name}: {basis.n_columns} columns, "
                  f"2N_T+N_E+N_V = {2 * nt + ne + nv}, "
                  f"2(N_T+N_E)-N_T+1 = {2 * (nt + ne) - nt + 1}")
        rank = np.linalg.matrix_rank(basis.C.toarray()) if basis.n_columns <= 600 else None
        if rank is not None:
            res.check(rank == basis.n_columns, f"{name}: columns independent (rank {rank})")
    return res


MANUFACTURED = ("ex1", "ex2", "ex3")


def consistency_suite(names=MANUFACTURED) -> SuiteResult:
    res = SuiteResult("manufactured consistency")
    for name in names:
        cases = [(1.0,), (100.0,)] if name == "ex3" else [()]
        for args in cases:
            pb = problems.get_problem(name, *args)
            label = pb.name + (f" Re={args[0]:g}" if args else "")
            r1, r2, order = problems.consistency_order(pb)
            try:
                resid = problems.verify_consistency(pb)
                res.check(True, f"{label}: residual {resid:.2e} at h=1e-4, order {order:.2f}")
            except problems.ConsistencyError as exc:
                res.check(False, f"{label}: {exc}")
    return res


def run_all(problem: str | None = None, fault: str | None = None,
            sizes=(2, 4, 8)) -> list[SuiteResult]:
    meshes = list(default_meshes(sizes))
    if fault == "normal-sign":
        meshes = [(name + " (faulted)", inject_normal_fault(m)) for name, m in meshes]
    elif fault is not None:
        raise ValueError(f"unknown fault {fault!r}")
    names = MANUFACTURED if problem is None else (problem,)
    return [mesh_suite(meshes), kernel_suite(), divfree_suite(meshes),
            consistency_suite(names)]
