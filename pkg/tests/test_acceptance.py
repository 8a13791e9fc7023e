"""Acceptance suite: one PASS/FAIL line per criterion.

Reference values are the expected error tables for the manufactured
examples.  Run with ``pytest tests/test_acceptance.py -s`` to watch the
verdicts as they happen; they are also repeated in the terminal summary.
The full suite takes a few minutes, dominated by the h = 1/128 solves.
"""
import time

import numpy as np
import pytest

from wgstokes import analysis, divfree, kernel, mesh, problems, saddle, verify

# ex1, saddle-point solve: |||e|||, ||e_u||, ||e_p|| for h = 1/4 .. 1/128
REF_SADDLE = np.array([
    [4.0478, 3.7181e-1, 1.7906],
    [1.8723, 9.8624e-2, 8.7513e-1],
    [9.1907e-1, 2.5276e-2, 4.1211e-1],
    [4.5785e-1, 6.3793e-3, 2.0019e-1],
    [2.2874e-1, 1.5992e-3, 9.9207e-2],
    [1.1435e-1, 4.0009e-4, 4.9486e-2],
])
REF_SADDLE_RATES = (1.02, 1.98, 1.04)
REF_DIVFREE_RATES = (0.97, 1.97)
REF_DIVFREE_TRIPLE_H8 = 3.3499
REF_HOLED_RATES = (0.995, 1.95, 0.91)

LEVELS = [4, 8, 16, 32, 64, 128]


def fmt(v):
    return "(" + ", ".join(f"{x:.3f}" for x in v) + ")"


def within(values, targets, tol):
    return all(abs(v - t) <= tol for v, t in zip(values, targets))


@pytest.fixture(scope="module")
def ex1():
    return problems.example1()


@pytest.fixture(scope="module")
def ex1_saddle(ex1):
    """Saddle-point solves on the reference meshes, timed as one study."""
    cache = {}

    def solve(m, pb):
        u, p, rep = analysis.solve(m, pb, "saddle")
        cache[m.h] = (u, p, rep)
        return u, p, rep

    meshes = [mesh.build_unit_square_mesh(n) for n in LEVELS]
    t0 = time.perf_counter()
    rep = analysis.convergence_study(ex1, meshes, solve_fn=solve)
    elapsed = time.perf_counter() - t0
    nodal = analysis.convergence_study(ex1, meshes, solve_fn=lambda m, pb: cache[m.h],
                                       projection="nodal")
    return rep, nodal, elapsed


def test_criterion_01_ex1_saddle(ex1_saddle, verdict):
    rep, nodal, elapsed = ex1_saddle
    print()
    print(rep.format_table())
    assert rep.complete
    fit = rep.fitted_rates()
    rel = np.abs(rep.table - REF_SADDLE) / REF_SADDLE
    rates_ok = within(fit, REF_SADDLE_RATES, 0.1)
    mags_ok = bool(np.all(rel <= 0.25))
    time_ok = elapsed <= 300
    worst = rel.max(axis=0)
    verdict("criterion 1 (ex1 saddle, fitted rates)", rates_ok,
            f"{fmt(fit)} vs {fmt(REF_SADDLE_RATES)} +-0.1")
    verdict("criterion 1 (ex1 saddle, magnitudes within 25%)", mags_ok,
            f"worst relative deviation per column {fmt(worst)}")
    verdict("criterion 1 (ex1 saddle, runtime <= 5 min)", time_ok, f"{elapsed:.1f} s")
    # same solutions measured with point-value projections, for comparison only
    nrel = np.abs(nodal.table - REF_SADDLE) / REF_SADDLE
    print(f"info: nodal projection fitted rates {fmt(nodal.fitted_rates())}, "
          f"worst deviation per column {fmt(nrel.max(axis=0))}")
    assert rates_ok and mags_ok and time_ok


def test_criterion_02_ex1_divfree(ex1, verdict):
    # the reduced system is solved by sparse LU: its condition number grows
    # like h^-4 and cg cannot certify the default tolerance below h = 1/32
    cache = {}

    def solve(m, pb):
        cache[m.h] = analysis.solve(m, pb, "divfree", "direct", recover_pressure=False)
        return cache[m.h]

    meshes = [mesh.build_unit_square_mesh(n) for n in LEVELS]
    rep = analysis.convergence_study(ex1, meshes, "divfree", solve_fn=solve)
    nodal = analysis.convergence_study(ex1, meshes, "divfree", projection="nodal",
                                       solve_fn=lambda m, pb: cache[m.h])
    print()
    print(rep.format_table())
    assert rep.complete
    fit = rep.fitted_rates()[:2]
    rates_ok = within(fit, REF_DIVFREE_RATES, 0.1)
    e8 = rep.errors[LEVELS.index(8)][0]
    mag_ok = abs(e8 - REF_DIVFREE_TRIPLE_H8) <= 0.25 * REF_DIVFREE_TRIPLE_H8
    verdict("criterion 2 (ex1 divfree, fitted rates)", rates_ok,
            f"{fmt(fit)} vs {fmt(REF_DIVFREE_RATES)} +-0.1")
    verdict("criterion 2 (ex1 divfree, |||e||| at h=1/8 within 25%)", mag_ok,
            f"{e8:.4f} vs {REF_DIVFREE_TRIPLE_H8}")
    print(f"info: nodal projection fitted rates {fmt(nodal.fitted_rates()[:2])}, "
          f"|||e||| at h=1/8 {nodal.errors[1][0]:.4f}, "
          f"||e_u|| per level {fmt(nodal.table[:, 1])}")
    assert rates_ok and mag_ok


def test_criterion_03_holed_square(verdict):
    pb = problems.example2()
    base = pb.domain.mesh()
    meshes = [mesh.refine(base, k) for k in range(5)]
    rep = analysis.convergence_study(pb, meshes)
    print()
    print(rep.format_table())
    assert rep.complete
    fit = rep.fitted_rates()
    ok = within(fit, REF_HOLED_RATES, 0.15)
    verdict("criterion 3 (ex2 on holed mesh, fitted rates)", ok,
            f"{fmt(fit)} vs {fmt(REF_HOLED_RATES)} +-0.15")
    assert ok


@pytest.mark.parametrize("Re", [1.0, 100.0])
def test_criterion_04_kovasznay(Re, verdict):
    pb = problems.example3(Re)
    meshes = [pb.domain.mesh(n) for n in (8, 16, 32, 64, 128)]
    rep = analysis.convergence_study(pb, meshes)
    print()
    print(rep.format_table())
    assert rep.complete
    last = rep.pairwise_rates()[-1]
    ok = abs(last[0] - 1.0) <= 0.05 and abs(last[1] - 2.0) <= 0.05 and last[2] >= 1.0
    verdict(f"criterion 4 (ex3, Re={Re:g}, finest-pair rates)", ok,
            f"{fmt(last)}; need 1+-0.05, 2+-0.05, >=1")
    assert ok


def test_criterion_05_equivalence(ex1, verdict):
    worst = 0.0
    for n in (8, 16):
        m = mesh.build_unit_square_mesh(n)
        u1 = saddle.solve_saddle(m, ex1).velocity.to_vector()
        u2, rep = divfree.solve_divfree(m, ex1, tol=1e-10)
        assert rep.converged and rep.method == "cg"
        worst = max(worst, np.linalg.norm(u1 - u2.to_vector()) / np.linalg.norm(u1))
    ok = worst <= 1e-7
    verdict("criterion 5 (saddle vs divfree velocity)", ok,
            f"worst relative difference {worst:.2e} at h = 1/8, 1/16")
    assert ok


def test_criterion_06_divfree_kernel(verdict):
    meshes = [(f"n={n} {d}", mesh.build_unit_square_mesh(n, d))
              for n in (1, 2, 4, 8, 16) for d in ("NE", "NW")]
    meshes += [(f"step level {k}", problems.BACKWARD_STEP.mesh(k)) for k in (1, 2)]
    res = verify.divfree_suite(meshes)
    print()
    print(res)
    verdict("criterion 6 (divergence-free kernel and dimension)", res.passed,
            f"{len(meshes)} meshes")
    assert res.passed


def _defining_equation_error(g):
    # (grad_w v, tau) + (v0, div tau) - <vb, tau.n> for the four basis functions
    taus = verify._rt0_fields(g)
    closed = [kernel.weak_gradient_cell_basis(g)] + \
        [kernel.weak_gradient_edge_basis(g, e) for e in range(3)]
    worst = 0.0
    for j, f in enumerate(closed):
        for i, tau in enumerate(taus):
            lhs = kernel.quadrature(g, lambda x, y: np.sum(f(x, y) * tau(x, y), axis=0), 2)
            if j == 0:
                rhs = -g.area * (2.0 if i == 2 else 0.0)
            else:
                rhs = verify._edge_flux(g, j - 1, tau)
            scale = max(1.0, abs(rhs), g.lengths.max() ** 2)
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def test_criterion_07_kernel_oracle(verdict):
    res = verify.kernel_suite(100)
    print()
    print(res)
    tris = [mesh.geometry_from_points(p) for p in verify.random_triangles(100)]
    eq = max(_defining_equation_error(g) for g in tris)
    ok = res.passed and eq <= 1e-12
    verdict("criterion 7 (closed forms vs quadrature oracle)", ok,
            f"defining-equation residual {eq:.1e}")
    assert ok


def test_criterion_08_euler(verdict):
    meshes = [mesh.build_unit_square_mesh(n, d) for n in (1, 2, 3, 4, 8, 16, 32, 64)
              for d in ("NE", "NW")]
    meshes += [dom.mesh(n) for dom in (problems.BACKWARD_STEP, problems.KOVASZNAY_BOX,
                                       problems.CAVITY) for n in (1, 2, 4, 8)]
    meshes += [mesh.refine(problems.BACKWARD_STEP.mesh(1), k) for k in (1, 2, 3)]
    bad = [m for m in meshes
           if m.n_interior_edges + 1 != m.n_interior_vertices + m.n_triangles]
    ok = not bad
    verdict("criterion 8 (Euler identity on generated meshes)", ok,
            f"{len(meshes) - len(bad)}/{len(meshes)} meshes")
    assert ok


def test_criterion_09_consistency(verdict):
    cases = [problems.example1(), problems.example2(), problems.example3(1.0),
             problems.example3(100.0)]
    orders = {}
    for pb in cases:
        label = pb.name + (f" Re={1 / pb.nu:g}" if pb.name == "ex3" else "")
        orders[label] = problems.consistency_order(pb)[2]
    ok = min(orders.values()) >= 1.9
    verdict("criterion 9 (manufactured consistency order)", ok,
            ", ".join(f"{k} {v:.2f}" for k, v in orders.items()))
    assert ok


def test_criterion_10_benchmarks(verdict):
    lines, ok = [], True
    runs = [(problems.example4(), problems.CHANNEL_WITH_HOLE.mesh(refine=1)),
            (problems.example5(), problems.BACKWARD_STEP.mesh(8)),
            (problems.example6(), problems.CAVITY.mesh(32))]
    for pb, m in runs:
        sol = saddle.solve_saddle(m, pb)
        mean = abs(np.dot(m.areas, sol.pressure)) / m.areas.sum()
        div = np.abs(saddle.discrete_divergence(sol.system, sol.velocity)).max()
        good = sol.report.converged and mean <= 1e-12 and div <= 1e-9
        if pb.name == "ex5":
            xc = m.centroids[:, 0]
            lo, hi = xc.min(), xc.max()
            third = (hi - lo) / 3
            p_in = sol.pressure[xc < lo + third].mean()
            p_out = sol.pressure[xc > hi - third].mean()
            good &= p_in > p_out
            lines.append(f"ex5 inlet/outlet mean p {p_in:.3g}/{p_out:.3g}")
        lines.append(f"{pb.name} mean p {mean:.1e}, max |b(u,q)| {div:.1e}")
        ok &= bool(good)
    verdict("criterion 10 (ex4-ex6 smoke)", ok, "; ".join(lines))
    assert ok
