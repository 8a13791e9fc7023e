import dataclasses

import numpy as np
import pytest
from scipy.integrate import trapezoid

from wgstokes import kernel, mesh, problems
from wgstokes.problems import ConsistencyError


@pytest.mark.parametrize("name,Re", [("ex1", None), ("ex2", None), ("ex3", 1.0),
                                     ("ex3", 100.0)])
def test_body_force_consistent(name, Re):
    pb = problems.get_problem(name, Re)
    r1, r2, order = problems.consistency_order(pb)
    assert order >= 1.9
    assert problems.verify_consistency(pb) <= 1e-3


def test_ex1_consistency_residual_small():
    assert problems.verify_consistency(problems.example1()) <= 1e-5


def test_wrong_body_force_detected():
    pb = problems.example1()
    bad = dataclasses.replace(pb, f=lambda x, y: pb.f(x, y) + 1e-3 * np.stack([x, y]))
    with pytest.raises(ConsistencyError) as info:
        problems.verify_consistency(bad)
    assert info.value.residual > 1e-4
    # a gross error also spoils the observed order
    worse = dataclasses.replace(pb, f=lambda x, y: pb.f(x, y) + np.stack([x, y]))
    with pytest.raises(ConsistencyError, match="order"):
        problems.verify_consistency(worse)


@pytest.mark.parametrize("name", ["ex1", "ex2", "ex3"])
def test_exact_velocity_divergence_free(name):
    pb = problems.get_problem(name)
    x, y = problems.sample_points(pb, 40, 0.05, seed=2)
    h = 1e-5
    div = ((pb.u_exact(x + h, y)[0] - pb.u_exact(x - h, y)[0])
           + (pb.u_exact(x, y + h)[1] - pb.u_exact(x, y - h)[1])) / (2 * h)
    assert np.abs(div).max() <= 1e-6


def test_ex1_vanishes_on_boundary():
    pb = problems.example1()
    s = np.linspace(0, 1, 11)
    for x, y in [(s, 0 * s), (s, 1 + 0 * s), (0 * s, s), (1 + 0 * s, s)]:
        assert np.abs(pb.g(x, y)).max() <= 1e-14


def test_ex1_projection_bounded():
    from wgstokes.analysis import project_exact
    m = mesh.build_unit_square_mesh(4)
    u, p = project_exact(m, problems.example1())
    vals = np.concatenate([u.cell.ravel(), u.edge.ravel()])
    assert np.isfinite(vals).all()
    assert np.abs(vals).max() <= 2 * np.pi


def test_ex2_pressure_mean_zero_on_holed_domain():
    pb = problems.example2()
    m = mesh.refine(pb.domain.mesh(), 2)
    mean = kernel.integrate_cells(m, pb.p_exact).sum() / m.areas.sum()
    # the mesh approximates the circles by polygons
    assert abs(mean) <= 5e-3


def test_ex3_parameters_and_mean():
    pb = problems.example3(Re=100.0)
    lam = 50 - np.sqrt(2500 + 4 * np.pi**2)
    assert pb.params["lambda"] == pytest.approx(lam)
    assert pb.nu == pytest.approx(0.01)
    m = pb.domain.mesh(16)
    mean = kernel.integrate_cells(m, pb.p_exact).sum() / m.areas.sum()
    assert abs(mean) <= 1e-6


@pytest.mark.parametrize("Re", [0.0, -1.0])
def test_ex3_needs_positive_Re(Re):
    with pytest.raises(ValueError):
        problems.example3(Re)


def test_unknown_problem():
    with pytest.raises(ValueError, match="unknown problem"):
        problems.get_problem("ex9")


def test_step_domain():
    m = problems.BACKWARD_STEP.mesh(2)
    assert m.areas.sum() == pytest.approx(problems.BACKWARD_STEP.area)
    c = m.centroids
    assert not ((c[:, 0] < 0) & (c[:, 1] < 0)).any()


def test_inflow_matches_outflow_ex5():
    pb = problems.example5()
    y_in = np.linspace(0, 1, 2001)
    y_out = np.linspace(-1, 1, 4001)
    q_in = trapezoid(pb.g(-2 + 0 * y_in, y_in)[0], y_in)
    q_out = trapezoid(pb.g(8 + 0 * y_out, y_out)[0], y_out)
    assert q_in == pytest.approx(1 / 60, rel=1e-5)
    assert q_out == pytest.approx(1 / 60, rel=1e-5)


def test_bundled_meshes():
    for dom, holes in [(problems.HOLED_SQUARE, 3), (problems.CHANNEL_WITH_HOLE, 1)]:
        m = dom.mesh()
        assert m.n_holes == holes
        assert mesh.check_mesh(m, holes=holes) == []
        assert dom.mesh(refine=1).n_triangles == 4 * m.n_triangles


def test_structured_domain_needs_resolution():
    with pytest.raises(ValueError):
        problems.UNIT_SQUARE.mesh()
