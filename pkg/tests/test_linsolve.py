import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from wgstokes import linsolve


def laplacian_1d(n):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1],
                    format="csr")


def saddle(n=30, m=10, seed=0):
    rng = np.random.default_rng(seed)
    A = laplacian_1d(n) + sp.eye(n)
    B = sp.csr_matrix(rng.normal(size=(n, m)))
    return sp.bmat([[A, B], [B.T, None]], format="csr")


def test_cg_matches_direct():
    A = laplacian_1d(200)
    b = np.sin(np.arange(200))
    x, rep = linsolve.cg_solve(A, b, tol=1e-12)
    assert rep.converged and rep.method == "cg"
    assert rep.residual <= 1e-12
    assert np.allclose(x, spla.spsolve(A.tocsc(), b), rtol=1e-9)


def test_cg_rejects_indefinite():
    A = sp.diags([1.0, -1.0, 2.0]).tocsr()
    with pytest.raises(linsolve.IndefiniteMatrixError):
        linsolve.cg_solve(A, np.ones(3), precond=np.ones(3))


def test_cg_zero_rhs():
    x, rep = linsolve.cg_solve(laplacian_1d(5), np.zeros(5))
    assert rep.converged and rep.iterations == 0 and not x.any()


def test_cg_reports_maxit():
    x, rep = linsolve.cg_solve(laplacian_1d(400), np.ones(400), tol=1e-12, maxit=5)
    assert not rep.converged
    assert rep.iterations == 5
    assert "no convergence" in rep.message


def test_cg_stops_on_stagnation():
    # tolerance far below what double precision can certify
    A = laplacian_1d(3000)
    b = np.random.default_rng(0).normal(size=3000)
    x, rep = linsolve.cg_solve(A, b, tol=1e-19, maxit=10 ** 6)
    assert not rep.converged
    assert rep.iterations < 10 ** 6
    assert "stagnated" in rep.message
    assert rep.residual < 1e-8


def test_minres_agrees_with_cg_on_spd():
    A = laplacian_1d(100) + 0.1 * sp.eye(100)
    b = np.cos(np.arange(100.0))
    x1, _ = linsolve.cg_solve(A, b, tol=1e-13)
    x2, rep = linsolve.minres_solve(A, b, tol=1e-13)
    assert rep.converged
    assert np.linalg.norm(x1 - x2) <= 1e-10 * np.linalg.norm(x1)


def test_minres_indefinite_matches_direct():
    K = saddle()
    b = np.arange(K.shape[0], dtype=float)
    x, rep = linsolve.minres_solve(K, b, tol=1e-11)
    assert rep.converged and rep.residual <= 1e-11
    xd, _ = linsolve.direct_solve(K, b)
    assert np.allclose(x, xd, rtol=1e-8, atol=1e-8)


def test_minres_rejects_bad_preconditioner():
    with pytest.raises(ValueError):
        linsolve.minres_solve(saddle(), np.ones(40), precond=-np.ones(40))


def test_dense_solve_and_limit():
    K = saddle(8, 3)
    b = np.ones(11)
    x, rep = linsolve.dense_solve(K, b)
    assert rep.residual <= 1e-12
    big = sp.eye(linsolve.DENSE_LIMIT + 1, format="csr")
    with pytest.raises(ValueError):
        linsolve.dense_solve(big, np.ones(linsolve.DENSE_LIMIT + 1))


def test_env_tolerance(monkeypatch):
    monkeypatch.setenv("WG_STOKES_TOL", "1e-3")
    assert linsolve.default_tol() == 1e-3
    A = laplacian_1d(300)
    b = np.random.default_rng(0).normal(size=300)
    _, loose = linsolve.cg_solve(A, b)
    monkeypatch.delenv("WG_STOKES_TOL")
    assert linsolve.default_tol() == linsolve.DEFAULT_TOL
    _, tight = linsolve.cg_solve(A, b)
    assert loose.iterations < tight.iterations
    assert loose.residual <= 1e-3


def test_default_maxit():
    assert linsolve.default_maxit(10000) == 20 * 100 + 1000


def test_jacobi_needs_positive_diagonal():
    with pytest.raises(ValueError):
        linsolve.jacobi(sp.diags([1.0, 0.0]))
