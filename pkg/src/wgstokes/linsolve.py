"""Krylov solvers for the symmetric systems produced by the discretization.

``cg_solve`` handles the SPD divergence-free system, ``minres_solve`` the
symmetric indefinite saddle-point system.  Both take a positive diagonal
preconditioner and report the residual recomputed from scratch at exit.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DEFAULT_TOL = 1e-10
DENSE_LIMIT = 2000
# CG checks the true residual every STAGNATION_CHECK iterations (and whenever
# the recurrence claims convergence) and gives up after STAGNATION_LIMIT
# checks without halving it
STAGNATION_CHECK = 100
STAGNATION_LIMIT = 10


class IndefiniteMatrixError(ArithmeticError):
    """CG met a search direction with ``p^T A p <= 0``."""


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    wall_time: float
    method: str = ""
    recurrence_residual: float = float("nan")
    message: str = ""


def default_tol() -> float:
    """Solver tolerance, overridable through ``WG_STOKES_TOL``."""
    value = os.environ.get("WG_STOKES_TOL")
    return float(value) if value else DEFAULT_TOL


def default_maxit(n: int) -> int:
    return int(20 * np.sqrt(n)) + 1000


def jacobi(A) -> np.ndarray:
    d = np.asarray(A.diagonal(), dtype=float).copy()
    if np.any(d <= 0):
        raise ValueError("Jacobi preconditioner needs a positive diagonal")
    return d


def _relres(A, x, b, bnorm):
    return float(np.linalg.norm(b - A @ x) / bnorm)


def cg_solve(A, b, tol: float | None = None, maxit: int | None = None,
             precond: np.ndarray | None = None):
    """Preconditioned conjugate gradients.

    Stops when ``||b - A x|| <= tol ||b||``.  ``precond`` is the diagonal
    of the preconditioner; by default the diagonal of ``A``.  When ``tol``
    lies below the accuracy reachable in floating point (roughly
    ``eps ||A|| ||x|| / ||b||``) the iteration stops early with
    ``converged=False`` and a message saying so.

    Raises
    ------
    IndefiniteMatrixError
        If a search direction has nonpositive curvature.
    """
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    n = len(b)
    tol = default_tol() if tol is None else tol
    maxit = default_maxit(n) if maxit is None else maxit
    d = jacobi(A) if precond is None else np.asarray(precond, dtype=float)

    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, SolveReport(0, 0.0, True, time.perf_counter() - t0, "cg", 0.0)

    r = b.copy()
    z = r / d
    p = z.copy()
    rz = r @ z
    it = 0
    rnorm = bnorm
    converged = False
    message = ""
    best, stalled = np.inf, 0
    while it < maxit:
        q = A @ p
        curv = p @ q
        if curv <= 0.0:
            raise IndefiniteMatrixError(
                f"p^T A p = {curv:.3e} at iteration {it}; matrix is not SPD")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * q
        it += 1
        rnorm = np.linalg.norm(r)
        below = rnorm <= tol * bnorm
        if below or it % STAGNATION_CHECK == 0:
            true = _relres(A, x, b, bnorm)
            if true <= tol:
                converged = True
                break
            # a recurrence far below a true residual that no longer improves
            # means rounding has taken over
            if true < 0.5 * best:
                best, stalled = true, 0
            elif rnorm / bnorm < 0.1 * true:
                stalled += 1
            if stalled >= STAGNATION_LIMIT:
                message = (f"stagnated at relative residual {best:.2e}; "
                           "tolerance is below attainable accuracy")
                break
            if below:
                # the recurrence drifted; restart it from the true residual
                r = b - A @ x
                rnorm = np.linalg.norm(r)
        z = r / d
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    true = _relres(A, x, b, bnorm)
    if not converged and not message:
        message = f"no convergence in {maxit} iterations"
    return x, SolveReport(it, true, converged and true <= tol,
                          time.perf_counter() - t0, "cg", rnorm / bnorm, message)


def minres_solve(K, b, tol: float | None = None, maxit: int | None = None,
                 precond: np.ndarray | None = None):
    """Preconditioned MINRES for symmetric, possibly indefinite ``K``.

    ``precond`` is a positive diagonal (default: ``|diag K|``, with ones
    where the diagonal vanishes).
    """
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    n = len(b)
    tol = default_tol() if tol is None else tol
    maxit = default_maxit(n) if maxit is None else maxit
    if precond is None:
        d = np.abs(np.asarray(K.diagonal(), dtype=float))
        d[d == 0] = 1.0
    else:
        d = np.asarray(precond, dtype=float)
    if np.any(d <= 0):
        raise ValueError("MINRES preconditioner must be positive")

    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, SolveReport(0, 0.0, True, time.perf_counter() - t0, "minres", 0.0)

    eps = np.finfo(float).eps
    r1 = b.copy()
    y = r1 / d
    beta1 = np.sqrt(r1 @ y)
    oldb, beta, dbar, epsln = 0.0, beta1, 0.0, 0.0
    phibar, cs, sn = beta1, -1.0, 0.0
    w = np.zeros(n)
    w2 = np.zeros(n)
    r2 = r1.copy()
    target = tol
    it = 0
    converged = False
    message = ""
    while it < maxit:
        it += 1
        v = y / beta
        y = K @ v
        if it >= 2:
            y = y - (beta / oldb) * r1
        alfa = v @ y
        y = y - (alfa / beta) * r2
        r1, r2 = r2, y
        y = r2 / d
        oldb = beta
        beta2 = r2 @ y
        if beta2 < 0:
            raise ValueError("preconditioner is not positive definite")
        beta = np.sqrt(beta2)

        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(np.hypot(gbar, beta), eps)
        cs, sn = gbar / gamma, beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1, w2 = w2, w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x += phi * w

        if phibar / beta1 <= target or beta == 0.0:
            true = _relres(K, x, b, bnorm)
            if true <= tol:
                converged = True
                break
            if beta == 0.0:
                message = "Lanczos breakdown (zero vector) before convergence"
                break
            target = 0.5 * target * tol / true
    true = _relres(K, x, b, bnorm)
    return x, SolveReport(it, true, converged, time.perf_counter() - t0,
                          "minres", phibar / beta1, message)


def direct_solve(K, b):
    """Sparse LU solve; the reference for iterative results."""
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    x = spla.splu(sp.csc_matrix(K)).solve(b)
    bnorm = np.linalg.norm(b) or 1.0
    res = _relres(K, x, b, bnorm)
    return x, SolveReport(0, res, bool(np.isfinite(res)),
                          time.perf_counter() - t0, "direct", res)


def dense_solve(K, b):
    """Dense LU fallback, limited to small systems (testing oracle)."""
    n = K.shape[0]
    if n > DENSE_LIMIT:
        raise ValueError(f"dense solve limited to {DENSE_LIMIT} unknowns, got {n}")
    t0 = time.perf_counter()
    Kd = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
    x = sla.solve(Kd, b, assume_a="sym")
    bnorm = np.linalg.norm(b) or 1.0
    res = float(np.linalg.norm(b - Kd @ x) / bnorm)
    return x, SolveReport(0, res, True, time.perf_counter() - t0, "dense", res)
