"""Projections of exact solutions, error measures and convergence studies."""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .assembly import EDGE_QUADRATURE_POINTS, DofMap, WeakField, triple_norm_matrix
from .mesh import Mesh
from .saddle import zero_mean

logger = logging.getLogger(__name__)

# below this an error is treated as rounding noise when computing rates
ERROR_FLOOR = 1e-13


PROJECTIONS = ("l2", "nodal")


def project_exact(m: Mesh, problem, npts: int = EDGE_QUADRATURE_POINTS,
                  projection: str = "l2"):
    """``Q_h u`` as a :class:`WeakField` and ``Q_0 p`` shifted to zero mean.

    ``"l2"``: cell averages (degree-4 rule) and edge averages with the same
    Gauss rule the assembly uses for boundary data.
    ``"nodal"``: point values at centroids and edge midpoints.  Differs from
    ``"l2"`` by ``O(h^2)`` per dof, enough to shift the reported errors.
    """
    if projection == "l2":
        cell = kernel.integrate_cells(m, problem.u_exact, degree=4) / m.areas[:, None]
        edge = kernel.edge_averages(m, problem.u_exact, npts=npts)
        p = kernel.integrate_cells(m, problem.p_exact, degree=4) / m.areas
    elif projection == "nodal":
        c, mid = m.centroids, m.edge_midpoints
        cell = np.column_stack(problem.u_exact(c[:, 0], c[:, 1]))
        edge = np.column_stack(problem.u_exact(mid[:, 0], mid[:, 1]))
        p = np.asarray(problem.p_exact(c[:, 0], c[:, 1]), dtype=float)
    else:
        raise ValueError(f"unknown projection {projection!r}")
    return WeakField(cell, edge), zero_mean(m, p)


def error_norms(m: Mesh, u_h: WeakField, p_h, problem, projection="l2",
                M=None):
    """Return ``(|||Q_h u - u_h|||, ||Q_0 u - u_0||, ||Q_0 p - p_h||)``.

    The triple norm uses the stiffness matrix over all dofs with nu = 1.
    Both pressures are shifted to zero mean before differencing.  The
    pressure error is ``nan`` when ``p_h`` is None.  ``projection`` is a
    name accepted by :func:`project_exact` or a precomputed ``(Qu, Qp)``.
    """
    if isinstance(projection, str):
        Qu, Qp = project_exact(m, problem, projection=projection)
    else:
        Qu, Qp = projection
    dofs = DofMap.of(m)
    e = Qu.to_vector() - u_h.to_vector()
    if len(e) != dofs.n_all:
        raise ValueError("velocity does not match the mesh")
    if M is None:
        M = triple_norm_matrix(m)
    err_triple = float(np.sqrt(max(e @ (M @ e), 0.0)))
    e0 = Qu.cell - u_h.cell
    err_u0 = float(np.sqrt(np.sum(m.areas[:, None] * e0**2)))
    if p_h is None:
        err_p = float("nan")
    else:
        p_h = np.asarray(p_h, dtype=float)
        if p_h.shape != (m.n_triangles,):
            raise ValueError("pressure does not match the mesh")
        ep = Qp - zero_mean(m, p_h)
        err_p = float(np.sqrt(np.sum(m.areas * ep**2)))
    return err_triple, err_u0, err_p


COLUMNS = ("err_triple", "err_l2u", "err_l2p")


@dataclass
class ConvergenceReport:
    problem: str
    algorithm: str
    h: list = field(default_factory=list)
    errors: list = field(default_factory=list)  # rows of 3 floats
    complete: bool = True
    flags: list = field(default_factory=list)

    def add(self, h: float, errs) -> None:
        self.h.append(float(h))
        self.errors.append(tuple(float(e) for e in errs))

    @property
    def table(self) -> np.ndarray:
        return np.array(self.errors, dtype=float).reshape(-1, 3)

    @property
    def has_pressure(self) -> bool:
        return bool(len(self.errors)) and not np.all(np.isnan(self.table[:, 2]))

    def pairwise_rates(self) -> np.ndarray:
        """``log2(e_h / e_{h/2})`` style rates, one row per refinement step."""
        E = np.maximum(self.table, ERROR_FLOOR)
        h = np.asarray(self.h)
        with np.errstate(invalid="ignore"):
            return np.log(E[:-1] / E[1:]) / np.log(h[:-1] / h[1:])[:, None]

    def fitted_rates(self) -> np.ndarray:
        """Least-squares slope of ``log(err)`` against ``log(h)`` per column."""
        E = self.table
        lh = np.log(self.h)
        out = np.full(3, np.nan)
        for j in range(3):
            col = E[:, j]
            if np.all(np.isfinite(col)) and len(col) >= 2:
                out[j] = np.polyfit(lh, np.log(np.maximum(col, ERROR_FLOOR)), 1)[0]
        return out

    def to_csv(self) -> str:
        cols = 3 if self.has_pressure else 2
        names = ["err_triple", "err_l2u", "err_l2p"][:cols]
        header = ["h"] + [x for n in names for x in (n, "rate")]
        rates = self.pairwise_rates()
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for i, (h, row) in enumerate(zip(self.h, self.errors)):
            cells = [f"{h:.5e}"]
            for j in range(cols):
                cells.append(f"{row[j]:.5e}")
                cells.append("" if i == 0 else f"{rates[i - 1, j]:.5e}")
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()

    def format_table(self) -> str:
        cols = 3 if self.has_pressure else 2
        lines = [f"{self.problem} / {self.algorithm}",
                 f"{'h':>10} " + " ".join(f"{c:>12} {'rate':>6}"
                                         for c in COLUMNS[:cols])]
        rates = self.pairwise_rates()
        for i, (h, row) in enumerate(zip(self.h, self.errors)):
            parts = [f"{h:10.4g}"]
            for j in range(cols):
                r = "" if i == 0 else f"{rates[i - 1, j]:6.3f}"
                parts.append(f"{row[j]:12.4e} {r:>6}")
            lines.append(" ".join(parts))
        fit = self.fitted_rates()
        lines.append(f"{'O(h^r)':>10} " + " ".join(
            f"{fit[j]:12.4f} {'':>6}" for j in range(cols)))
        if self.flags:
            lines.append("flags: " + "; ".join(self.flags))
        return "\n".join(lines)


def solve(m: Mesh, problem, algorithm: str = "saddle", solver: str | None = None,
          tol: float | None = None, recover_pressure: bool = True):
    """Run one algorithm on one mesh; returns ``(velocity, pressure, report)``.

    ``solver`` defaults to ``"direct"`` for the saddle system and ``"cg"``
    for the divergence-free system.
    """
    if algorithm == "saddle":
        from .saddle import solve_saddle

        sol = solve_saddle(m, problem, solver=solver or "direct", tol=tol)
        return sol.velocity, sol.pressure, sol.report
    if algorithm == "divfree":
        from .divfree import recover_pressure as recover, solve_divfree

        u, report = solve_divfree(m, problem, tol=tol, solver=solver or "cg")
        p = recover(m, u, problem) if recover_pressure else None
        return u, p, report
    raise ValueError(f"unknown algorithm {algorithm!r}")


def convergence_study(problem, meshes, algorithm: str = "saddle",
                      solver: str | None = None, tol: float | None = None,
                      recover_pressure: bool = True, solve_fn=None,
                      projection: str = "l2") -> ConvergenceReport:
    """Solve on each mesh (coarse to fine) and tabulate the three errors.

    ``solve_fn(mesh, problem)`` may replace the built-in solve; it must
    return ``(velocity, pressure, report)``.  A level whose solve does not
    converge ends the study; the partial report has ``complete=False``.
    """
    meshes = list(meshes)
    if len(meshes) < 2:
        raise ValueError("a convergence study needs at least two levels")
    report = ConvergenceReport(problem.name, algorithm)
    for m in meshes:
        if solve_fn is None:
            u, p, rep = solve(m, problem, algorithm, solver, tol, recover_pressure)
        else:
            u, p, rep = solve_fn(m, problem)
        if rep is not None and not rep.converged:
            logger.error("solve did not converge at h=%g: %s", m.h, rep)
            report.complete = False
            break
        report.add(m.h, error_norms(m, u, p, problem, projection))
    if len(report.errors) and np.nanmax(report.table) < ERROR_FLOOR:
        report.flags.append("errors at rounding level; rates are not meaningful")
    return report


def unit_square_levels(first: int, last: int):
    """Meshes with ``n = first, 2 first, ..., last`` cells per unit length."""
    n = first
    while n <= last:
        yield n
        n *= 2


def parse_levels(text: str) -> list[int]:
    """``"4:128"`` -> ``[4, 8, 16, 32, 64, 128]``."""
    a, _, b = text.partition(":")
    first, last = int(a), int(b or a)
    if first < 1 or last < first:
        raise ValueError(f"bad level range {text!r}")
    return list(unit_square_levels(first, last))
