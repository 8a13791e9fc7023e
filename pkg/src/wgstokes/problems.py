"""Stokes test problems: manufactured solutions and benchmark flows.

All closures take coordinate arrays ``x, y`` and return arrays of shape
``(2, ...)`` for vector fields or ``(...)`` for scalars.  Body forces are
closed forms; :func:`verify_consistency` checks them against the exact
solution with finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from . import mesh as meshmod

PI = np.pi
_ON = 1e-10  # tolerance for "x == a" tests on boundary data


def _vec(a, b):
    return np.stack(np.broadcast_arrays(np.asarray(a, dtype=float),
                                        np.asarray(b, dtype=float)))


def _zero_vec(x, y):
    z = np.zeros(np.shape(x))
    return np.stack([z, z])


# -- domains --------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Where a problem lives and how to mesh it.

    ``kind`` is ``"rectangle"``, ``"step"`` or ``"bundled"``.  Bundled
    domains (the holed squares) ship as ``.node``/``.ele`` files.
    """

    name: str
    kind: str
    bounds: tuple
    bundled: str | None = None
    holes: tuple = ()

    def mesh(self, n: int | None = None, refine: int = 0,
             diagonal: str = "NE") -> meshmod.Mesh:
        """Mesh of this domain.

        Structured domains use cells of size ``1/n``; bundled meshes are
        refined ``refine`` times instead.
        """
        x0, x1, y0, y1 = self.bounds
        if self.kind == "bundled":
            base = load_bundled_mesh(self.bundled, len(self.holes))
            return meshmod.refine(base, refine)
        if n is None:
            raise ValueError(f"domain {self.name!r} needs a resolution n")
        nx = int(round((x1 - x0) * n))
        ny = int(round((y1 - y0) * n))
        keep = None
        if self.kind == "step":
            xc = x0 + (np.arange(nx) + 0.5) / n
            yc = y0 + (np.arange(ny) + 0.5) / n
            keep = ~((xc[:, None] < 0.0) & (yc[None, :] < 0.0))
        m = meshmod.build_rectangle_mesh(x0, x1, y0, y1, nx, ny, diagonal,
                                         keep=keep, h=1.0 / n)
        return meshmod.refine(m, refine)

    @property
    def area(self) -> float:
        x0, x1, y0, y1 = self.bounds
        a = (x1 - x0) * (y1 - y0)
        if self.kind == "step":
            a -= 2.0
        return a - sum(PI * r * r for _, r in self.holes)


UNIT_SQUARE = Domain("unit square", "rectangle", (0.0, 1.0, 0.0, 1.0))
CAVITY = Domain("cavity", "rectangle", (0.0, 1.0, 0.0, 1.0))
KOVASZNAY_BOX = Domain("(-1/2,3/2)x(0,2)", "rectangle", (-0.5, 1.5, 0.0, 2.0))
BACKWARD_STEP = Domain("backward step", "step", (-2.0, 8.0, -1.0, 1.0))
HOLED_SQUARE = Domain("holed square", "bundled", (0.0, 1.0, 0.0, 1.0),
                      bundled="ex2_three_holes",
                      holes=(((0.5, 0.5), 0.1), ((0.2, 0.8), 0.1),
                             ((0.8, 0.8), 0.1)))
CHANNEL_WITH_HOLE = Domain("channel with hole", "bundled", (0.0, 1.0, 0.0, 1.0),
                           bundled="ex4_channel_hole",
                           holes=(((0.5, 0.5), 0.1),))


def load_bundled_mesh(name: str, holes: int | None = None) -> meshmod.Mesh:
    data = resources.files("wgstokes") / "data"
    nodes = (data / f"{name}.node").read_text()
    elements = (data / f"{name}.ele").read_text()
    return meshmod.import_mesh(nodes, elements, holes)


# -- problems -------------------------------------------------------------

@dataclass(frozen=True)
class StokesProblem:
    """``-nu Lap u + grad p = f`` in the domain, ``u = g`` on its boundary."""

    name: str
    f: Callable
    g: Callable
    nu: float
    domain: Domain
    homogeneous: bool = False

    @property
    def has_exact(self) -> bool:
        return False


@dataclass(frozen=True)
class ManufacturedProblem(StokesProblem):
    u_exact: Callable = None
    p_exact: Callable = None
    params: dict = field(default_factory=dict)

    @property
    def has_exact(self) -> bool:
        return True


@dataclass(frozen=True)
class BenchmarkProblem(StokesProblem):
    pass


def example1() -> ManufacturedProblem:
    """Trigonometric flow on the unit square with ``u = 0`` on the boundary."""

    def u(x, y):
        sx, cx = np.sin(PI * x), np.cos(PI * x)
        sy, cy = np.sin(PI * y), np.cos(PI * y)
        return _vec(2 * PI * sx * sx * cy * sy, -2 * PI * sx * sy * cx * sy)

    def p(x, y):
        return np.cos(PI * x) * np.cos(PI * y)

    def f(x, y):
        sx, cx = np.sin(PI * x), np.cos(PI * x)
        sy, cy = np.sin(PI * y), np.cos(PI * y)
        f1 = PI * cy * (16 * PI**2 * sx * sx * sy - sx - 4 * PI**2 * sy)
        f2 = PI * cx * (-16 * PI**2 * sx * sy * sy + 4 * PI**2 * sx - sy)
        return _vec(f1, f2)

    return ManufacturedProblem("ex1", f=f, g=u, nu=1.0, domain=UNIT_SQUARE,
                               homogeneous=True, u_exact=u, p_exact=p)


def _disc_integral(fn, center, radius, nr=6, nt=32):
    r, wr = np.polynomial.legendre.leggauss(nr)
    r = 0.5 * radius * (r + 1.0)
    wr = 0.5 * radius * wr
    t = 2 * PI * np.arange(nt) / nt
    R, Tt = np.meshgrid(r, t, indexing="ij")
    x = center[0] + R * np.cos(Tt)
    y = center[1] + R * np.sin(Tt)
    return float(np.sum(wr[:, None] * R * fn(x, y)) * 2 * PI / nt)


def example2() -> ManufacturedProblem:
    """Cubic flow on the unit square with three circular holes; ``g != 0``."""

    def u(x, y):
        return _vec(x + x**2 - 2*x*y + x**3 - 3*x*y**2 + x**2*y,
                    -y - 2*x*y + y**2 - 3*x**2*y + y**3 - x*y**2)

    def p_raw(x, y):
        return x*y + x + y + x**3 * y**2 - 4.0 / 3.0

    # p_raw has zero mean on the full square; remove the mean over the holes
    dom = HOLED_SQUARE
    removed = sum(_disc_integral(p_raw, c, r) for c, r in dom.holes)
    shift = removed / dom.area

    def p(x, y):
        return p_raw(x, y) + shift

    def f(x, y):
        return _vec(3 * x**2 * y**2 - y - 1, 2 * x**3 * y + 3 * x - 1)

    return ManufacturedProblem("ex2", f=f, g=u, nu=1.0, domain=dom,
                               u_exact=u, p_exact=p)


def example3(Re: float = 1.0) -> ManufacturedProblem:
    """Kovasznay-type flow with viscosity ``1/Re`` on (-1/2, 3/2) x (0, 2)."""
    if not Re > 0:
        raise ValueError(f"Re must be positive, got {Re}")
    lam = Re / 2 - np.sqrt(Re**2 / 4 + 4 * PI**2)
    nu = 1.0 / Re
    x0, x1, y0, y1 = KOVASZNAY_BOX.bounds
    # zero mean of 0.5 exp(2 lam x) over the box
    mean = 0.5 * (np.exp(2 * lam * x1) - np.exp(2 * lam * x0)) / (2 * lam) / (x1 - x0)

    def u(x, y):
        e = np.exp(lam * x)
        return _vec(1 - e * np.cos(2 * PI * y),
                    lam / (2 * PI) * e * np.sin(2 * PI * y))

    def p(x, y):
        return 0.5 * np.exp(2 * lam * x) - mean

    k = lam**2 - 4 * PI**2

    def f(x, y):
        e = np.exp(lam * x)
        return _vec(nu * k * e * np.cos(2 * PI * y) + lam * np.exp(2 * lam * x),
                    -nu * k * lam / (2 * PI) * e * np.sin(2 * PI * y))

    return ManufacturedProblem("ex3", f=f, g=u, nu=nu, domain=KOVASZNAY_BOX,
                               u_exact=u, p_exact=p,
                               params={"Re": float(Re), "lambda": float(lam)})


def example4() -> BenchmarkProblem:
    """Plug flow through the unit square around a circular obstacle."""

    def g(x, y):
        x = np.asarray(x, dtype=float)
        side = (np.abs(x) < _ON) | (np.abs(x - 1.0) < _ON)
        return _vec(np.where(side, 1.0, 0.0), 0.0)

    return BenchmarkProblem("ex4", f=_zero_vec, g=g, nu=1.0,
                            domain=CHANNEL_WITH_HOLE)


def example5() -> BenchmarkProblem:
    """Backward facing step with parabolic inflow and outflow."""

    def g(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        u1 = np.where(np.abs(x + 2.0) < _ON, -y * (y - 1) / 10, 0.0)
        u1 = np.where(np.abs(x - 8.0) < _ON, -(y + 1) * (y - 1) / 80, u1)
        return _vec(u1, 0.0)

    return BenchmarkProblem("ex5", f=_zero_vec, g=g, nu=1.0,
                            domain=BACKWARD_STEP)


def example6() -> BenchmarkProblem:
    """Lid-driven cavity: ``u = (1, 0)`` on the top wall."""

    def g(x, y):
        y = np.asarray(y, dtype=float)
        return _vec(np.where(np.abs(y - 1.0) < _ON, 1.0, 0.0), 0.0)

    return BenchmarkProblem("ex6", f=_zero_vec, g=g, nu=1.0, domain=CAVITY)


def zero_problem(domain: Domain = UNIT_SQUARE) -> ManufacturedProblem:
    """``f = 0``, ``g = 0``: the solution is identically zero."""
    return ManufacturedProblem("zero", f=_zero_vec, g=_zero_vec, nu=1.0,
                               domain=domain, homogeneous=True,
                               u_exact=_zero_vec,
                               p_exact=lambda x, y: np.zeros(np.shape(x)))


PROBLEMS = {
    "ex1": example1,
    "ex2": example2,
    "ex3": example3,
    "ex4": example4,
    "ex5": example5,
    "ex6": example6,
}


def get_problem(name: str, Re: float | None = None) -> StokesProblem:
    """Look up a problem by its name ``ex1`` ... ``ex6``."""
    try:
        make = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from "
                         f"{', '.join(PROBLEMS)}") from None
    if name == "ex3":
        return make(1.0 if Re is None else Re)
    return make()


# -- consistency checks ---------------------------------------------------

class ConsistencyError(AssertionError):
    def __init__(self, message, residual, order):
        super().__init__(message)
        self.residual = residual
        self.order = order


def sample_points(problem: StokesProblem, samples: int, margin: float,
                  seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    x0, x1, y0, y1 = problem.domain.bounds
    rng = np.random.default_rng(seed)
    x = rng.uniform(x0 + margin, x1 - margin, samples)
    y = rng.uniform(y0 + margin, y1 - margin, samples)
    return x, y


def momentum_residual(problem: ManufacturedProblem, x, y, h: float) -> float:
    """Max-norm of ``-nu Lap_h u + grad_h p - f`` at the given points."""
    u, p = problem.u_exact, problem.p_exact
    lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h)
           - 4 * u(x, y)) / h**2
    grad = _vec((p(x + h, y) - p(x - h, y)) / (2 * h),
                (p(x, y + h) - p(x, y - h)) / (2 * h))
    r = -problem.nu * lap + grad - problem.f(x, y)
    return float(np.abs(r).max())


def consistency_order(problem: ManufacturedProblem, h_fd: float = 1e-2,
                      samples: int = 50, seed: int = 0):
    """Residuals at steps ``h_fd`` and ``h_fd/2`` and the observed order."""
    x, y = sample_points(problem, samples, 2.5 * h_fd, seed)
    r1 = momentum_residual(problem, x, y, h_fd)
    r2 = momentum_residual(problem, x, y, h_fd / 2)
    order = np.log2(r1 / r2) if r2 > 0 and r1 > 0 else np.inf
    return r1, r2, float(order)


def verify_consistency(problem: ManufacturedProblem, samples: int = 50,
                       h_fd: float = 1e-4, seed: int = 0,
                       order_step: float = 1e-2, min_order: float = 1.9) -> float:
    """Check the hard-coded body force against the exact solution.

    Returns the finite-difference residual at step ``h_fd``.  The residual
    must shrink like ``h^2``: the order is measured at ``order_step`` and
    ``order_step/2`` (large enough that rounding does not dominate), and the
    residual at ``h_fd`` must not exceed the Richardson-extrapolated bound
    ``K h_fd^2``.  Raises :class:`ConsistencyError` otherwise.
    """
    r1, r2, order = consistency_order(problem, order_step, samples, seed)
    x, y = sample_points(problem, samples, 2.5 * max(h_fd, order_step), seed)
    res = momentum_residual(problem, x, y, h_fd)
    scale = max(1.0, float(np.abs(problem.f(x, y)).max()),
                float(np.abs(problem.u_exact(x, y)).max()))

    def rounding(h):
        return 100 * np.finfo(float).eps * scale / h**2

    if r1 > rounding(order_step) and order < min_order:
        raise ConsistencyError(
            f"{problem.name}: body force inconsistent with exact solution "
            f"(residual {r1:.3e} -> {r2:.3e}, order {order:.2f})", res, order)
    bound = 4.0 * r1 * (h_fd / order_step) ** 2 + rounding(h_fd)
    if res > bound:
        raise ConsistencyError(
            f"{problem.name}: residual {res:.3e} at h={h_fd:g} exceeds "
            f"O(h^2) bound {bound:.3e}", res, order)
    return res
