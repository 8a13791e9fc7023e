"""Command-line driver: ``convergence``, ``solve``, ``verify`` and ``mesh-stats``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass


from . import analysis, linsolve, mesh as meshmod, problems, verify
from .vtk import write_vtk

logger = logging.getLogger("wgstokes")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    problem: str = "ex1"
    algorithm: str = "saddle"
    levels: str | None = None
    n: int | None = None
    refine: int | None = None
    mesh: str | None = None
    Re: float | None = None
    diagonal: str = "NE"
    solver: str | None = None
    tol: float | None = None
    projection: str = "l2"
    recover_pressure: bool = False
    output: str | None = None

    def validate(self) -> "RunConfig":
        if self.problem not in problems.PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.algorithm not in ("saddle", "divfree"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.Re is not None and self.problem != "ex3":
            raise ConfigError("--Re only applies to ex3")
        if self.problem == "ex3" and self.Re is not None and self.Re <= 0:
            raise ConfigError("ex3 requires Re > 0")
        if self.algorithm == "divfree" and not self.make_problem().homogeneous:
            raise ConfigError(f"{self.problem} has non-homogeneous boundary data; "
                              "the divfree algorithm needs u = 0 on the boundary")
        if self.levels is not None and (self.refine is not None or self.mesh):
            raise ConfigError("--levels cannot be combined with --refine or --mesh")
        return self

    def make_problem(self):
        return problems.get_problem(self.problem, self.Re)

    def domain(self):
        return self.make_problem().domain

    def meshes(self):
        """Refinement sequence for a convergence study."""
        dom = self.domain()
        if self.mesh or dom.kind == "bundled":
            base = meshmod.read_mesh(self.mesh) if self.mesh else dom.mesh()
            k = 4 if self.refine is None else self.refine
            return [meshmod.refine(base, i) for i in range(k + 1)]
        levels = analysis.parse_levels(self.levels or default_levels(self.problem))
        return [dom.mesh(n, diagonal=self.diagonal) for n in levels]

    def single_mesh(self):
        dom = self.domain()
        k = self.refine or 0
        if self.mesh:
            return meshmod.refine(meshmod.read_mesh(self.mesh), k)
        if dom.kind == "bundled":
            return dom.mesh(refine=k)
        return dom.mesh(self.n or 16, refine=k, diagonal=self.diagonal)


def default_levels(problem: str) -> str:
    return "8:128" if problem == "ex3" else "4:128"


# -- commands -------------------------------------------------------------

def cmd_convergence(cfg: RunConfig) -> int:
    pb = cfg.make_problem()
    if not pb.has_exact:
        raise ConfigError(f"{cfg.problem} has no exact solution to converge to")
    report = analysis.convergence_study(
        pb, cfg.meshes(), cfg.algorithm, solver=cfg.solver, tol=cfg.tol,
        recover_pressure=cfg.recover_pressure, projection=cfg.projection)
    text = report.to_csv()
    if cfg.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    print(report.format_table(), file=sys.stderr)
    if not report.complete:
        print(f"study stopped after {len(report.h)} level(s): solver did not converge",
              file=sys.stderr)
        return 1
    return 0


def cmd_solve(cfg: RunConfig) -> int:
    pb = cfg.make_problem()
    m = cfg.single_mesh()
    u, p, report = analysis.solve(m, pb, cfg.algorithm, cfg.solver, cfg.tol,
                                  recover_pressure=True)
    out = cfg.output or f"{cfg.problem}.vtk"
    try:
        write_vtk(out, m, u.cell, p, title=f"{pb.name} {cfg.algorithm}")
    except OSError as exc:
        print(f"cannot write {out}: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"problem": pb.name, "algorithm": cfg.algorithm,
                      "n_triangles": m.n_triangles, "method": report.method,
                      "iterations": report.iterations,
                      "residual": report.residual, "converged": report.converged,
                      "output": out}))
    return 0 if report.converged else 1


def cmd_verify(problem: str | None = None, fault: str | None = None) -> int:
    results = verify.run_all(problem, fault)
    for r in results:
        print(r)
    return 0 if all(r.passed for r in results) else 1


def cmd_mesh_stats(cfg: RunConfig) -> int:
    print(json.dumps(cfg.single_mesh().stats()))
    return 0


# -- argument parsing -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wg-stokes",
        description="Lowest-order weak Galerkin solver for the Stokes equations.",
        epilog=f"The solver tolerance defaults to {linsolve.DEFAULT_TOL:g} "
               "and can be overridden with WG_STOKES_TOL.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, algorithm=True):
        p.add_argument("--problem", default="ex1", choices=sorted(problems.PROBLEMS))
        p.add_argument("--Re", type=float, help="Reynolds number for ex3")
        p.add_argument("--diagonal", default="NE", choices=("NE", "NW"),
                       help="diagonal of structured meshes")
        p.add_argument("--mesh", help="base mesh PREFIX.node/PREFIX.ele to use instead")
        if algorithm:
            p.add_argument("--algorithm", default="saddle", choices=("saddle", "divfree"))
            p.add_argument("--solver", choices=("direct", "minres", "dense", "cg"),
                           help="linear solver (default: direct for saddle, cg for divfree)")
            p.add_argument("--tol", type=float,
                           help="solver tolerance (default: WG_STOKES_TOL or 1e-10)")

    p = sub.add_parser("convergence", help="convergence table against the exact solution")
    common(p)
    p.add_argument("--levels", help="a:b meaning h = 1/a, 1/2a, ..., 1/b")
    p.add_argument("--refine", type=int,
                   help="for imported/bundled meshes: levels 0..K of uniform refinement")
    p.add_argument("--projection", default="l2", choices=analysis.PROJECTIONS,
                   help="how the exact solution is projected onto the dofs")
    p.add_argument("--recover-pressure", action="store_true",
                   help="recover p after the divfree solve and report its error")
    p.add_argument("--csv", dest="output", help="CSV output path (default: stdout)")

    p = sub.add_parser("solve", help="solve once and write a legacy VTK file")
    common(p)
    p.add_argument("-n", type=int, help="cells per unit length (default 16)")
    p.add_argument("--refine", type=int, help="uniform refinements of the mesh")
    p.add_argument("-o", "--output", help="VTK path (default: PROBLEM.vtk)")

    p = sub.add_parser("verify", help="run the self-check suites")
    p.add_argument("--problem", choices=verify.MANUFACTURED,
                   help="limit the consistency suite to one problem")
    p.add_argument("--inject-fault", choices=("normal-sign",),
                   help="corrupt the meshes to check that the suites notice")

    p = sub.add_parser("mesh-stats", help="print mesh statistics as JSON")
    common(p, algorithm=False)
    p.add_argument("-n", type=int, help="cells per unit length (default 16)")
    p.add_argument("--refine", type=int, help="uniform refinements of the mesh")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return cmd_verify(args.problem, args.inject_fault)
    fields = {k: v for k, v in vars(args).items()
              if k in RunConfig.__dataclass_fields__ and v is not None}
    cfg = RunConfig(**fields)
    try:
        cfg.validate()
        if args.command == "convergence":
            return cmd_convergence(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        return cmd_mesh_stats(cfg)
    except (ValueError, OSError) as exc:
        print(f"wg-stokes: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
