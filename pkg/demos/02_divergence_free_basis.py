"""
Eliminating the pressure
========================

On a simply connected mesh the discretely divergence-free velocities have
an explicit local basis: two functions per triangle, one per interior edge
and one per interior vertex.  Solving in that basis gives a symmetric
positive definite system with no pressure unknowns.
"""

import numpy as np

from wgstokes import divfree, mesh, problems, saddle
from wgstokes.divfree import CELL, TANGENT, VERTEX

m = mesh.build_unit_square_mesh(8, "NW")
basis = divfree.build_divfree_basis(m)

###############################################################################
# Column counts by kind, and the identity they satisfy.

nt, ne, nv = m.n_triangles, m.n_interior_edges, m.n_interior_vertices
for name, kind in [("cell", CELL), ("tangential edge", TANGENT), ("vertex", VERTEX)]:
    print(f"{name:16s} {np.count_nonzero(basis.kinds == kind)}")
print("columns", basis.n_columns, "= 2N_T + N_E + N_V =", 2 * nt + ne + nv)

###############################################################################
# Every column has zero weak divergence on every triangle, up to rounding.

print("worst column divergence:", divfree.columnwise_divergence(m, basis).max())

###############################################################################
# Both algorithms produce the same velocity.  The pressure is recovered
# afterwards from the momentum equation.

pb = problems.example1()
ref = saddle.solve_saddle(m, pb)
u, report = divfree.solve_divfree(m, pb, tol=1e-10, basis=basis)
diff = np.linalg.norm(u.to_vector() - ref.velocity.to_vector())
print(report)
print("relative velocity difference:", diff / np.linalg.norm(ref.velocity.to_vector()))
p = divfree.recover_pressure(m, u, pb)
print("pressure difference:", np.abs(p - ref.pressure).max())

###############################################################################
# The reduced matrix behaves like a fourth-order operator, so plain CG
# needs more iterations on finer meshes and eventually cannot reach 1e-10.
# ``solver="direct"`` factorizes it instead.

for n in (8, 16, 32):
    mm = mesh.build_unit_square_mesh(n)
    _, rep = divfree.solve_divfree(mm, pb, tol=1e-10)
    print(f"n={n:3d}: cg iterations {rep.iterations}")
