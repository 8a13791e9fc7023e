"""
Convergence on the unit square
==============================

Solve the Stokes problem with a known polynomial-trigonometric solution on
a sequence of uniform meshes and watch the errors shrink.  The velocity
error in the energy norm and the pressure error should halve with h; the
cellwise velocity error should drop by four.
"""

import numpy as np

from wgstokes import analysis, mesh, problems

pb = problems.example1()

###############################################################################
# One mesh first.  ``solve`` returns the weak velocity (one value per cell
# and one per edge), the cellwise pressure and a report from the linear solver.

m = mesh.build_unit_square_mesh(8)
u, p, report = analysis.solve(m, pb, "saddle")
print(m.n_triangles, "triangles,", report)
print("pressure mean:", np.dot(m.areas, p) / m.areas.sum())

###############################################################################
# Now a short refinement study.  The table is what ``wg-stokes convergence``
# prints; ``to_csv`` gives the machine-readable form.

meshes = [mesh.build_unit_square_mesh(n) for n in (4, 8, 16, 32)]
study = analysis.convergence_study(pb, meshes)
print(study.format_table())

###############################################################################
# Errors are measured against projections of the exact solution.  The
# default uses cell and edge averages; ``projection="nodal"`` samples the
# exact velocity at centroids and edge midpoints instead, which changes the
# constants but not the rates.

nodal = analysis.convergence_study(pb, meshes, projection="nodal")
print("fitted rates, averages:", np.round(study.fitted_rates(), 3))
print("fitted rates, nodal:   ", np.round(nodal.fitted_rates(), 3))
