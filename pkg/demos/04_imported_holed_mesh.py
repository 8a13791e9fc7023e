"""
Meshes from files
=================

Triangle-style ``.node``/``.ele`` files describe domains the built-in
generators cannot, such as a square with three circular holes.  Uniform
refinement of the imported mesh then drives a convergence study.
"""

import json

from wgstokes import analysis, mesh, problems

pb = problems.example2()
base = pb.domain.mesh()

###############################################################################
# The interior-edge/vertex/triangle count identity fails by the number of
# holes, which is how the importer recognises multiply connected input.

print(json.dumps(base.stats(), indent=1))

###############################################################################
# Write the mesh back out and read it again.

mesh.write_mesh(base, "holes")
again = mesh.read_mesh("holes", holes=3)
print("round trip:", again.n_triangles == base.n_triangles)

###############################################################################
# Three uniform refinements.  The finest level has about 29 thousand
# triangles and solves in a few seconds.

meshes = [mesh.refine(base, k) for k in range(4)]
print(analysis.convergence_study(pb, meshes).format_table())
