"""
Benchmark flows for a viewer
============================

The lid-driven cavity and the backward facing step have no exact solution.
Here we solve them and write legacy VTK files with the cellwise velocity
and pressure, ready for ParaView or VisIt.
"""

import numpy as np

from wgstokes import problems, saddle
from wgstokes.vtk import read_vtk, write_vtk

runs = [(problems.example6(), problems.CAVITY.mesh(32)),
        (problems.example5(), problems.BACKWARD_STEP.mesh(8)),
        (problems.example4(), problems.CHANNEL_WITH_HOLE.mesh(refine=1))]

for pb, m in runs:
    sol = saddle.solve_saddle(m, pb)
    path = f"{pb.name}.vtk"
    write_vtk(path, m, sol.velocity.cell, sol.pressure, title=pb.name)
    speed = np.linalg.norm(sol.velocity.cell, axis=1)
    print(f"{pb.name}: {m.n_triangles} cells, max |u| {speed.max():.3f}, "
          f"pressure range [{sol.pressure.min():.3g}, {sol.pressure.max():.3g}] -> {path}")

###############################################################################
# Flow over the step is driven by a pressure drop: compare the mean
# pressure in the first and last thirds of the channel.

data = read_vtk("ex5.vtk")
xc = data["points"][data["cells"]][:, :, 0].mean(axis=1)
p = data["cell_data"]["pressure"]
print("inlet third mean p:", p[xc < 4 / 3].mean(), " outlet third mean p:", p[xc > 14 / 3].mean())
