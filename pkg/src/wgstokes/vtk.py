"""Legacy ASCII VTK output of cellwise velocity and pressure, plus a small reader."""
from __future__ import annotations

import numpy as np

from .mesh import Mesh

VTK_TRIANGLE = 5


def vtk_text(m: Mesh, velocity: np.ndarray | None = None,
             pressure: np.ndarray | None = None,
             title: str = "weak Galerkin Stokes solution") -> str:
    """Unstructured grid with one VECTORS and one SCALARS array of cell data."""
    nt = m.n_triangles
    out = ["# vtk DataFile Version 2.0", title.replace("\n", " ")[:255], "ASCII",
           "DATASET UNSTRUCTURED_GRID", f"POINTS {m.n_vertices} double"]
    out += [f"{x!r} {y!r} 0" for x, y in m.vertices.tolist()]
    out.append(f"CELLS {nt} {4 * nt}")
    out += [f"3 {a} {b} {c}" for a, b, c in m.triangles.tolist()]
    out.append(f"CELL_TYPES {nt}")
    out += [str(VTK_TRIANGLE)] * nt
    if velocity is not None or pressure is not None:
        out.append(f"CELL_DATA {nt}")
    if velocity is not None:
        v = np.asarray(velocity, dtype=float).reshape(nt, 2)
        out.append("VECTORS velocity double")
        out += [f"{a!r} {b!r} 0" for a, b in v.tolist()]
    if pressure is not None:
        p = np.asarray(pressure, dtype=float).reshape(nt)
        out += ["SCALARS pressure double 1", "LOOKUP_TABLE default"]
        out += [repr(x) for x in p.tolist()]
    return "\n".join(out) + "\n"


def write_vtk(path, m: Mesh, velocity=None, pressure=None, **kw) -> None:
    with open(path, "w") as fh:
        fh.write(vtk_text(m, velocity, pressure, **kw))


def read_vtk(path) -> dict:
    """Parse the subset of legacy ASCII VTK written by :func:`write_vtk`.

    Returns a dict with ``points``, ``cells``, ``cell_types`` and
    ``cell_data`` (name -> array).  Raises ValueError on malformed input.
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    if not lines or not lines[0].startswith("# vtk DataFile Version"):
        raise ValueError("missing VTK header")
    if lines[2] != "ASCII":
        raise ValueError("only ASCII files are supported")
    if lines[3] != "DATASET UNSTRUCTURED_GRID":
        raise ValueError("expected an unstructured grid")
    tokens = " ".join(lines[4:]).split()
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(tokens):
            raise ValueError("unexpected end of file")
        chunk = tokens[pos:pos + n]
        pos += n
        return chunk

    result = {"cell_data": {}}
    ncell_data = None
    while pos < len(tokens):
        key = take(1)[0]
        if key == "POINTS":
            n, _ = take(2)
            result["points"] = np.array(take(3 * int(n)), dtype=float).reshape(-1, 3)
        elif key == "CELLS":
            n, size = map(int, take(2))
            raw = np.array(take(size), dtype=np.int64)
            cells, i = [], 0
            for _ in range(n):
                k = raw[i]
                cells.append(raw[i + 1:i + 1 + k])
                i += k + 1
            if i != size:
                raise ValueError("CELLS size mismatch")
            result["cells"] = np.array(cells)
        elif key == "CELL_TYPES":
            n = int(take(1)[0])
            result["cell_types"] = np.array(take(n), dtype=int)
        elif key == "CELL_DATA":
            ncell_data = int(take(1)[0])
        elif key == "VECTORS":
            name, _ = take(2)
            result["cell_data"][name] = np.array(
                take(3 * ncell_data), dtype=float).reshape(-1, 3)
        elif key == "SCALARS":
            name, _ = take(2)
            if tokens[pos] != "LOOKUP_TABLE":
                take(1)  # component count
            take(2)  # LOOKUP_TABLE default
            result["cell_data"][name] = np.array(take(ncell_data), dtype=float)
        else:
            raise ValueError(f"unexpected keyword {key!r}")
    npts = len(result.get("points", ()))
    if "cells" in result and len(result["cells"]) and result["cells"].max() >= npts:
        raise ValueError("cell references a missing point")
    return result
