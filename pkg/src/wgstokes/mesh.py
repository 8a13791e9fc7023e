"""Triangular meshes with edge incidence, as needed by the weak Galerkin solver.

A :class:`Mesh` stores vertices, counterclockwise triangles and a global edge
list in which the interior edges come first.  Local edge ``i`` of a triangle is
the edge opposite its local vertex ``i``.  Every edge carries a fixed global
unit normal: its tangent points from the lower vertex id to the higher one and
the normal is that tangent rotated by -90 degrees.  ``tri_edge_signs[t, i]`` is
+1 when the global normal of local edge ``i`` is the outward normal of ``t``.

Examples
--------
>>> m = build_unit_square_mesh(4)
>>> m.n_triangles, m.n_interior_edges, m.n_interior_vertices
(32, 40, 9)
>>> m.euler_defect
0
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

DEGENERATE_AREA = 1e-14


class MeshError(ValueError):
    """Raised when a mesh violates a structural requirement."""


@dataclass(frozen=True)
class TriGeometry:
    """Geometry of a single triangle.

    ``normals[i]`` and ``lengths[i]`` refer to the edge opposite vertex ``i``;
    normals are outward.
    """

    vertices: np.ndarray
    area: float
    centroid: np.ndarray
    lengths: np.ndarray
    normals: np.ndarray
    ct: float


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_triangles: np.ndarray
    tri_edges: np.ndarray
    tri_edge_signs: np.ndarray
    n_interior_edges: int
    boundary_vertex: np.ndarray
    h: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_boundary_edges(self) -> int:
        return self.n_edges - self.n_interior_edges

    @property
    def n_interior_vertices(self) -> int:
        return int(np.count_nonzero(~self.boundary_vertex))

    @property
    def euler_defect(self) -> int:
        """``N_E + 1 - (N_V + N_T)``; zero on simply connected meshes.

        On a connected mesh with polygonal holes the defect equals the number
        of holes.
        """
        return (self.n_interior_edges + 1
                - self.n_interior_vertices - self.n_triangles)

    @property
    def n_holes(self) -> int:
        return self.euler_defect

    @property
    def is_simply_connected(self) -> bool:
        return self.euler_defect == 0

    # -- cached geometry -------------------------------------------------

    def _cached(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def tri_coords(self) -> np.ndarray:
        """Vertex coordinates per triangle, shape (N_T, 3, 2)."""
        return self._cached("coords", lambda: self.vertices[self.triangles])

    @property
    def areas(self) -> np.ndarray:
        return self._cached("areas", lambda: signed_areas(self.tri_coords))

    @property
    def centroids(self) -> np.ndarray:
        return self._cached("centroids", lambda: self.tri_coords.mean(axis=1))

    @property
    def edge_vectors(self) -> np.ndarray:
        """Local edge vectors, traversed counterclockwise, shape (N_T, 3, 2)."""
        def compute():
            c = self.tri_coords
            return c[:, [2, 0, 1]] - c[:, [1, 2, 0]]
        return self._cached("edge_vectors", compute)

    @property
    def tri_edge_lengths(self) -> np.ndarray:
        return self._cached("lengths",
                            lambda: np.linalg.norm(self.edge_vectors, axis=2))

    @property
    def outward_normals(self) -> np.ndarray:
        """Outward unit normals of the local edges, shape (N_T, 3, 2)."""
        def compute():
            d = self.edge_vectors
            n = np.stack([d[..., 1], -d[..., 0]], axis=-1)
            return n / self.tri_edge_lengths[..., None]
        return self._cached("normals", compute)

    @property
    def ct(self) -> np.ndarray:
        """``C_T = 2|T| / int_T |x - x_T|^2 = 72 / (a^2 + b^2 + c^2)``."""
        return self._cached(
            "ct", lambda: 72.0 / np.sum(self.tri_edge_lengths ** 2, axis=1))

    @property
    def edge_lengths(self) -> np.ndarray:
        def compute():
            d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
            return np.linalg.norm(d, axis=1)
        return self._cached("edge_lengths", compute)

    @property
    def edge_tangents(self) -> np.ndarray:
        """Unit tangents from the lower to the higher vertex id."""
        def compute():
            d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
            return d / self.edge_lengths[:, None]
        return self._cached("tangents", compute)

    @property
    def edge_normals(self) -> np.ndarray:
        """Global unit normals (tangent rotated by -90 degrees)."""
        def compute():
            t = self.edge_tangents
            return np.stack([t[:, 1], -t[:, 0]], axis=1)
        return self._cached("edge_normals", compute)

    @property
    def edge_midpoints(self) -> np.ndarray:
        return self._cached(
            "midpoints", lambda: self.vertices[self.edges].mean(axis=1))

    @property
    def h_max(self) -> float:
        return float(self.edge_lengths.max())

    @property
    def h_min(self) -> float:
        return float(self.edge_lengths.min())

    def tri_geometry(self, t: int) -> TriGeometry:
        return tri_geometry(self, t)

    def stats(self) -> dict:
        """Counts and sizes, suitable for ``json.dumps``."""
        return {
            "n_vertices": self.n_vertices,
            "n_triangles": self.n_triangles,
            "n_edges": self.n_edges,
            "n_interior_edges": self.n_interior_edges,
            "n_boundary_edges": self.n_boundary_edges,
            "n_interior_vertices": self.n_interior_vertices,
            "euler_defect": self.euler_defect,
            "n_holes": self.n_holes,
            "h": self.h,
            "h_min": self.h_min,
            "h_max": self.h_max,
            "area": float(self.areas.sum()),
        }


def signed_areas(coords: np.ndarray) -> np.ndarray:
    a = coords[:, 1] - coords[:, 0]
    b = coords[:, 2] - coords[:, 0]
    return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])


def tri_geometry(m: Mesh, t: int) -> TriGeometry:
    """Area, centroid, edge lengths, outward normals and ``C_T`` of triangle ``t``."""
    return TriGeometry(
        vertices=m.tri_coords[t].copy(),
        area=float(m.areas[t]),
        centroid=m.centroids[t].copy(),
        lengths=m.tri_edge_lengths[t].copy(),
        normals=m.outward_normals[t].copy(),
        ct=float(m.ct[t]),
    )


def geometry_from_points(points) -> TriGeometry:
    """Build a :class:`TriGeometry` for a lone triangle given its 3 vertices.

    The vertices are reordered counterclockwise if necessary.
    """
    p = np.asarray(points, dtype=float).reshape(3, 2)
    if signed_areas(p[None])[0] < 0:
        p = p[[0, 2, 1]]
    return tri_geometry(from_arrays(p, np.array([[0, 1, 2]])), 0)


def from_arrays(vertices, triangles, h: float | None = None) -> Mesh:
    """Build a :class:`Mesh` from a vertex array and a triangle array.

    Triangles given clockwise are reoriented.  Raises :class:`MeshError` for
    degenerate triangles, unused or out-of-range vertex references, and edges
    shared by more than two triangles.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.array(triangles, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must have shape (N, 2)")
    if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
        raise MeshError("triangles must have shape (N_T, 3) with N_T >= 1")
    nv = len(vertices)
    if triangles.min() < 0 or triangles.max() >= nv:
        raise MeshError("triangle references a vertex index out of range")

    area = signed_areas(vertices[triangles])
    span = vertices.max(axis=0) - vertices.min(axis=0)
    bad = np.abs(area) <= DEGENERATE_AREA * span[0] * span[1]
    if bad.any():
        raise MeshError(f"{bad.sum()} degenerate triangle(s), first is "
                        f"{int(np.flatnonzero(bad)[0])}")
    cw = area < 0
    triangles[cw] = triangles[cw][:, [0, 2, 1]]

    # local edge i is opposite local vertex i
    local = triangles[:, [[1, 2], [2, 0], [0, 1]]]  # (N_T, 3, 2)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    uniq, inverse, counts = np.unique(pairs, axis=0, return_inverse=True,
                                      return_counts=True)
    inverse = inverse.reshape(-1)
    if (counts > 2).any():
        e = uniq[np.flatnonzero(counts > 2)[0]]
        raise MeshError(f"non-conforming mesh: edge ({e[0]}, {e[1]}) is "
                        f"shared by {counts.max()} triangles")

    # interior edges first, each group in lexicographic vertex order
    interior = counts == 2
    order = np.concatenate([np.flatnonzero(interior), np.flatnonzero(~interior)])
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    edges = uniq[order]
    tri_edges = rank[inverse].reshape(-1, 3)

    nt = len(triangles)
    edge_triangles = -np.ones((len(edges), 2), dtype=np.int64)
    flat_t = np.repeat(np.arange(nt), 3)
    flat_e = tri_edges.reshape(-1)
    srt = np.argsort(flat_e, kind="stable")
    fe, ft = flat_e[srt], flat_t[srt]
    first = np.ones(len(fe), dtype=bool)
    first[1:] = fe[1:] != fe[:-1]
    edge_triangles[fe[first], 0] = ft[first]
    edge_triangles[fe[~first], 1] = ft[~first]

    # sign: local traversal v_{i+1} -> v_{i+2} is ccw, so the outward normal
    # is the local direction rotated by -90; it matches the global normal
    # iff the local direction runs from the lower to the higher vertex id
    signs = np.where(local[..., 0] < local[..., 1], 1, -1).astype(np.int8)

    boundary_vertex = np.zeros(nv, dtype=bool)
    boundary_vertex[edges[~interior[order]].reshape(-1)] = True
    used = np.zeros(nv, dtype=bool)
    used[triangles.reshape(-1)] = True
    if not used.all():
        raise MeshError(f"{(~used).sum()} vertex/vertices not used by any triangle")

    n_int = int(interior.sum())
    if h is None:
        d = vertices[edges[:, 1]] - vertices[edges[:, 0]]
        h = float(np.linalg.norm(d, axis=1).max())
    m = Mesh(vertices=vertices, triangles=triangles, edges=edges,
             edge_triangles=edge_triangles, tri_edges=tri_edges,
             tri_edge_signs=signs, n_interior_edges=n_int,
             boundary_vertex=boundary_vertex, h=float(h))
    return m


def build_rectangle_mesh(x0: float, x1: float, y0: float, y1: float,
                         nx: int, ny: int, diagonal: str = "NE",
                         keep=None, h: float | None = None) -> Mesh:
    """Structured mesh of a rectangle split into ``nx`` x ``ny`` cells.

    Each cell is cut along its ``"NE"`` (lower-left to upper-right) or
    ``"NW"`` diagonal.  ``keep`` is an optional boolean array of shape
    ``(nx, ny)``; cells where it is False are left out, which is how
    step-shaped domains are built.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive")
    diagonal = diagonal.upper()
    if diagonal not in ("NE", "NW"):
        raise ValueError(f"diagonal must be 'NE' or 'NW', got {diagonal!r}")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    if keep is not None:
        keep = np.asarray(keep, dtype=bool)
        I, J = I[keep], J[keep]
    I, J = I.ravel(), J.ravel()
    v00 = I * (ny + 1) + J
    v10 = v00 + (ny + 1)
    v01 = v00 + 1
    v11 = v10 + 1
    if diagonal == "NE":
        t1 = np.column_stack([v00, v10, v11])
        t2 = np.column_stack([v00, v11, v01])
    else:
        t1 = np.column_stack([v00, v10, v01])
        t2 = np.column_stack([v10, v11, v01])
    triangles = np.column_stack([t1, t2]).reshape(-1, 3)

    used = np.unique(triangles)
    remap = -np.ones(len(vertices), dtype=np.int64)
    remap[used] = np.arange(len(used))
    if h is None:
        h = max((x1 - x0) / nx, (y1 - y0) / ny)
    return from_arrays(vertices[used], remap[triangles], h=h)


def build_unit_square_mesh(n: int, diagonal: str = "NE") -> Mesh:
    """Uniform ``n`` x ``n`` triangulation of the unit square, ``h = 1/n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, n, n, diagonal)


def refine_uniform(m: Mesh) -> Mesh:
    """Split every triangle into four congruent children through edge midpoints."""
    nv = m.n_vertices
    vertices = np.vstack([m.vertices, m.edge_midpoints])
    a, b, c = m.triangles.T
    m0, m1, m2 = (nv + m.tri_edges).T
    children = np.stack([
        np.column_stack([a, m2, m1]),
        np.column_stack([m2, b, m0]),
        np.column_stack([m1, m0, c]),
        np.column_stack([m0, m1, m2]),
    ], axis=1).reshape(-1, 3)
    return from_arrays(vertices, children, h=m.h / 2)


def refine(m: Mesh, times: int) -> Mesh:
    for _ in range(times):
        m = refine_uniform(m)
    return m


# -- Triangle-style .node / .ele files --------------------------------------

def _data_lines(text: str) -> list[list[str]]:
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    return rows


def _drop_header(rows: list[list[str]]) -> list[list[str]]:
    """Remove a Triangle-style count header if present."""
    if len(rows) < 2:
        return rows
    first = rows[0]
    try:
        ints = [int(tok) for tok in first]
    except ValueError:
        return rows
    if ints[0] != len(rows) - 1:
        return rows
    if len(first) != len(rows[1]) or (len(first) > 1 and ints[1] == 2):
        return rows[1:]
    return rows


def import_mesh(nodes: str, elements: str, holes: int | None = None) -> Mesh:
    """Parse node (``id x y``) and element (``id v1 v2 v3``) text payloads.

    Triangle-style count headers, trailing attribute columns and ``#``
    comments are accepted.  Element vertex ids refer to node ids.  A mesh with
    holes is accepted; its Euler defect (the number of holes) is logged unless
    it equals ``holes``.
    """
    node_rows = _drop_header(_data_lines(nodes))
    elem_rows = _drop_header(_data_lines(elements))
    if not node_rows or not elem_rows:
        raise MeshError("empty node or element list")

    index = {}
    coords = np.empty((len(node_rows), 2))
    for k, row in enumerate(node_rows):
        if len(row) < 3:
            raise MeshError(f"node line {k + 1}: expected 'id x y'")
        nid = int(row[0])
        if nid in index:
            raise MeshError(f"duplicate vertex id {nid}")
        index[nid] = k
        coords[k] = float(row[1]), float(row[2])

    tris = np.empty((len(elem_rows), 3), dtype=np.int64)
    for k, row in enumerate(elem_rows):
        if len(row) < 4:
            raise MeshError(f"element line {k + 1}: expected 'id v1 v2 v3'")
        for j in range(3):
            vid = int(row[1 + j])
            if vid not in index:
                raise MeshError(f"element {row[0]} references unknown "
                                f"vertex id {vid}")
            tris[k, j] = index[vid]

    m = from_arrays(coords, tris)
    if m.euler_defect != (holes or 0):
        logger.warning("imported mesh is not simply connected: "
                       "N_E + 1 = %d, N_V + N_T = %d (defect %d)",
                       m.n_interior_edges + 1,
                       m.n_interior_vertices + m.n_triangles, m.euler_defect)
    return m


def read_mesh(prefix, holes: int | None = None) -> Mesh:
    """Read ``<prefix>.node`` and ``<prefix>.ele``."""
    prefix = str(prefix)
    for ext in (".node", ".ele"):
        if prefix.endswith(ext):
            prefix = prefix[: -len(ext)]
    with open(prefix + ".node") as fh:
        nodes = fh.read()
    with open(prefix + ".ele") as fh:
        elements = fh.read()
    return import_mesh(nodes, elements, holes)


def node_text(m: Mesh) -> str:
    lines = [f"{m.n_vertices} 2 0 0"]
    lines += [f"{i + 1} {x!r} {y!r}" for i, (x, y) in enumerate(m.vertices.tolist())]
    return "\n".join(lines) + "\n"


def ele_text(m: Mesh) -> str:
    lines = [f"{m.n_triangles} 3 0"]
    lines += [f"{i + 1} {a + 1} {b + 1} {c + 1}"
              for i, (a, b, c) in enumerate(m.triangles.tolist())]
    return "\n".join(lines) + "\n"


def write_mesh(m: Mesh, prefix) -> None:
    with open(f"{prefix}.node", "w") as fh:
        fh.write(node_text(m))
    with open(f"{prefix}.ele", "w") as fh:
        fh.write(ele_text(m))


def check_mesh(m: Mesh, atol: float = 1e-13, holes: int = 0) -> list[str]:
    """Return a list of violated mesh invariants (empty if none).

    ``holes`` is the expected number of holes; each adds one to the Euler
    defect ``N_E + 1 - N_V - N_T``.
    """
    problems = []
    if (m.areas <= 0).any():
        problems.append("non-positive triangle area")
    et = m.edge_triangles
    nint = m.n_interior_edges
    if (et[:nint] < 0).any() or (et[nint:, 0] < 0).any() or (et[nint:, 1] >= 0).any():
        problems.append("edge incidence counts wrong")
    closure = np.einsum("te,tek->tk", m.tri_edge_lengths, m.outward_normals)
    if np.abs(closure).max() > atol * max(1.0, m.h_max):
        problems.append("edge normals do not close")
    glob = m.edge_normals[m.tri_edges] * m.tri_edge_signs[..., None]
    if np.abs(glob - m.outward_normals).max() > 1e-12:
        problems.append("edge sign convention broken")
    if m.euler_defect != holes:
        problems.append(f"Euler identity defect {m.euler_defect}, expected {holes}")
    return problems
