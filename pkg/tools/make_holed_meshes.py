"""Generate the bundled holed-square meshes in src/wgstokes/data/.

Holes are regular polygons inscribed in the circles.  Rerun after changing
the resolution; the output is deterministic.
"""
import argparse
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

from wgstokes import mesh

MESHES = {
    "ex2_three_holes": [((0.5, 0.5), 0.1), ((0.2, 0.8), 0.1), ((0.8, 0.8), 0.1)],
    "ex4_channel_hole": [((0.5, 0.5), 0.1)],
}


def holed_square(holes, n=16, sides=12, seed=1):
    rng = np.random.default_rng(seed)
    s = np.linspace(0.0, 1.0, n + 1)[:-1]
    boundary = np.concatenate([np.column_stack([s, 0 * s]),
                               np.column_stack([1 + 0 * s, s]),
                               np.column_stack([1 - s, 1 + 0 * s]),
                               np.column_stack([0 * s, 1 - s])])
    g = np.linspace(0.0, 1.0, n + 1)[1:-1]
    X, Y = np.meshgrid(g, g, indexing="ij")
    inner = np.column_stack([X.ravel(), Y.ravel()])
    inner += rng.uniform(-0.15, 0.15, inner.shape) / n
    circles = []
    theta = 2 * np.pi * np.arange(sides) / sides
    for (cx, cy), r in holes:
        d = np.hypot(inner[:, 0] - cx, inner[:, 1] - cy)
        inner = inner[d > r + 0.7 / n]
        circles.append(np.column_stack([cx + r * np.cos(theta), cy + r * np.sin(theta)]))
    pts = np.concatenate([boundary, inner] + circles)
    tri = Delaunay(pts).simplices
    c = pts[tri].mean(axis=1)
    keep = np.ones(len(tri), dtype=bool)
    for (cx, cy), r in holes:
        keep &= np.hypot(c[:, 0] - cx, c[:, 1] - cy) > r * np.cos(np.pi / sides)
    return mesh.from_arrays(pts, tri[keep])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path,
                    default=Path(__file__).resolve().parents[1] / "src/wgstokes/data")
    ap.add_argument("-n", type=int, default=16)
    args = ap.parse_args(argv)
    for name, holes in MESHES.items():
        m = holed_square(holes, args.n)
        if m.n_holes != len(holes):
            raise SystemExit(f"{name}: expected {len(holes)} holes, got {m.n_holes}")
        mesh.write_mesh(m, args.out / name)
        print(name, m.stats())


if __name__ == "__main__":
    main()
