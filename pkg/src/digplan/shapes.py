"""Primitive watertight solids for fixtures and tests."""
from __future__ import annotations

import numpy as np

from .mesh import TriMesh


def box(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> TriMesh:
    return blocks([(lo, hi)])


def cube(size: float = 1.0, origin=(0.0, 0.0, 0.0)) -> TriMesh:
    o = np.asarray(origin, dtype=float)
    return box(o, o + size)


# (axis, sign) -> the 4 corner offsets of the cell face, ordered so the
# right-hand normal points along +sign*axis
_FACE_CORNERS = {
    (0, -1): [(0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)],
    (0, +1): [(1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)],
    (1, -1): [(0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)],
    (1, +1): [(0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)],
    (2, -1): [(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)],
    (2, +1): [(0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)],
}


def blocks(boxes, holes=()) -> TriMesh:
    """Union of axis-aligned boxes minus ``holes``, meshed on the grid
    spanned by all box coordinates.

    Each box is ``(lo, hi)``.  The result must be a manifold solid (no two
    cells meeting only along an edge or corner).
    """
    boxes = [(np.asarray(lo, float), np.asarray(hi, float)) for lo, hi in boxes]
    holes = [(np.asarray(lo, float), np.asarray(hi, float)) for lo, hi in holes]
    grid = [
        np.unique(np.concatenate([[b[0][a], b[1][a]] for b in boxes + holes]))
        for a in range(3)
    ]
    mids = [0.5 * (g[:-1] + g[1:]) for g in grid]
    cx, cy, cz = np.meshgrid(*mids, indexing="ij")
    centers = np.stack([cx, cy, cz], axis=-1)

    def covered(items):
        mask = np.zeros(centers.shape[:3], dtype=bool)
        for lo, hi in items:
            mask |= np.all((centers > lo) & (centers < hi), axis=-1)
        return mask

    filled = covered(boxes) & ~covered(holes)
    shape = filled.shape
    index: dict[tuple[int, int, int], int] = {}
    verts: list[tuple[float, float, float]] = []
    tris: list[tuple[int, int, int]] = []

    def vid(i, j, k):
        key = (i, j, k)
        if key not in index:
            index[key] = len(verts)
            verts.append((grid[0][i], grid[1][j], grid[2][k]))
        return index[key]

    for i, j, k in zip(*np.nonzero(filled)):
        for (axis, sign), corners in _FACE_CORNERS.items():
            nb = [i, j, k]
            nb[axis] += sign
            inside = all(0 <= nb[a] < shape[a] for a in range(3)) and filled[tuple(nb)]
            if inside:
                continue
            q = [vid(i + a, j + b, k + c) for a, b, c in corners]
            tris.append((q[0], q[1], q[2]))
            tris.append((q[0], q[2], q[3]))
    return TriMesh(np.array(verts), np.array(tris))


def hollow_box(outer_lo, outer_hi, inner_lo, inner_hi) -> TriMesh:
    """Closed box with a sealed internal cavity (two surface shells)."""
    outer = box(outer_lo, outer_hi)
    inner = box(inner_lo, inner_hi)
    v = np.vstack([outer.vertices, inner.vertices])
    t = np.vstack([outer.triangles, inner.triangles[:, ::-1] + len(outer.vertices)])
    return TriMesh(v, t)


def tetrahedron(edge: float = 1.0) -> TriMesh:
    """Regular tetrahedron with the given edge length."""
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    v *= edge / (2.0 * np.sqrt(2.0))
    t = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriMesh(v, t)


def uv_sphere(radius: float = 1.0, center=(0.0, 0.0, 0.0), n_lat: int = 8, n_lon: int = 12) -> TriMesh:
    """Latitude/longitude sphere with single-vertex poles."""
    c = np.asarray(center, dtype=float)
    verts = [c + (0, 0, -radius)]
    for i in range(1, n_lat):
        phi = -np.pi / 2 + np.pi * i / n_lat
        for j in range(n_lon):
            th = 2 * np.pi * j / n_lon
            verts.append(c + radius * np.array([np.cos(phi) * np.cos(th), np.cos(phi) * np.sin(th), np.sin(phi)]))
    verts.append(c + (0, 0, radius))
    top = len(verts) - 1

    def ring(i, j):
        return 1 + (i - 1) * n_lon + (j % n_lon)

    tris = []
    for j in range(n_lon):
        tris.append((0, ring(1, j + 1), ring(1, j)))
        tris.append((top, ring(n_lat - 1, j), ring(n_lat - 1, j + 1)))
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a, b = ring(i, j), ring(i, j + 1)
            c2, d = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append((a, b, d))
            tris.append((a, d, c2))
    return TriMesh(np.array(verts), np.array(tris))


def prism(polygon, z0: float, z1: float) -> TriMesh:
    """Extrude a convex counter-clockwise polygon between two heights."""
    poly = np.asarray(polygon, dtype=float)
    n = len(poly)
    bottom = np.column_stack([poly, np.full(n, z0)])
    topv = np.column_stack([poly, np.full(n, z1)])
    v = np.vstack([bottom, topv])
    tris = []
    for k in range(1, n - 1):
        tris.append((0, k + 1, k))
        tris.append((n, n + k, n + k + 1))
    for k in range(n):
        a, b = k, (k + 1) % n
        tris.append((a, b, n + b))
        tris.append((a, n + b, n + a))
    return TriMesh(v, np.array(tris))


def regular_prism(sides: int, radius: float, z0: float, z1: float, center=(0.0, 0.0)) -> TriMesh:
    th = 2 * np.pi * np.arange(sides) / sides
    poly = np.column_stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])
    return prism(poly, z0, z1)


__all__ = [
    "box",
    "cube",
    "blocks",
    "hollow_box",
    "tetrahedron",
    "uv_sphere",
    "prism",
    "regular_prism",
]
