"""Triangle meshes, rigid poses, bounding volume hierarchies and the
collision/containment queries used by every other module.

All coordinates are meters.  Meshes are immutable; a :class:`Solid` is a
world-space snapshot of a mesh under a pose, carrying the acceleration
structures.  Queries are pure and safe to call from several threads.
"""
from __future__ import annotations

import functools
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

STL_WELD_TOL = 1e-7
_BARY_TOL = 1e-9


class GeometryError(Exception):
    """Base class for invalid or unreadable geometry."""


class ParseError(GeometryError):
    pass


class NotWatertight(GeometryError):
    pass


class DegenerateGeometry(GeometryError):
    pass


# ---------------------------------------------------------------------------
# poses


def _quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def _quat_mul(a, b) -> tuple[float, float, float, float]:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def _normalize_quat(q) -> tuple[float, float, float, float]:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0:
        raise ValueError("zero quaternion")
    q = q / n
    # canonical sign keeps equal rotations equal as tuples
    if q[0] < 0 or (q[0] == 0 and next((c for c in q[1:] if c != 0), 0) < 0):
        q = -q
    return tuple(float(c) for c in q)


@dataclass(frozen=True)
class Pose:
    """Rigid placement: ``x_world = R @ x_local + translation``.

    ``rotation`` is a unit quaternion stored as ``(w, x, y, z)``.
    """

    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        t = tuple(float(c) for c in self.translation)
        if len(t) != 3 or not all(np.isfinite(t)):
            raise ValueError(f"bad translation {self.translation!r}")
        q = tuple(float(c) for c in self.rotation)
        if len(q) != 4 or abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValueError(f"rotation must be a unit quaternion, got {self.rotation!r}")
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", q)

    @classmethod
    def from_rotation(cls, q, translation=(0.0, 0.0, 0.0)) -> "Pose":
        return cls(tuple(translation), _normalize_quat(q))

    @classmethod
    def from_axis_angle(cls, axis, angle: float, translation=(0.0, 0.0, 0.0)) -> "Pose":
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        s = np.sin(angle / 2.0)
        return cls.from_rotation((np.cos(angle / 2.0), *(axis * s)), translation)

    @property
    def matrix(self) -> np.ndarray:
        return _quat_to_matrix(self.rotation)

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T + np.asarray(self.translation)

    def rotate(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.matrix.T

    def compose(self, other: "Pose") -> "Pose":
        """Pose equal to applying ``other`` first, then ``self``."""
        t = self.apply(np.asarray(other.translation))
        return Pose.from_rotation(_quat_mul(self.rotation, other.rotation), t)

    def inverse(self) -> "Pose":
        w, x, y, z = self.rotation
        qi = (w, -x, -y, -z)
        t = -(_quat_to_matrix(qi) @ np.asarray(self.translation))
        return Pose.from_rotation(qi, t)


def rotation_between(a, b) -> Pose:
    """Smallest rotation taking unit vector ``a`` onto unit vector ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    c = float(np.dot(a, b))
    if c > 1.0 - 1e-15:
        return Pose()
    if c < -1.0 + 1e-15:
        # half turn about any axis orthogonal to a; pick deterministically
        helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        axis = np.cross(a, helper)
        return Pose.from_axis_angle(axis, np.pi)
    axis = np.cross(a, b)
    q = (1.0 + c, *axis)
    return Pose.from_rotation(q)


# ---------------------------------------------------------------------------
# meshes


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Closed, consistently wound triangle mesh.

    Construction validates the mesh: every edge must be shared by exactly
    two triangles with opposite orientation, no triangle may have zero area
    or repeated indices, and the enclosed signed volume must be positive.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 3)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        _validate(v, t)

    @cached_property
    def _integrals(self) -> tuple[float, np.ndarray]:
        p = self.vertices[self.triangles]
        det = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2]))
        vol = det.sum() / 6.0
        cen = (det[:, None] * p.sum(axis=1)).sum(axis=0) / (24.0 * vol)
        return float(vol), cen

    @property
    def volume(self) -> float:
        return self._integrals[0]

    @property
    def centroid(self) -> np.ndarray:
        return self._integrals[1].copy()

    @cached_property
    def area(self) -> float:
        p = self.vertices[self.triangles]
        return float(0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1).sum())

    def transformed(self, pose: Pose) -> "TriMesh":
        return TriMesh(pose.apply(self.vertices), self.triangles)

    def scaled(self, factors) -> "TriMesh":
        f = np.broadcast_to(np.asarray(factors, dtype=float), (3,))
        tris = self.triangles if np.prod(f) > 0 else self.triangles[:, ::-1]
        return TriMesh(self.vertices * f, tris)


def _validate(v: np.ndarray, t: np.ndarray) -> None:
    if len(t) == 0:
        raise DegenerateGeometry("mesh has no triangles")
    if t.min() < 0 or t.max() >= len(v):
        raise DegenerateGeometry("triangle index out of range")
    if not np.all(np.isfinite(v)):
        raise DegenerateGeometry("non-finite vertex coordinates")
    if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
        raise DegenerateGeometry("triangle with repeated vertex index")
    p = v[t]
    areas = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    scale = float(np.ptp(v, axis=0).max())
    if np.any(areas <= 1e-12 * scale * scale):
        raise DegenerateGeometry(f"{int(np.sum(areas <= 1e-12 * scale * scale))} zero-area triangle(s)")

    directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    _, counts = np.unique(und, axis=0, return_counts=True)
    if np.any(counts != 2):
        raise NotWatertight(
            f"{int(np.sum(counts == 1))} boundary edge(s), {int(np.sum(counts > 2))} non-manifold edge(s)"
        )
    _, dcounts = np.unique(directed, axis=0, return_counts=True)
    if np.any(dcounts != 1):
        raise NotWatertight("inconsistent triangle winding")

    det = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2]))
    if det.sum() / 6.0 <= 0:
        raise DegenerateGeometry("signed volume is not positive (inverted winding?)")


def mesh_volume(m: TriMesh) -> float:
    return m.volume


def mesh_centroid(m: TriMesh) -> np.ndarray:
    return m.centroid


def surface_area(m: TriMesh) -> float:
    return m.area


# ---------------------------------------------------------------------------
# file formats


def load_mesh(path, scale: float = 1.0) -> TriMesh:
    """Read an OBJ or STL file into a validated :class:`TriMesh`.

    ``scale`` converts file units to meters.  A mesh whose winding is
    globally inverted is flipped; any other defect raises.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        v, t = _read_obj(path)
    elif suffix == ".stl":
        v, t = _read_stl(path)
    else:
        raise ParseError(f"{path}: unsupported mesh format {suffix!r}")
    v = v * float(scale)
    if len(t) == 0:
        raise ParseError(f"{path}: no faces")
    p = v[t]
    det = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2]))
    if det.sum() < 0:
        t = t[:, ::-1]
    return TriMesh(v, t)


def _read_obj(path: Path) -> tuple[np.ndarray, np.ndarray]:
    verts: list[list[float]] = []
    faces: list[list[int]] = []
    try:
        text = path.read_text()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not a text OBJ file") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        try:
            if tag == "v":
                if len(rest) < 3:
                    raise ValueError("vertex needs 3 coordinates")
                verts.append([float(c) for c in rest[:3]])
            elif tag == "f":
                if len(rest) < 3:
                    raise ValueError("face needs at least 3 vertices")
                idx = []
                for tok in rest:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    v = np.asarray(verts, dtype=float).reshape(-1, 3)
    t = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(t) and (t.min() < 0 or t.max() >= len(v)):
        raise ParseError(f"{path}: face references a missing vertex")
    return v, t


def _read_stl(path: Path) -> tuple[np.ndarray, np.ndarray]:
    data = path.read_bytes()
    if len(data) >= 84:
        (count,) = struct.unpack_from("<I", data, 80)
        if len(data) == 84 + 50 * count:
            rec = np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
            arr = np.frombuffer(data, dtype=rec, count=count, offset=84)
            return _weld(arr["v"].astype(float).reshape(-1, 3))
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: neither binary nor ASCII STL") from exc
    if not text.lstrip().lower().startswith("solid"):
        raise ParseError(f"{path}: neither binary nor ASCII STL")
    pts = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split()
        if tok and tok[0].lower() == "vertex":
            try:
                pts.append([float(c) for c in tok[1:4]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if len(pts[-1]) != 3:
                raise ParseError(f"{path}:{lineno}: vertex needs 3 coordinates")
    if len(pts) % 3:
        raise ParseError(f"{path}: facet with vertex count not a multiple of 3")
    return _weld(np.asarray(pts, dtype=float).reshape(-1, 3))


def _weld(points: np.ndarray, tol: float = STL_WELD_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Merge facet corners closer than ``tol`` into shared vertices."""
    if len(points) == 0:
        return points.reshape(-1, 3), np.zeros((0, 3), dtype=np.int64)
    tree = cKDTree(points)
    parent = np.arange(len(points))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in sorted(tree.query_pairs(tol)):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(points))])
    uniq, inverse = np.unique(roots, return_inverse=True)
    return points[uniq], inverse.reshape(-1, 3).astype(np.int64)


def write_obj(mesh: TriMesh, path, scale: float = 1.0) -> None:
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices / scale]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def write_stl(mesh: TriMesh, path, binary: bool = True) -> None:
    p = mesh.vertices[mesh.triangles]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    if binary:
        rec = np.zeros(len(p), dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
        rec["n"] = n
        rec["v"] = p
        Path(path).write_bytes(b"\0" * 80 + struct.pack("<I", len(p)) + rec.tobytes())
    else:
        out = ["solid mesh"]
        for nn, tri in zip(n, p):
            out.append(f"  facet normal {nn[0]:.9g} {nn[1]:.9g} {nn[2]:.9g}")
            out.append("    outer loop")
            out += [f"      vertex {x:.9g} {y:.9g} {z:.9g}" for x, y, z in tri]
            out.append("    endloop")
            out.append("  endfacet")
        out.append("endsolid mesh")
        Path(path).write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# bounding volume hierarchy


class Bvh:
    """Axis-aligned bounding box tree over a triangle soup.

    Nodes live in flat arrays; leaves own a contiguous slice of ``order``.
    """

    def __init__(self, tri: np.ndarray, leaf_size: int = 4):
        tri = np.asarray(tri, dtype=float)
        self.leaf_size = leaf_size
        lo_t = tri.min(axis=1)
        hi_t = tri.max(axis=1)
        cen = tri.mean(axis=1)
        order = np.arange(len(tri))
        lo, hi, left, right, start, count = [], [], [], [], [], []

        def build(idx: np.ndarray) -> int:
            node = len(lo)
            lo.append(lo_t[idx].min(axis=0))
            hi.append(hi_t[idx].max(axis=0))
            left.append(-1)
            right.append(-1)
            start.append(-1)
            count.append(0)
            if len(idx) <= leaf_size:
                start[node] = build.cursor
                count[node] = len(idx)
                order[build.cursor : build.cursor + len(idx)] = idx
                build.cursor += len(idx)
                return node
            c = cen[idx]
            axis = int(np.argmax(np.ptp(c, axis=0)))
            ranked = idx[np.argsort(c[:, axis], kind="stable")]
            half = len(ranked) // 2
            left[node] = build(ranked[:half])
            right[node] = build(ranked[half:])
            return node

        build.cursor = 0
        build(np.arange(len(tri)))
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        self.left = np.array(left)
        self.right = np.array(right)
        self.start = np.array(start)
        self.count = np.array(count)
        self.order = order

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    def leaf_triangles(self, node: int) -> np.ndarray:
        s = self.start[node]
        return self.order[s : s + self.count[node]]

    def pairs(self, other: "Bvh", offset=None, pad: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Triangle index pairs whose boxes overlap (within ``pad``).

        ``offset`` translates this tree's geometry before testing.
        """
        off = np.zeros(3) if offset is None else np.asarray(offset, dtype=float)
        la, ha = self.lo + off, self.hi + off
        lb, hb = other.lo, other.hi
        out_a: list[np.ndarray] = []
        out_b: list[np.ndarray] = []
        stack = [(0, 0)]
        while stack:
            a, b = stack.pop()
            if np.any(la[a] > hb[b] + pad) or np.any(lb[b] > ha[a] + pad):
                continue
            leaf_a, leaf_b = self.left[a] < 0, other.left[b] < 0
            if leaf_a and leaf_b:
                ta, tb = self.leaf_triangles(a), other.leaf_triangles(b)
                out_a.append(np.repeat(ta, len(tb)))
                out_b.append(np.tile(tb, len(ta)))
            elif leaf_b or (not leaf_a and np.prod(ha[a] - la[a]) >= np.prod(hb[b] - lb[b])):
                stack.append((self.left[a], b))
                stack.append((self.right[a], b))
            else:
                stack.append((a, other.left[b]))
                stack.append((a, other.right[b]))
        if not out_a:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        return np.concatenate(out_a), np.concatenate(out_b)


# ---------------------------------------------------------------------------
# triangle primitives (vectorised over leading axis)


def triangles_overlap_depth(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Separating-axis overlap depth for triangle pairs ``A[k]``, ``B[k]``.

    Positive values mean the triangles properly intersect; zero or negative
    means they are separated or merely touching.  Coplanar pairs report 0.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if len(A) == 0:
        return np.zeros(0)
    eA = np.roll(A, -1, axis=1) - A
    eB = np.roll(B, -1, axis=1) - B
    nA = np.cross(eA[:, 0], eA[:, 1])
    nB = np.cross(eB[:, 0], eB[:, 1])
    cross = np.cross(eA[:, :, None, :], eB[:, None, :, :]).reshape(len(A), 9, 3)
    axes = np.concatenate([nA[:, None], nB[:, None], cross], axis=1)
    lenA = np.linalg.norm(eA, axis=2)
    lenB = np.linalg.norm(eB, axis=2)
    ref = np.concatenate(
        [
            (lenA[:, 0] * lenA[:, 2])[:, None],
            (lenB[:, 0] * lenB[:, 2])[:, None],
            (lenA[:, :, None] * lenB[:, None, :]).reshape(len(A), 9),
        ],
        axis=1,
    )
    norm = np.linalg.norm(axes, axis=2)
    valid = norm > 1e-10 * ref
    axes = axes / np.where(valid, norm, 1.0)[:, :, None]
    pa = np.einsum("kav,kpv->kap", axes, A)
    pb = np.einsum("kav,kpv->kap", axes, B)
    sep = np.minimum(pa.max(axis=2) - pb.min(axis=2), pb.max(axis=2) - pa.min(axis=2))
    sep = np.where(valid, sep, np.inf)
    return sep.min(axis=1)


def _point_segment_dist(p, a, b):
    ab = b - a
    t = np.einsum("...i,...i->...", p - a, ab) / np.maximum(np.einsum("...i,...i->...", ab, ab), 1e-300)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(p - (a + t[..., None] * ab), axis=-1)


def _point_triangle_dist(p, tri):
    a, b, c = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    n = np.cross(b - a, c - a)
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    h = np.einsum("...i,...i->...", p - a, n)
    q = p - h[..., None] * n
    c0 = np.einsum("...i,...i->...", np.cross(b - a, q - a), n)
    c1 = np.einsum("...i,...i->...", np.cross(c - b, q - b), n)
    c2 = np.einsum("...i,...i->...", np.cross(a - c, q - c), n)
    inside = (c0 >= 0) & (c1 >= 0) & (c2 >= 0)
    edge = np.minimum(
        np.minimum(_point_segment_dist(p, a, b), _point_segment_dist(p, b, c)),
        _point_segment_dist(p, c, a),
    )
    return np.where(inside, np.abs(h), edge)


def _segment_segment_dist(p1, q1, p2, q2):
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.einsum("...i,...i->...", d1, d1)
    e = np.einsum("...i,...i->...", d2, d2)
    f = np.einsum("...i,...i->...", d2, r)
    c = np.einsum("...i,...i->...", d1, r)
    b = np.einsum("...i,...i->...", d1, d2)
    denom = a * e - b * b
    s = np.where(denom > 1e-14 * a * e, np.clip((b * f - c * e) / np.where(denom > 0, denom, 1.0), 0, 1), 0.0)
    t = (b * s + f) / e
    s = np.where(t < 0, np.clip(-c / a, 0, 1), np.where(t > 1, np.clip((b - c) / a, 0, 1), s))
    t = np.clip(t, 0, 1)
    return np.linalg.norm((p1 + s[..., None] * d1) - (p2 + t[..., None] * d2), axis=-1)


def triangle_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Minimum distance between triangle pairs ``A[k]`` and ``B[k]``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if len(A) == 0:
        return np.zeros(0)
    d = np.full(len(A), np.inf)
    for i in range(3):
        d = np.minimum(d, _point_triangle_dist(A[:, i], B))
        d = np.minimum(d, _point_triangle_dist(B[:, i], A))
        for j in range(3):
            d = np.minimum(
                d, _segment_segment_dist(A[:, i], A[:, (i + 1) % 3], B[:, j], B[:, (j + 1) % 3])
            )
    return np.where(triangles_overlap_depth(A, B) > 0, 0.0, d)


# ---------------------------------------------------------------------------
# posed solids


def _components(triangles: np.ndarray, nverts: int) -> list[int]:
    """One representative vertex per connected surface component."""
    parent = np.arange(nverts)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b, c in triangles:
        ra, rb, rc = find(a), find(b), find(c)
        parent[rb] = ra
        parent[find(rc)] = ra
    used = np.unique(triangles)
    return sorted({int(find(i)) for i in used})


def _inset_vertices(vertices, triangles, normals, margin: float) -> np.ndarray:
    """Move every vertex so each incident face plane recedes by ``margin``."""
    nv = len(vertices)
    M = np.zeros((nv, 3, 3))
    rhs = np.zeros((nv, 3))
    outer = np.einsum("ti,tj->tij", normals, normals)
    for k in range(3):
        np.add.at(M, triangles[:, k], outer)
        np.add.at(rhs, triangles[:, k], normals * margin)
    offset = np.einsum("vij,vj->vi", np.linalg.pinv(M, rcond=1e-6), rhs)
    return vertices - offset


class Solid:
    """World-space snapshot of ``mesh`` placed at ``pose``.

    ``margin`` is the collision tolerance: the solid is tested for
    interpenetration through a copy whose faces are inset by ``margin`` so
    that touching contacts never count as collisions.
    """

    def __init__(self, mesh: TriMesh, pose: Pose | None = None, margin: float = 0.0):
        self.mesh = mesh
        self.pose = pose or Pose()
        self.margin = float(margin)
        self.vertices = self.pose.apply(mesh.vertices)
        self.triangles = mesh.triangles
        self.tri = self.vertices[self.triangles]
        n = np.cross(self.tri[:, 1] - self.tri[:, 0], self.tri[:, 2] - self.tri[:, 0])
        self.tri_areas = 0.5 * np.linalg.norm(n, axis=1)
        self.normals = n / (2.0 * self.tri_areas[:, None])
        self.aabb = np.stack([self.vertices.min(axis=0), self.vertices.max(axis=0)])
        self.volume = mesh.volume
        self.centroid = self.pose.apply(mesh.centroid)
        self.area = mesh.area
        self.radius = float(np.linalg.norm(self.vertices - self.centroid, axis=1).max())

    @cached_property
    def bvh(self) -> Bvh:
        return Bvh(self.tri)

    @cached_property
    def inset_tri(self) -> np.ndarray:
        if self.margin <= 0:
            return self.tri
        v = _inset_vertices(self.vertices, self.triangles, self.normals, self.margin)
        return v[self.triangles]

    @cached_property
    def inset_bvh(self) -> Bvh:
        return Bvh(self.inset_tri) if self.margin > 0 else self.bvh

    @cached_property
    def component_vertices(self) -> np.ndarray:
        reps = _components(self.triangles, len(self.vertices))
        return self.vertices[reps]

    @cached_property
    def inset_component_vertices(self) -> np.ndarray:
        if self.margin <= 0:
            return self.component_vertices
        v = _inset_vertices(self.vertices, self.triangles, self.normals, self.margin)
        return v[_components(self.triangles, len(self.vertices))]

    @property
    def extents(self) -> np.ndarray:
        return self.aabb[1] - self.aabb[0]

    @cached_property
    def min_width(self) -> float:
        """Smallest extent across the solid's own face-normal directions.

        Unlike the axis-aligned extents this does not change when the
        solid is rotated; for boxes it is the shortest side.
        """
        n = np.unique(np.round(self.normals * np.where(self.normals[:, :1] < 0, -1.0, 1.0), 9), axis=0)
        best = np.inf
        for s in range(0, len(n), 256):
            proj = self.vertices @ n[s : s + 256].T
            best = min(best, float(np.ptp(proj, axis=0).min()))
        return best


@functools.lru_cache(maxsize=256)
def _posed(mesh: TriMesh, pose: Pose, margin: float) -> Solid:
    return Solid(mesh, pose, margin)


def default_margin(*solids_or_aabbs) -> float:
    lo = np.min([s.aabb[0] for s in solids_or_aabbs], axis=0)
    hi = np.max([s.aabb[1] for s in solids_or_aabbs], axis=0)
    return 1e-7 * float(np.linalg.norm(hi - lo))


# ---------------------------------------------------------------------------
# containment


def _ray_directions() -> np.ndarray:
    rng = np.random.default_rng(20240611)
    d = rng.normal(size=(16, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


_RAYS = _ray_directions()


def _ray_parity(tri: np.ndarray, q: np.ndarray, d: np.ndarray, scale: float):
    """Crossing parity of rays ``q + t d`` against ``tri``; flags grazing hits."""
    v0 = tri[:, 0]
    e1 = tri[:, 1] - v0
    e2 = tri[:, 2] - v0
    pvec = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > 1e-12 * np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    # scalar triple products reduce to matrix products for a fixed ray direction
    uvec = pvec * inv[:, None]
    vvec = np.cross(e1, d) * inv[:, None]
    tvec = np.cross(e1, e2) * inv[:, None]
    u = q @ uvec.T - np.einsum("ij,ij->i", v0, uvec)
    v = q @ vvec.T - np.einsum("ij,ij->i", v0, vvec)
    t = q @ tvec.T - np.einsum("ij,ij->i", v0, tvec)
    w = 1.0 - u - v
    tol = _BARY_TOL
    near = ok & (t > -tol * scale) & (u > -tol) & (v > -tol) & (w > -tol)
    grazing = near & ((np.abs(t) <= tol * scale) | (u < tol) | (v < tol) | (w < tol))
    hit = ok & (t > 0) & (u >= 0) & (v >= 0) & (w >= 0)
    return (hit.sum(axis=1) % 2 == 1), grazing.any(axis=1)


def winding_numbers(tri: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Generalised winding number of a closed triangle surface about ``q``."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    a = tri[None, :, 0] - q[:, None]
    b = tri[None, :, 1] - q[:, None]
    c = tri[None, :, 2] - q[:, None]
    la, lb, lc = (np.linalg.norm(x, axis=2) for x in (a, b, c))
    num = np.einsum("qti,qti->qt", a, np.cross(b, c))
    den = (
        la * lb * lc
        + np.einsum("qti,qti->qt", a, b) * lc
        + np.einsum("qti,qti->qt", a, c) * lb
        + np.einsum("qti,qti->qt", b, c) * la
    )
    return (2.0 * np.arctan2(num, den)).sum(axis=1) / (4.0 * np.pi)


def points_inside(solid: Solid, points, chunk: int = 4096) -> np.ndarray:
    """Vectorised ray-parity containment of many world points in ``solid``."""
    return _points_in_triangles(solid.tri, solid.aabb, points, chunk)


def _points_in_triangles(tri, aabb, points, chunk: int = 4096) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    out = np.zeros(len(pts), dtype=bool)
    box = np.all((pts >= aabb[0]) & (pts <= aabb[1]), axis=1)
    idx = np.flatnonzero(box)
    if len(idx) == 0:
        return out
    scale = float(np.linalg.norm(aabb[1] - aabb[0]))
    # keep the (points x triangles) working set bounded
    step = max(1, min(chunk, 2_000_000 // max(1, len(tri))))
    for s in range(0, len(idx), step):
        sel = idx[s : s + step]
        q = pts[sel]
        result = np.zeros(len(sel), dtype=bool)
        pending = np.arange(len(sel))
        for d in _RAYS:
            inside, grazing = _ray_parity(tri, q[pending], d, scale)
            result[pending[~grazing]] = inside[~grazing]
            pending = pending[grazing]
            if len(pending) == 0:
                break
        if len(pending):
            result[pending] = winding_numbers(tri, q[pending]) > 0.5
        out[sel] = result
    return out


def point_inside(m: TriMesh, p: Pose, q) -> bool:
    return bool(points_inside(_posed(m, p, 0.0), np.asarray(q, dtype=float)[None])[0])


# ---------------------------------------------------------------------------
# collision and proximity


def _candidate_pairs(sa: Solid, sb: Solid, offset, pad, inset: tuple[bool, bool], brute: bool):
    ta = sa.inset_tri if inset[0] else sa.tri
    tb = sb.inset_tri if inset[1] else sb.tri
    if brute:
        ia, ib = np.meshgrid(np.arange(len(ta)), np.arange(len(tb)), indexing="ij")
        return ia.ravel(), ib.ravel(), ta, tb
    ba = sa.inset_bvh if inset[0] else sa.bvh
    bb = sb.inset_bvh if inset[1] else sb.bvh
    ia, ib = ba.pairs(bb, offset, pad)
    return ia, ib, ta, tb


def _aabbs_overlap(sa: Solid, sb: Solid, offset, pad: float = 0.0) -> bool:
    lo = sa.aabb[0] + offset
    hi = sa.aabb[1] + offset
    return bool(np.all(lo <= sb.aabb[1] + pad) and np.all(sb.aabb[0] <= hi + pad))


def _surfaces_cross(sa, sb, offset, inset, brute) -> bool:
    ia, ib, ta, tb = _candidate_pairs(sa, sb, offset, 0.0, inset, brute)
    if len(ia) == 0:
        return False
    depth = triangles_overlap_depth(ta[ia] + offset, tb[ib])
    thresh = 1e-3 * max(sa.margin, sb.margin, 1e-12)
    return bool(np.any(depth > thresh))


def solids_intersect(sa: Solid, sb: Solid, offset=None, brute: bool = False) -> bool:
    """Interpenetration test between two world solids.

    ``offset`` translates ``sa``.  Contacts shallower than the solids'
    margin are not collisions.  Symmetric in its arguments.
    """
    off = np.zeros(3) if offset is None else np.asarray(offset, dtype=float)
    if not _aabbs_overlap(sa, sb, off):
        return False
    if _surfaces_cross(sa, sb, off, (True, False), brute) or _surfaces_cross(sa, sb, off, (False, True), brute):
        return True
    # no surface crossing: either disjoint or nested
    if np.any(points_inside(sb, sa.inset_component_vertices + off)):
        return True
    return bool(np.any(_points_in_triangles(sa.tri + off, sa.aabb + off, sb.inset_component_vertices)))


def meshes_intersect(a: TriMesh, pa: Pose, b: TriMesh, pb: Pose, margin: float | None = None) -> bool:
    sa0, sb0 = _posed(a, pa, 0.0), _posed(b, pb, 0.0)
    if margin is None:
        margin = default_margin(sa0, sb0)
    return solids_intersect(_posed(a, pa, margin), _posed(b, pb, margin))


def solid_proximity_pairs(sa: Solid, sb: Solid, tol: float, brute: bool = False) -> list[tuple[int, int]]:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not _aabbs_overlap(sa, sb, np.zeros(3), tol):
        return []
    ia, ib, ta, tb = _candidate_pairs(sa, sb, np.zeros(3), tol, (False, False), brute)
    if len(ia) == 0:
        return []
    d = triangle_distances(ta[ia], tb[ib])
    keep = d <= tol
    return sorted(zip(ia[keep].tolist(), ib[keep].tolist()))


def proximity_pairs(a: TriMesh, pa: Pose, b: TriMesh, pb: Pose, tol: float) -> list[tuple[int, int]]:
    return solid_proximity_pairs(_posed(a, pa, 0.0), _posed(b, pb, 0.0), tol)
