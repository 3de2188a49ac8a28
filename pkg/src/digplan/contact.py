"""Liaison graph, contact normals and translational freedom cones."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import networkx as nx
import numpy as np

from .mesh import GeometryError, Pose, Solid, solid_proximity_pairs, solids_intersect

CLUSTER_DEG = 5.0
OPPOSING_DOT = -0.9
EPS_ANG = 1e-6
N_DIR = 2048


class InterpenetrationError(GeometryError):
    """Two parts overlap in volume instead of touching."""


class LockedConeError(ValueError):
    """A removal direction was requested from an empty freedom cone."""


# ---------------------------------------------------------------------------
# sphere sampling


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` quasi-uniform unit vectors on the spherical Fibonacci lattice."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * np.arange(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _unit_rows(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1, 3)
    n = np.linalg.norm(v, axis=1)
    keep = n > 1e-9
    return v[keep] / n[keep, None]


def cluster_normals(normals, weights=None, tol_deg: float = CLUSTER_DEG) -> np.ndarray:
    """Greedy weighted clustering of unit vectors within ``tol_deg``.

    Vectors are visited in decreasing weight (then lexicographic) order and
    join the first cluster whose running weighted mean is within the
    tolerance.  Returns one unit representative per cluster.
    """
    n = _unit_rows(normals) if len(normals) else np.zeros((0, 3))
    if len(n) == 0:
        return np.zeros((0, 3))
    w = np.ones(len(n)) if weights is None else np.asarray(weights, dtype=float)[: len(n)]
    w = np.where(w > 0, w, 1e-12)
    order = np.lexsort((-n[:, 2], -n[:, 1], -n[:, 0], -np.round(w, 12)))
    cos_tol = np.cos(np.radians(tol_deg))
    sums: list[np.ndarray] = []
    for k in order:
        for c, s in enumerate(sums):
            if np.dot(s, n[k]) >= cos_tol * np.linalg.norm(s):
                sums[c] = s + w[k] * n[k]
                break
        else:
            sums.append(w[k] * n[k])
    return _unit_rows(np.array(sums))


# ---------------------------------------------------------------------------
# liaisons


@dataclass(frozen=True, eq=False)
class Liaison:
    """Contact between parts ``a < b``.

    ``normals`` point from ``a`` into ``b``; ``normal_areas`` holds the
    contact area carried by each normal.
    """

    a: int
    b: int
    contact_area: float
    normals: np.ndarray
    normal_areas: np.ndarray

    def normals_into(self, moving: int) -> np.ndarray:
        """Contact normals pointing from the other part into ``moving``."""
        return self.normals if moving == self.b else -self.normals

    def rotated(self, pose: Pose) -> "Liaison":
        return Liaison(self.a, self.b, self.contact_area, pose.rotate(self.normals), self.normal_areas)


class LiaisonGraph:
    """Undirected contact graph over part ids; edges carry a :class:`Liaison`."""

    def __init__(self, ids: Iterable[int], liaisons: Iterable[Liaison] = ()):
        self.graph = nx.Graph()
        self.graph.add_nodes_from(sorted(ids))
        for li in liaisons:
            if li.a == li.b:
                raise ValueError("self-loop liaison")
            self.graph.add_edge(li.a, li.b, liaison=li)

    @property
    def ids(self) -> list[int]:
        return sorted(self.graph.nodes)

    def edges(self) -> list[tuple[int, int]]:
        return sorted(tuple(sorted(e)) for e in self.graph.edges)

    def liaison(self, i: int, j: int) -> Liaison | None:
        d = self.graph.get_edge_data(i, j)
        return None if d is None else d["liaison"]

    def neighbors(self, i: int) -> list[int]:
        return sorted(self.graph.neighbors(i))

    def degree(self, i: int) -> int:
        return self.graph.degree(i)

    def contact_area(self, p: int, others: Iterable[int]) -> float:
        """Summed contact area between part ``p`` and the set ``others``."""
        total = 0.0
        for q in others:
            li = self.liaison(p, q)
            if li is not None:
                total += li.contact_area
        return total

    def is_connected(self, ids: Iterable[int]) -> bool:
        ids = list(ids)
        if not ids:
            return False
        return nx.is_connected(self.graph.subgraph(ids))

    def components(self, ids: Iterable[int]) -> list[list[int]]:
        sub = self.graph.subgraph(list(ids))
        comps = [sorted(c) for c in nx.connected_components(sub)]
        return sorted(comps)

    def subgraph(self, ids: Iterable[int]) -> "LiaisonGraph":
        ids = set(ids)
        kept = [d["liaison"] for a, b, d in self.graph.edges(data=True) if a in ids and b in ids]
        return LiaisonGraph(ids, kept)

    def rotated(self, pose: Pose) -> "LiaisonGraph":
        return LiaisonGraph(self.ids, [d["liaison"].rotated(pose) for _, _, d in self.graph.edges(data=True)])


def _clip_polygon(subject: list[np.ndarray], clip: np.ndarray) -> list[np.ndarray]:
    """Sutherland-Hodgman clip of a 2D polygon by a convex CCW polygon."""
    out = subject
    for k in range(len(clip)):
        if not out:
            break
        a, b = clip[k], clip[(k + 1) % len(clip)]
        edge = b - a

        def side(p):
            return edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0])

        inp, out = out, []
        for i in range(len(inp)):
            p, q = inp[i], inp[(i + 1) % len(inp)]
            sp, sq = side(p), side(q)
            if sp >= 0:
                out.append(p)
            if (sp >= 0) != (sq >= 0):
                t = sp / (sp - sq)
                out.append(p + t * (q - p))
    return out


def _polygon_area(poly: list[np.ndarray]) -> float:
    if len(poly) < 3:
        return 0.0
    p = np.array(poly)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def coplanar_overlap_area(ta: np.ndarray, na: np.ndarray, tb: np.ndarray) -> float:
    """Area shared by triangle ``tb`` and triangle ``ta`` projected on ``ta``'s plane."""
    u = ta[1] - ta[0]
    u = u / np.linalg.norm(u)
    v = np.cross(na, u)
    pa = (ta - ta[0]) @ np.column_stack([u, v])
    pb = (tb - ta[0]) @ np.column_stack([u, v])
    if _signed_area(pb) < 0:
        pb = pb[::-1]
    if _signed_area(pa) < 0:
        pa = pa[::-1]
    return _polygon_area(_clip_polygon(list(pb), pa))


def _signed_area(p: np.ndarray) -> float:
    return 0.5 * float(np.dot(p[:, 0], np.roll(p[:, 1], -1)) - np.dot(p[:, 1], np.roll(p[:, 0], -1)))


def face_contacts(sa: Solid, sb: Solid, tol: float, pairs=None) -> tuple[float, np.ndarray, np.ndarray]:
    """Contact area and clustered normals (pointing from ``sa`` into ``sb``).

    Only opposing (``n_a . n_b <= -0.9``) triangle pairs lying within
    ``tol`` of each other's planes contribute; the area is their exact
    planar overlap.
    """
    if pairs is None:
        pairs = solid_proximity_pairs(sa, sb, tol)
    normals, areas = [], []
    total = 0.0
    for ia, ib in pairs:
        na, nb = sa.normals[ia], sb.normals[ib]
        if np.dot(na, nb) > OPPOSING_DOT:
            continue
        ta, tb = sa.tri[ia], sb.tri[ib]
        if np.max(np.abs((tb - ta[0]) @ na)) > tol or np.max(np.abs((ta - tb[0]) @ nb)) > tol:
            continue
        area = coplanar_overlap_area(ta, na, tb)
        if area <= 0.0:
            continue
        total += area
        n = na - nb
        normals.append(n / np.linalg.norm(n))
        areas.append(area)
    if not normals:
        return total, np.zeros((0, 3)), np.zeros(0)
    reps = cluster_normals(np.array(normals), np.array(areas))
    # attribute each contact's area to its nearest representative
    owner = np.argmax(np.array(normals) @ reps.T, axis=1)
    rep_area = np.bincount(owner, weights=np.array(areas), minlength=len(reps))
    return total, reps, rep_area


def detect_liaisons(assembly, tol: float | None = None) -> LiaisonGraph:
    """Liaison graph of ``assembly``: an edge per part pair within ``tol``.

    Raises :class:`InterpenetrationError` when two parts overlap by more
    than the assembly's collision margin.
    """
    tol = assembly.contact_tol if tol is None else float(tol)
    ids = assembly.ids
    explicit = assembly.liaison_pairs
    out = []
    for x, i in enumerate(ids):
        si = assembly.solid(i)
        for j in ids[x + 1 :]:
            sj = assembly.solid(j)
            if np.any(si.aabb[0] > sj.aabb[1] + tol) or np.any(sj.aabb[0] > si.aabb[1] + tol):
                if explicit is None or (i, j) not in explicit:
                    continue
            if solids_intersect(si, sj):
                raise InterpenetrationError(f"parts {i} and {j} interpenetrate")
            pairs = solid_proximity_pairs(si, sj, tol)
            listed = explicit is None or (i, j) in explicit
            if not listed or (explicit is None and not pairs):
                continue
            area, normals, weights = face_contacts(si, sj, tol, pairs)
            out.append(Liaison(i, j, area, normals, weights))
    return LiaisonGraph(ids, out)


def contact_normals(assembly, moving: Iterable[int], reference: Iterable[int]) -> np.ndarray:
    """Clustered contact normals across the boundary, pointing into ``moving``."""
    moving, reference = set(moving), set(reference)
    if not moving or not reference:
        raise ValueError("moving and reference sets must be nonempty")
    if moving & reference:
        raise ValueError("moving and reference sets overlap")
    g = assembly.liaisons
    normals, weights = [], []
    for m in sorted(moving):
        for r in g.neighbors(m):
            if r in reference:
                li = g.liaison(m, r)
                normals.append(li.normals_into(m))
                weights.append(li.normal_areas)
    if not normals:
        return np.zeros((0, 3))
    return cluster_normals(np.vstack(normals), np.concatenate(weights))


# ---------------------------------------------------------------------------
# freedom cones


def _structural_directions(normals: np.ndarray) -> np.ndarray:
    """Directions on which degenerate (zero-measure) cones concentrate."""
    axes = np.eye(3)
    parts = [axes, -axes]
    if len(normals):
        parts.append(normals)
        parts.append(normals.sum(axis=0)[None])
        k = len(normals)
        ia, ib = np.triu_indices(k, 1)
        if len(ia):
            c = np.cross(normals[ia], normals[ib])
            parts += [c, -c]
        c = np.cross(np.repeat(normals, 3, axis=0), np.tile(axes, (k, 1)))
        parts += [c, -c]
    d = _unit_rows(np.vstack(parts))
    return np.unique(np.round(d, 12), axis=0)


@dataclass(frozen=True, eq=False)
class FreedomCone:
    """Feasible translations ``{d : d . n_k >= -eps for all k}``."""

    normals: np.ndarray
    eps: float = EPS_ANG
    n_dir: int = N_DIR

    def __post_init__(self):
        n = np.asarray(self.normals, dtype=float).reshape(-1, 3)
        if len(n) and not np.allclose(np.linalg.norm(n, axis=1), 1.0, atol=1e-9):
            raise ValueError("constraint normals must be unit vectors")
        object.__setattr__(self, "normals", n)

    def scores(self, dirs) -> np.ndarray:
        """Interiorness ``min_k d . n_k`` (1 for an unconstrained cone)."""
        dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
        if len(self.normals) == 0:
            return np.ones(len(dirs))
        return (dirs @ self.normals.T).min(axis=1)

    def contains(self, d) -> bool:
        return bool(self.scores(d)[0] >= -self.eps)

    @cached_property
    def _samples(self) -> tuple[np.ndarray, np.ndarray]:
        fib = fibonacci_sphere(self.n_dir)
        return fib, self.scores(fib)

    @cached_property
    def _structural(self) -> tuple[np.ndarray, np.ndarray]:
        s = _structural_directions(self.normals)
        return s, self.scores(s)

    @cached_property
    def locked(self) -> bool:
        fib, fs = self._samples
        st, ss = self._structural
        return not (np.any(fs >= -self.eps) or np.any(ss >= -self.eps))

    @cached_property
    def has_interior(self) -> bool:
        return bool(max(self._samples[1].max(), self._structural[1].max()) > self.eps)

    @cached_property
    def kind(self) -> str:
        """One of ``free``, ``cone``, ``planar``, ``linear`` or ``locked``."""
        if len(self.normals) == 0:
            return "free"
        if self.locked:
            return "locked"
        if self.has_interior:
            return "cone"
        d = self.feasible_directions()
        sv = np.linalg.svd(d, compute_uv=False)
        return "planar" if np.sum(sv > 1e-6 * sv[0]) >= 2 else "linear"

    @property
    def dof_class(self) -> int:
        return {"free": 3, "cone": 2, "planar": 1, "linear": 1, "locked": 0}[self.kind]

    def feasible_directions(self) -> np.ndarray:
        fib, fs = self._samples
        st, ss = self._structural
        return np.vstack([fib[fs >= -self.eps], st[ss >= -self.eps]])

    @property
    def solid_angle(self) -> float:
        """Sampled solid angle in steradians (0 for cones without interior)."""
        fib, fs = self._samples
        return 4.0 * np.pi * float(np.mean(fs >= -self.eps)) if self.has_interior else 0.0

    def rotated(self, pose: Pose) -> "FreedomCone":
        return FreedomCone(pose.rotate(self.normals), self.eps, self.n_dir)


def freedom_cone(assembly, moving, reference, eps: float = EPS_ANG, n_dir: int = N_DIR) -> FreedomCone:
    """Translational freedom of ``moving`` against ``reference``."""
    return FreedomCone(contact_normals(assembly, moving, reference), eps, n_dir)


def is_locked(c: FreedomCone) -> bool:
    return c.locked


def representative_directions(c: FreedomCone, k: int = 32) -> np.ndarray:
    """Up to ``k`` well-spread feasible directions, most interior first.

    The most interior sample and the feasible structural directions (axes,
    normals and their cross products) are taken first; the rest are filled
    by farthest-point selection over the feasible samples.
    """
    if c.locked:
        raise LockedConeError("cone is locked")
    fib, fs = c._samples
    st, ss = c._structural
    cand = np.vstack([st[ss >= -c.eps], fib[fs >= -c.eps]])
    score = c.scores(cand)
    n_struct = int(np.sum(ss >= -c.eps))
    # prefer upward directions among equally interior ones
    key = np.lexsort((-cand[:, 0], -cand[:, 1], -cand[:, 2], -np.round(score, 9)))
    chosen = [int(key[0])]
    for idx in np.lexsort((-cand[:n_struct, 2], -np.round(score[:n_struct], 9))):
        if len(chosen) >= k:
            break
        if np.max(cand[chosen] @ cand[idx]) < 1.0 - 1e-9:
            chosen.append(int(idx))
    if len(chosen) < k:
        dist = 1.0 - (cand @ cand[chosen].T).max(axis=1)
        while len(chosen) < k:
            nxt = int(np.argmax(dist))
            if dist[nxt] <= 1e-9:
                break
            chosen.append(nxt)
            dist = np.minimum(dist, 1.0 - cand @ cand[nxt])
    chosen = np.array(chosen)
    order = np.lexsort((-cand[chosen, 0], -cand[chosen, 1], -cand[chosen, 2], -np.round(score[chosen], 9)))
    return cand[chosen[order]]
