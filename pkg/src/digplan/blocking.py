"""Blocking fractions from concentric shells, the interference matrix and
total blockage."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .contact import FreedomCone, LockedConeError, fibonacci_sphere, freedom_cone
from .mesh import Solid, points_inside

MIN_SAMPLES = 256


@dataclass(frozen=True)
class BlockingConfig:
    shells: int = 24
    samples: int = 1024
    eps: float = 1e-6
    n_dir: int = 2048
    jobs: int = 1


@dataclass(frozen=True, eq=False)
class ShellSet:
    """Concentric spherical patches around a part centroid.

    ``directions`` are the feasible unit directions shared by every shell
    and ``solid_angle`` the sampled measure of the cone they cover.
    """

    center: np.ndarray
    radii: np.ndarray
    directions: np.ndarray
    solid_angle: float
    locked: bool = False

    @property
    def m(self) -> int:
        return len(self.radii)

    def points(self, s: int | None = None) -> np.ndarray:
        if s is not None:
            return self.center + self.radii[s] * self.directions
        return self.center + self.radii[:, None, None] * self.directions[None]

    def patch_area(self, s: int) -> float:
        return float(self.radii[s] ** 2 * self.solid_angle)


def _cone_directions(cone: FreedomCone, samples: int) -> tuple[np.ndarray, float]:
    if cone.has_interior or not len(cone.normals):
        n = samples
        while True:
            fib = fibonacci_sphere(n)
            ok = cone.scores(fib) >= -cone.eps
            if ok.sum() >= MIN_SAMPLES or n >= 1 << 18:
                return fib[ok], 4.0 * math.pi * float(ok.mean())
            n *= 2
    feas = cone.feasible_directions()
    if cone.kind == "planar":
        _, _, vt = np.linalg.svd(feas)
        t = 2.0 * np.pi * (np.arange(samples) + 0.5) / samples
        ring = np.outer(np.cos(t), vt[0]) + np.outer(np.sin(t), vt[1])
        # keep the exact structural directions; the ring supplies the spread
        d = np.vstack([feas, ring[cone.scores(ring) >= -cone.eps]])
    else:
        d = feas
    return np.unique(np.round(d, 12), axis=0), 0.0


def shell_radii(center, part_radius: float, reach, min_extent: float, m: int = 24) -> np.ndarray:
    """``m`` radii from ``0.01 r_max`` to ``r_max``, adding shells until the
    spacing is at most half of ``min_extent``.

    ``r_max`` is the distance from ``center`` to the farthest of the
    ``reach`` points (the assembly's vertices) plus ``part_radius``.
    """
    reach = np.asarray(reach, dtype=float).reshape(-1, 3)
    r_max = float(np.linalg.norm(reach - center, axis=1).max()) + part_radius
    r0 = 0.01 * r_max
    if min_extent > 0:
        need = math.ceil((r_max - r0) / (0.5 * min_extent) - 1e-9) + 1
        m = max(m, need)
    return np.linspace(r0, r_max, m)


def construct_shells(
    solid: Solid,
    cone: FreedomCone,
    reach,
    min_extent: float,
    m: int = 24,
    samples: int = 1024,
    fallback: bool = True,
) -> ShellSet:
    """Shells for a part with centroid ``solid.centroid`` and freedom ``cone``.

    ``reach`` holds points bounding the assembly (its vertices) and
    ``min_extent`` the smallest part width, which caps the shell spacing.

    A locked cone raises :class:`LockedConeError` unless ``fallback`` is
    set, in which case full-sphere shells are built and flagged locked.
    """
    locked = cone.locked
    if locked and not fallback:
        raise LockedConeError("cannot build shells for a locked part")
    use = FreedomCone(np.zeros((0, 3)), cone.eps, cone.n_dir) if locked else cone
    dirs, omega = _cone_directions(use, samples)
    radii = shell_radii(solid.centroid, solid.radius, reach, min_extent, m)
    return ShellSet(np.asarray(solid.centroid, dtype=float), radii, dirs, omega, locked)


def shell_fractions(shells: ShellSet, other: Solid) -> np.ndarray:
    """Fraction of each shell's samples lying inside ``other``."""
    out = np.zeros(shells.m)
    lo, hi = other.aabb
    c = shells.center
    near = float(np.linalg.norm(np.clip(c, lo, hi) - c))
    far = float(np.linalg.norm(np.maximum(np.abs(lo - c), np.abs(hi - c))))
    live = np.flatnonzero((shells.radii >= near - 1e-12) & (shells.radii <= far + 1e-12))
    if len(live) == 0 or len(shells.directions) == 0:
        return out
    pts = shells.center + shells.radii[live, None, None] * shells.directions[None]
    inside = points_inside(other, pts.reshape(-1, 3)).reshape(len(live), -1)
    out[live] = inside.mean(axis=1)
    return out


def blocking_fraction(shells: ShellSet, other: Solid) -> float:
    """Largest fraction of any shell of ``shells`` covered by ``other``."""
    return float(shell_fractions(shells, other).max()) if shells.m else 0.0


# ---------------------------------------------------------------------------
# interference matrix


@dataclass(eq=False)
class DIG:
    """Blocking fractions ``w[i, j]``: part ``ids[i]`` moving, ``ids[j]`` blocking."""

    ids: tuple[int, ...]
    weights: np.ndarray
    base: int | None = None
    locked: dict[int, bool] = field(default_factory=dict)
    evaluations: int = 0

    def index(self, pid: int) -> int:
        return self.ids.index(pid)

    def w(self, i: int, j: int) -> float:
        return float(self.weights[self.index(i), self.index(j)])

    def to_rows(self) -> list[tuple[int, int, float]]:
        return [(i, j, float(self.weights[a, b])) for a, i in enumerate(self.ids) for b, j in enumerate(self.ids)]


def total_blockage(dig: DIG, i: int) -> float:
    return float(dig.weights[dig.index(i)].sum())


def subassembly_blockage(dig: DIG, S: Iterable[int]) -> float:
    """Sum of ``w[i, j]`` over ``i`` in ``S`` and ``j`` outside ``S``."""
    S = set(S)
    if dig.base is not None and dig.base in S:
        raise ValueError("subassembly may not contain the base part")
    rows = [dig.index(i) for i in sorted(S)]
    cols = [k for k, j in enumerate(dig.ids) if j not in S]
    if not rows or not cols:
        return 0.0
    return float(dig.weights[np.ix_(rows, cols)].sum())


def min_part_extent(assembly) -> float:
    """Smallest part width, measured across each part's face normals."""
    return float(min(assembly.solid(i).min_width for i in assembly.ids))


def build_dig(assembly, base: int | None, cfg: BlockingConfig | None = None) -> DIG:
    """Blocking fractions between all non-base parts of ``assembly``.

    Each moving part's shells follow its freedom cone against the base
    alone.  The base row and column are zero.  ``evaluations`` counts the
    shell-versus-part tests issued.
    """
    cfg = cfg or BlockingConfig()
    ids = assembly.ids
    n = len(ids)
    W = np.zeros((n, n))
    movers = [i for i in ids if i != base]
    locked: dict[int, bool] = {}
    if len(movers) < 2:
        for i in movers:
            locked[i] = _cone_vs_base(assembly, i, base, cfg).locked
        return DIG(ids, W, base, locked, 0)
    reach = assembly.vertices
    ext = min_part_extent(assembly)

    def row(i):
        cone = _cone_vs_base(assembly, i, base, cfg)
        shells = construct_shells(assembly.solid(i), cone, reach, ext, cfg.shells, cfg.samples)
        vals = {}
        count = 0
        for j in movers:
            if j == i:
                continue
            vals[j] = blocking_fraction(shells, assembly.solid(j))
            count += shells.m
        return i, shells.locked, vals, count

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(row, movers))
    else:
        results = [row(i) for i in movers]
    total = 0
    for i, lk, vals, count in results:
        locked[i] = lk
        total += count
        for j, v in vals.items():
            W[ids.index(i), ids.index(j)] = v
    return DIG(ids, W, base, locked, total)


def _cone_vs_base(assembly, i, base, cfg) -> FreedomCone:
    if base is None:
        return FreedomCone(np.zeros((0, 3)), cfg.eps, cfg.n_dir)
    return freedom_cone(assembly, [i], [base], cfg.eps, cfg.n_dir)
