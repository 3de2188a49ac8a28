"""Simulated removal: straight-line sweeps against the rest of the
assembly and the floor, reorientation when the floor is in the way, and
support checks for what stays behind."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .contact import LockedConeError, freedom_cone, representative_directions
from .mesh import GeometryError, rotation_between, solids_intersect

FLAT_DEG = 5.0


class UnstablePose(GeometryError):
    """No face can rest flat on the floor in the requested orientation."""


@dataclass
class SweepResult:
    hits_reference: bool
    hits_floor: bool
    step: float
    dist: float
    blocker: int | None = None

    @property
    def collides(self) -> bool:
        return self.hits_reference or self.hits_floor


@dataclass
class RemovalAttempt:
    moving: frozenset
    direction: np.ndarray
    step: float
    traveled: float
    outcome: str
    tried: list[tuple[tuple[float, float, float], str]] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.outcome == "success"


def _unit(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    return d / np.linalg.norm(d)


def default_step(state, moving) -> float:
    return 0.25 * float(np.ptp(state.bbox_of(moving), axis=0).min())


def clearance_distance(box_m: np.ndarray, box_r: np.ndarray, d: np.ndarray) -> float:
    """Travel along ``d`` after which box ``box_m`` is clear of ``box_r``."""
    best = math.inf
    for a in range(3):
        if d[a] > 1e-12:
            best = min(best, (box_r[1, a] - box_m[0, a]) / d[a])
        elif d[a] < -1e-12:
            best = min(best, (box_r[0, a] - box_m[1, a]) / d[a])
    return max(0.0, best)


def _k_range(box_m, box_r, d, step, K, pad) -> range:
    """Steps ``k`` in 1..K at which the translated box overlaps ``box_r``."""
    lo_t, hi_t = -math.inf, math.inf
    for a in range(3):
        lo_gap = box_r[0, a] - pad - box_m[1, a]
        hi_gap = box_r[1, a] + pad - box_m[0, a]
        if abs(d[a]) < 1e-15:
            if lo_gap > 0 or hi_gap < 0:
                return range(0)
            continue
        t0, t1 = lo_gap / d[a], hi_gap / d[a]
        if t0 > t1:
            t0, t1 = t1, t0
        lo_t, hi_t = max(lo_t, t0), min(hi_t, t1)
    if lo_t > hi_t:
        return range(0)
    k0 = max(1, math.floor(lo_t / step))
    k1 = min(K, math.ceil(hi_t / step))
    return range(k0, k1 + 1)


def sweep(state, moving: Iterable[int], reference: Iterable[int], direction, step: float | None = None, dist: float | None = None) -> SweepResult:
    """Translate ``moving`` along ``direction`` in increments of ``step`` up
    to ``dist`` and report collisions with ``reference`` or the floor."""
    moving = sorted(moving)
    reference = sorted(reference)
    d = _unit(direction)
    step = default_step(state, moving) if step is None else float(step)
    if step <= 0:
        raise ValueError("step must be positive")
    box_m = state.bbox_of(moving)
    if dist is None:
        sep = clearance_distance(box_m, state.bbox_of(reference), d) if reference else 0.0
        dist = sep + float(np.linalg.norm(box_m[1] - box_m[0]))
    K = max(1, math.ceil(dist / step - 1e-9))
    offsets = [d * min(k * step, dist) for k in range(K + 1)]
    # floor: the lowest point may not sink below the floor plane
    low = state.min_z(moving)
    floor_hit = any(low + off[2] < state.floor - state.contact_tol for off in offsets[1:])
    pad = state.margin
    for j in reference:
        sj = state.solid(j)
        for i in moving:
            si = state.solid(i)
            for k in _k_range(si.aabb, sj.aabb, d, step, K, pad):
                if solids_intersect(si, sj, offsets[k]):
                    return SweepResult(True, floor_hit, step, dist, j)
    return SweepResult(False, floor_hit, step, dist)


def sweep_collides(state, moving, reference, direction, step=None, dist=None) -> bool:
    return sweep(state, moving, reference, direction, step, dist).collides


def validate_removal(state, moving: Iterable[int], k_dirs: int = 32, cone=None) -> RemovalAttempt:
    """Try the most interior free directions of ``moving`` in turn.

    Outcome ``success`` for the first clean sweep; ``floor_blocked`` when
    some direction clears every part but runs into the floor; otherwise
    ``collision``.
    """
    moving = frozenset(moving)
    reference = frozenset(state.ids) - moving
    step = default_step(state, moving)
    if not reference:
        return RemovalAttempt(moving, np.array([0.0, 0.0, 1.0]), step, 0.0, "success")
    cone = freedom_cone(state, moving, reference) if cone is None else cone
    if cone.locked:
        raise LockedConeError(f"set {sorted(moving)} is locked")
    tried = []
    floor_dir = None
    for d in representative_directions(cone, k_dirs):
        r = sweep(state, moving, reference, d, step)
        tag = "success" if not r.collides else ("floor" if not r.hits_reference else "collision")
        tried.append((tuple(float(x) for x in d), tag))
        if tag == "success":
            return RemovalAttempt(moving, d, step, r.dist, "success", tried)
        if tag == "floor" and floor_dir is None:
            floor_dir = d
    if floor_dir is not None:
        return RemovalAttempt(moving, floor_dir, step, 0.0, "floor_blocked", tried)
    first = np.array(tried[0][0]) if tried else np.array([0.0, 0.0, 1.0])
    return RemovalAttempt(moving, first, step, 0.0, "collision", tried)


def has_flat_support(state, tol_deg: float = FLAT_DEG) -> bool:
    """Some face points down within ``tol_deg`` and touches the floor."""
    cos_t = math.cos(math.radians(tol_deg))
    for i in state.ids:
        s = state.solid(i)
        down = -s.normals[:, 2] >= cos_t
        if np.any(down & (s.tri[:, :, 2].min(axis=1) <= state.floor + state.contact_tol)):
            return True
    return False


def reorient_for_removal(state, attempt: RemovalAttempt):
    """Rotate ``state`` so the blocked direction points up, then re-seat it."""
    if attempt.outcome != "floor_blocked":
        raise ValueError("reorientation applies to floor-blocked attempts only")
    turned = state.transformed(rotation_between(attempt.direction, (0.0, 0.0, 1.0))).seated()
    if not has_flat_support(turned):
        raise UnstablePose("no face rests flat on the floor after reorientation")
    return turned


def check_stability(state, remaining: Iterable[int]) -> bool:
    """Remaining parts are liaison-connected and at least one touches the floor."""
    remaining = sorted(remaining)
    if not remaining:
        return True
    if not state.liaisons.is_connected(remaining):
        return False
    return any(state.touches_floor(i) for i in remaining)
