"""Comparison partitioners: spatial clustering of part centroids, and
nucleus growth by connection strength."""
from __future__ import annotations

import math

import numpy as np

from .subassembly import SubIdConfig, fitness_scores, nucleus_cutoff


def default_k(n: int) -> int:
    return max(1, min(n - 1, round(math.sqrt(n - 1))))


def kmeans(points: np.ndarray, k: int, seed: int = 0, max_iter: int = 100) -> np.ndarray:
    """Lloyd iterations from seeded k-means++ starting points.

    Returns a cluster label per point; ties go to the lower cluster index.
    """
    pts = np.asarray(points, dtype=float)
    rng = np.random.default_rng(seed)
    picked = [int(rng.integers(len(pts)))]
    while len(picked) < k:
        d2 = np.min(np.sum((pts[:, None] - pts[picked][None]) ** 2, axis=2), axis=1)
        d2[picked] = 0.0
        if d2.sum() > 0:
            p = d2 / d2.sum()
        else:
            # every remaining point coincides with a center
            p = np.ones(len(pts))
            p[picked] = 0.0
            p /= p.sum()
        picked.append(int(rng.choice(len(pts), p=p)))
    centers = pts[picked].copy()
    labels = np.full(len(pts), -1)
    for _ in range(max_iter):
        d = np.linalg.norm(pts[:, None] - centers[None], axis=2)
        new = np.argmin(d, axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            if np.any(labels == c):
                centers[c] = pts[labels == c].mean(axis=0)
    return labels


def morato_partition(state, base: int, k: int | None = None, seed: int = 0, max_iter: int = 100) -> list[frozenset]:
    """Cluster non-base parts by centroid, then split clusters into
    liaison-connected pieces."""
    movers = [i for i in state.ids if i != base]
    if not movers:
        return []
    k = default_k(len(state)) if k is None else max(1, min(int(k), len(movers)))
    pts = np.array([state.solid(i).centroid for i in movers])
    labels = kmeans(pts, k, seed, max_iter)
    g = state.liaisons
    out = []
    for c in range(k):
        members = [m for m, lab in zip(movers, labels) if lab == c]
        if members:
            out.extend(frozenset(comp) for comp in g.components(members))
    return sorted(out, key=lambda s: sorted(s))


def belhadj_partition(state, base: int, cfg: SubIdConfig | None = None) -> list[frozenset]:
    """Grow each nucleus by neighbours bound more strongly to it than to
    the rest of the assembly (summed contact area, strict comparison)."""
    cfg = cfg or SubIdConfig()
    g = state.liaisons
    everything = frozenset(state.ids)
    nuclei = nucleus_cutoff(fitness_scores(state, base, cfg))
    taken: set[int] = set()
    out = []
    for nuc in nuclei:
        if nuc in taken:
            continue
        S = {nuc}
        changed = True
        while changed:
            changed = False
            frontier = sorted({q for p in S for q in g.neighbors(p)} - S - taken - {base})
            for p in frontier:
                inner = g.contact_area(p, S)
                outer = g.contact_area(p, everything - S - {p})
                if inner > outer:
                    S.add(p)
                    changed = True
        taken |= S
        out.append(frozenset(S))
    return out
