"""Subassembly identification by blocking reduction.

Nuclei are chosen by a fitness score, each nucleus greedily accrues
neighbours that do not increase the blockage of the growing set, and sets
whose total blockage stays under ``f_accept`` become candidates for
removal.  Everything else, including the base, forms the remainder.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .blocking import DIG, subassembly_blockage
from .contact import freedom_cone


class DegenerateState(Exception):
    """No candidate passes and no single part can move."""

    def __init__(self, msg: str, parts=()):
        super().__init__(msg)
        self.parts = tuple(parts)


@dataclass(frozen=True)
class SubIdConfig:
    f_accept: float = 0.85
    alpha: float = 1.0 / 3.0
    beta: float = 1.0 / 3.0
    gamma: float = 1.0 / 3.0

    def __post_init__(self):
        if self.f_accept < 0:
            raise ValueError("f_accept must be non-negative")
        if abs(self.alpha + self.beta + self.gamma - 1.0) > 1e-9:
            raise ValueError("fitness weights must sum to 1")


@dataclass
class CandidateSubassembly:
    parts: frozenset
    nucleus: int
    tau: float
    locked: bool
    accepted: bool = False


@dataclass
class Partition:
    base: int
    candidates: list[CandidateSubassembly]
    rejected: list[CandidateSubassembly]
    remainder: frozenset
    nuclei: list[int] = field(default_factory=list)
    scores: dict[int, float] = field(default_factory=dict)


def select_base(assembly) -> int:
    """Largest-volume part; the lowest id wins ties."""
    return min(assembly.ids, key=lambda i: (-round(assembly.volume(i), 12), i))


def fitness_scores(assembly, base: int, cfg: SubIdConfig | None = None) -> dict[int, float]:
    """Normalised weighted sum of liaison degree, surface area and volume."""
    cfg = cfg or SubIdConfig()
    g = assembly.liaisons
    others = [i for i in assembly.ids if i != base]
    feats = {
        i: (g.degree(i), assembly.parts[i].mesh.area, assembly.volume(i)) for i in others
    }
    return score_features(feats, cfg)


def score_features(feats: Mapping[int, tuple[float, float, float]], cfg: SubIdConfig) -> dict[int, float]:
    if not feats:
        return {}
    maxima = [max(f[k] for f in feats.values()) for k in range(3)]
    w = (cfg.alpha, cfg.beta, cfg.gamma)
    return {
        i: sum(w[k] * (f[k] / maxima[k] if maxima[k] > 0 else 0.0) for k in range(3))
        for i, f in feats.items()
    }


def nucleus_cutoff(scores) -> list[int]:
    """Parts scoring above the largest gap in the sorted score list.

    ``scores`` maps id to score (or is a sequence of ``(id, score)``).  The
    earliest of equally large gaps is used; ties in score go to lower ids.
    """
    items = list(scores.items()) if isinstance(scores, Mapping) else list(scores)
    ranked = sorted(items, key=lambda kv: (-kv[1], kv[0]))
    if len(ranked) <= 1:
        return [k for k, _ in ranked]
    gaps = [ranked[k][1] - ranked[k + 1][1] for k in range(len(ranked) - 1)]
    cut = max(range(len(gaps)), key=lambda k: (gaps[k], -k))
    return [k for k, _ in ranked[: cut + 1]]


def grow_subassembly(
    nucleus: int,
    dig: DIG,
    neighbors: Callable[[int], Iterable[int]],
    assigned: Iterable[int],
    is_locked: Callable[[frozenset], bool],
) -> CandidateSubassembly:
    """Greedy accrual of neighbours around ``nucleus``.

    A neighbour is taken when it frees a locked set, refused when it locks
    a free one, and otherwise taken iff the set's blockage does not rise.
    The queue is ordered by how strongly each part blocks the nucleus.
    """
    blocked = set(assigned)
    if dig.base is not None:
        blocked.add(dig.base)
    if nucleus in blocked:
        raise ValueError(f"nucleus {nucleus} is unavailable")
    S = frozenset([nucleus])
    tau = subassembly_blockage(dig, S)
    locked = is_locked(S)
    seen = {nucleus}
    heap: list[tuple[float, int]] = []

    def push(p):
        for q in neighbors(p):
            if q not in seen and q not in blocked:
                seen.add(q)
                heapq.heappush(heap, (-dig.w(nucleus, q), q))

    push(nucleus)
    while heap:
        _, p = heapq.heappop(heap)
        T = S | {p}
        t_tau = subassembly_blockage(dig, T)
        t_locked = is_locked(T)
        if locked and not t_locked:
            take = True
        elif t_locked and not locked:
            take = False
        else:
            take = t_tau <= tau + 1e-12
        if take:
            S, tau, locked = T, t_tau, t_locked
            push(p)
    return CandidateSubassembly(S, nucleus, tau, locked)


def partition(
    ids: Iterable[int],
    base: int,
    scores: Mapping[int, float],
    dig: DIG,
    neighbors: Callable[[int], Iterable[int]],
    is_locked: Callable[[frozenset], bool],
    f_accept: float = 0.85,
) -> Partition:
    """Grow every nucleus in fitness order and screen by ``f_accept``."""
    ids = frozenset(ids)
    nuclei = nucleus_cutoff(scores)
    taken: set[int] = set()
    accepted, rejected = [], []
    for nuc in nuclei:
        if nuc in taken:
            continue
        c = grow_subassembly(nuc, dig, neighbors, taken, is_locked)
        c.accepted = c.tau <= f_accept + 1e-12 and not c.locked
        (accepted if c.accepted else rejected).append(c)
        # failed candidates are merged into the remainder
        taken |= c.parts
    used = frozenset().union(*(c.parts for c in accepted)) if accepted else frozenset()
    return Partition(base, accepted, rejected, ids - used, nuclei, dict(scores))


def lock_test(assembly) -> Callable[[frozenset], bool]:
    """``S -> is S locked against every other part of assembly``."""
    cache: dict[frozenset, bool] = {}
    everything = frozenset(assembly.ids)

    def locked(S: frozenset) -> bool:
        if S not in cache:
            rest = everything - S
            cache[S] = bool(rest) and freedom_cone(assembly, S, rest).locked
        return cache[S]

    return locked


def identify_subassemblies(state, dig: DIG, cfg: SubIdConfig | None = None, base: int | None = None) -> Partition:
    """Candidate subassemblies and remainder for the assembly ``state``."""
    cfg = cfg or SubIdConfig()
    if len(state) < 2:
        raise ValueError("need at least two parts")
    base = select_base(state) if base is None else base
    scores = fitness_scores(state, base, cfg)
    locked = lock_test(state)
    result = partition(state.ids, base, scores, dig, state.liaisons.neighbors, locked, cfg.f_accept)
    if not result.candidates:
        if all(locked(frozenset([i])) for i in state.ids if i != base):
            raise DegenerateState("every part is locked", state.ids)
    return result
