"""Discrete-time multi-robot execution of a disassembly tree in assembly
order: makespan, speedup and an exhaustive optimal reference."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, combinations_with_replacement

from .planner import DisassemblyTree

MAX_EXACT_JOBS = 12


class TooLarge(ValueError):
    """The exhaustive scheduler only handles small job sets."""


@dataclass(frozen=True)
class Job:
    node: int
    duration: int
    predecessors: tuple[int, ...]
    depth: int


@dataclass
class Schedule:
    robots: int
    steps: list[dict[int, tuple[int, int]]] = field(default_factory=list)
    start: dict[int, int] = field(default_factory=dict)
    completion: dict[int, int] = field(default_factory=dict)
    robot_of: dict[int, int] = field(default_factory=dict)

    def rows(self) -> list[tuple[int, int, int, int]]:
        """``(timestep, robot, node, action index)`` for every busy slot."""
        return [(t, r, j, a) for t, step in enumerate(self.steps) for r, (j, a) in sorted(step.items())]


def jobs_of(tree: DisassemblyTree) -> dict[int, Job]:
    """One job per internal node; joining ``c`` children takes ``c - 1`` actions."""
    out = {}
    for n in tree.internal():
        preds = tuple(c for c in n.children if not tree.nodes[c].is_leaf)
        out[n.id] = Job(n.id, len(n.children) - 1, preds, tree.depth(n.id))
    return out


def simulate(tree: DisassemblyTree, robots: int) -> Schedule:
    """Greedy list scheduling: deeper jobs first, then lower node id.

    Each step first hands available jobs to idle robots (in robot order),
    then every busy robot performs one unit action.  Jobs never move
    between robots.
    """
    if robots < 1:
        raise ValueError("need at least one robot")
    jobs = jobs_of(tree)
    sched = Schedule(robots)
    if not jobs:
        return sched
    running: dict[int, list[int]] = {}
    waiting = set(jobs)
    t = 0
    while tree.root not in sched.completion:
        ready = sorted(
            (j for j in waiting if all(p in sched.completion for p in jobs[j].predecessors)),
            key=lambda j: (-jobs[j].depth, j),
        )
        for r in range(robots):
            if r not in running and ready:
                j = ready.pop(0)
                waiting.discard(j)
                running[r] = [j, 0]
                sched.start[j] = t
                sched.robot_of[j] = r
        step = {}
        for r in sorted(running):
            j, done = running[r]
            step[r] = (j, done)
            running[r][1] += 1
            if running[r][1] == jobs[j].duration:
                sched.completion[j] = t + 1
                del running[r]
        sched.steps.append(step)
        t += 1
        if not step and not ready:
            raise RuntimeError("scheduler stalled")
    return sched


def makespan(s: Schedule) -> int:
    return max(s.completion.values(), default=0)


def speedup(tree: DisassemblyTree, k: int) -> float:
    serial = makespan(simulate(tree, 1))
    par = makespan(simulate(tree, k))
    return 1.0 if par == 0 else round(serial / par, 2)


@dataclass(frozen=True)
class Metrics:
    robots: int
    makespan: int
    speedup: float


def metrics(tree: DisassemblyTree, robots_list=(1, 2, 3)) -> list[Metrics]:
    serial = makespan(simulate(tree, 1))
    out = []
    for k in robots_list:
        m = makespan(simulate(tree, k))
        out.append(Metrics(k, m, 1.0 if m == 0 else round(serial / m, 2)))
    return out


def optimal_makespan(tree: DisassemblyTree, k: int) -> int:
    """Exact minimum makespan over non-preemptive schedules (may idle)."""
    jobs = jobs_of(tree)
    if len(jobs) > MAX_EXACT_JOBS:
        raise TooLarge(f"{len(jobs)} jobs exceed the exhaustive bound of {MAX_EXACT_JOBS}")
    if not jobs:
        return 0
    ids = sorted(jobs)

    @lru_cache(maxsize=None)
    def best(done: frozenset, running: tuple) -> int:
        if len(done) == len(ids):
            return 0
        busy = {j for j, _ in running}
        ready = [j for j in ids if j not in done and j not in busy and all(p in done for p in jobs[j].predecessors)]
        idle = k - len(running)
        result = None
        for size in range(min(idle, len(ready)), -1, -1):
            for pick in combinations(ready, size):
                cur = list(running) + [(j, jobs[j].duration) for j in pick]
                if not cur:
                    continue
                fin = frozenset(j for j, rem in cur if rem == 1)
                nxt = tuple(sorted((j, rem - 1) for j, rem in cur if rem > 1))
                val = 1 + best(done | fin, nxt)
                if result is None or val < result:
                    result = val
        return result

    return best(frozenset(), ())


def lower_bound(tree: DisassemblyTree, k: int) -> int:
    """``max(ceil((n - 1) / k), longest chain of job durations)``."""
    jobs = jobs_of(tree)
    total = sum(j.duration for j in jobs.values())

    def chain(j):
        return jobs[j].duration + max((chain(p) for p in jobs[j].predecessors), default=0)

    crit = chain(tree.root) if jobs else 0
    return max(-(-total // k), crit)


# ---------------------------------------------------------------------------
# topology search


@lru_cache(maxsize=None)
def _shapes(n: int) -> tuple:
    """Unordered series-reduced rooted tree shapes with ``n`` leaves.

    A shape is ``0`` for a leaf or a sorted tuple of child shapes.
    """
    if n == 1:
        return (0,)
    out = []
    for parts in _partitions(n, n - 1):
        if len(parts) < 2:
            continue
        for combo in _multiset_product(parts):
            out.append(tuple(sorted(combo, key=_shape_key)))
    return tuple(sorted(set(out), key=_shape_key))


def _shape_key(s):
    return (0,) if s == 0 else (1, len(s), tuple(_shape_key(c) for c in s))


def _partitions(n: int, largest: int):
    if n == 0:
        yield ()
        return
    for p in range(min(n, largest), 0, -1):
        for rest in _partitions(n - p, p):
            yield (p,) + rest


def _multiset_product(parts):
    """Multisets of shapes: one shape per part size, non-decreasing within
    runs of equal sizes."""
    if not parts:
        yield ()
        return
    size = parts[0]
    run = 1
    while run < len(parts) and parts[run] == size:
        run += 1
    options = _shapes(size)
    for idx in combinations_with_replacement(range(len(options)), run):
        head = tuple(options[i] for i in idx)
        for tail in _multiset_product(parts[run:]):
            yield head + tail


def shape_to_nested(shape, counter=None):
    counter = counter if counter is not None else [0]
    if shape == 0:
        counter[0] += 1
        return counter[0] - 1
    return [shape_to_nested(c, counter) for c in shape]


def series_reduced_trees(n: int):
    """Every tree shape with ``n`` leaves as a :class:`DisassemblyTree`."""
    for s in _shapes(n):
        yield DisassemblyTree.from_nested(shape_to_nested(s))


def find_topology(n_leaves: int, targets: dict[int, int]):
    """First tree whose greedy makespans match ``targets`` (robots -> makespan)."""
    for tree in series_reduced_trees(n_leaves):
        if all(makespan(simulate(tree, k)) == m for k, m in targets.items()):
            return tree
    return None
