"""Recursive disassembly planning into a tree of subassemblies, and the
linear assembly sequences derived from it."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .blocking import BlockingConfig, DIG, build_dig, total_blockage
from .contact import LockedConeError
from .mesh import Pose
from .subassembly import DegenerateState, SubIdConfig, identify_subassemblies, select_base
from .validation import (
    UnstablePose,
    check_stability,
    reorient_for_removal,
    sweep,
    validate_removal,
)

log = logging.getLogger(__name__)

METHODS = ("dig", "morato", "belhadj")


class PlanFailure(Exception):
    """Some intermediate state admits no valid removal."""

    def __init__(self, msg: str, parts=(), trace=None):
        super().__init__(msg)
        self.parts = tuple(sorted(parts))
        self.trace = trace or []


@dataclass(frozen=True)
class PlannerConfig:
    method: str = "dig"
    blocking: BlockingConfig = field(default_factory=BlockingConfig)
    subid: SubIdConfig = field(default_factory=SubIdConfig)
    k_dirs: int = 32
    seed: int = 0
    clusters: int | None = None
    reorient: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")


# ---------------------------------------------------------------------------
# tree


@dataclass
class TreeNode:
    """One subassembly.

    ``direction`` is the removal direction of this node from its parent's
    state (in that state's frame); ``frame`` is the pose of this node's
    parts relative to the product when it was split.
    """

    id: int
    parts: tuple[int, ...]
    children: list[int] = field(default_factory=list)
    parent: int | None = None
    role: str = "root"
    direction: tuple[float, float, float] | None = None
    frame: Pose = field(default_factory=Pose)
    reoriented: bool = False

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class JoinAction:
    node: int
    moving: tuple[int, ...]
    reference: tuple[int, ...]
    direction: tuple[float, float, float] | None


class DisassemblyTree:
    """Root holds every part, leaves hold one part each, and each internal
    node's children partition its parts (removed sets first, remainder last)."""

    def __init__(self, nodes: Iterable[TreeNode], names: dict[int, str] | None = None, trace=None):
        self.nodes: dict[int, TreeNode] = {n.id: n for n in nodes}
        roots = [n.id for n in self.nodes.values() if n.parent is None]
        if len(roots) != 1:
            raise ValueError("a tree needs exactly one root")
        self.root = roots[0]
        self.names = dict(names or {})
        self.trace = list(trace or [])

    # -- construction helpers -----------------------------------------------

    @classmethod
    def from_nested(cls, nested) -> "DisassemblyTree":
        """Build from nested lists of part ids, e.g. ``[[0, 1], 2, [3, 4]]``.

        The last child of each list is treated as the remainder.  Node ids
        are assigned breadth-first.
        """
        def parts_of(x):
            return (x,) if isinstance(x, int) else tuple(sorted(p for c in x for p in parts_of(c)))

        nodes = []
        queue = deque([(nested, None, "root")])
        while queue:
            x, parent, role = queue.popleft()
            nid = len(nodes)
            node = TreeNode(nid, parts_of(x), parent=parent, role=role)
            nodes.append(node)
            if parent is not None:
                nodes[parent].children.append(nid)
            if not isinstance(x, int):
                if len(x) < 2:
                    raise ValueError("internal nodes need at least two children")
                for k, c in enumerate(x):
                    queue.append((c, nid, "remainder" if k == len(x) - 1 else "removed"))
        return cls(nodes)

    def to_nested(self, nid: int | None = None):
        n = self.nodes[self.root if nid is None else nid]
        if n.is_leaf:
            return n.parts[0]
        return [self.to_nested(c) for c in n.children]

    # -- queries ---------------------------------------------------------------

    @property
    def parts(self) -> tuple[int, ...]:
        return self.nodes[self.root].parts

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    def leaves(self) -> list[int]:
        return sorted(n.parts[0] for n in self.nodes.values() if n.is_leaf)

    def internal(self) -> list[TreeNode]:
        return [n for n in sorted(self.nodes.values(), key=lambda n: n.id) if not n.is_leaf]

    def depth(self, nid: int) -> int:
        d = 0
        while self.nodes[nid].parent is not None:
            nid = self.nodes[nid].parent
            d += 1
        return d

    def height(self, nid: int) -> int:
        n = self.nodes[nid]
        return 0 if n.is_leaf else 1 + max(self.height(c) for c in n.children)

    def validate(self) -> None:
        """Raise ``ValueError`` when the structural invariants fail."""
        for n in self.nodes.values():
            if n.is_leaf:
                if len(n.parts) != 1:
                    raise ValueError(f"leaf {n.id} holds {len(n.parts)} parts")
                continue
            if len(n.children) < 2:
                raise ValueError(f"node {n.id} has fewer than two children")
            union = [p for c in n.children for p in self.nodes[c].parts]
            if sorted(union) != sorted(n.parts) or len(set(union)) != len(union):
                raise ValueError(f"children of node {n.id} do not partition it")
            for c in n.children:
                if self.nodes[c].parent != n.id:
                    raise ValueError(f"node {c} has the wrong parent")

    def precedence_layers(self) -> dict[int, list[tuple[int, ...]]]:
        """Per internal node, the sets removed together in its split."""
        return {
            n.id: [self.nodes[c].parts for c in n.children if self.nodes[c].role == "removed"]
            for n in self.internal()
        }

    def label(self, nid: int) -> str:
        n = self.nodes[nid]
        words = [self.names.get(p, str(p)) for p in n.parts]
        return words[0] if len(words) == 1 else "(" + " ".join(words) + ")"


def _product_direction(node: TreeNode, parent: TreeNode) -> tuple[float, float, float] | None:
    if node.direction is None:
        return None
    d = parent.frame.inverse().rotate(np.asarray(node.direction))
    return tuple(float(x) for x in d)


def linear_sequence(tree: DisassemblyTree) -> list[JoinAction]:
    """Assembly actions, deepest subtrees first; ``n - 1`` joins in total.

    Each action inserts ``moving`` onto ``reference`` along ``direction``
    (the reversed removal direction, in the product frame).
    """
    out: list[JoinAction] = []

    def visit(nid):
        n = tree.nodes[nid]
        if n.is_leaf:
            return
        for c in sorted(n.children, key=lambda c: (-tree.height(c), c)):
            visit(c)
        kids = [tree.nodes[c] for c in n.children]
        rest = [k for k in kids if k.role != "removed"]
        moved = [k for k in kids if k.role == "removed"]
        base = rest[0] if rest else moved.pop()
        ref = list(base.parts)
        for k in sorted(rest[1:] + moved, key=lambda k: k.id):
            d = _product_direction(k, n)
            ins = None if d is None else tuple(-x for x in d)
            out.append(JoinAction(n.id, k.parts, tuple(sorted(ref)), ins))
            ref += k.parts

    visit(tree.root)
    return out


# ---------------------------------------------------------------------------
# planning


@dataclass
class _Split:
    removed: list[tuple[frozenset, np.ndarray]]
    state: object
    reoriented: bool
    fallback: bool


def _layer(state, sets: list[frozenset], k_dirs: int, trace: dict) -> tuple[list, list]:
    """Validate ``sets`` against ``state``; keep an order-independent layer."""
    accepted: list[tuple[frozenset, np.ndarray]] = []
    floor_blocked = []
    g = state.liaisons
    for S in sets:
        try:
            att = validate_removal(state, S, k_dirs)
        except LockedConeError:
            trace.setdefault("validations", []).append((sorted(S), "locked"))
            continue
        trace.setdefault("validations", []).append((sorted(S), att.outcome))
        if att.outcome == "floor_blocked":
            floor_blocked.append(att)
            continue
        if not att.success:
            continue
        taken = frozenset().union(S, *(a for a, _ in accepted))
        remainder = frozenset(state.ids) - taken
        if not remainder or not check_stability(state, remainder):
            continue
        if not all(any(g.liaison(p, q) for p in A for q in remainder) for A in [S, *(a for a, _ in accepted)]):
            continue
        accepted.append((S, att.direction))
    return accepted, floor_blocked


def _candidate_sets(state, method: str, cfg: PlannerConfig, base: int, dig_fn, trace: dict) -> list[frozenset]:
    if method == "dig":
        try:
            part = identify_subassemblies(state, dig_fn(), cfg.subid, base)
        except DegenerateState:
            trace["degenerate"] = True
            return []
        trace["nuclei"] = part.nuclei
        trace["candidates"] = [(sorted(c.parts), round(c.tau, 6), c.accepted) for c in part.candidates + part.rejected]
        return [c.parts for c in part.candidates]
    from .baselines import belhadj_partition, morato_partition

    if method == "morato":
        sets = morato_partition(state, base, k=cfg.clusters, seed=cfg.seed)
    else:
        sets = belhadj_partition(state, base, cfg.subid)
    trace["candidates"] = [(sorted(s), None, True) for s in sets]
    return sets


def _split(state, cfg: PlannerConfig, trace: dict, allow_reorient: bool) -> _Split:
    base = select_base(state)
    dig_cache: list[DIG] = []

    def dig_fn():
        if not dig_cache:
            dig_cache.append(build_dig(state, base, cfg.blocking))
        return dig_cache[0]

    sets = _candidate_sets(state, cfg.method, cfg, base, dig_fn, trace)
    accepted, blocked = _layer(state, sets, cfg.k_dirs, trace)
    fallback = False
    if not accepted:
        # fall back on single parts, freest first, base last
        dig = dig_fn()
        singles = sorted(
            (i for i in state.ids if i != base), key=lambda i: (round(total_blockage(dig, i), 9), i)
        ) + [base]
        trace["fallback"] = singles
        fallback = True
        for i in singles:
            accepted, more = _layer(state, [frozenset([i])], cfg.k_dirs, trace)
            blocked += more
            if accepted:
                break
    if accepted:
        return _Split(accepted, state, False, fallback)
    if allow_reorient and cfg.reorient:
        for att in blocked:
            try:
                turned = reorient_for_removal(state, att)
            except UnstablePose:
                continue
            trace["reoriented"] = [float(x) for x in att.direction]
            sub = _split(turned, cfg, trace, allow_reorient=False)
            sub.reoriented = True
            return sub
    raise PlanFailure(f"no valid removal from parts {sorted(state.ids)}", state.ids)


def plan_disassembly(assembly, method: str = "dig", cfg: PlannerConfig | None = None) -> DisassemblyTree:
    """Disassembly tree for ``assembly`` (which must rest on its floor)."""
    cfg = replace(cfg or PlannerConfig(), method=method)
    names = {i: p.name for i, p in assembly.parts.items()}
    trace: list[dict] = []
    built: list[TreeNode] = []

    def recurse(state, parent, role, direction) -> int:
        node = TreeNode(len(built), tuple(state.ids), parent=parent, role=role, direction=direction, frame=state.frame)
        built.append(node)
        if len(state) == 1:
            return node.id
        entry = {"parts": list(state.ids)}
        trace.append(entry)
        try:
            sp = _split(state, cfg, entry, allow_reorient=True)
        except PlanFailure as e:
            e.trace = trace
            raise
        node.frame = sp.state.frame
        node.reoriented = sp.reoriented
        st = sp.state
        taken = frozenset().union(*(S for S, _ in sp.removed))
        for S, d in sorted(sp.removed, key=lambda x: sorted(x[0])):
            child = st.subset(S).seated()
            node.children.append(recurse(child, node.id, "removed", tuple(float(x) for x in d)))
        rest = st.subset(frozenset(st.ids) - taken).seated()
        node.children.append(recurse(rest, node.id, "remainder", None))
        log.debug("split %s -> %s", list(state.ids), [built[c].parts for c in node.children])
        return node.id

    recurse(assembly.seated(), None, "root", None)
    tree = _renumber(built, names, trace)
    tree.validate()
    return tree


def _renumber(built: list[TreeNode], names, trace) -> DisassemblyTree:
    order = []
    q = deque([0])
    while q:
        nid = q.popleft()
        order.append(nid)
        q.extend(built[nid].children)
    new = {old: k for k, old in enumerate(order)}
    nodes = []
    for old in order:
        n = built[old]
        nodes.append(
            replace(
                n,
                id=new[old],
                children=[new[c] for c in n.children],
                parent=None if n.parent is None else new[n.parent],
            )
        )
    return DisassemblyTree(nodes, names, trace)


def precedence_layers(tree: DisassemblyTree) -> dict[int, list[tuple[int, ...]]]:
    return tree.precedence_layers()


# ---------------------------------------------------------------------------
# verification


def node_state(assembly, tree: DisassemblyTree, nid: int):
    """The geometric state a node was split in."""
    n = tree.nodes[nid]
    return assembly.subset(n.parts).transformed(n.frame.compose(assembly.frame.inverse()))


def verify_plan(assembly, tree: DisassemblyTree) -> list[str]:
    """Re-run every removal forward and every insertion backward.

    Returns a list of problems (empty when the plan checks out).
    """
    problems = []
    tree.validate()
    if sorted(tree.parts) != sorted(assembly.ids):
        problems.append("tree parts differ from the assembly")
    for n in tree.internal():
        st = node_state(assembly, tree, n.id)
        for c in n.children:
            child = tree.nodes[c]
            if child.role != "removed":
                continue
            rest = [p for p in n.parts if p not in child.parts]
            d = np.asarray(child.direction)
            fwd = sweep(st, child.parts, rest, d)
            if fwd.collides:
                problems.append(f"removal of {child.parts} from node {n.id} collides")
                continue
            # insertion: start clear of the rest and travel back along -d
            out = st.subset(child.parts).translated(d * fwd.dist)
            back = _insertion_collides(st, out, child.parts, rest, d, fwd.dist, fwd.step)
            if back:
                problems.append(f"insertion of {child.parts} into node {n.id} collides")
        remainder = tree.nodes[n.children[-1]].parts
        if not check_stability(st, remainder):
            problems.append(f"remainder of node {n.id} is unsupported")
    return problems


def _insertion_collides(st, moved, moving, rest, d, dist, step) -> bool:
    from .mesh import solids_intersect

    k_max = int(np.ceil(dist / step - 1e-9))
    offsets = [-(d * min(k * step * 0.5, dist)) for k in range(1, 2 * k_max + 1)]
    for j in rest:
        sj = st.solid(j)
        for i in moving:
            si = moved.solid(i)
            for off in offsets:
                if solids_intersect(si, sj, off):
                    return True
    return False
