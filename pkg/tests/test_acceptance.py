"""Acceptance criteria 1-9.  Each test carries a ``criterion`` mark; the
terminal summary prints one PASS/FAIL line per criterion."""
import math
import time
from functools import lru_cache

import networkx as nx
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import oracles
from digplan import fixtures as F
from digplan.assembly import Assembly, Part
from digplan.baselines import kmeans
from digplan.blocking import BlockingConfig, DIG, build_dig, construct_shells, min_part_extent, subassembly_blockage, total_blockage
from digplan.contact import FreedomCone, LockedConeError, freedom_cone
from digplan.io import dumps_tree
from digplan.planner import METHODS, DisassemblyTree, plan_disassembly, verify_plan
from digplan.shapes import box, hollow_box, uv_sphere
from digplan.subassembly import identify_subassemblies, lock_test, partition, select_base
from digplan.validation import sweep_collides, validate_removal
from digplan.workcell import find_topology, jobs_of, lower_bound, makespan, metrics, optimal_makespan, simulate

criterion = pytest.mark.criterion


@lru_cache(maxsize=None)
def planned(name: str, method: str):
    asm = FIXTURES_BY_NAME[name]()
    t0 = time.perf_counter()
    tree = plan_disassembly(asm, method)
    return asm, tree, time.perf_counter() - t0


FIXTURES_BY_NAME = {
    "notch": F.notch,
    "channel": F.channel,
    "open_side_case": F.open_side_case,
    "downward_exit": F.downward_exit,
    "capped_pocket": F.capped_pocket,
    "stack3": lambda: F.stack(3),
    "stack4": lambda: F.stack(4),
    "nested_covers": F.nested_covers,
    "motor_driver": F.motor_driver,
    "module_box": F.module_box,
    "module_box_covered": F.module_box_covered,
    **{f"row{n}": (lambda n=n: F.row_of_blocks(n)) for n in range(2, 13)},
}


# ---------------------------------------------------------------------------
# 1


@criterion(1, "8-leaf chain tree gives makespan 7,7,7 and speedup 1.00")
def test_criterion_1_chain_schedule(record_property):
    t0 = time.perf_counter()
    nested = 0
    for leaf in range(1, 8):
        nested = [leaf, nested]
    tree = DisassemblyTree.from_nested(nested)
    ms = metrics(tree, (1, 2, 3))
    elapsed = time.perf_counter() - t0
    record_property("makespans", [m.makespan for m in ms])
    record_property("speedups", [f"{m.speedup:.2f}" for m in ms])
    record_property("seconds", f"{elapsed:.3f}")
    assert [m.makespan for m in ms] == [7, 7, 7]
    assert [m.speedup for m in ms] == [1.0, 1.0, 1.0]
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# 2


SERIAL_CASES = [
    "notch",
    "channel",
    "open_side_case",
    "downward_exit",
    "capped_pocket",
    "stack3",
    "stack4",
    "nested_covers",
    "motor_driver",
    "module_box",
    *[f"row{n}" for n in range(2, 13)],
]


@criterion(2, "1-robot makespan equals n-1 on every successful plan, n = 2..12")
def test_criterion_2_serial_identity(record_property):
    sizes = set()
    checked = 0
    for name in SERIAL_CASES:
        for method in METHODS:
            asm, tree, _ = planned(name, method)
            n = len(asm)
            sizes.add(n)
            assert makespan(simulate(tree, 1)) == n - 1, (name, method)
            checked += 1
    record_property("plans", checked)
    record_property("sizes", f"{min(sizes)}..{max(sizes)}")
    assert sizes == set(range(2, 13))


# ---------------------------------------------------------------------------
# 3


@criterion(3, "12-leaf topology search reproduces makespans 11,7,6 and speedups 1.57,1.83")
def test_criterion_3_topology_search(record_property):
    t0 = time.perf_counter()
    tree = find_topology(12, {1: 11, 2: 7, 3: 6})
    assert tree is not None
    ms = metrics(tree, (1, 2, 3))
    opt = [optimal_makespan(tree, k) for k in (1, 2, 3)]
    elapsed = time.perf_counter() - t0
    record_property("tree", tree.to_nested())
    record_property("speedups", [f"{m.speedup:.2f}" for m in ms[1:]])
    record_property("seconds", f"{elapsed:.1f}")
    assert [m.makespan for m in ms] == [11, 7, 6]
    assert ms[1].speedup == pytest.approx(1.57, abs=0.01)
    assert ms[2].speedup == pytest.approx(1.83, abs=0.01)
    assert opt == [11, 7, 6]
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# 4


@criterion(4, "notch cube has an octant cone of pi/2 sr (2%), kind cone, not locked")
def test_criterion_4_notch_cone(record_property):
    t0 = time.perf_counter()
    asm = F.notch()
    cone = freedom_cone(asm, [1], [0])
    omega = cone.solid_angle
    shells = construct_shells(asm.solid(1), cone, asm.vertices, min_part_extent(asm))
    elapsed = time.perf_counter() - t0
    record_property("solid_angle", f"{omega:.4f}")
    record_property("seconds", f"{elapsed:.2f}")
    assert abs(omega - math.pi / 2) <= 0.02 * math.pi / 2
    assert cone.kind == "cone" and cone.dof_class == 2
    assert not cone.locked
    for s in range(shells.m):
        assert shells.patch_area(s) == pytest.approx(shells.radii[s] ** 2 * math.pi / 2, rel=0.02)
    assert elapsed < 5.0


# ---------------------------------------------------------------------------
# 5


def _enclosure():
    shell = hollow_box((-3, -3, -3), (3, 3, 3), (-1, -1, -1), (1, 1, 1))
    ball = uv_sphere(0.5, (0, 0, 0), n_lat=8, n_lon=12)
    return Assembly([Part(0, "shell", shell), Part(1, "ball", ball)])


def _half_slab():
    cube = box((-50, -50, 0), (50, 50, 100))
    slab = box((-5000, -5000, 150), (5000, 5000, 5150))
    return Assembly([Part(0, "cube", cube), Part(1, "slab", slab)])


def _empty():
    asm = F.notch()
    far = box((-5, -5, 0), (-4, -4, 1))
    return Assembly([*asm.parts.values(), Part(2, "far", far)])


def _stack5():
    return F.stack(5)


def _oracle_check(asm, base):
    cfg = BlockingConfig()
    dig = build_dig(asm, base, cfg)
    radii, normals = {}, {}
    for i in asm.ids:
        if i == base:
            continue
        cone = freedom_cone(asm, [i], [base]) if base is not None else FreedomCone(np.zeros((0, 3)))
        sh = construct_shells(asm.solid(i), cone, asm.vertices, min_part_extent(asm), cfg.shells, cfg.samples)
        radii[i], normals[i] = sh.radii, cone.normals
    W = oracles.dense_dig(asm, base, radii, normals, 10 * cfg.samples)
    return dig, W


@criterion(5, "blocking fractions match a 10x denser independent oracle within 0.05")
def test_criterion_5_blocking_oracle(record_property):
    worst = 0.0
    cases = {
        "enclosure": (_enclosure(), None),
        "half_slab": (_half_slab(), None),
        "empty": (_empty(), 0),
        "stack5": (_stack5(), 0),
        "nested_covers": (F.nested_covers(), 0),
    }
    digs = {}
    for name, (asm, base) in cases.items():
        dig, W = _oracle_check(asm, base)
        digs[name] = dig
        err = float(np.abs(dig.weights - W).max())
        worst = max(worst, err)
        assert err <= 0.05, (name, dig.weights, W)
    record_property("max_error", f"{worst:.4f}")
    assert digs["enclosure"].w(1, 0) == 1.0
    assert abs(digs["half_slab"].w(0, 1) - 0.5) <= 0.03
    assert digs["empty"].w(1, 2) == 0.0
    assert total_blockage(digs["nested_covers"], 1) == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# 6


@criterion(6, "capped pocket: A alone fails, {A, B} passes, every planner removes {A, B} as a unit")
def test_criterion_6_fig4(record_property):
    asm = F.capped_pocket()
    with pytest.raises(LockedConeError):
        validate_removal(asm, [1])
    assert sweep_collides(asm, [1], [0, 2], (0, 0, 1))
    att = validate_removal(asm, [1, 2])
    assert att.success
    locked = lock_test(asm)
    assert locked(frozenset([1])) and not locked(frozenset([1, 2]))
    dig = build_dig(asm, 0)
    assert dig.w(1, 2) > 0.9 and dig.w(2, 1) < 0.05
    part = identify_subassemblies(asm, dig)
    assert [c.parts for c in part.candidates] == [frozenset({1, 2})]
    units = {}
    for method in METHODS:
        _, tree, _ = planned("capped_pocket", method)
        removed = [n.parts for n in tree.nodes.values() if n.role == "removed"]
        units[method] = removed
        assert (1, 2) in removed
        assert (1,) not in [n.parts for n in tree.nodes.values() if n.parent == tree.root]
    record_property("removed", units)


# ---------------------------------------------------------------------------
# 7


def _grid10():
    parts = [Part(0, "plate", box((0, 0, -1), (3, 3, 0)))]
    for k in range(9):
        x, y = k % 3, k // 3
        parts.append(Part(k + 1, f"cube{k}", box((x, y, 0), (x + 1, y + 1, 1))))
    return Assembly(parts)


@criterion(7, "n=10, m=24 issues exactly 1728 shell-versus-part evaluations")
def test_criterion_7_cost_ledger(record_property):
    asm = _grid10()
    assert len(asm) == 10
    dig = build_dig(asm, 0, BlockingConfig(shells=24))
    record_property("evaluations", dig.evaluations)
    assert dig.evaluations == 24 * 9 * 8 == 1728


# ---------------------------------------------------------------------------
# 8


@criterion(8, "12-part module box plans under all methods in < 120 s and re-validates")
def test_criterion_8_module_box(record_property):
    times = {}
    for method in METHODS:
        asm, tree, elapsed = planned("module_box", method)
        times[method] = f"{elapsed:.1f}s"
        assert len(asm) == 12
        assert asm.parts[select_base(asm)].name == "case"
        assert sorted(tree.parts) == list(asm.ids)
        assert verify_plan(asm, tree) == []
        assert elapsed < 120.0
    record_property("times", times)


# ---------------------------------------------------------------------------
# 9: property suite


PROPERTY_SETTINGS = dict(derandomize=True, database=None, deadline=None, suppress_health_check=list(HealthCheck))
_COUNT = {"dig": 0, "partition": 0, "schedule": 0, "determinism": 0}


@st.composite
def block_assemblies(draw):
    parts = [Part(0, "slab", box((0, 0, -1), (6, 6, 0)))]
    cells = draw(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=3, unique=True))
    for cx, cy in cells:
        z = 0.0
        for _ in range(draw(st.integers(1, 2))):
            w = draw(st.sampled_from([1.0, 1.5, 2.0]))
            h = draw(st.sampled_from([1.0, 1.5]))
            x0, y0 = 2 * cx + (2 - w) / 2, 2 * cy + (2 - w) / 2
            parts.append(Part(len(parts), f"p{len(parts)}", box((x0, y0, z), (x0 + w, y0 + w, z + h))))
            z += h
    return Assembly(parts)


@settings(max_examples=60, **PROPERTY_SETTINGS)
@given(block_assemblies())
def prop_dig_bounds(asm):
    _COUNT["dig"] += 1
    cfg = BlockingConfig(shells=8, samples=256)
    dig = build_dig(asm, 0, cfg)
    W = dig.weights
    assert np.all(W >= 0) and np.all(W <= 1)
    assert np.all(np.diag(W) == 0)
    assert np.all(W[0] == 0) and np.all(W[:, 0] == 0)
    again = build_dig(asm, 0, BlockingConfig(shells=8, samples=256, jobs=3))
    assert np.array_equal(W, again.weights) and dig.evaluations == again.evaluations


@st.composite
def synthetic_levels(draw):
    n = draw(st.integers(2, 10))
    ids = list(range(n))
    base = draw(st.sampled_from(ids))
    W = np.array(draw(st.lists(st.floats(0, 1), min_size=n * n, max_size=n * n))).reshape(n, n)
    np.fill_diagonal(W, 0)
    W[base] = 0
    W[:, base] = 0
    edges = draw(st.lists(st.tuples(st.sampled_from(ids), st.sampled_from(ids)), max_size=3 * n))
    g = nx.Graph()
    g.add_nodes_from(ids)
    g.add_edges_from((a, b) for a, b in edges if a != b)
    scores = {i: draw(st.floats(0.01, 1)) for i in ids if i != base}
    salt = draw(st.integers(0, 10**6))
    rate = draw(st.sampled_from([0, 3, 7]))
    f_accept = draw(st.sampled_from([0.0, 0.5, 0.85, 2.0]))
    return ids, base, W, g, scores, salt, rate, f_accept


def _lock_fn(salt, rate):
    return lambda S: rate > 0 and hash((salt, tuple(sorted(S)))) % 10 < rate


@settings(max_examples=4500, **PROPERTY_SETTINGS)
@given(synthetic_levels())
def prop_partition_exact(level):
    _COUNT["partition"] += 1
    ids, base, W, g, scores, salt, rate, f_accept = level
    dig = DIG(tuple(ids), W, base)
    nbrs = lambda p: sorted(g.neighbors(p))
    part = partition(ids, base, scores, dig, nbrs, _lock_fn(salt, rate), f_accept)
    pieces = [c.parts for c in part.candidates] + [part.remainder]
    assert sum(len(p) for p in pieces) == len(ids)
    assert frozenset().union(*pieces) == frozenset(ids)
    assert base in part.remainder
    for c in part.candidates + part.rejected:
        assert base not in c.parts and c.nucleus in c.parts
        assert nx.is_connected(g.subgraph(c.parts))
        assert c.tau == pytest.approx(subassembly_blockage(dig, c.parts), abs=1e-9)
    for c in part.candidates:
        assert c.tau <= f_accept + 1e-9 and not c.locked
    again = partition(ids, base, scores, dig, nbrs, _lock_fn(salt, rate), f_accept)
    assert [c.parts for c in again.candidates] == [c.parts for c in part.candidates]


@st.composite
def nested_trees(draw, max_leaves=12):
    n = draw(st.integers(2, max_leaves))
    leaves = list(range(n))

    def build(items):
        if len(items) == 1:
            return items[0]
        k = draw(st.integers(2, min(4, len(items))))
        cuts = sorted(draw(st.lists(st.integers(1, len(items) - 1), min_size=k - 1, max_size=k - 1, unique=True)))
        bounds = [0, *cuts, len(items)]
        return [build(items[a:b]) for a, b in zip(bounds, bounds[1:])]

    return build(leaves)


@settings(max_examples=4000, **PROPERTY_SETTINGS)
@given(nested_trees(), st.integers(1, 4))
def prop_schedule_precedence(nested, k):
    _COUNT["schedule"] += 1
    tree = DisassemblyTree.from_nested(nested)
    jobs = jobs_of(tree)
    s = simulate(tree, k)
    for j, job in jobs.items():
        for p in job.predecessors:
            assert s.start[j] >= s.completion[p]
        assert s.completion[j] - s.start[j] == job.duration
        slots = [t for t, step in enumerate(s.steps) for r, (jj, _) in step.items() if jj == j]
        assert slots == list(range(s.start[j], s.completion[j]))
        assert {s.steps[t][s.robot_of[j]][0] for t in slots} == {j}
    assert all(len(step) <= k for step in s.steps)
    assert makespan(simulate(tree, 1)) == tree.n_parts - 1
    ms = makespan(s)
    assert ms >= lower_bound(tree, k)
    if len(jobs) <= 7:
        assert ms >= optimal_makespan(tree, k)


@settings(max_examples=1500, **PROPERTY_SETTINGS)
@given(nested_trees(), st.integers(1, 3), st.integers(0, 2**31), st.integers(2, 30))
def prop_determinism(nested, k, seed, npts):
    _COUNT["determinism"] += 1
    tree = DisassemblyTree.from_nested(nested)
    assert simulate(tree, k).rows() == simulate(DisassemblyTree.from_nested(nested), k).rows()
    pts = np.random.default_rng(seed).normal(size=(npts, 3))
    kk = 1 + seed % min(npts, 4)
    assert np.array_equal(kmeans(pts, kk, seed), kmeans(pts, kk, seed))


@criterion(9, "invariant suite: DIG bounds, exact partitions, precedence, determinism")
def test_criterion_9_invariants(record_property):
    for k in _COUNT:
        _COUNT[k] = 0
    prop_dig_bounds()
    prop_partition_exact()
    prop_schedule_precedence()
    prop_determinism()
    # whole-planner determinism on the fixed fixtures
    for name in ("capped_pocket", "nested_covers"):
        for method in METHODS:
            asm = FIXTURES_BY_NAME[name]()
            a = dumps_tree(plan_disassembly(asm, method), method)
            b = dumps_tree(plan_disassembly(FIXTURES_BY_NAME[name](), method), method)
            assert a == b
    total = sum(_COUNT.values())
    record_property("cases", total)
    record_property("by_property", dict(_COUNT))
    assert total >= 10_000
