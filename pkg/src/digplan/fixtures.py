"""Constructed assemblies used by the tests, the acceptance suite and the
CLI demo manifests.

Every fixture is built from axis-aligned blocks so contacts are exact.
Part ids follow list order.
"""
from __future__ import annotations

from .assembly import Assembly, Part
from .mesh import Pose
from .shapes import blocks, box, hollow_box, uv_sphere


def _asm(specs, **kw) -> Assembly:
    return Assembly([Part(i, name, mesh) for i, (name, mesh) in enumerate(specs)], **kw)


def stack(n: int = 3, size: float = 1.0) -> Assembly:
    """``n`` cubes stacked on the floor; the bottom one is widest (the base)."""
    specs = [("block0", box((-1.0, -1.0, 0.0), (1.0 + size, 1.0 + size, size)))]
    for k in range(1, n):
        specs.append((f"block{k}", box((0.0, 0.0, k * size), (size, size, (k + 1) * size))))
    return _asm(specs)


def notch() -> Assembly:
    """A cube resting in a corner notch cut into a plate."""
    plate = blocks([((0, 0, 0), (3, 3, 2))], holes=[((2, 2, 1), (3, 3, 2))])
    return _asm([("plate", plate), ("cube", box((2, 2, 1), (3, 3, 2)))])


def capped_pocket() -> Assembly:
    """Part A sits in a blind pocket; a thin plate B caps it.

    A cannot leave alone (B blocks the only exit) but A and B together
    lift straight out of the base.
    """
    base = blocks([((-3, -3, 0), (3, 3, 2))], holes=[((-0.5, -0.5, 1), (0.5, 0.5, 2))])
    a = box((-0.5, -0.5, 1), (0.5, 0.5, 2))
    b = box((-0.7, -0.7, 2), (0.7, 0.7, 2.2))
    return _asm([("base", base), ("A", a), ("B", b)])


def nested_covers() -> Assembly:
    """A cube under two nested covers on a slab: total blockage 2."""
    base = box((-8, -8, -3), (8, 8, 0))
    p = box((-0.5, -0.5, 0), (0.5, 0.5, 1))
    c1 = blocks([((-2.5, -2.5, 0), (2.5, 2.5, 3))], holes=[((-1, -1, 0), (1, 1, 1.5))])
    c2 = blocks([((-5.5, -5.5, 0), (5.5, 5.5, 6))], holes=[((-2.5, -2.5, 0), (2.5, 2.5, 3))])
    return _asm([("slab", base), ("P", p), ("cover1", c1), ("cover2", c2)], floor=-3.0)


def welded() -> Assembly:
    """A part sealed inside a closed case: nothing can come apart."""
    case = hollow_box((-2, -2, 0), (2, 2, 4), (-1, -1, 1), (1, 1, 3))
    inner = box((-1, -1, 1), (1, 1, 3))
    return _asm([("case", case), ("core", inner)])


def open_side_case() -> Assembly:
    """A drawer-like slot open only towards +x, with a part inside and a
    little headroom above it."""
    case = blocks([((0, 0, 0), (4, 4, 4.5))], holes=[((1, 1, 1), (4, 3, 3.5))])
    part = box((1, 1, 1), (3, 3, 3))
    return _asm([("case", case), ("slider", part)])


def downward_exit() -> Assembly:
    """A peg that can only leave downward through the bottom of its sleeve."""
    sleeve = blocks([((0, 0, 0), (4, 4, 3))], holes=[((1.5, 1.5, 0), (2.5, 2.5, 2))])
    peg = box((1.5, 1.5, 0), (2.5, 2.5, 2))
    return _asm([("sleeve", sleeve), ("peg", peg)])


def sphere_bottom() -> Assembly:
    """A faceted ball: no face is flat enough to rest on once tipped."""
    ball = uv_sphere(1.0, (0, 0, 1), n_lat=10, n_lon=16)
    return _asm([("ball", ball)])


def channel(clearance: float = 0.0) -> Assembly:
    """A bar lying in a long U channel that only lets it slide along x or lift."""
    ch = blocks([((0, 0, 0), (10, 3, 2))], holes=[((0, 1, 1), (10, 2, 2))])
    bar = box((3, 1 + clearance, 1), (5, 2 - clearance, 2))
    return _asm([("channel", ch), ("bar", bar)])


def washer(thickness: float = 0.02) -> Assembly:
    """A thin washer above a small part: shell spacing must resolve it."""
    plate = box((-1, -1, -0.2), (1, 1, 0))
    part = box((-0.05, -0.05, 0), (0.05, 0.05, 0.1))
    ring = blocks([((-0.3, -0.3, 0.3), (0.3, 0.3, 0.3 + thickness))], holes=[((-0.06, -0.06, 0.3), (0.06, 0.06, 0.3 + thickness))])
    return _asm([("plate", plate), ("part", part), ("washer", ring)], floor=-0.2)


def _module_case():
    return blocks(
        [((0, 0, 0), (12, 8, 1)), ((0, 0, 1), (1, 8, 5)), ((11, 0, 1), (12, 8, 5)), ((1, 0, 1), (11, 1, 5)), ((1, 7, 1), (11, 8, 5))]
    )


_BOARD_GROUPS = [
    ("boardA", box((1.5, 1.5, 1), (5.5, 6.5, 1.5))),
    ("A1", box((2, 2, 1.5), (3.5, 4, 3))),
    ("A2", box((4, 2, 1.5), (5, 6, 3.5))),
    ("A3", box((2.25, 2.5, 3), (3.25, 3.5, 3.5))),
    ("boardB", box((6.5, 1.5, 1), (10.5, 6.5, 1.5))),
    ("B1", box((7, 2, 1.5), (8, 6, 3.5))),
    ("B2", box((8.5, 2, 1.5), (10, 4, 3))),
    ("B3", box((8.75, 2.5, 3), (9.75, 3.5, 3.5))),
]


def module_box() -> Assembly:
    """Twelve parts: an open case holding two boards with three parts
    each, a bridge linking the boards at board level, and an antenna base
    with its rod on the case wall."""
    specs = [
        ("case", _module_case()),
        *_BOARD_GROUPS,
        ("bridge", box((5.5, 3.5, 1), (6.5, 4.5, 1.5))),
        ("antenna_base", box((5.5, 7.25, 5), (6.5, 7.75, 5.5))),
        ("rod", box((5.75, 7.25, 5.5), (6.25, 7.75, 8))),
    ]
    return _asm(specs)


def module_box_covered() -> Assembly:
    """Variant of :func:`module_box` whose bridge lies across the tops of
    both board groups, carrying the antenna base and rod."""
    specs = [
        ("case", _module_case()),
        *_BOARD_GROUPS,
        ("bridge", box((4.5, 3.5, 3.5), (7.5, 4.5, 4))),
        ("antenna_base", box((5.5, 3.5, 4), (6.5, 4.5, 4.5))),
        ("rod", box((5.75, 3.75, 4.5), (6.25, 4.25, 8))),
    ]
    return _asm(specs)


def motor_driver() -> Assembly:
    """Eight parts stacked inside a housing ring under a top cover."""
    ring = blocks([((0, 0, 1), (8, 8, 6))], holes=[((1, 1, 1), (7, 7, 6))])
    specs = [
        ("bottom", box((0, 0, 0), (8, 8, 1))),
        ("housing", ring),
        ("motor", box((2.5, 2.5, 1), (5.5, 5.5, 4))),
        ("post_left", box((1.5, 3.5, 1), (2, 4.5, 6))),
        ("post_right", box((6, 3.5, 1), (6.5, 4.5, 6))),
        ("cover", box((0, 0, 6), (8, 8, 7))),
        ("peg_left", box((3, 3.75, 4), (3.5, 4.25, 5.5))),
        ("peg_right", box((4.5, 3.75, 4), (5, 4.25, 5.5))),
    ]
    return _asm(specs)


def row_of_blocks(n: int, gap: float = 0.0) -> Assembly:
    """A base slab with ``n - 1`` unit cubes in a row on top of it."""
    specs = [("slab", box((0, 0, 0), (2.0 * n, 2, 1)))]
    for k in range(1, n):
        x = 2.0 * (k - 1) + 0.5
        specs.append((f"cube{k}", box((x, 0.5, 1), (x + 1, 1.5, 2))))
    return _asm(specs)


def rotated(assembly: Assembly, pose: Pose) -> Assembly:
    """``assembly`` under a rigid motion, re-seated on its floor."""
    return assembly.transformed(pose).seated()


FIXTURES = {
    "stack": stack,
    "notch": notch,
    "capped_pocket": capped_pocket,
    "nested_covers": nested_covers,
    "welded": welded,
    "open_side_case": open_side_case,
    "downward_exit": downward_exit,
    "channel": channel,
    "washer": washer,
    "module_box": module_box,
    "module_box_covered": module_box_covered,
    "motor_driver": motor_driver,
}

__all__ = [*FIXTURES, "row_of_blocks", "sphere_bottom", "rotated", "FIXTURES"]
