import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from digplan.mesh import (
    DegenerateGeometry,
    NotWatertight,
    ParseError,
    Pose,
    Solid,
    TriMesh,
    load_mesh,
    mesh_centroid,
    mesh_volume,
    meshes_intersect,
    point_inside,
    points_inside,
    proximity_pairs,
    rotation_between,
    solid_proximity_pairs,
    solids_intersect,
    surface_area,
    write_obj,
    write_stl,
)
from digplan.shapes import blocks, box, cube, hollow_box, regular_prism, tetrahedron, uv_sphere

CUBE_OBJ = """\
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
"""


def _tet_facets():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    return [v[[0, 2, 1]], v[[0, 1, 3]], v[[1, 2, 3]], v[[0, 3, 2]]]


def test_load_unit_cube_obj(tmp_path):
    p = tmp_path / "cube.obj"
    p.write_text(CUBE_OBJ)
    m = load_mesh(p)
    assert len(m.triangles) == 12
    assert mesh_volume(m) == pytest.approx(1.0)


def test_cube_missing_face_not_watertight(tmp_path):
    p = tmp_path / "open.obj"
    p.write_text("\n".join(CUBE_OBJ.splitlines()[:-2]) + "\n")
    with pytest.raises(NotWatertight):
        load_mesh(p)


def test_inverted_obj_is_flipped(tmp_path):
    lines = [ln if not ln.startswith("f") else "f " + " ".join(ln.split()[1:][::-1]) for ln in CUBE_OBJ.splitlines()]
    p = tmp_path / "inv.obj"
    p.write_text("\n".join(lines) + "\n")
    assert load_mesh(p).volume == pytest.approx(1.0)


def test_binary_stl_tetrahedron_welds(tmp_path):
    p = tmp_path / "tet.stl"
    rng = np.random.default_rng(3)
    with open(p, "wb") as f:
        f.write(b"\0" * 80 + struct.pack("<I", 4))
        for tri in _tet_facets():
            f.write(struct.pack("<3f", 0, 0, 0))
            # corners jitter far below the weld tolerance
            for v in tri + rng.uniform(-1e-9, 1e-9, size=(3, 3)):
                f.write(struct.pack("<3f", *v))
            f.write(b"\0\0")
    m = load_mesh(p)
    assert len(m.triangles) == 4 and len(m.vertices) == 4
    assert m.volume == pytest.approx(1 / 6, rel=1e-5)


def test_ascii_stl_and_roundtrip(tmp_path):
    p = tmp_path / "tet.stl"
    lines = ["solid tet"]
    for tri in _tet_facets():
        lines += ["facet normal 0 0 0", "outer loop", *[f"vertex {x} {y} {z}" for x, y, z in tri], "endloop", "endfacet"]
    p.write_text("\n".join(lines + ["endsolid tet"]) + "\n")
    m = load_mesh(p)
    assert m.volume == pytest.approx(1 / 6)
    for name, binary in (("b.stl", True), ("a.stl", False)):
        write_stl(m, tmp_path / name, binary=binary)
        assert load_mesh(tmp_path / name).volume == pytest.approx(1 / 6, rel=1e-6)
    write_obj(m, tmp_path / "t.obj")
    assert load_mesh(tmp_path / "t.obj").volume == pytest.approx(1 / 6)


def test_load_scales_units(tmp_path):
    p = tmp_path / "cube.obj"
    p.write_text(CUBE_OBJ)
    assert load_mesh(p, scale=0.001).volume == pytest.approx(1e-9)


@pytest.mark.parametrize(
    "text, err",
    [("v 0 0\nf 1 2 3\n", ParseError), ("v 0 0 0\nf 1 2 9\n", ParseError), ("v a b c\n", ParseError), ("# nothing\n", ParseError)],
)
def test_bad_obj(tmp_path, text, err):
    p = tmp_path / "bad.obj"
    p.write_text(text)
    with pytest.raises(err):
        load_mesh(p)


def test_unknown_format(tmp_path):
    p = tmp_path / "x.ply"
    p.write_text("ply\n")
    with pytest.raises(ParseError):
        load_mesh(p)


def test_degenerate_triangles_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]], dtype=float)
    with pytest.raises(DegenerateGeometry):
        TriMesh(v, [[0, 1, 2], [0, 2, 1], [0, 1, 3], [0, 3, 1]])
    with pytest.raises(DegenerateGeometry):
        TriMesh(v, [[0, 0, 1]])


def test_volume_centroid_area_examples():
    c = cube()
    assert mesh_volume(c) == pytest.approx(1.0)
    assert mesh_volume(c.scaled((2, 1, 1))) == pytest.approx(2.0)
    assert mesh_volume(tetrahedron(1.0)) == pytest.approx(math.sqrt(2) / 12, abs=1e-5)
    assert mesh_centroid(c) == pytest.approx([0.5, 0.5, 0.5])
    moved = c.transformed(Pose((1, 0, 0)))
    assert mesh_centroid(moved) - mesh_centroid(c) == pytest.approx([1, 0, 0])
    ell = blocks([((0, 0, 0), (1, 1, 1)), ((1, 0, 0), (2, 1, 1))])
    assert mesh_centroid(ell) == pytest.approx([1.0, 0.5, 0.5])
    assert surface_area(c) == pytest.approx(6.0)
    assert surface_area(tetrahedron(1.0)) == pytest.approx(math.sqrt(3))
    assert surface_area(c.scaled(2)) == pytest.approx(24.0)


def test_hollow_and_prism_volumes():
    assert hollow_box((0, 0, 0), (4, 4, 4), (1, 1, 1), (3, 3, 3)).volume == pytest.approx(56.0)
    hexa = regular_prism(6, 1.0, 0.0, 2.0)
    assert hexa.volume == pytest.approx(2 * 3 * math.sqrt(3) / 2)
    assert blocks([((0, 0, 0), (3, 3, 1))], holes=[((1, 1, 0), (2, 2, 1))]).volume == pytest.approx(8.0)


@settings(max_examples=50, deadline=None, derandomize=True, database=None)
@given(st.floats(-math.pi, math.pi), st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_rigid_invariance(angle, axis, t):
    if np.linalg.norm(axis) < 1e-3:
        axis = [0, 0, 1]
    pose = Pose.from_axis_angle(axis, angle, t)
    m = blocks([((0, 0, 0), (2, 1, 1)), ((0, 0, 1), (1, 1, 2))])
    moved = m.transformed(pose)
    assert moved.volume == pytest.approx(m.volume, rel=1e-9)
    assert moved.area == pytest.approx(m.area, rel=1e-9)
    assert moved.centroid == pytest.approx(pose.apply(m.centroid), abs=1e-9)


def test_pose_algebra():
    a = Pose.from_axis_angle((1, 2, 3), 0.7, (1, -2, 0.5))
    b = Pose.from_axis_angle((0, 1, 0), -1.1, (0, 3, 1))
    p = np.array([[0.3, -0.2, 2.0]])
    assert a.compose(b).apply(p) == pytest.approx(a.apply(b.apply(p)))
    assert a.inverse().apply(a.apply(p)) == pytest.approx(p)
    for d in ([0, 0, -1], [1, 0, 0], [0.3, -0.4, 0.5], [0, 0, 1]):
        d = np.array(d, dtype=float) / np.linalg.norm(d)
        assert rotation_between(d, [0, 0, 1]).rotate(d) == pytest.approx([0, 0, 1], abs=1e-12)
    assert rotation_between([0, 0, 1], [0, 0, 1]).rotation == pytest.approx((1, 0, 0, 0))


def test_point_inside_examples():
    c = cube()
    assert point_inside(c, Pose(), (0.5, 0.5, 0.5))
    assert not point_inside(c, Pose(), (10, 0, 0))
    assert not point_inside(c, Pose(), (1 + 1e-4, 0.5, 0.5))
    assert point_inside(c, Pose((5, 0, 0)), (5.5, 0.5, 0.5))


def test_points_inside_matches_half_spaces():
    """Rotated boxes and a tetrahedron against exact plane tests."""
    rng = np.random.default_rng(0)
    shapes = [
        (box((-1, -0.5, -0.25), (1, 0.5, 0.25)), Pose.from_axis_angle((1, 1, 0), 0.6, (0.1, 0.2, 0.3))),
        (tetrahedron(2.0), Pose.from_axis_angle((0, 1, 1), -1.2)),
    ]
    for mesh, pose in shapes:
        s = Solid(mesh, pose)
        q = rng.uniform(s.aabb[0] - 0.3, s.aabb[1] + 0.3, size=(10_000, 3))
        # exact convex containment through the face planes
        signed = np.einsum("tj,qtj->qt", s.normals, q[:, None, :] - s.tri[None, :, 0])
        exact = np.all(signed <= 0, axis=1)
        band = np.abs(signed).min(axis=1) < 1e-9
        got = points_inside(s, q)
        assert np.count_nonzero((got != exact) & ~band) == 0


def test_points_inside_matches_winding_on_nonconvex():
    rng = np.random.default_rng(1)
    m = hollow_box((0, 0, 0), (3, 3, 3), (1, 1, 1), (2, 2, 2))
    s = Solid(m)
    q = rng.uniform(-0.5, 3.5, size=(3000, 3))
    assert np.array_equal(points_inside(s, q), oracles.winding_inside(s.tri, q))


def test_meshes_intersect_examples():
    c = cube()
    assert meshes_intersect(c, Pose(), c, Pose((0.5, 0, 0)))
    assert not meshes_intersect(c, Pose(), c, Pose((3, 0, 0)))
    # touching faces do not count
    assert not meshes_intersect(c, Pose(), c, Pose((1, 0, 0)))
    small = cube(0.2, (0.4, 0.4, 0.4))
    assert meshes_intersect(c, Pose(), small, Pose())
    assert meshes_intersect(small, Pose(), c, Pose())


@settings(max_examples=60, deadline=None, derandomize=True, database=None)
@given(st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3), st.floats(-math.pi, math.pi))
def test_intersection_symmetric_and_bvh_matches_brute(offset, angle):
    a = Solid(uv_sphere(0.6, (0, 0, 0), 6, 8))
    b = Solid(blocks([((0, 0, 0), (1, 1, 0.5)), ((0, 0, 0.5), (0.5, 1, 1))]), Pose.from_axis_angle((1, 0, 1), angle, offset))
    ab = solids_intersect(a, b)
    assert ab == solids_intersect(b, a)
    assert ab == solids_intersect(a, b, brute=True)
    assert sorted(solid_proximity_pairs(a, b, 0.05)) == sorted(solid_proximity_pairs(a, b, 0.05, brute=True))


def test_proximity_pairs_examples():
    c = cube()
    pairs = proximity_pairs(c, Pose(), c, Pose((0, 0, 1)), 1e-4)
    top = {i for i, _ in pairs}
    s = Solid(c)
    assert {i for i in range(12) if s.normals[i][2] > 0.99} <= top
    assert proximity_pairs(c, Pose(), c, Pose((0, 0, 1 + 2e-4)), 1e-4) == []
    assert proximity_pairs(c, Pose(), c, Pose((0, 0, 0.5)), 1e-4)
    assert meshes_intersect(c, Pose(), c, Pose((0, 0, 0.5)))
