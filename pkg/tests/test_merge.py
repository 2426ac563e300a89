"""Collision detection versus a brute-force oracle, and union merging."""

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from guidecad.errors import MergeError
from guidecad.fixtures import make_plate, random_tube_plate_pair, random_tube_shell_pair
from guidecad.merge import assemble_polylines, detect_collisions, merge_union
from guidecad.mesh import TriangleMesh, merge_meshes
from guidecad.ruled import connect_shells
from guidecad.spatial import MeshDistanceQuery, intersect_rays, points_in_mesh
from guidecad.tubes import DrillAxis, make_tube


def brute_marked_pairs(a, b):
    """All-pairs edge/triangle crossings via the ray intersector.

    Independent of the box trees and of the plane-clip formulation used
    by the production path.
    """
    pairs = set()
    for src, dst, flip in ((a, b, False), (b, a, True)):
        v = src.vertices
        tris = src.triangles
        for e in range(3):
            origins = v[tris[:, e]]
            dirs = v[tris[:, (e + 1) % 3]] - origins
            ray, tri, _ = intersect_rays(dst, origins, dirs, t_min=0.0, t_max=1.0)
            for r, t in zip(ray.tolist(), tri.tolist()):
                pairs.add((t, r) if flip else (r, t))
    return pairs


def slab(thickness=2.5, nx=20):
    return connect_shells(
        make_plate(30.0, 30.0, nx, nx, z=0.0),
        make_plate(30.0, 30.0, nx, nx, z=thickness),
    )


def vertical_tube(x=0.37, y=0.13, inner=1.4, outer=2.9, length=5.0, tail=2.0, segments=28):
    axis = DrillAxis(
        entry=np.array([x, y, 0.0]),
        direction=np.array([0.0, 0.0, 1.0]),
        inner_radius=inner,
        outer_radius=outer,
        length=length,
    )
    return make_tube(axis, segments=segments, tail=tail, axial=None)


def assert_points_on_both(points, a, b, tol=1e-6):
    da, _, _ = MeshDistanceQuery(a).query(points)
    db, _, _ = MeshDistanceQuery(b).query(points)
    assert da.max() < tol
    assert db.max() < tol


def test_x_crossing_triangles_two_points_both_marked():
    ta = TriangleMesh([[-2, -2, 0], [2, -2, 0], [0, 3, 0]], [[0, 1, 2]])
    tb = TriangleMesh([[-1, 0, -1], [1, 0, -1], [0, 0, 2]], [[0, 1, 2]])
    res = detect_collisions(ta, tb)
    assert len(res.points) == 2
    got = res.points[np.argsort(res.points[:, 0])]
    assert np.allclose(got, [[-2 / 3, 0, 0], [2 / 3, 0, 0]], atol=1e-12)
    assert np.array_equal(res.marked_a, [0])
    assert np.array_equal(res.marked_b, [0])
    assert (res.pairs == 0).all()
    # A single crossing segment cannot close into a loop.
    assert res.polylines == []


def test_disjoint_meshes_empty_result():
    a = make_plate(10.0, 10.0, nx=4, ny=4, z=0.0)
    b = make_plate(10.0, 10.0, nx=4, ny=4, z=5.0)
    res = detect_collisions(a, b)
    assert res.empty
    assert len(res.marked_a) == 0
    assert len(res.marked_b) == 0
    assert res.polylines == []


def test_tube_through_plate_two_closed_circles():
    segments = 28
    tube = vertical_tube(segments=segments)
    plate = make_plate(30.0, 30.0, nx=16, ny=16)
    res = detect_collisions(tube, plate)

    assert len(res.polylines) == 2
    assert_points_on_both(res.points, tube, plate)
    radii = []
    for poly in res.polylines:
        assert segments <= len(poly) <= 4 * segments
        assert np.abs(poly[:, 2]).max() < 1e-9
        radii.append(np.hypot(poly[:, 0] - 0.37, poly[:, 1] - 0.13))
    order = np.argsort([r.mean() for r in radii])
    shrink = np.cos(np.pi / segments)
    for want, r in zip((1.4, 2.9), (radii[order[0]], radii[order[1]])):
        assert r.min() > want * shrink - 1e-9
        assert r.max() < want + 1e-9


def test_two_tubes_through_one_plate_four_polylines():
    tubes = merge_meshes(vertical_tube(x=-6.2, y=-5.9), vertical_tube(x=6.4, y=6.1))
    plate = make_plate(30.0, 30.0, nx=16, ny=16)
    res = detect_collisions(tubes, plate)
    assert len(res.polylines) == 4


def test_marked_pairs_match_brute_force_on_random_fixtures():
    rng = np.random.default_rng(33)
    for maker in (random_tube_plate_pair, random_tube_shell_pair) * 2:
        a, b = maker(rng)
        res = detect_collisions(a, b)
        got = {(int(p), int(q)) for p, q in res.pairs}
        assert got == brute_marked_pairs(a, b)
        assert len(res.polylines) == 2
        assert_points_on_both(res.points, a, b)


def test_half_plate_leaves_open_chains():
    # The plate stops in the middle of the tube, so the wall crossings
    # are open arcs: detection still reports them, merging refuses.
    tube = vertical_tube(x=0.6, y=0.2)
    plate = make_plate(20.0, 20.0, nx=10, ny=10)
    plate = TriangleMesh(plate.vertices + [10.0, 0.0, 0.0], plate.triangles)
    res = detect_collisions(tube, plate)
    assert not res.empty
    assert res.polylines == []
    with pytest.raises(MergeError, match="close"):
        assemble_polylines(res.points, res.pairs, 1e-9 * 30.0)
    with pytest.raises(MergeError):
        merge_union(tube, plate)


def test_merge_union_tube_through_slab():
    body = slab()
    tool = vertical_tube()
    merged = merge_union(body, tool)

    assert merged.is_closed()
    assert merged.euler_characteristic() == 0
    # Drilled slab plus protruding tube, polygonal cross-sections.
    s = 28
    ring = 0.5 * s * np.sin(2 * np.pi / s)
    outer_area = ring * 2.9**2
    inner_area = ring * 1.4**2
    expected = 30.0 * 30.0 * 2.5 - outer_area * 2.5 + (outer_area - inner_area) * 7.0
    assert merged.signed_volume() == pytest.approx(expected, rel=0.05)


def test_merge_union_is_deterministic():
    body = slab(nx=12)
    tool = vertical_tube(segments=20)
    m1 = merge_union(body, tool)
    m2 = merge_union(body, tool)
    assert np.array_equal(m1.vertices, m2.vertices)
    assert np.array_equal(m1.triangles, m2.triangles)


def test_merge_union_second_tube_adds_handle():
    first = merge_union(slab(), vertical_tube(x=-6.2, y=-5.9))
    assert first.euler_characteristic() == 0
    second = merge_union(first, vertical_tube(x=6.4, y=6.1, segments=24))
    assert second.is_closed()
    assert second.euler_characteristic() == -2


def test_merge_union_disjoint_tool_rejected():
    with pytest.raises(MergeError, match="intersect"):
        merge_union(slab(nx=8), vertical_tube(x=50.0, y=50.0))


def test_merge_union_point_classification():
    # The merged solid is the body minus the drill envelope, plus the
    # tube; parity at points clear of all surfaces must match that.
    body = slab()
    tool = vertical_tube()
    merged = merge_union(body, tool)
    hull_eq = ConvexHull(tool.vertices).equations

    rng = np.random.default_rng(7)
    pts = rng.uniform([-16, -16, -3], [16, 16, 6], size=(600, 3))
    side = (pts @ hull_eq[:, :3].T + hull_eq[:, 3]).max(axis=1)
    clear = np.abs(side) > 0.05
    for mesh in (body, tool, merged):
        d, _, _ = MeshDistanceQuery(mesh).query(pts)
        clear &= d > 0.05
    pts = pts[clear]
    assert len(pts) > 300

    in_body = points_in_mesh(body, pts)
    in_tool = points_in_mesh(tool, pts)
    outside_hull = side[clear] > 0.0
    expected = (in_body & outside_hull) | in_tool
    assert np.array_equal(points_in_mesh(merged, pts), expected)
