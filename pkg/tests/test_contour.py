import numpy as np
import pytest

from guidecad import ContractError, ProjectionError, ValidationError
from guidecad.contour import (
    ContourLoop,
    ControlPointSet,
    build_contour,
    project_to_surface,
    resample_spline,
    validate_loop,
)
from guidecad.fixtures import make_icosphere, make_plate, make_uv_hemisphere
from guidecad.spatial import segment_segment_distance


def segment_distance_grid_oracle(p1, q1, p2, q2, samples=400):
    """Oracle: dense parameter grid over both segments."""
    t = np.linspace(0, 1, samples)
    a = p1 + t[:, None] * (q1 - p1)
    b = p2 + t[:, None] * (q2 - p2)
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return d.min()


# -- segment-segment distance -------------------------------------------------


def test_segment_distance_crossing():
    d = segment_segment_distance(
        [[-1.0, 0, 0]], [[1.0, 0, 0]], [[0, -1.0, 0]], [[0, 1.0, 0]]
    )
    np.testing.assert_allclose(d, 0.0, atol=1e-15)


def test_segment_distance_parallel():
    d = segment_segment_distance(
        [[0.0, 0, 0]], [[1.0, 0, 0]], [[0.0, 2.0, 0]], [[1.0, 2.0, 0]]
    )
    np.testing.assert_allclose(d, 2.0)


def test_segment_distance_endpoint_regions():
    d = segment_segment_distance(
        [[0.0, 0, 0]], [[1.0, 0, 0]], [[3.0, 4.0, 0]], [[5.0, 4.0, 0]]
    )
    np.testing.assert_allclose(d, np.hypot(2.0, 4.0))


def test_segment_distance_matches_grid_oracle():
    rng = np.random.default_rng(12)
    for _ in range(50):
        p1, q1, p2, q2 = rng.uniform(-5, 5, size=(4, 3))
        d = segment_segment_distance(p1[None], q1[None], p2[None], q2[None])[0]
        d_grid = segment_distance_grid_oracle(p1, q1, p2, q2)
        assert d <= d_grid + 1e-9
        assert d_grid - d < 0.05  # grid resolution bound


def test_segment_distance_degenerate_segment():
    p = np.array([[1.0, 1.0, 1.0]])
    d = segment_segment_distance(p, p, [[0.0, 0, 0]], [[2.0, 0, 0]])
    np.testing.assert_allclose(d, np.sqrt(2.0))


# -- spline -------------------------------------------------------------------


def test_spline_passes_through_controls_exactly():
    rng = np.random.default_rng(3)
    controls = rng.uniform(-10, 10, size=(6, 3))
    samples = resample_spline(controls, spacing=0.25)
    for c in controls:
        assert (np.abs(samples - c).sum(axis=1) == 0.0).any()


def test_spline_closed_loop_does_not_repeat_start():
    controls = np.array([[1.0, 0, 0], [0, 1.0, 0], [-1.0, 0, 0], [0, -1.0, 0]])
    samples = resample_spline(controls, spacing=0.05)
    assert not np.array_equal(samples[0], samples[-1])
    # wraparound segment exists: last sample should be near the first control
    assert np.linalg.norm(samples[-1] - controls[0]) < 0.2


def test_spline_tangent_matches_cardinal_rule():
    controls = np.array(
        [[0.0, 0, 0], [2.0, 1.0, 0], [4.0, 0, 0], [2.0, -2.0, 0]]
    )
    tension = 0.5
    samples = resample_spline(controls, spacing=1e-3, tension=tension)
    idx = int(np.argmin(np.linalg.norm(samples - controls[1], axis=1)))
    # Centered finite difference around the control, scaled by sample step.
    fd = samples[idx + 1] - samples[idx - 1]
    expected = tension * (controls[2] - controls[0])
    fd_dir = fd / np.linalg.norm(fd)
    exp_dir = expected / np.linalg.norm(expected)
    np.testing.assert_allclose(fd_dir, exp_dir, atol=1e-3)


def test_spline_open_includes_endpoints():
    controls = np.array([[0.0, 0, 0], [1.0, 1.0, 0], [2.0, 0, 0]])
    samples = resample_spline(controls, spacing=0.1, closed=False)
    np.testing.assert_array_equal(samples[0], controls[0])
    np.testing.assert_array_equal(samples[-1], controls[-1])


def test_spline_density_scales_with_spacing():
    controls = np.array([[1.0, 0, 0], [0, 1.0, 0], [-1.0, 0, 0], [0, -1.0, 0]])
    coarse = resample_spline(controls, spacing=0.5)
    fine = resample_spline(controls, spacing=0.05)
    assert len(fine) > 5 * len(coarse)


def test_spline_rejects_bad_input():
    with pytest.raises(ContractError):
        resample_spline(np.zeros((2, 3)), spacing=0.1, closed=True)
    with pytest.raises(ContractError):
        resample_spline(np.zeros((4, 3)), spacing=0.0)


def test_spline_zero_tension_is_polyline():
    controls = np.array([[0.0, 0, 0], [3.0, 0, 0], [3.0, 3.0, 0], [0.0, 3.0, 0]])
    samples = resample_spline(controls, spacing=0.1, tension=0.0)
    # With zero tangents the Hermite blend stays on the chords.
    a = controls
    b = np.roll(controls, -1, axis=0)
    for s in samples:
        d = segment_segment_distance(
            np.repeat(s[None], 4, axis=0), np.repeat(s[None], 4, axis=0), a, b
        ).min()
        assert d < 1e-9


# -- projection -----------------------------------------------------------------


def test_project_onto_sphere():
    sphere = make_icosphere(radius=10.0, subdivisions=3)
    pts = np.array([[0, 0, 15.0], [12.0, 3.0, 0.5]])
    proj, tri = project_to_surface(pts, sphere)
    r = np.linalg.norm(proj, axis=1)
    assert (np.abs(r - 10.0) < 0.05).all()  # on the faceted skin
    assert (tri >= 0).all()


def test_project_respects_max_distance():
    sphere = make_icosphere(radius=5.0, subdivisions=2)
    with pytest.raises(ProjectionError, match="limit"):
        project_to_surface([[0, 0, 50.0]], sphere, max_distance=10.0)


def test_build_contour_snaps_to_surface():
    sphere = make_icosphere(radius=10.0, subdivisions=3)
    theta = np.linspace(0, 2 * np.pi, 5, endpoint=False)
    controls = np.stack(
        [7.0 * np.cos(theta), 7.0 * np.sin(theta), np.full(5, 7.1)], axis=1
    )
    loop = build_contour(controls, sphere, spacing=0.3)
    assert loop.closed
    r = np.linalg.norm(loop.points, axis=1)
    assert (np.abs(r - 10.0) < 0.05).all()


# -- validation -----------------------------------------------------------------


def _circle_loop(radius, z, n=64):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return np.stack([radius * np.cos(t), radius * np.sin(t), np.full(n, z)], axis=1)


def test_validate_accepts_clean_loop():
    plate = make_plate(width=20.0, depth=20.0, nx=20, ny=20)
    loop = ContourLoop(_circle_loop(5.0, 0.0))
    validate_loop(loop, plate, surface_tolerance=1e-6)


def test_validate_rejects_too_few_points():
    plate = make_plate()
    with pytest.raises(ValidationError, match="at least 3"):
        validate_loop(ContourLoop(np.zeros((2, 3))), plate, surface_tolerance=1.0)


def test_validate_rejects_off_surface_point():
    plate = make_plate(width=20.0, depth=20.0)
    pts = _circle_loop(5.0, 0.0)
    pts[10, 2] = 4.0  # lift one point off the plate
    with pytest.raises(ValidationError, match="off the surface"):
        validate_loop(ContourLoop(pts), plate, surface_tolerance=0.01)


def test_validate_rejects_self_intersection():
    plate = make_plate(width=30.0, depth=30.0, nx=30, ny=30)
    # Figure-eight in the plane: two crossing lobes.
    t = np.linspace(0, 2 * np.pi, 80, endpoint=False)
    pts = np.stack([6.0 * np.sin(2 * t), 6.0 * np.sin(t), np.zeros_like(t)], axis=1)
    with pytest.raises(ValidationError, match="self-intersect"):
        validate_loop(ContourLoop(pts), plate, surface_tolerance=1e-6)


def test_validate_rejects_loop_near_hole():
    hemi = make_uv_hemisphere(radius=10.0, n_lat=10, n_lon=48)
    # Loop skimming just above the equator rim.
    theta = 0.48 * np.pi
    pts = _circle_loop(10.0 * np.sin(theta), 10.0 * np.cos(theta))
    with pytest.raises(ValidationError, match="hole"):
        validate_loop(ContourLoop(pts), hemi, surface_tolerance=0.2, hole_clearance=2.0)


def test_validate_accepts_loop_far_from_hole():
    hemi = make_uv_hemisphere(radius=10.0, n_lat=10, n_lon=48)
    theta = 0.25 * np.pi
    pts = _circle_loop(10.0 * np.sin(theta), 10.0 * np.cos(theta))
    proj, _ = project_to_surface(pts, hemi)
    validate_loop(ContourLoop(proj), hemi, surface_tolerance=0.2, hole_clearance=2.0)


# -- control point editing --------------------------------------------------------


def test_control_point_editing():
    cps = ControlPointSet(np.zeros((0, 3)))
    cps = cps.add([1.0, 0, 0]).add([0, 1.0, 0]).add([0, 0, 1.0])
    assert len(cps) == 3
    moved = cps.move(1, [5.0, 5.0, 5.0])
    np.testing.assert_array_equal(moved.points[1], [5.0, 5.0, 5.0])
    np.testing.assert_array_equal(cps.points[1], [0, 1.0, 0])  # original untouched
    fewer = moved.delete(0)
    assert len(fewer) == 2
    np.testing.assert_array_equal(fewer.points[0], [5.0, 5.0, 5.0])
    inserted = cps.add([9.0, 9, 9], index=1)
    np.testing.assert_array_equal(inserted.points[1], [9.0, 9, 9])
    assert len(inserted) == 4


def test_control_point_edit_bounds():
    cps = ControlPointSet(np.eye(3))
    with pytest.raises(ContractError):
        cps.move(3, [0, 0, 0])
    with pytest.raises(ContractError):
        cps.delete(-1)
    with pytest.raises(ContractError):
        cps.add([0, 0, 0], index=5)
