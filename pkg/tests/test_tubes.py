"""Drill tube solids and the axis file format."""

import numpy as np
import pytest

from guidecad.errors import ContractError
from guidecad.tubes import DrillAxis, make_tube, read_axes, write_axes


def axis(**kw):
    base = dict(
        entry=np.array([1.0, -2.0, 3.0]),
        direction=np.array([0.2, -0.3, 0.9]),
        inner_radius=1.0,
        outer_radius=2.0,
        length=10.0,
    )
    base.update(kw)
    return DrillAxis(**base)


def test_tube_topology_and_count():
    tube = make_tube(axis(), segments=64)
    assert tube.triangle_count == 8 * 64
    assert tube.is_closed()
    assert tube.euler_characteristic() == 0


def test_minimal_tube():
    tube = make_tube(axis(), segments=8)
    assert tube.triangle_count == 64
    assert tube.is_closed()


def test_vertices_on_walls_or_end_planes():
    a = axis()
    tube = make_tube(a, segments=32, tail=1.5, axial=None)
    rel = tube.vertices - a.entry
    along = rel @ a.direction
    radial = np.linalg.norm(rel - along[:, None] * a.direction, axis=1)
    on_wall = (np.abs(radial - 1.0) < 1e-9) | (np.abs(radial - 2.0) < 1e-9)
    assert on_wall.all()
    assert along.min() == pytest.approx(-1.5, abs=1e-9)
    assert along.max() == pytest.approx(10.0, abs=1e-9)


def test_axial_subdivision_counts():
    tube = make_tube(axis(), segments=16, axial=5)
    assert tube.triangle_count == 4 * 16 * 6
    assert tube.is_closed()
    assert tube.euler_characteristic() == 0


def test_bad_axes_rejected():
    with pytest.raises(ContractError):
        axis(inner_radius=2.0, outer_radius=2.0)
    with pytest.raises(ContractError):
        axis(direction=np.zeros(3))
    with pytest.raises(ContractError):
        axis(length=0.0)
    with pytest.raises(ContractError):
        make_tube(axis(), segments=2)
    with pytest.raises(ContractError):
        make_tube(axis(), tail=-1.0)


def test_axis_file_round_trip(tmp_path):
    axes = [axis(), axis(entry=np.array([0.0, 0.5, -1.0]), length=6.25)]
    path = tmp_path / "axes.txt"
    write_axes(path, axes)
    back = read_axes(path)
    assert len(back) == 2
    for a, b in zip(axes, back):
        assert np.allclose(a.entry, b.entry, atol=1e-8)
        assert np.allclose(a.direction, b.direction, atol=1e-8)
        assert b.inner_radius == pytest.approx(a.inner_radius)
        assert b.length == pytest.approx(a.length)


def test_axis_file_rejects_short_lines(tmp_path):
    path = tmp_path / "axes.txt"
    path.write_text("# comment\n\n1 2 3 0 0 1 1 2\n")
    with pytest.raises(ContractError, match="expected 9"):
        read_axes(path)
