import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guidecad import StlParseError, load_stl, read_stl, write_stl
from guidecad.fixtures import make_cube, make_icosphere

ASCII_TRIANGLE = """solid demo
  facet normal 0 0 1
    outer loop
      vertex 0 0 0
      vertex 1 0 0
      vertex 0 1 0
    endloop
  endfacet
endsolid demo
"""


def test_read_ascii_single_triangle():
    raw = read_stl(ASCII_TRIANGLE.encode("ascii"))
    assert raw.shape == (1, 3, 3)
    np.testing.assert_allclose(raw[0], [[0, 0, 0], [1, 0, 0], [0, 1, 0]])


def test_load_ascii_single_triangle():
    mesh = load_stl(ASCII_TRIANGLE.encode("ascii"))
    assert mesh.vertex_count == 3
    assert mesh.triangle_count == 1


def test_binary_cube_roundtrip():
    cube = make_cube(size=10.0)
    buf = io.BytesIO()
    write_stl(cube, buf)
    data = buf.getvalue()
    assert len(data) == 84 + 50 * 12
    raw = read_stl(data)
    assert raw.shape == (12, 3, 3)
    mesh = load_stl(data)
    assert mesh.vertex_count == 8
    assert mesh.triangle_count == 12
    assert mesh.signed_volume() == pytest.approx(1000.0)


def test_truncated_binary_reports_offset():
    cube = make_cube()
    buf = io.BytesIO()
    write_stl(cube, buf)
    data = buf.getvalue()[:-30]
    with pytest.raises(StlParseError) as exc:
        read_stl(data)
    assert exc.value.offset == len(data)


def test_short_file_rejected():
    with pytest.raises(StlParseError):
        read_stl(b"sol")


def test_ascii_bad_vertex_line():
    bad = ASCII_TRIANGLE.replace("vertex 1 0 0", "vertex 1 zero 0")
    with pytest.raises(StlParseError, match="unparseable"):
        read_stl(bad.encode("ascii"))


def test_ascii_loop_with_wrong_vertex_count():
    bad = ASCII_TRIANGLE.replace("      vertex 0 1 0\n", "")
    with pytest.raises(StlParseError, match="loop closed with 2"):
        read_stl(bad.encode("ascii"))


def test_binary_with_solid_header_parses_as_binary():
    cube = make_cube()
    buf = io.BytesIO()
    write_stl(cube, buf, header=b"solid exported from legacy tool")
    raw = read_stl(buf.getvalue())
    assert raw.shape == (12, 3, 3)


def test_write_is_deterministic():
    sphere = make_icosphere(subdivisions=1)
    a, b = io.BytesIO(), io.BytesIO()
    write_stl(sphere, a)
    write_stl(sphere, b)
    assert a.getvalue() == b.getvalue()


def test_ascii_write_roundtrip():
    cube = make_cube(size=4.0)
    buf = io.BytesIO()
    write_stl(cube, buf, binary=False)
    text = buf.getvalue().decode("ascii")
    assert text.startswith("solid")
    mesh = load_stl(buf.getvalue())
    assert mesh.vertex_count == 8
    assert mesh.triangle_count == 12


def test_empty_binary_stl():
    data = b"\0" * 80 + struct.pack("<I", 0)
    raw = read_stl(data)
    assert raw.shape == (0, 3, 3)


def test_file_roundtrip(tmp_path):
    sphere = make_icosphere(radius=7.0, subdivisions=2)
    path = tmp_path / "sphere.stl"
    write_stl(sphere, path)
    back = load_stl(path)
    assert back.vertex_count == sphere.vertex_count
    assert back.triangle_count == sphere.triangle_count
    assert back.is_closed()
    # float32 quantization bounds the coordinate error
    assert abs(back.signed_volume() - sphere.signed_volume()) < 1e-3


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_roundtrip_preserves_geometry_property(seed):
    rng = np.random.default_rng(seed)
    # Well-separated triangles so welding cannot merge across triangles.
    offsets = rng.uniform(-100, 100, size=(5, 1, 3))
    local = rng.uniform(0.5, 2.0, size=(5, 3, 3)) * np.array([1, 1, 1.0])
    raw = (offsets + local).astype(np.float32).astype(np.float64)
    buf = io.BytesIO()
    write_stl(raw, buf)
    back = read_stl(buf.getvalue())
    np.testing.assert_array_equal(back, raw)
