"""STL reading and writing, binary and ASCII.

Binary layout: 80-byte header, uint32 little-endian triangle count, then
one 50-byte record per triangle (float32 normal, 3x float32 vertex, uint16
attribute). Loading welds duplicate corner points and normalizes winding,
so the returned mesh is ready for adjacency queries.
"""

import io
import struct

import numpy as np

from .errors import StlParseError
from .mesh import TriangleMesh, orient_consistently, weld_vertices

_RECORD = np.dtype(
    [
        ("normal", "<f4", (3,)),
        ("vertices", "<f4", (3, 3)),
        ("attr", "<u2"),
    ]
)


def read_stl(path_or_buffer):
    """Raw (T, 3, 3) float64 corner array from a binary or ASCII STL.

    The format is sniffed: files starting with ``solid`` whose body parses
    as ASCII are read as text, everything else as binary. Malformed input
    raises StlParseError with the byte offset of the failure.
    """
    data = _read_bytes(path_or_buffer)
    if len(data) < 6:
        raise StlParseError("file too short to be STL", offset=len(data))
    if data[:5] in (b"solid", b"SOLID") or data[:5].lower() == b"solid":
        try:
            return _read_ascii(data)
        except StlParseError:
            # Binary files may legally start with "solid" in the header.
            if _looks_binary(data):
                return _read_binary(data)
            raise
    return _read_binary(data)


def _read_bytes(src):
    if isinstance(src, (bytes, bytearray)):
        return bytes(src)
    if hasattr(src, "read"):
        return src.read()
    with open(src, "rb") as fh:
        return fh.read()


def _looks_binary(data):
    if len(data) < 84:
        return False
    (count,) = struct.unpack_from("<I", data, 80)
    return len(data) == 84 + 50 * count


def _read_binary(data):
    if len(data) < 84:
        raise StlParseError("binary STL truncated before triangle count", offset=len(data))
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise StlParseError(
            f"binary STL truncated: header promises {count} triangles", offset=len(data)
        )
    records = np.frombuffer(data, dtype=_RECORD, count=count, offset=84)
    tris = records["vertices"].astype(np.float64)
    if not np.isfinite(tris).all():
        bad = int(np.flatnonzero(~np.isfinite(tris).reshape(count, -1).all(axis=1))[0])
        raise StlParseError("non-finite vertex coordinate", offset=84 + 50 * bad)
    return tris


def _read_ascii(data):
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise StlParseError("ASCII STL contains non-ASCII bytes", offset=exc.start) from None

    tris = []
    current = []
    offset = 0
    in_loop = False
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        if stripped.startswith("vertex"):
            parts = stripped.split()
            if len(parts) != 4:
                raise StlParseError("vertex line must have 3 coordinates", offset=offset)
            try:
                current.append([float(p) for p in parts[1:]])
            except ValueError:
                raise StlParseError("unparseable vertex coordinate", offset=offset) from None
        elif stripped.startswith("outer loop"):
            in_loop = True
            current = []
        elif stripped.startswith("endloop"):
            if not in_loop or len(current) != 3:
                raise StlParseError(
                    f"loop closed with {len(current)} vertices (need 3)", offset=offset
                )
            tris.append(current)
            in_loop = False
        offset += len(line.encode("ascii"))
    if in_loop:
        raise StlParseError("unterminated facet loop", offset=offset)
    if not tris and "facet" in text:
        raise StlParseError("facets declared but no loops parsed", offset=0)
    return np.array(tris, dtype=np.float64).reshape(-1, 3, 3)


def load_stl(path_or_buffer, weld_epsilon=1e-6):
    """Load an STL into a welded, consistently wound TriangleMesh.

    Corner points within ``weld_epsilon`` mm merge into shared vertices,
    degenerate triangles are dropped, and winding is normalized per
    connected component by majority vote (outward for closed meshes).
    Non-manifold input raises TopologyError naming the offending edge.
    """
    raw = read_stl(path_or_buffer)
    mesh, _ = weld_vertices(raw, epsilon=weld_epsilon)
    return orient_consistently(mesh)


def write_stl(mesh, path_or_buffer, binary=True, header=b""):
    """Write a mesh as STL. Binary by default; output is deterministic."""
    if isinstance(mesh, TriangleMesh):
        tris = mesh.triangle_points()
    else:
        tris = np.asarray(mesh, dtype=np.float64)
    if binary:
        payload = _format_binary(tris, header)
        _write_bytes(path_or_buffer, payload)
    else:
        _write_bytes(path_or_buffer, _format_ascii(tris).encode("ascii"))


def _format_binary(tris, header):
    count = len(tris)
    records = np.zeros(count, dtype=_RECORD)
    n = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    lens = np.linalg.norm(n, axis=1)
    lens[lens == 0.0] = 1.0
    records["normal"] = (n / lens[:, None]).astype(np.float32)
    records["vertices"] = tris.astype(np.float32)
    head = (header or b"guidecad binary STL")[:80].ljust(80, b"\0")
    buf = io.BytesIO()
    buf.write(head)
    buf.write(struct.pack("<I", count))
    buf.write(records.tobytes())
    return buf.getvalue()


def _format_ascii(tris):
    lines = ["solid guidecad"]
    n = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    lens = np.linalg.norm(n, axis=1)
    lens[lens == 0.0] = 1.0
    n = n / lens[:, None]
    for tri, normal in zip(tris, n):
        lines.append(f"  facet normal {normal[0]:.9g} {normal[1]:.9g} {normal[2]:.9g}")
        lines.append("    outer loop")
        for v in tri:
            lines.append(f"      vertex {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid guidecad")
    return "\n".join(lines) + "\n"


def _write_bytes(dst, payload):
    if hasattr(dst, "write"):
        dst.write(payload)
    else:
        with open(dst, "wb") as fh:
            fh.write(payload)
