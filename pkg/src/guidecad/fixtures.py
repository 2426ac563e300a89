"""Synthetic meshes with known geometry and topology.

Used by the test suite and the ``fixtures`` CLI subcommand. Every builder
is deterministic for a given argument set.
"""

import numpy as np

from .errors import ContractError
from .mesh import TriangleMesh, orient_consistently
from .tubes import DrillAxis, make_tube


def make_plate(width=20.0, depth=20.0, nx=10, ny=10, z=0.0):
    """Flat rectangular grid in the z plane, normals +z, one boundary loop."""
    xs = np.linspace(-width / 2.0, width / 2.0, nx + 1)
    ys = np.linspace(-depth / 2.0, depth / 2.0, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([gx.ravel(), gy.ravel(), np.full(gx.size, float(z))], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append([a, b, c])
            tris.append([a, c, d])
    return TriangleMesh(verts, np.array(tris, dtype=np.int64))


def make_cube(size=10.0, center=(0.0, 0.0, 0.0)):
    """Axis-aligned cube, 12 triangles, outward normals."""
    h = size / 2.0
    c = np.asarray(center, dtype=np.float64)
    corners = np.array(
        [[sx, sy, sz] for sx in (-h, h) for sy in (-h, h) for sz in (-h, h)]
    ) + c
    # Faces as outward-wound quads over corner indices (x,y,z bit order).
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    tris = []
    for a, b, cc, d in quads:
        tris.append([a, b, cc])
        tris.append([a, cc, d])
    return orient_consistently(TriangleMesh(corners, np.array(tris, dtype=np.int64)))


def make_uv_sphere(radius=10.0, n_lat=32, n_lon=64, center=(0.0, 0.0, 0.0)):
    """Closed latitude/longitude sphere: poles are single vertices."""
    if n_lat < 2 or n_lon < 3:
        raise ContractError("need n_lat >= 2 and n_lon >= 3")
    c = np.asarray(center, dtype=np.float64)
    verts = [c + [0.0, 0.0, radius]]
    for i in range(1, n_lat):
        theta = np.pi * i / n_lat
        z = radius * np.cos(theta)
        r = radius * np.sin(theta)
        ang = 2.0 * np.pi * np.arange(n_lon) / n_lon
        ring = np.stack([r * np.cos(ang), r * np.sin(ang), np.full(n_lon, z)], axis=1) + c
        verts.append(ring)
    verts.append(c + [0.0, 0.0, -radius])
    verts = np.vstack([np.atleast_2d(v) for v in verts])

    def ring_start(i):
        return 1 + (i - 1) * n_lon

    tris = []
    top = 0
    bottom = len(verts) - 1
    r1 = ring_start(1)
    for k in range(n_lon):
        tris.append([top, r1 + k, r1 + (k + 1) % n_lon])
    for i in range(1, n_lat - 1):
        a = ring_start(i)
        b = ring_start(i + 1)
        for k in range(n_lon):
            k2 = (k + 1) % n_lon
            tris.append([a + k, b + k, b + k2])
            tris.append([a + k, b + k2, a + k2])
    rl = ring_start(n_lat - 1)
    for k in range(n_lon):
        tris.append([bottom, rl + (k + 1) % n_lon, rl + k])
    return orient_consistently(TriangleMesh(verts, np.array(tris, dtype=np.int64)))


def make_uv_hemisphere(radius=10.0, n_lat=16, n_lon=64, center=(0.0, 0.0, 0.0)):
    """Upper half sphere, open along the equator (one boundary loop)."""
    if n_lat < 1 or n_lon < 3:
        raise ContractError("need n_lat >= 1 and n_lon >= 3")
    c = np.asarray(center, dtype=np.float64)
    verts = [c + [0.0, 0.0, radius]]
    for i in range(1, n_lat + 1):
        theta = (np.pi / 2.0) * i / n_lat
        z = radius * np.cos(theta)
        r = radius * np.sin(theta)
        ang = 2.0 * np.pi * np.arange(n_lon) / n_lon
        ring = np.stack([r * np.cos(ang), r * np.sin(ang), np.full(n_lon, z)], axis=1) + c
        verts.append(ring)
    verts = np.vstack([np.atleast_2d(v) for v in verts])

    def ring_start(i):
        return 1 + (i - 1) * n_lon

    tris = []
    r1 = ring_start(1)
    for k in range(n_lon):
        tris.append([0, r1 + k, r1 + (k + 1) % n_lon])
    for i in range(1, n_lat):
        a = ring_start(i)
        b = ring_start(i + 1)
        for k in range(n_lon):
            k2 = (k + 1) % n_lon
            tris.append([a + k, b + k, b + k2])
            tris.append([a + k, b + k2, a + k2])
    return orient_consistently(TriangleMesh(verts, np.array(tris, dtype=np.int64)))


def make_icosphere(radius=10.0, subdivisions=3, center=(0.0, 0.0, 0.0)):
    """Subdivided icosahedron: closed, 20 * 4**subdivisions triangles."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts[0])
    tris = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        verts_list = list(verts)
        midpoint = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                m = verts_list[a] + verts_list[b]
                m /= np.linalg.norm(m)
                midpoint[key] = len(verts_list)
                verts_list.append(m)
            return midpoint[key]

        new_tris = []
        for a, b, c in tris:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_tris += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(verts_list)
        tris = np.array(new_tris, dtype=np.int64)
    verts = verts * radius + np.asarray(center, dtype=np.float64)
    return orient_consistently(TriangleMesh(verts, tris))


def make_annulus(r_inner=5.0, r_outer=10.0, segments=48, z=0.0):
    """Flat ring in the z plane: two boundary loops, Euler characteristic 0."""
    ang = 2.0 * np.pi * np.arange(segments) / segments
    inner = np.stack(
        [r_inner * np.cos(ang), r_inner * np.sin(ang), np.full(segments, float(z))], axis=1
    )
    outer = np.stack(
        [r_outer * np.cos(ang), r_outer * np.sin(ang), np.full(segments, float(z))], axis=1
    )
    verts = np.concatenate([inner, outer])
    tris = []
    for k in range(segments):
        k2 = (k + 1) % segments
        tris.append([k, segments + k, segments + k2])
        tris.append([k, segments + k2, k2])
    return TriangleMesh(verts, np.array(tris, dtype=np.int64))


def make_saddle(size=20.0, n=24, curvature=0.02):
    """Open saddle z = curvature * (x^2 - y^2) for projection/offset tests."""
    plate = make_plate(size, size, n, n)
    v = plate.vertices.copy()
    v[:, 2] = curvature * (v[:, 0] ** 2 - v[:, 1] ** 2)
    return TriangleMesh(v, plate.triangles)


def random_tube_plate_pair(rng):
    """Tube poked through a denser plate at a random spot and tilt.

    Both meshes stay under 2k triangles; the tube always crosses the
    plate so a collision exists.
    """
    nx = int(rng.integers(12, 24))
    plate = make_plate(30.0, 30.0, nx, nx)
    entry = np.array(
        [float(rng.uniform(-8, 8)), float(rng.uniform(-8, 8)), 0.0]
    )
    tilt = rng.normal(scale=0.25, size=2)
    direction = np.array([tilt[0], tilt[1], 1.0])
    axis = DrillAxis(
        entry=entry,
        direction=direction,
        inner_radius=float(rng.uniform(0.8, 1.6)),
        outer_radius=float(rng.uniform(2.0, 3.2)),
        length=float(rng.uniform(6, 12)),
    )
    tube = make_tube(axis, segments=int(rng.integers(12, 40)), tail=float(rng.uniform(2, 5)))
    return tube, plate


def random_tube_shell_pair(rng):
    """Tube crossing a curved open shell (hemisphere patch), under 2k triangles."""
    radius = float(rng.uniform(8, 14))
    shell = make_uv_hemisphere(radius=radius, n_lat=int(rng.integers(6, 10)), n_lon=24)
    # Aim roughly at a point on the upper cap so the tube pierces the shell.
    theta = float(rng.uniform(0.0, 0.35 * np.pi))
    phi = float(rng.uniform(0, 2 * np.pi))
    target = radius * np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )
    direction = target / np.linalg.norm(target)
    axis = DrillAxis(
        entry=target,
        direction=direction,
        inner_radius=float(rng.uniform(0.8, 1.4)),
        outer_radius=float(rng.uniform(1.8, 2.8)),
        length=float(rng.uniform(5, 9)),
    )
    tube = make_tube(axis, segments=int(rng.integers(12, 32)), tail=float(rng.uniform(3, 6)))
    return tube, shell


FIXTURES = {
    "plate": make_plate,
    "cube": make_cube,
    "sphere": make_uv_sphere,
    "hemisphere": make_uv_hemisphere,
    "icosphere": make_icosphere,
    "annulus": make_annulus,
    "saddle": make_saddle,
}
