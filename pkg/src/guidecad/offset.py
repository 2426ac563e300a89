"""Offset surface of an open patch via a sampled distance field.

A direct per-vertex normal offset tears or self-intersects on curved
patches, and the template's outer side should be smooth anyway. Instead
the unsigned distance to the patch is sampled exactly on a regular grid
and contoured at the wall thickness with marching cubes. The isosurface
is a closed pillow around the patch; segmenting it with the projected
patch border yields the outer surface.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ProjectionError, ResourceError, SideSelectionError
from .mc_tables import CELL_EDGES, CORNER_OFFSETS, TRIANGLE_TABLE
from .mesh import TriangleMesh
from .spatial import MeshDistanceQuery, intersect_rays

_QUERY_CHUNK = 65536


@dataclass(frozen=True)
class DistanceField:
    """Regular grid of distances to a mesh. ``values[i, j, k]`` is sampled at
    ``origin + spacing * (i, j, k)``."""

    origin: np.ndarray
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64).reshape(3)
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise ContractError("field values must be a 3-d array")
        o.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def point(self, i, j, k):
        return self.origin + self.spacing * np.array([i, j, k], dtype=np.float64)

    def save(self, path):
        """Debug dump; reload with DistanceField.load."""
        np.savez_compressed(
            path, origin=self.origin, spacing=self.spacing, values=self.values
        )

    @staticmethod
    def load(path):
        with np.load(path) as data:
            return DistanceField(
                origin=data["origin"], spacing=float(data["spacing"]), values=data["values"]
            )


def build_distance_field(mesh, spacing, margin, max_samples=512**3, tol=0.0):
    """Unsigned distance to the mesh on a regular grid.

    The grid covers the mesh bounding box expanded by ``margin`` on every
    side. Each sample is a direct surface distance (no propagation),
    exact up to ``tol``; with the default 0 the field error is zero at
    samples and the isosurface error is purely interpolation. Grids above
    ``max_samples`` raise ResourceError.
    """
    if spacing <= 0:
        raise ContractError("spacing must be positive")
    if margin < 0:
        raise ContractError("margin must be >= 0")
    lo, hi = mesh.bounds()
    origin = lo - margin
    extent = (hi - lo) + 2.0 * margin
    counts = np.floor(extent / spacing).astype(np.int64) + 2  # samples, not cells
    total = int(counts.prod())
    if total > max_samples:
        raise ResourceError(
            f"distance field would need {total} samples "
            f"({counts[0]}x{counts[1]}x{counts[2]}), cap is {max_samples}"
        )

    ii = np.arange(counts[0])
    jj = np.arange(counts[1])
    kk = np.arange(counts[2])
    gi, gj, gk = np.meshgrid(ii, jj, kk, indexing="ij")
    pts = origin + spacing * np.stack([gi.ravel(), gj.ravel(), gk.ravel()], axis=1)

    query = MeshDistanceQuery(mesh)
    out = np.empty(total)
    for start in range(0, total, _QUERY_CHUNK):
        sl = slice(start, min(start + _QUERY_CHUNK, total))
        out[sl] = query.query(pts[sl], tol=tol)[0]
    return DistanceField(origin=origin, spacing=float(spacing), values=out.reshape(counts))


def marching_cubes(field, isovalue):
    """Contour the field at ``isovalue`` into a triangle mesh.

    Vertices are interpolated on grid edges and shared through a global
    edge key, so the output needs no welding and is manifold wherever the
    isosurface does not leave the grid. Triangles wind with normals toward
    increasing field values.
    """
    vals = field.values
    nx, ny, nz = vals.shape
    if min(nx, ny, nz) < 2:
        raise ContractError("field needs at least 2 samples per axis")
    below = vals < isovalue

    code = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.uint16)
    for bit, (dx, dy, dz) in enumerate(CORNER_OFFSETS):
        code |= below[dx:dx + nx - 1, dy:dy + ny - 1, dz:dz + nz - 1].astype(np.uint16) << bit
    active = np.argwhere((code != 0) & (code != 255))

    verts = []
    vert_ids = {}
    tris = []
    origin = field.origin
    h = field.spacing

    for i, j, k in active:
        row = TRIANGLE_TABLE[code[i, j, k]]
        base = np.array([i, j, k], dtype=np.int64)
        local = {}
        for e in row:
            if e < 0:
                break
            if e in local:
                continue
            ca, cb = CELL_EDGES[e]
            ga = base + CORNER_OFFSETS[ca]
            gb = base + CORNER_OFFSETS[cb]
            axis = int(np.argmax(gb != ga))
            if gb[axis] < ga[axis]:
                ga, gb = gb, ga
            key = (int(ga[0]), int(ga[1]), int(ga[2]), axis)
            vid = vert_ids.get(key)
            if vid is None:
                va = vals[ga[0], ga[1], ga[2]]
                vb = vals[gb[0], gb[1], gb[2]]
                t = 0.5 if vb == va else (isovalue - va) / (vb - va)
                t = min(1.0, max(0.0, t))
                p = origin + h * ga
                p = p.astype(np.float64, copy=True)
                p[axis] += h * t
                vid = len(verts)
                verts.append(p)
                vert_ids[key] = vid
            local[int(e)] = vid
        for a in range(0, 16, 3):
            if row[a] < 0:
                break
            # Table winding faces the below-isovalue side; reverse it so
            # normals point toward increasing field values.
            tris.append((local[int(row[a])], local[int(row[a + 2])], local[int(row[a + 1])]))

    if not tris:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    return TriangleMesh(np.array(verts), np.array(tris, dtype=np.int64))


def offset_surface(mesh, thickness, spacing=None, margin=None, max_samples=512**3):
    """Isosurface at ``thickness`` of the distance field around ``mesh``.

    Defaults: ``spacing = thickness / 4``; ``margin = thickness +
    4 * spacing``. The margin must be at least ``thickness + 2 * spacing``
    so the isosurface cannot be clipped by the grid border. Field samples
    are computed to within ``spacing / 10`` of exact, far below the
    trilinear interpolation error the grid itself adds.
    """
    if thickness <= 0:
        raise ContractError("thickness must be positive")
    if spacing is None:
        spacing = thickness / 4.0
    if margin is None:
        margin = thickness + 4.0 * spacing
    if margin < thickness + 2.0 * spacing:
        raise ContractError(
            f"margin {margin:.3g} too small: need >= thickness + 2*spacing "
            f"= {thickness + 2.0 * spacing:.3g}"
        )
    field = build_distance_field(
        mesh, spacing, margin, max_samples=max_samples, tol=0.1 * spacing
    )
    return marching_cubes(field, thickness), field


def loop_normals(mesh, loop_vertices, window=5):
    """Averaged vertex normals along a boundary loop.

    Each loop vertex gets the mean of the vertex normals in a centered
    window of ``window`` loop entries, unit length. Smoothing the normals
    keeps border projections from crossing on bumpy rims.
    """
    if window < 1 or window % 2 == 0:
        raise ContractError("window must be a positive odd number")
    vn = mesh.vertex_normals()[np.asarray(loop_vertices, dtype=np.int64)]
    n = len(vn)
    half = window // 2
    idx = (np.arange(n)[:, None] + np.arange(-half, half + 1)[None, :]) % n
    avg = vn[idx].mean(axis=1)
    lens = np.linalg.norm(avg, axis=1)
    lens[lens == 0.0] = 1.0
    return avg / lens[:, None]


def project_border_points(mesh, loop_vertices, target, window=5, max_distance=None):
    """Project a boundary loop onto the target surface along smoothed normals.

    Rays start at the loop vertices and run along the averaged outward
    normal; the nearest hit on ``target`` becomes the projected point.
    Rays that miss fall back to the closest point on the target. Raises
    ProjectionError when a projection lands farther than ``max_distance``.
    """
    loop_vertices = np.asarray(loop_vertices, dtype=np.int64)
    starts = mesh.vertices[loop_vertices]
    normals = loop_normals(mesh, loop_vertices, window=window)

    ray_idx, _, t_vals = intersect_rays(target, starts, normals, t_min=0.0)
    projected = np.full_like(starts, np.nan)
    for r in range(len(starts)):
        ts = t_vals[ray_idx == r]
        if len(ts):
            projected[r] = starts[r] + ts.min() * normals[r]
    missed = np.isnan(projected[:, 0])
    if missed.any():
        d, cp, _ = MeshDistanceQuery(target).query(starts[missed])
        projected[missed] = cp
    if max_distance is not None:
        d = np.linalg.norm(projected - starts, axis=1)
        if (d > max_distance).any():
            worst = int(np.argmax(d))
            raise ProjectionError(
                f"border point {worst} projects {d[worst]:.3g} mm away "
                f"(limit {max_distance:.3g})"
            )
    return projected


def select_outer_side(region, complement, inner_mesh, min_margin=0.5):
    """Pick which side of the segmented offset pillow faces away from the bone.

    Scores each candidate by the mean sign of ``dot(v - q, n_q)`` over its
    vertices, where q is the closest inner-surface point and n_q that
    triangle's normal. The outer side scores near +1. Raises
    SideSelectionError when the scores do not separate by ``min_margin``.
    """
    query = MeshDistanceQuery(inner_mesh)
    tri_normals = inner_mesh.triangle_normals()

    def score(mesh):
        if mesh.triangle_count == 0:
            return -np.inf
        v = mesh.vertices
        if len(v) > 512:
            step = len(v) // 512
            v = v[::step]
        _, q, ti = query.query(v)
        side = np.einsum("ij,ij->i", v - q, tri_normals[ti])
        return float(np.sign(side).mean())

    s_region = score(region)
    s_complement = score(complement)
    if abs(s_region - s_complement) < min_margin:
        raise SideSelectionError(
            f"cannot tell outer from inner side (scores {s_region:.2f} / {s_complement:.2f})"
        )
    return region if s_region > s_complement else complement
