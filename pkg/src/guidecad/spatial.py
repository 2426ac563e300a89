"""Spatial queries against triangle meshes.

Exact (not propagated) point-to-surface distances, ray casting, and
inside/outside tests. Candidate pruning uses a k-d tree over triangle
centroids; results are bitwise identical to brute force because the
pruning bound is conservative.
"""

import numpy as np
from scipy.spatial import cKDTree

from .errors import ContractError


def closest_point_on_triangles(points, tri_points):
    """Closest point on each triangle to each query point, elementwise.

    Parameters
    ----------
    points : (N, 3) array
    tri_points : (N, 3, 3) array
        One triangle per query point (pair up callers' candidates first).

    Returns
    -------
    (N, 3) array of closest points.

    Notes
    -----
    Voronoi-region case analysis over vertex, edge, and face regions;
    exact for degenerate barycentric configurations because every branch
    clamps its parameter.
    """
    p = np.asarray(points, dtype=np.float64)
    a = tri_points[:, 0]
    b = tri_points[:, 1]
    c = tri_points[:, 2]

    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)

    result = np.empty_like(p)
    done = np.zeros(len(p), dtype=bool)

    region_a = (d1 <= 0) & (d2 <= 0)
    result[region_a] = a[region_a]
    done |= region_a

    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    region_b = ~done & (d3 >= 0) & (d4 <= d3)
    result[region_b] = b[region_b]
    done |= region_b

    vc = d1 * d4 - d3 * d2
    region_ab = ~done & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    denom = d1 - d3
    safe = np.where(denom != 0, denom, 1.0)
    v = np.clip(d1 / safe, 0.0, 1.0)
    result[region_ab] = a[region_ab] + v[region_ab, None] * ab[region_ab]
    done |= region_ab

    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    region_c = ~done & (d6 >= 0) & (d5 <= d6)
    result[region_c] = c[region_c]
    done |= region_c

    vb = d5 * d2 - d1 * d6
    region_ac = ~done & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    denom = d2 - d6
    safe = np.where(denom != 0, denom, 1.0)
    w = np.clip(d2 / safe, 0.0, 1.0)
    result[region_ac] = a[region_ac] + w[region_ac, None] * ac[region_ac]
    done |= region_ac

    va = d3 * d6 - d5 * d4
    region_bc = ~done & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    denom = (d4 - d3) + (d5 - d6)
    safe = np.where(denom != 0, denom, 1.0)
    w = np.clip((d4 - d3) / safe, 0.0, 1.0)
    result[region_bc] = b[region_bc] + w[region_bc, None] * (c[region_bc] - b[region_bc])
    done |= region_bc

    inside = ~done
    denom = va + vb + vc
    safe = np.where(denom != 0, denom, 1.0)
    v = vb / safe
    w = vc / safe
    result[inside] = (
        a[inside] + v[inside, None] * ab[inside] + w[inside, None] * ac[inside]
    )
    return result


def closest_point_on_segments(points, a, b):
    """Closest point on segment [a_i, b_i] to points_i, elementwise."""
    p = np.asarray(points, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    safe = np.where(denom > 0, denom, 1.0)
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / safe, 0.0, 1.0)
    return a + t[:, None] * ab


def segment_segment_distance(p1, q1, p2, q2):
    """Minimum distance between segments [p1_i, q1_i] and [p2_i, q2_i], elementwise.

    Clamped closest-point computation; degenerate (zero-length) segments
    collapse to their start point.
    """
    p1 = np.atleast_2d(np.asarray(p1, dtype=np.float64))
    q1 = np.atleast_2d(np.asarray(q1, dtype=np.float64))
    p2 = np.atleast_2d(np.asarray(p2, dtype=np.float64))
    q2 = np.atleast_2d(np.asarray(q2, dtype=np.float64))
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)
    denom = a * e - b * b

    safe_denom = np.where(denom > 0, denom, 1.0)
    s = np.where(denom > 0, np.clip((b * f - c * e) / safe_denom, 0.0, 1.0), 0.0)
    safe_e = np.where(e > 0, e, 1.0)
    t = np.where(e > 0, (b * s + f) / safe_e, 0.0)

    safe_a = np.where(a > 0, a, 1.0)
    s = np.where(t < 0, np.clip(-c / safe_a, 0.0, 1.0), s)
    s = np.where(t > 1, np.clip((b - c) / safe_a, 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)

    c1 = p1 + s[:, None] * d1
    c2 = p2 + t[:, None] * d2
    return np.linalg.norm(c1 - c2, axis=1)


class MeshDistanceQuery:
    """Exact unsigned distance from points to a mesh surface.

    A k-d tree over triangle centroids supplies candidates; a query is
    resolved when the best distance so far cannot be beaten by any
    triangle whose centroid lies beyond the k-th neighbor (centroid
    distance minus the largest circumradius bounds triangle distance
    from below). Unresolved points fall back to a centroid ball query,
    so results equal brute force over all triangles.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self._tri_points = mesh.triangle_points()
        self._centroids = self._tri_points.mean(axis=1)
        # Max distance from centroid to its own corners, per triangle.
        self._radius = np.linalg.norm(
            self._tri_points - self._centroids[:, None, :], axis=2
        ).max(axis=1)
        self._max_radius = float(self._radius.max()) if len(self._radius) else 0.0
        self._tree = cKDTree(self._centroids)

    def query(self, points, k=8, tol=0.0):
        """(distances, closest_points, triangle_indices) for each query point.

        With ``tol > 0`` a point stops escalating once no unseen triangle
        can undercut its best distance by more than ``tol``; returned
        distances then exceed the exact ones by at most ``tol``. On dense
        meshes the exact stopping proof needs far more candidates than it
        changes the answer, so a tolerance well under the caller's own
        error budget buys a large speedup.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n = len(pts)
        nt = self.mesh.triangle_count
        if nt == 0:
            raise ContractError("distance query against empty mesh")

        best_d = np.full(n, np.inf)
        best_p = np.zeros((n, 3))
        best_t = np.zeros(n, dtype=np.int64)
        # Per-point centroid distance already covered by earlier rounds;
        # candidates strictly inside it were handled, so later rounds only
        # evaluate the newly reached ones.
        covered = np.full(n, -np.inf)
        pending = np.arange(n)
        kk = min(k, nt)
        while len(pending):
            sub = pts[pending]
            cd, ci = self._tree.query(sub, k=kk)
            if kk == 1:
                cd = cd[:, None]
                ci = ci[:, None]
            ub = best_d[pending]
            if np.isinf(ub).any():
                # First round: exact distance to the nearest-centroid
                # candidate seeds the upper bound.
                cp0 = closest_point_on_triangles(sub, self._tri_points[ci[:, 0]])
                d0 = np.linalg.norm(cp0 - sub, axis=1)
                best_d[pending] = d0
                best_p[pending] = cp0
                best_t[pending] = ci[:, 0]
                ub = d0
                done0 = True
            else:
                done0 = False
            # A candidate whose centroid distance minus its own radius
            # reaches the upper bound cannot win.
            need = cd - self._radius[ci] < ub[:, None]
            need &= cd >= covered[pending, None]
            if done0:
                need[:, 0] = False
            rows, ranks = np.nonzero(need)
            if len(rows):
                tri = ci[rows, ranks]
                cp_e = closest_point_on_triangles(sub[rows], self._tri_points[tri])
                d_e = np.linalg.norm(cp_e - sub[rows], axis=1)
                order = np.lexsort((d_e, rows))
                firsts = np.unique(rows[order], return_index=True)[1]
                sel = order[firsts]
                win = sel[d_e[sel] < ub[rows[sel]]]
                tgt = pending[rows[win]]
                best_d[tgt] = d_e[win]
                best_p[tgt] = cp_e[win]
                best_t[tgt] = tri[win]
            if kk == nt:
                break
            # A triangle beyond the k-th centroid can only beat the current
            # best by more than tol if its centroid lies within
            # best - tol + max circumradius.
            unresolved = best_d[pending] - tol > cd[:, -1] - self._max_radius
            covered[pending] = cd[:, -1]
            pending = pending[unresolved]
            kk = min(4 * kk, nt)
        return best_d, best_p, best_t


def intersect_rays(mesh, origins, directions, t_min=0.0, t_max=np.inf):
    """All ray/triangle hits, watertight enough for parity tests.

    Returns (ray_index, triangle_index, t) arrays sorted by (ray, t).
    Directions need not be unit length; t is in direction units.
    """
    orig = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    dirs = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    if orig.shape != dirs.shape:
        raise ContractError("origins and directions must have matching shapes")

    p = mesh.triangle_points()
    v0, e1, e2 = p[:, 0], p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]

    hits_r, hits_t, hits_tt = [], [], []
    for ri in range(len(orig)):
        o, d = orig[ri], dirs[ri]
        pvec = np.cross(d, e2)
        det = np.einsum("ij,ij->i", e1, pvec)
        ok = np.abs(det) > 1e-14
        inv = np.where(ok, det, 1.0)
        tvec = o - v0
        u = np.einsum("ij,ij->i", tvec, pvec) / inv
        qvec = np.cross(tvec, e1)
        v = np.einsum("j,ij->i", d, qvec) / inv
        t = np.einsum("ij,ij->i", e2, qvec) / inv
        hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t >= t_min) & (t <= t_max)
        idx = np.flatnonzero(hit)
        hits_r.append(np.full(len(idx), ri, dtype=np.int64))
        hits_t.append(idx)
        hits_tt.append(t[idx])

    ray_idx = np.concatenate(hits_r) if hits_r else np.zeros(0, dtype=np.int64)
    tri_idx = np.concatenate(hits_t) if hits_t else np.zeros(0, dtype=np.int64)
    t_vals = np.concatenate(hits_tt) if hits_tt else np.zeros(0)
    order = np.lexsort((t_vals, ray_idx))
    return ray_idx[order], tri_idx[order], t_vals[order]


def points_in_mesh(mesh, points, rng=None):
    """Parity test: True where a point lies inside a closed mesh.

    Casts a ray in a quasi-random direction and counts crossings; rays
    that graze an edge or vertex (duplicate or near-duplicate hit
    parameters) are rerolled with a new direction, up to 32 attempts.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    rng = np.random.default_rng(0x5EED) if rng is None else rng
    inside = np.zeros(len(pts), dtype=bool)
    pending = np.arange(len(pts))
    scale = float(np.linalg.norm(mesh.bounds()[1] - mesh.bounds()[0])) or 1.0
    for _ in range(32):
        if len(pending) == 0:
            break
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        ray_idx, _, t_vals = intersect_rays(
            mesh, pts[pending], np.tile(d, (len(pending), 1)), t_min=0.0
        )
        counts = np.bincount(ray_idx, minlength=len(pending))
        suspicious = np.zeros(len(pending), dtype=bool)
        # Grazing hits show up as nearly equal t values on one ray.
        for ri in range(len(pending)):
            ts = np.sort(t_vals[ray_idx == ri])
            if len(ts) > 1 and (np.diff(ts) < 1e-9 * scale).any():
                suspicious[ri] = True
        ok = ~suspicious
        inside[pending[ok]] = counts[ok] % 2 == 1
        pending = pending[suspicious]
    if len(pending):
        raise ContractError("parity test failed to find a clean ray after 32 attempts")
    return inside
