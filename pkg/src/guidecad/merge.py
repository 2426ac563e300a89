"""Fusing a drill tube into a template body along their intersection curves.

The union is simplified for this one use: box trees narrow the triangle
pairs, each pair contributes edge/triangle crossing points, the points
chain into closed polylines, triangles touching the curve are removed,
and the surviving fragments are classified and stitched back to the
shared polylines with triangle strips so the seam closes exactly.

A plain surface union would plug the tube's bore with the template
material it passes through. Because the tool is a drill tube, the bore
must stay open: body fragments are kept only when they lie outside the
tool's convex hull (the drill envelope), and tool fragments buried inside
the body survive when their outward side faces that envelope's cavity.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, cKDTree
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ContractError, MergeError
from .mesh import TriangleMesh, cluster_points, extract_boundary_loops, orient_consistently
from .obb import ObbTree, candidate_pairs
from .ruled import LoopPair, _q_alignment, build_strip
from .spatial import MeshDistanceQuery, points_in_mesh

_COPLANAR_SHIFT = 1e-9


@dataclass(frozen=True)
class CollisionResult:
    """Intersection points, their triangle pairs, and assembled polylines."""

    points: np.ndarray
    pairs: np.ndarray
    marked_a: np.ndarray
    marked_b: np.ndarray
    polylines: list = field(default_factory=list)

    @property
    def empty(self):
        return len(self.points) == 0


def _triangle_normals_unit(tris):
    n = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    return n / np.linalg.norm(n, axis=1, keepdims=True)


def _segment_triangle_points(seg_a, seg_b, tris):
    """Crossing points of segments with triangle interiors (plane test).

    Returns (mask, points); boundary hits count as inside.
    """
    n = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    d = seg_b - seg_a
    denom = np.einsum("ij,ij->i", n, d)
    norms = np.linalg.norm(n, axis=1) * np.linalg.norm(d, axis=1)
    ok = np.abs(denom) > 1e-12 * norms
    t = np.where(ok, np.einsum("ij,ij->i", n, tris[:, 0] - seg_a), 0.0)
    t /= np.where(ok, denom, 1.0)
    ok &= (t >= 0.0) & (t <= 1.0)
    p = seg_a + t[:, None] * d

    v0 = tris[:, 1] - tris[:, 0]
    v1 = tris[:, 2] - tris[:, 0]
    v2 = p - tris[:, 0]
    d00 = np.einsum("ij,ij->i", v0, v0)
    d01 = np.einsum("ij,ij->i", v0, v1)
    d11 = np.einsum("ij,ij->i", v1, v1)
    d20 = np.einsum("ij,ij->i", v2, v0)
    d21 = np.einsum("ij,ij->i", v2, v1)
    den = d00 * d11 - d01 * d01
    den = np.where(den > 0.0, den, 1.0)
    v = (d11 * d20 - d01 * d21) / den
    w = (d00 * d21 - d01 * d20) / den
    ok &= (v >= -1e-12) & (w >= -1e-12) & (v + w <= 1.0 + 1e-12)
    return ok, p


def _boxes_overlap(lo_a, hi_a, lo_b, hi_b, slack):
    return ((lo_a <= hi_b + slack) & (lo_b <= hi_a + slack)).all(axis=1)


def _pair_intersection_points(tris_a, tris_b, slack):
    """Intersection points per candidate triangle pair.

    Each edge of either triangle is first rejected against the other's
    bounding box, then intersected with its plane; points inside the
    triangle are kept. Coplanar pairs get the second triangle nudged
    along the first one's normal before testing so the arithmetic stays
    finite; exact coplanar overlap itself is a measure-zero fixture case.

    Returns (pair_rows, points).
    """
    n_a = _triangle_normals_unit(tris_a)
    n_b = _triangle_normals_unit(tris_b)
    to_b = tris_b - tris_a[:, :1, :]
    coplanar = (np.abs(np.einsum("ij,ikj->ik", n_a, to_b)) < _COPLANAR_SHIFT).all(axis=1)
    coplanar &= np.linalg.norm(np.cross(n_a, n_b), axis=1) < 1e-9
    if coplanar.any():
        tris_b = tris_b.copy()
        tris_b[coplanar] += _COPLANAR_SHIFT * n_a[coplanar][:, None, :]

    rows_out, pts_out = [], []
    for src, dst in ((tris_a, tris_b), (tris_b, tris_a)):
        lo_d = dst.min(axis=1)
        hi_d = dst.max(axis=1)
        for e in range(3):
            a = src[:, e]
            b = src[:, (e + 1) % 3]
            near = _boxes_overlap(np.minimum(a, b), np.maximum(a, b), lo_d, hi_d, slack)
            idx = np.flatnonzero(near)
            if len(idx) == 0:
                continue
            ok, p = _segment_triangle_points(a[idx], b[idx], dst[idx])
            rows_out.append(idx[ok])
            pts_out.append(p[ok])
    if not rows_out:
        return np.zeros(0, dtype=np.int64), np.zeros((0, 3))
    rows = np.concatenate(rows_out)
    pts = np.vstack(pts_out)
    order = np.argsort(rows, kind="stable")
    return rows[order], pts[order]


def assemble_polylines(points, pairs, tolerance):
    """Chain intersection points into closed ordered loops.

    Each triangle pair contributes one segment (its two extreme points
    along the shared line); endpoints within tolerance are welded, and
    every welded point must join exactly two segments or the chain has a
    gap and cannot bound a region.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        return []
    tags = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    order = np.lexsort((tags[:, 1], tags[:, 0]))
    pts = pts[order]
    tags = tags[order]
    keys = tags[:, 0] * (tags[:, 1].max() + 1) + tags[:, 1]
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    bounds = np.r_[starts, len(keys)]

    segments = []
    stray = []
    for s, e in zip(bounds[:-1], bounds[1:]):
        group = pts[s:e]
        reps, _ = cluster_points(group, tolerance)
        if len(reps) == 1:
            stray.append(reps[0])
            continue
        if len(reps) > 2:
            axis = np.argmax(reps.max(axis=0) - reps.min(axis=0))
            along = reps[:, axis]
            reps = reps[[int(np.argmin(along)), int(np.argmax(along))]]
        segments.append(reps)

    if not segments:
        raise MergeError(
            f"no intersection segments near {np.round(stray[0], 6).tolist()}"
            if stray
            else "no intersection segments"
        )
    ends = np.vstack(segments)
    reps, labels = cluster_points(ends, tolerance)
    edges = labels.reshape(-1, 2)
    edges = edges[edges[:, 0] != edges[:, 1]]
    edges = np.unique(np.sort(edges, axis=1), axis=0)

    for p in stray:
        if np.linalg.norm(reps - p, axis=1).min() > tolerance:
            raise MergeError(
                f"intersection chain does not close near {np.round(p, 6).tolist()}"
            )

    degree = np.bincount(edges.ravel(), minlength=len(reps))
    bad = np.flatnonzero(degree != 2)
    if len(bad):
        raise MergeError(
            "intersection chain does not close near "
            f"{np.round(reps[bad[0]], 6).tolist()} (degree {degree[bad[0]]})"
        )

    neighbors = [[] for _ in range(len(reps))]
    for u, v in edges:
        neighbors[u].append(int(v))
        neighbors[v].append(int(u))
    visited = np.zeros(len(reps), dtype=bool)
    loops = []
    for start in range(len(reps)):
        if visited[start]:
            continue
        loop = [start]
        visited[start] = True
        cur = start
        nxt = min(neighbors[start])
        while nxt != start:
            loop.append(nxt)
            visited[nxt] = True
            a, b = neighbors[nxt]
            cur, nxt = nxt, b if a == cur else a
        loops.append(reps[np.array(loop, dtype=np.int64)])
    return loops


def detect_collisions(a, b, leaf_size=4, tolerance=None, tree_a=None, tree_b=None):
    """All triangle-pair intersections between two meshes.

    Box trees narrow the pairs; every surviving pair is tested edge by
    edge both ways. Triangles contributing any point are marked. Points
    chain into closed polylines when the chains close; open contact
    (tangency, a surface ending mid-crossing) leaves ``polylines`` empty
    rather than failing detection.
    """
    scale = max(
        float(np.linalg.norm(a.bounds()[1] - a.bounds()[0])),
        float(np.linalg.norm(b.bounds()[1] - b.bounds()[0])),
    )
    if tolerance is None:
        tolerance = 1e-9 * scale
    tree_a = tree_a or ObbTree(a, leaf_size)
    tree_b = tree_b or ObbTree(b, leaf_size)
    cand = candidate_pairs(tree_a, tree_b)
    empty = CollisionResult(
        np.zeros((0, 3)),
        np.zeros((0, 2), dtype=np.int64),
        np.zeros(0, dtype=np.int64),
        np.zeros(0, dtype=np.int64),
        [],
    )
    if len(cand) == 0:
        return empty
    tp_a = a.triangle_points()
    tp_b = b.triangle_points()
    rows, pts = _pair_intersection_points(tp_a[cand[:, 0]], tp_b[cand[:, 1]], tolerance)
    if len(rows) == 0:
        return empty
    pair_tags = cand[rows]
    try:
        polylines = assemble_polylines(pts, pair_tags, tolerance)
    except MergeError:
        polylines = []
    return CollisionResult(
        pts,
        pair_tags,
        np.unique(pair_tags[:, 0]),
        np.unique(pair_tags[:, 1]),
        polylines,
    )


def _fragment_labels(mesh, removed_triangles):
    """(kept triangle ids, fragment label per kept triangle)."""
    mask = np.ones(mesh.triangle_count, dtype=bool)
    mask[removed_triangles] = False
    tri_ids = np.flatnonzero(mask)
    if len(tri_ids) == 0:
        return tri_ids, np.zeros(0, dtype=np.int64)
    tris = mesh.triangles[tri_ids]
    rows = np.repeat(np.arange(len(tris)), 3)
    cols = tris.ravel()
    graph = coo_matrix(
        (np.ones(len(rows), dtype=np.int8), (rows, cols)),
        shape=(len(tris), mesh.vertex_count),
    )
    _, vertex_comp = connected_components(graph.T @ graph, directed=False)
    return tri_ids, vertex_comp[tris[:, 0]]

def _fragment_samples(tri_ids, limit=8):
    """Spread sample of triangle ids across a fragment."""
    if len(tri_ids) <= limit:
        return tri_ids
    return tri_ids[np.linspace(0, len(tri_ids) - 1, limit).astype(np.int64)]


def _hull_side(equations, point):
    """Positive outside the hull, negative inside."""
    return float((equations[:, :3] @ point + equations[:, 3]).max())


def _keep_body_fragment(tri_points, tri_ids, hull_eq, ambiguous_tol):
    for tid in _fragment_samples(tri_ids):
        side = _hull_side(hull_eq, tri_points[tid].mean(axis=0))
        if abs(side) > ambiguous_tol:
            return side > 0.0
    raise MergeError("body fragment classification is ambiguous")


def _keep_tool_fragment(tp, normals, tri_ids, body, body_query, hull_eq, probe, ambiguous_tol):
    for tid in _fragment_samples(tri_ids):
        c = tp[tid].mean(axis=0)
        d, _, _ = body_query.query(c[None, :])
        if d[0] < ambiguous_tol:
            continue
        if not points_in_mesh(body, c[None, :])[0]:
            return True
        side = _hull_side(hull_eq, c + probe * normals[tid])
        if abs(side) > ambiguous_tol:
            return side < 0.0
    raise MergeError("tool fragment classification is ambiguous")


def _kept_boundary_loops(mesh, kept_tri_ids):
    """Boundary loops of the kept triangles, in original vertex indices."""
    mask = np.zeros(mesh.triangle_count, dtype=bool)
    mask[kept_tri_ids] = True
    sub, remap = mesh.submesh(mask)
    back = np.flatnonzero(remap != -1)
    return [back[loop] for loop in extract_boundary_loops(sub)]


def _match_loops_to_polylines(mesh, loops, polylines, match_tolerance):
    """Loop index -> polyline index for loops bordering the cut; -1 otherwise."""
    trees = [cKDTree(poly) for poly in polylines]
    assign = np.full(len(loops), -1, dtype=np.int64)
    for li, loop in enumerate(loops):
        pts = mesh.vertices[loop]
        worst = [tree.query(pts)[0].max() for tree in trees]
        pi = int(np.argmin(worst))
        if worst[pi] <= match_tolerance:
            assign[li] = pi
    return assign


def merge_union(body, tool, leaf_size=4, match_tolerance=None, weld_tolerance=None):
    """Fuse a drill tube into a closed body along intersection polylines.

    Triangles touching the curve are removed from both meshes; fragments
    outside the drill envelope (body) or facing its cavity (tool) are
    kept; each fragment's ragged border is stitched to the shared
    polyline vertices, so both sides close onto the same seam.
    ``weld_tolerance`` overrides the scale-relative point weld.
    """
    scale = float(np.linalg.norm(body.bounds()[1] - body.bounds()[0]))
    tool_scale = float(np.linalg.norm(tool.bounds()[1] - tool.bounds()[0]))
    tolerance = (
        weld_tolerance if weld_tolerance is not None else 1e-9 * max(scale, tool_scale)
    )

    collision = detect_collisions(body, tool, leaf_size, tolerance)
    if collision.empty:
        raise MergeError("meshes do not intersect")
    polylines = collision.polylines
    if not polylines:
        # Re-run assembly so the gap location reaches the caller.
        assemble_polylines(collision.points, collision.pairs, tolerance)
        raise MergeError("no closed intersection polylines")

    ambiguous_tol = 1e-7 * max(scale, tool_scale)
    probe = 1e-3 * tool_scale
    if match_tolerance is None:
        match_tolerance = 4.0 * max(body.mean_edge_length(), tool.mean_edge_length())

    hull_eq = ConvexHull(tool.vertices).equations
    body_query = MeshDistanceQuery(body)
    body_tp = body.triangle_points()
    tool_tp = tool.triangle_points()
    tool_normals = tool.triangle_normals()

    kept = {}
    for mesh, removed, is_body in (
        (body, collision.marked_a, True),
        (tool, collision.marked_b, False),
    ):
        tri_ids, labels = _fragment_labels(mesh, removed)
        keep_ids = []
        for lab in np.unique(labels):
            ids = tri_ids[labels == lab]
            if is_body:
                ok = _keep_body_fragment(body_tp, ids, hull_eq, ambiguous_tol)
            else:
                ok = _keep_tool_fragment(
                    tool_tp, tool_normals, ids, body, body_query, hull_eq, probe, ambiguous_tol
                )
            if ok:
                keep_ids.append(ids)
        kept[is_body] = (
            np.concatenate(keep_ids) if keep_ids else np.zeros(0, dtype=np.int64)
        )
    if len(kept[True]) == 0 or len(kept[False]) == 0:
        raise MergeError("union discarded one side entirely")

    body_offset = 0
    tool_offset = body.vertex_count
    poly_offsets = []
    total = tool_offset + tool.vertex_count
    for poly in polylines:
        poly_offsets.append(total)
        total += len(poly)

    attach_count = np.zeros(len(polylines), dtype=np.int64)
    strips = []
    for mesh, offset, is_body in ((body, body_offset, True), (tool, tool_offset, False)):
        loops = _kept_boundary_loops(mesh, kept[is_body])
        assign = _match_loops_to_polylines(mesh, loops, polylines, match_tolerance)
        for loop, pi in zip(loops, assign):
            if pi < 0:
                continue
            attach_count[pi] += 1
            poly = polylines[pi]
            order = _q_alignment(mesh.vertices[loop], poly)
            pair = LoopPair(mesh.vertices[loop], poly[order])
            strip = build_strip(pair, close=True)
            m = pair.m
            local = strip.triangles
            mapped = np.where(
                local < m,
                offset + loop[np.minimum(local, m - 1)],
                poly_offsets[pi] + order[np.maximum(local - m, 0)],
            )
            strips.append(mapped)

    mismatched = np.flatnonzero(attach_count != 2)
    if len(mismatched):
        raise MergeError(
            f"seam {mismatched[0]} has {attach_count[mismatched[0]]} fragment "
            "borders attached (needs exactly 2)"
        )

    vertices = np.vstack([body.vertices, tool.vertices, *polylines])
    triangles = np.vstack(
        [
            body.triangles[kept[True]],
            tool.triangles[kept[False]] + tool_offset,
            *strips,
        ]
    )
    used = np.unique(triangles)
    remap = np.full(len(vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    merged = TriangleMesh(vertices[used], remap[triangles])
    merged = orient_consistently(merged, outward=True)
    if not merged.is_closed():
        raise MergeError("merged surface is not closed")
    return merged
