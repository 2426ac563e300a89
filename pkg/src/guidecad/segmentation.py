"""Mesh segmentation along a surface contour.

The cut follows a dense contour polyline rather than mesh edges, so the
segmented border is smooth: every vertex gets a signed distance to the
polyline, and zero-crossing triangles are split by linear interpolation.
A loop of mesh edges tracked through the contour's anchor vertices
separates the mesh for the sign flood fill.

Stages: anchor the contour points to closest mesh vertices, track a
closed walk of mesh edges through the anchors, compute per-vertex
distance scalars to the polyline, assign signs by flood fill (negative =
kept region), split zero-crossing triangles.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .errors import ContractError, SegmentationError
from .mesh import TriangleMesh, extract_boundary_loops
from .spatial import closest_point_on_segments


@dataclass(frozen=True)
class EdgeLoop:
    """Closed walk of mesh vertices where consecutive entries share an edge."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.int64)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class ClipResult:
    """Two-sided split of a mesh along the zero level of a vertex scalar field.

    ``region`` is the negative side, ``complement`` the positive side.
    ``*_cut_mask`` flags vertices created on the zero level; ``*_cut_loops``
    are the closed boundary loops made entirely of such vertices (the new
    smooth border).
    """

    region: TriangleMesh
    complement: TriangleMesh
    region_cut_mask: np.ndarray
    complement_cut_mask: np.ndarray
    region_cut_loops: list
    complement_cut_loops: list


@dataclass(frozen=True)
class SegmentationResult:
    clip: ClipResult
    edge_loop: EdgeLoop
    scalars: np.ndarray

    @property
    def region(self):
        return self.clip.region

    @property
    def complement(self):
        return self.clip.complement


def closest_vertices(mesh, points):
    """Mesh vertex closest to each point, consecutive duplicates removed.

    The result is treated as a cyclic sequence: if the last anchor equals
    the first it is dropped too.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    _, idx = cKDTree(mesh.vertices).query(pts)
    idx = np.asarray(idx, dtype=np.int64).ravel()
    keep = np.ones(len(idx), dtype=bool)
    keep[1:] = idx[1:] != idx[:-1]
    anchors = idx[keep]
    if len(anchors) > 1 and anchors[-1] == anchors[0]:
        anchors = anchors[:-1]
    return anchors


def _greedy_leg(mesh, a, b, max_steps):
    """Walk mesh edges from a toward b, steering along the chord.

    Candidate neighbors must make an angle of at most 90 degrees with the
    chord direction; among them the one closest to the chord line wins.
    Returns the walk including ``a`` and excluding ``b``, or None when the
    walk dead-ends or exceeds the step budget.
    """
    verts = mesh.vertices
    va, vb = verts[a], verts[b]
    chord = vb - va
    chord_len = np.linalg.norm(chord)
    if chord_len == 0.0:
        return [a]
    path = [a]
    visited = {a}
    cur = a
    while cur != b:
        if len(path) > max_steps:
            return None
        nbrs = mesh.vertex_neighbors(cur)
        if b in nbrs:
            return path
        cand = [n for n in nbrs if n not in visited]
        if not cand:
            return None
        cand = np.array(cand)
        rel = verts[cand] - verts[cur]
        forward = rel @ chord >= 0.0
        cand = cand[forward]
        if len(cand) == 0:
            return None
        off = verts[cand] - va
        d_line = np.linalg.norm(np.cross(off, chord / chord_len), axis=1)
        cur = int(cand[int(np.argmin(d_line))])
        visited.add(cur)
        path.append(cur)
    return path


def _weighted_adjacency(mesh):
    e = mesh.edges
    w = np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1)
    n = mesh.vertex_count
    return sparse.csr_matrix(
        (np.concatenate([w, w]), (np.concatenate([e[:, 0], e[:, 1]]),
                                  np.concatenate([e[:, 1], e[:, 0]]))),
        shape=(n, n),
    )


def _shortest_leg(mesh, a, b, adj):
    dist, pred = csgraph.dijkstra(
        adj, directed=False, indices=a, return_predecessors=True
    )
    if not np.isfinite(dist[b]):
        raise SegmentationError(f"anchor vertices {a} and {b} are not edge-connected")
    path = [b]
    cur = b
    while cur != a:
        cur = int(pred[cur])
        path.append(cur)
    path.reverse()
    return path[:-1]  # include a, exclude b


def track_edge_loop(mesh, anchors):
    """Closed walk of mesh edges visiting the anchor vertices in order.

    Each anchor pair is connected greedily along the chord; legs that
    dead-end fall back to a shortest edge path. Raises SegmentationError
    when anchors are not connected or fewer than 3 remain.
    """
    anchors = np.asarray(anchors, dtype=np.int64)
    if len(anchors) < 3:
        raise SegmentationError(f"need at least 3 distinct anchor vertices, got {len(anchors)}")
    mel = mesh.mean_edge_length()
    adj = None
    walk = []
    for i in range(len(anchors)):
        a = int(anchors[i])
        b = int(anchors[(i + 1) % len(anchors)])
        chord = np.linalg.norm(mesh.vertices[b] - mesh.vertices[a])
        budget = max(64, int(8.0 * chord / mel) + 8)
        leg = _greedy_leg(mesh, a, b, budget)
        if leg is None:
            if adj is None:
                adj = _weighted_adjacency(mesh)
            leg = _shortest_leg(mesh, a, b, adj)
        walk.extend(leg)
    return EdgeLoop(np.array(walk, dtype=np.int64))


def compute_scalars(mesh, polyline_points, closed=True, k=8):
    """Distance from every mesh vertex to the contour polyline.

    Exact minimum over all polyline segments (a k-d tree over segment
    midpoints prunes candidates; vertices the pruning bound cannot certify
    are re-queried with a larger k, so results equal brute force). Also
    returns the closest point on the polyline per vertex.

    Returns
    -------
    (distances (V,), closest_points (V, 3))
    """
    pts = np.asarray(polyline_points, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 2:
        raise ContractError("polyline needs at least 2 points")
    a = pts
    b = np.roll(pts, -1, axis=0) if closed else pts[1:]
    if not closed:
        a = a[:-1]
    mids = 0.5 * (a + b)
    half = 0.5 * np.linalg.norm(b - a, axis=1)
    h_max = float(half.max())
    n_seg = len(mids)
    tree = cKDTree(mids)

    v = mesh.vertices
    nv = len(v)
    best_d = np.full(nv, np.inf)
    best_q = np.zeros((nv, 3))
    covered = np.full(nv, -np.inf)
    pending = np.arange(nv)
    kk = min(k, n_seg)
    while len(pending):
        sub = v[pending]
        d_mid, idx = tree.query(sub, k=kk)
        if kk == 1:
            d_mid = d_mid[:, None]
            idx = idx[:, None]
        ub = best_d[pending]
        if np.isinf(ub).any():
            # First round: exact distance to the nearest-midpoint segment
            # seeds the upper bound.
            cp0 = closest_point_on_segments(sub, a[idx[:, 0]], b[idx[:, 0]])
            d0 = np.linalg.norm(cp0 - sub, axis=1)
            best_d[pending] = d0
            best_q[pending] = cp0
            ub = d0
            done0 = True
        else:
            done0 = False
        # Candidates whose midpoint distance minus their half length reach
        # the upper bound cannot win; ones inside the already covered
        # midpoint radius were handled by an earlier round.
        need = d_mid - half[idx] < ub[:, None]
        need &= d_mid >= covered[pending, None]
        if done0:
            need[:, 0] = False
        rows, ranks = np.nonzero(need)
        if len(rows):
            seg = idx[rows, ranks]
            cp_e = closest_point_on_segments(sub[rows], a[seg], b[seg])
            d_e = np.linalg.norm(cp_e - sub[rows], axis=1)
            order = np.lexsort((d_e, rows))
            firsts = np.unique(rows[order], return_index=True)[1]
            sel = order[firsts]
            win = sel[d_e[sel] < ub[rows[sel]]]
            tgt = pending[rows[win]]
            best_d[tgt] = d_e[win]
            best_q[tgt] = cp_e[win]
        if kk == n_seg:
            break
        # A segment beyond the k-th midpoint can only win if its midpoint is
        # within best + h_max of the vertex.
        unresolved = best_d[pending] > d_mid[:, -1] - h_max
        covered[pending] = d_mid[:, -1]
        pending = pending[unresolved]
        kk = min(4 * kk, n_seg)
    return best_d, best_q


def assign_signs(mesh, edge_loop, distances, closest_points, seed_vertex=None):
    """Signed scalars: the seed's side of the edge loop is negative (kept).

    Off-loop vertices get their sign by connected component after removing
    the loop vertices; exactly the seed component is negative. Loop
    vertices copy the sign of their most distant off-loop neighbor N,
    flipped when N sits beyond the contour foot point (farther from the
    loop vertex than from its contour projection).
    """
    loop_vertices = edge_loop.vertices if isinstance(edge_loop, EdgeLoop) else edge_loop
    on_loop = np.zeros(mesh.vertex_count, dtype=bool)
    on_loop[loop_vertices] = True
    off_loop = ~on_loop
    if not off_loop.any():
        raise SegmentationError("edge loop covers the whole mesh")

    e = mesh.edges
    keep = off_loop[e[:, 0]] & off_loop[e[:, 1]]
    ek = e[keep]
    n = mesh.vertex_count
    adj = sparse.csr_matrix(
        (np.ones(2 * len(ek), dtype=np.int8),
         (np.concatenate([ek[:, 0], ek[:, 1]]), np.concatenate([ek[:, 1], ek[:, 0]]))),
        shape=(n, n),
    )
    _, labels = csgraph.connected_components(adj, directed=False)
    n_sides = len(np.unique(labels[off_loop]))
    if n_sides < 2:
        raise SegmentationError("contour loop does not separate the mesh into two parts")

    if seed_vertex is None:
        centroid = mesh.vertices[loop_vertices].mean(axis=0)
        off_idx = np.flatnonzero(off_loop)
        _, j = cKDTree(mesh.vertices[off_idx]).query(centroid)
        seed_vertex = int(off_idx[int(j)])
    elif on_loop[seed_vertex]:
        raise ContractError(f"seed vertex {seed_vertex} lies on the edge loop")

    signs = np.where(labels == labels[seed_vertex], -1.0, 1.0)
    signs[on_loop] = 0.0

    # Loop vertices: copy the most distant off-loop neighbor, with the
    # near/far test against that vertex's own contour foot point.
    deferred = []
    for p in np.flatnonzero(on_loop):
        nbrs = mesh.vertex_neighbors(p)
        nbrs_off = nbrs[off_loop[nbrs]]
        if len(nbrs_off) == 0:
            deferred.append(p)
            continue
        ni = int(nbrs_off[int(np.argmax(distances[nbrs_off]))])
        q = closest_points[p]
        same = np.linalg.norm(mesh.vertices[ni] - mesh.vertices[p]) < np.linalg.norm(
            mesh.vertices[ni] - q
        )
        signs[p] = signs[ni] if same else -signs[ni]
    for p in deferred:
        nbrs = mesh.vertex_neighbors(p)
        votes = signs[nbrs]
        votes = votes[votes != 0.0]
        signs[p] = -1.0 if len(votes) == 0 or votes.sum() <= 0 else 1.0

    return signs * distances


def clip_by_scalar(mesh, scalars):
    """Split the mesh along the zero level of a per-vertex scalar field.

    Pure-sign triangles go to one side whole. Mixed triangles get a point
    at the interpolated zero of each sign-changing edge (shared between
    the edge's two triangles) and are divided into three: one triangle on
    the lone corner's side, two on the other. Vertices with scalar within
    a relative epsilon of zero are nudged to the negative side, so a
    vertex sitting exactly on the contour never spawns a degenerate
    sliver.

    Returns a ClipResult; the negative side is the region.
    """
    s = np.asarray(scalars, dtype=np.float64).copy()
    if len(s) != mesh.vertex_count:
        raise ContractError("scalar count must match vertex count")
    lo, hi = mesh.bounds()
    eps = 1e-12 * float(np.linalg.norm(hi - lo))
    s[np.abs(s) < eps] = -eps

    neg = s < 0.0
    tri_neg = neg[mesh.triangles]
    n_neg = tri_neg.sum(axis=1)
    pure_region = n_neg == 3
    pure_complement = n_neg == 0
    mixed = ~pure_region & ~pure_complement

    verts = [mesh.vertices]
    next_id = mesh.vertex_count
    cut_cache = {}

    def cut_vertex(u, vtx):
        nonlocal next_id
        key = (u, vtx) if u < vtx else (vtx, u)
        got = cut_cache.get(key)
        if got is not None:
            return got
        lo_v, hi_v = key
        t = s[lo_v] / (s[lo_v] - s[hi_v])
        pa, pb = mesh.vertices[lo_v], mesh.vertices[hi_v]
        p = pa + t * (pb - pa)
        # Extreme parameters can round the cut point onto an endpoint, which
        # would create a zero-area piece; back off toward the midpoint until
        # the point is representable as its own vertex.
        while (p == pa).all() or (p == pb).all():
            t = max(2.0 * t, 2.0**-52) if t < 0.5 else 1.0 - max(2.0 * (1.0 - t), 2.0**-52)
            if not 0.0 < t < 1.0:
                p = 0.5 * (pa + pb)
                break
            p = pa + t * (pb - pa)
        verts.append(p[None, :])
        cut_cache[key] = next_id
        next_id += 1
        return next_id - 1

    region_tris = list(mesh.triangles[pure_region])
    complement_tris = list(mesh.triangles[pure_complement])

    for tri in mesh.triangles[mixed]:
        tn = neg[tri]
        # Lone corner: the one whose sign differs from both others.
        lone = 0
        for c in range(3):
            if tn[c] != tn[(c + 1) % 3] and tn[c] != tn[(c + 2) % 3]:
                lone = c
                break
        p = [int(tri[0]), int(tri[1]), int(tri[2])]
        q = []
        for i in range(3):
            j = (i + 1) % 3
            if tn[i] == tn[j]:
                q.append(p[i])
            else:
                q.append(cut_vertex(p[i], p[j]))
        l1, l2 = (lone + 1) % 3, (lone + 2) % 3
        minority = [q[l2], p[lone], q[lone]]
        delta_q = [q[0], q[1], q[2]]
        leftover = [p[l1], p[l2], q[l2]]
        if tn[lone]:
            region_tris.append(minority)
            complement_tris.append(delta_q)
            complement_tris.append(leftover)
        else:
            complement_tris.append(minority)
            region_tris.append(delta_q)
            region_tris.append(leftover)

    all_verts = np.concatenate(verts) if len(verts) > 1 else verts[0]
    is_cut = np.zeros(len(all_verts), dtype=bool)
    is_cut[mesh.vertex_count:] = True

    def build(tri_list):
        if not tri_list:
            empty = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
            return empty, np.zeros(0, dtype=bool)
        tris = np.array(tri_list, dtype=np.int64)
        used = np.unique(tris)
        remap = np.full(len(all_verts), -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        return TriangleMesh(all_verts[used], remap[tris]), is_cut[used]

    region, region_cut = build(region_tris)
    complement, complement_cut = build(complement_tris)

    def cut_loops(side_mesh, cut_mask):
        loops = []
        if side_mesh.triangle_count == 0:
            return loops
        for loop in extract_boundary_loops(side_mesh):
            if cut_mask[loop].all():
                loops.append(loop)
        return loops

    return ClipResult(
        region=region,
        complement=complement,
        region_cut_mask=region_cut,
        complement_cut_mask=complement_cut,
        region_cut_loops=cut_loops(region, region_cut),
        complement_cut_loops=cut_loops(complement, complement_cut),
    )


def segment_by_contour(mesh, contour_points, seed_vertex=None, k=8):
    """Full segmentation: anchors, edge loop, scalars, signs, clip.

    ``contour_points`` is the dense closed polyline on the surface;
    ``seed_vertex`` picks the kept side (default: the vertex nearest the
    loop centroid, i.e. the surrounded patch).
    """
    pts = getattr(contour_points, "points", contour_points)
    anchors = closest_vertices(mesh, pts)
    loop = track_edge_loop(mesh, anchors)
    distances, feet = compute_scalars(mesh, pts, closed=True, k=k)
    signed = assign_signs(mesh, loop, distances, feet, seed_vertex=seed_vertex)
    clip = clip_by_scalar(mesh, signed)
    return SegmentationResult(clip=clip, edge_loop=loop, scalars=signed)
