"""Indexed triangle mesh with precomputed adjacency.

Vertices are float64 millimeters, triangles are index triples wound
counterclockwise when viewed from outside. All arrays are frozen after
construction; every operation returns a new mesh, so instances are safe
to share across threads.
"""

from collections import deque

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import ContractError, TopologyError


class TriangleMesh:
    """Triangle surface mesh with vertex/edge adjacency.

    Parameters
    ----------
    vertices : (V, 3) float array
        Vertex coordinates in mm.
    triangles : (T, 3) int array
        Vertex index triples, counterclockwise from outside.

    Raises
    ------
    ContractError
        Out-of-range indices, repeated indices within a triangle, zero-area
        triangles, or non-finite coordinates.
    TopologyError
        Any edge shared by more than two triangles (non-manifold).
    """

    def __init__(self, vertices, triangles):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        t = np.ascontiguousarray(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ContractError(f"vertices must be (V, 3), got {v.shape}")
        if t.size == 0:
            t = t.reshape(0, 3)
        if t.ndim != 2 or t.shape[1] != 3:
            raise ContractError(f"triangles must be (T, 3), got {t.shape}")
        if not np.isfinite(v).all():
            raise ContractError("vertex coordinates must be finite")
        if t.size:
            if t.min() < 0 or t.max() >= len(v):
                raise ContractError("triangle index out of range")
            if ((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 2] == t[:, 0])).any():
                raise ContractError("triangle with repeated vertex index")
            areas = _triangle_areas(v, t)
            if (areas <= 0.0).any():
                bad = int(np.argmax(areas <= 0.0))
                raise ContractError(f"degenerate (zero-area) triangle at index {bad}")

        self.vertices = v
        self.triangles = t
        self._build_adjacency()
        v.setflags(write=False)
        t.setflags(write=False)

    # -- adjacency ---------------------------------------------------------

    def _build_adjacency(self):
        t = self.triangles
        nt = len(t)
        # Directed edge occurrences in winding order, one row per triangle edge.
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=0)
        owner = np.concatenate([np.arange(nt)] * 3)
        und = np.sort(directed, axis=1)
        order = np.lexsort((und[:, 1], und[:, 0]))
        und_sorted = und[order]
        if len(und_sorted):
            new_group = np.empty(len(und_sorted), dtype=bool)
            new_group[0] = True
            new_group[1:] = (und_sorted[1:] != und_sorted[:-1]).any(axis=1)
            starts = np.flatnonzero(new_group)
            counts = np.diff(np.append(starts, len(und_sorted)))
        else:
            starts = np.zeros(0, dtype=np.int64)
            counts = np.zeros(0, dtype=np.int64)

        if counts.size and counts.max() > 2:
            bad = und_sorted[starts[int(np.argmax(counts > 2))]]
            raise TopologyError(
                f"non-manifold edge ({bad[0]}, {bad[1]}) shared by {int(counts.max())} triangles"
            )

        self.edges = und_sorted[starts] if len(starts) else np.zeros((0, 2), dtype=np.int64)
        self.edge_triangle_offsets = np.concatenate([[0], np.cumsum(counts)])
        self.edge_triangle_indices = owner[order]
        # Directed form of each occurrence, aligned with edge_triangle_indices.
        self._edge_occurrence_directed = directed[order]
        self.edge_counts = counts
        self.boundary_edge_mask = counts == 1

        # Vertex -> neighbor vertices (CSR over unique undirected edges).
        e = self.edges
        both = np.concatenate([e, e[:, ::-1]], axis=0)
        nv = len(self.vertices)
        deg = np.bincount(both[:, 0], minlength=nv)
        self.neighbor_offsets = np.concatenate([[0], np.cumsum(deg)])
        order2 = np.argsort(both[:, 0], kind="stable")
        self.neighbor_indices = both[order2, 1]

        self.edges.setflags(write=False)
        self.edge_triangle_indices.setflags(write=False)
        self.neighbor_indices.setflags(write=False)

    def vertex_neighbors(self, v):
        """Indices of vertices sharing an edge with vertex ``v``."""
        return self.neighbor_indices[self.neighbor_offsets[v]:self.neighbor_offsets[v + 1]]

    def edge_triangles(self, edge_index):
        """Triangle indices incident to the edge at ``edge_index`` in ``edges``."""
        o = self.edge_triangle_offsets
        return self.edge_triangle_indices[o[edge_index]:o[edge_index + 1]]

    def adjacency_matrix(self):
        """Symmetric sparse vertex adjacency (1 per undirected edge)."""
        e = self.edges
        nv = len(self.vertices)
        data = np.ones(2 * len(e), dtype=np.int8)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix((data, (rows, cols)), shape=(nv, nv))

    # -- basic measures ----------------------------------------------------

    @property
    def vertex_count(self):
        return len(self.vertices)

    @property
    def triangle_count(self):
        return len(self.triangles)

    def triangle_points(self):
        """(T, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    def triangle_areas(self):
        return _triangle_areas(self.vertices, self.triangles)

    def area(self):
        return float(self.triangle_areas().sum())

    def triangle_normals(self):
        """(T, 3) unit normals following the winding."""
        p = self.triangle_points()
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        lens = np.linalg.norm(n, axis=1)
        return n / lens[:, None]

    def vertex_normals(self):
        """(V, 3) area-weighted unit vertex normals."""
        p = self.triangle_points()
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])  # 2*area weighted
        acc = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(acc, self.triangles[:, k], n)
        lens = np.linalg.norm(acc, axis=1)
        lens[lens == 0.0] = 1.0
        return acc / lens[:, None]

    def signed_volume(self):
        """Signed enclosed volume; positive for outward-oriented closed meshes."""
        p = self.triangle_points()
        return float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)

    def bounds(self):
        """(min_corner, max_corner) of the axis-aligned bounding box."""
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def mean_edge_length(self):
        e = self.edges
        return float(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1).mean())

    # -- topology queries ---------------------------------------------------

    def is_closed(self):
        """True iff every edge is shared by exactly two triangles."""
        return bool((self.edge_counts == 2).all()) and len(self.triangles) > 0

    def euler_characteristic(self):
        return self.vertex_count - len(self.edges) + self.triangle_count

    def boundary_edges(self):
        """(B, 2) directed boundary edges in the winding order of their triangle."""
        idx = np.flatnonzero(self.boundary_edge_mask)
        starts = self.edge_triangle_offsets[idx]
        return self._edge_occurrence_directed[starts]

    def submesh(self, triangle_mask):
        """New mesh from the selected triangles, vertices reindexed.

        Returns the mesh and the old->new vertex index map (-1 for dropped).
        """
        tris = self.triangles[triangle_mask]
        used = np.unique(tris)
        remap = np.full(self.vertex_count, -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        return TriangleMesh(self.vertices[used], remap[tris]), remap


def _triangle_areas(vertices, triangles):
    p = vertices[triangles]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    return 0.5 * np.linalg.norm(n, axis=1)


def cluster_points(points, epsilon):
    """Partition points: bit-identical always merge, pairs within epsilon
    merge transitively (same partition as brute-force pairwise clustering).

    Returns (representatives, labels): representatives in order of first
    appearance, labels mapping each input point to its representative.
    """
    if epsilon < 0:
        raise ContractError("epsilon must be >= 0")
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) == 0:
        return pts.reshape(0, 3), np.zeros(0, dtype=np.int64)

    # Collapse exact duplicates first (cheap, removes per-triangle copies),
    # keeping first-appearance order so output is deterministic.
    uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
    first = np.full(len(uniq), len(pts), dtype=np.int64)
    np.minimum.at(first, inverse, np.arange(len(pts)))
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    verts, index_of = uniq[order], rank[inverse]

    if epsilon > 0.0 and len(verts) > 1:
        from scipy.spatial import cKDTree

        pairs = cKDTree(verts).query_pairs(epsilon, output_type="ndarray")
        if len(pairs):
            parent = np.arange(len(verts))

            def find(i):
                while parent[i] != i:
                    parent[i] = parent[parent[i]]
                    i = parent[i]
                return i

            for a, b in pairs:
                ra, rb = find(int(a)), find(int(b))
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            roots = np.array([find(i) for i in range(len(verts))])
            uniq_roots, index_map = np.unique(roots, return_inverse=True)
            verts = verts[uniq_roots]  # root = smallest index, keeps appearance order
            index_of = index_map[index_of]
    return verts, index_of


def weld_vertices(raw_triangles, epsilon=1e-6):
    """Merge near-coincident corner points of a triangle soup into shared indices.

    Clustering follows ``cluster_points``; each cluster keeps the
    coordinates of its earliest corner. Triangles that collapse under
    welding are dropped.

    Parameters
    ----------
    raw_triangles : (T, 3, 3) float array
        Corner coordinates per triangle.
    epsilon : float
        Merge radius in mm, >= 0. Zero merges bit-identical points only.

    Returns
    -------
    (TriangleMesh, int)
        Welded mesh and the number of dropped degenerate triangles.
    """
    pts = np.asarray(raw_triangles, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)), 0
    verts, index_of = cluster_points(pts, epsilon)

    tris = index_of.reshape(-1, 3)
    distinct = (
        (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 2] != tris[:, 0])
    )
    areas = _triangle_areas(verts, np.where(distinct[:, None], tris, 0))
    keep = distinct & (areas > 0.0)
    dropped = int((~keep).sum())
    tris = tris[keep]

    used = np.unique(tris) if len(tris) else np.zeros(0, dtype=np.int64)
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    mesh = TriangleMesh(verts[used], remap[tris] if len(tris) else tris)
    return mesh, dropped


def connected_component(mesh, seed_vertex):
    """Sub-mesh of all triangles vertex-connected to ``seed_vertex``, reindexed."""
    if not 0 <= seed_vertex < mesh.vertex_count:
        raise ContractError(f"seed vertex {seed_vertex} out of range")
    n_comp, labels = csgraph.connected_components(mesh.adjacency_matrix(), directed=False)
    keep = labels[mesh.triangles[:, 0]] == labels[seed_vertex]
    sub, _ = mesh.submesh(keep)
    return sub


def extract_boundary_loops(mesh):
    """Closed boundary loops as ordered vertex-index sequences.

    Each loop follows the direction boundary edges have in their owning
    triangle, so loops are oriented consistently with the winding. Raises
    TopologyError if a boundary chain does not close.
    """
    directed = mesh.boundary_edges()
    if len(directed) == 0:
        return []
    succ = {}
    for u, v in directed:
        succ.setdefault(int(u), deque()).append(int(v))
    loops = []
    remaining = len(directed)
    start_candidates = sorted(succ)
    for start in start_candidates:
        while succ.get(start):
            loop = [start]
            cur = succ[start].popleft()
            remaining -= 1
            while cur != start:
                loop.append(cur)
                nxt = succ.get(cur)
                if not nxt:
                    raise TopologyError(
                        f"boundary chain starting at vertex {start} does not close (stuck at {cur})"
                    )
                cur = nxt.popleft()
                remaining -= 1
            loops.append(np.array(loop, dtype=np.int64))
    if remaining != 0:
        raise TopologyError("boundary edges left over after loop extraction")
    return loops


def is_closed(mesh):
    return mesh.is_closed()


def euler_characteristic(mesh):
    return mesh.euler_characteristic()


def orient_consistently(mesh, outward=True):
    """Rewind triangles so adjacent triangles agree, majority vote per component.

    Interior edges must be traversed in opposite directions by their two
    triangles. Components are flood-filled; if more than half of a
    component's triangles would flip, the component flips the other way
    (the majority keeps its original winding). If ``outward`` and the
    result is closed, the orientation with positive signed volume wins.
    """
    t = mesh.triangles
    nt = len(t)
    if nt == 0:
        return mesh

    # Triangle pairs across interior edges, with a flag whether their
    # windings currently disagree (same directed traversal = disagree).
    interior = np.flatnonzero(mesh.edge_counts == 2)
    starts = mesh.edge_triangle_offsets[interior]
    t1 = mesh.edge_triangle_indices[starts]
    t2 = mesh.edge_triangle_indices[starts + 1]
    d1 = mesh._edge_occurrence_directed[starts]
    d2 = mesh._edge_occurrence_directed[starts + 1]
    same_dir = (d1 == d2).all(axis=1)

    pair_a = np.concatenate([t1, t2])
    pair_b = np.concatenate([t2, t1])
    pair_flip = np.concatenate([same_dir, same_dir])
    order = np.argsort(pair_a, kind="stable")
    offs = np.concatenate([[0], np.cumsum(np.bincount(pair_a, minlength=nt))])
    adj_tri = pair_b[order]
    adj_flip = pair_flip[order]

    # Per-triangle signed volume contribution and boundary ownership, for the
    # per-component outward check after the majority vote.
    p = mesh.triangle_points()
    contrib = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])) / 6.0
    boundary_starts = mesh.edge_triangle_offsets[np.flatnonzero(mesh.edge_counts == 1)]
    has_boundary = np.zeros(nt, dtype=bool)
    has_boundary[mesh.edge_triangle_indices[boundary_starts]] = True

    flip = np.zeros(nt, dtype=bool)
    seen = np.zeros(nt, dtype=bool)
    flipped_tris = t.copy()
    for seed in range(nt):
        if seen[seed]:
            continue
        comp = [seed]
        seen[seed] = True
        queue = deque([seed])
        while queue:
            cur = queue.popleft()
            for k in range(offs[cur], offs[cur + 1]):
                nb = adj_tri[k]
                if not seen[nb]:
                    seen[nb] = True
                    flip[nb] = flip[cur] ^ adj_flip[k]
                    comp.append(nb)
                    queue.append(nb)
        comp = np.array(comp)
        if flip[comp].sum() * 2 > len(comp):
            flip[comp] = ~flip[comp]
        if outward and not has_boundary[comp].any():
            # Closed component: outward orientation has positive volume.
            signs = np.where(flip[comp], -1.0, 1.0)
            if (signs * contrib[comp]).sum() < 0:
                flip[comp] = ~flip[comp]
        sel = comp[flip[comp]]
        flipped_tris[sel] = flipped_tris[sel][:, ::-1]

    return TriangleMesh(mesh.vertices, flipped_tris)


def merge_meshes(a, b):
    """Concatenate two meshes into one (no welding; indices shifted)."""
    verts = np.concatenate([a.vertices, b.vertices])
    tris = np.concatenate([a.triangles, b.triangles + a.vertex_count])
    return TriangleMesh(verts, tris)
