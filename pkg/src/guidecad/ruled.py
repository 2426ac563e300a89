"""Triangle strips joining two boundary loops with minimal total span length.

A strip between point sequences p (P_0..P_{m-1}) and q (Q_0..Q_{n-1}) is a
sequence of triangles, each using one contour segment and two spans P_iQ_j.
Valid strips correspond one-to-one with monotone lattice paths from (0, 0)
to (m-1, n-1), so the minimum-length strip is a shortest path on that grid
and a simple label-setting sweep solves it exactly.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ContractError
from .mesh import TriangleMesh, extract_boundary_loops, orient_consistently


@dataclass(frozen=True)
class LoopPair:
    """Two aligned open point sequences to be joined by a strip."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64).reshape(-1, 3)
        q = np.asarray(self.q, dtype=np.float64).reshape(-1, 3)
        if len(p) < 2 or len(q) < 2:
            raise ContractError("loop pair needs at least 2 points per side")
        p.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def m(self):
        return len(self.p)

    @property
    def n(self):
        return len(self.q)

    def span_lengths(self):
        """(m, n) matrix of |P_i Q_j|."""
        return np.linalg.norm(self.p[:, None, :] - self.q[None, :, :], axis=2)


@dataclass(frozen=True)
class RuledStrip:
    """Strip triangles indexing the stacked points [p; q] of a LoopPair."""

    pair: LoopPair
    triangles: np.ndarray

    def points(self):
        return np.vstack([self.pair.p, self.pair.q])

    def to_mesh(self):
        return TriangleMesh(self.points(), self.triangles)


def _loop_vector_area(points):
    """Twice the vector area of a closed polygon (translation invariant)."""
    nxt = np.roll(points, -1, axis=0)
    return np.cross(points, nxt).sum(axis=0)


def _q_alignment(p_points, q_points):
    """Index order that reverses/rotates q to start nearest P_0, co-oriented.

    Applying the returned order to q (or to its vertex indices) yields the
    aligned sequence.
    """
    p = np.asarray(p_points, dtype=np.float64).reshape(-1, 3)
    q = np.asarray(q_points, dtype=np.float64).reshape(-1, 3)
    if len(p) < 3 or len(q) < 3:
        raise ContractError("loop alignment needs closed loops of >= 3 points")
    order = np.arange(len(q))
    if _loop_vector_area(p) @ _loop_vector_area(q) < 0.0:
        order = order[::-1]
    start = int(np.argmin(np.linalg.norm(q[order] - p[0], axis=1)))
    return np.roll(order, -start)


def align_loops(p_points, q_points):
    """Open two closed loops into a LoopPair ready for strip construction.

    q is reversed if the loops' winding orientations disagree and rotated so
    Q_0 is its point nearest P_0, which keeps the strip from twisting.
    """
    q = np.asarray(q_points, dtype=np.float64).reshape(-1, 3)
    return LoopPair(p_points, q[_q_alignment(p_points, q_points)])


def count_sequences(m, n):
    """Number of distinct valid strips between sequences of m and n points.

    Equals the number of monotone lattice paths, (m+n-2)! / ((m-1)!(n-1)!).
    """
    if m < 2 or n < 2:
        raise ContractError("need m >= 2 and n >= 2")
    return comb(m + n - 2, m - 1)


def label_setting_shortest_path(pair):
    """Minimal-length monotone path over the span grid of a LoopPair.

    Node (i, j) carries the span P_iQ_j; entering it costs that span's
    length, the source (0, 0) costs nothing, and each node is reached from
    below or from the left. Labels are filled in index order; ties prefer
    the from-left predecessor. Distances accumulate one addition per node
    in path order, so the result is bitwise comparable with a path-order
    enumeration of all strips.

    Returns
    -------
    (dis (m, n), prev (m, n) int8, path (m+n-1, 2) int64)
        prev is -1 where the best predecessor is below, +1 where it is to
        the left, 0 at the source. path runs from (0, 0) to (m-1, n-1).
    """
    lengths = pair.span_lengths()
    m, n = lengths.shape
    span = lengths.tolist()
    dis = [[0.0] * n for _ in range(m)]
    prev = [[0] * n for _ in range(m)]
    for j in range(1, n):
        dis[0][j] = dis[0][j - 1] + span[0][j]
        prev[0][j] = 1
    for i in range(1, m):
        dis[i][0] = dis[i - 1][0] + span[i][0]
        prev[i][0] = -1
    for i in range(1, m):
        below = dis[i - 1]
        cur = dis[i]
        prow = prev[i]
        row_span = span[i]
        acc = cur[0]
        for j in range(1, n):
            b = below[j]
            if b < acc:
                acc = b + row_span[j]
                prow[j] = -1
            else:
                acc = acc + row_span[j]
                prow[j] = 1
            cur[j] = acc

    path = [(m - 1, n - 1)]
    i, j = m - 1, n - 1
    while (i, j) != (0, 0):
        if prev[i][j] == -1:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    return (
        np.array(dis, dtype=np.float64),
        np.array(prev, dtype=np.int8),
        np.array(path, dtype=np.int64),
    )


def path_to_strip(pair, path, close=False):
    """Strip triangles for a monotone grid path.

    An upward arc (advancing P) at node (i, j) emits (P_i, P_{i+1}, Q_j); a
    rightward arc emits (P_i, Q_{j+1}, Q_j). Adjacent triangles then share
    each span edge in opposite directions, so the strip is consistently
    wound. With close=True two further triangles bridge the opened ends,
    consuming the P_{m-1}P_0 and Q_{n-1}Q_0 segments.
    """
    m, n = pair.m, pair.n
    steps = np.asarray(path, dtype=np.int64)
    if len(steps) != m + n - 1 or tuple(steps[0]) != (0, 0) or tuple(steps[-1]) != (m - 1, n - 1):
        raise ContractError("path must run from (0, 0) to (m-1, n-1)")
    deltas = np.diff(steps, axis=0)
    if not ((deltas.sum(axis=1) == 1) & (deltas >= 0).all(axis=1)).all():
        raise ContractError("path must advance one index per step")

    tris = []
    for (i, j), (di, _) in zip(steps[:-1], deltas):
        if di == 1:
            tris.append((i, i + 1, m + j))
        else:
            tris.append((i, m + j + 1, m + j))
    if close:
        tris.append((m - 1, 0, m + n - 1))
        tris.append((0, m, m + n - 1))
    return RuledStrip(pair, np.array(tris, dtype=np.int64))


def build_strip(pair, close=False):
    """Shortest-path strip for an aligned LoopPair."""
    _, _, path = label_setting_shortest_path(pair)
    return path_to_strip(pair, path, close=close)


def connect_shells(inner, outer):
    """Join two single-boundary shells into one closed, outward-facing mesh.

    The connecting strip reuses the existing border vertices of both shells,
    so the seam introduces no new points and every border edge ends up
    shared by exactly two triangles.
    """
    inner_loops = extract_boundary_loops(inner)
    outer_loops = extract_boundary_loops(outer)
    if len(inner_loops) != 1 or len(outer_loops) != 1:
        raise ContractError(
            "connect_shells needs exactly one boundary loop per shell "
            f"(got {len(inner_loops)} and {len(outer_loops)})"
        )
    p_idx = inner_loops[0]
    q_idx = outer_loops[0][_q_alignment(inner.vertices[inner_loops[0]], outer.vertices[outer_loops[0]])]
    pair = LoopPair(inner.vertices[p_idx], outer.vertices[q_idx])
    strip = build_strip(pair, close=True)

    m = pair.m
    offset = len(inner.vertices)
    local = strip.triangles
    mapped = np.where(local < m, p_idx[np.minimum(local, m - 1)], offset + q_idx[np.maximum(local - m, 0)])
    vertices = np.vstack([inner.vertices, outer.vertices])
    triangles = np.vstack([inner.triangles, outer.triangles + offset, mapped])
    return orient_consistently(TriangleMesh(vertices, triangles), outward=True)
