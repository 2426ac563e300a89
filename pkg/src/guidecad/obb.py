"""Oriented-bounding-box trees for narrowing triangle collision tests.

Boxes are fitted from the covariance of the contained triangle vertices,
split at the median centroid along the box's longest axis, and compared
with the 15-axis separating-axis test.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class Obb:
    """Oriented box: orthonormal axis rows, half extents along each axis."""

    center: np.ndarray
    axes: np.ndarray
    half_extents: np.ndarray

    def contains(self, points, slack=1e-9):
        local = (np.atleast_2d(points) - self.center) @ self.axes.T
        return (np.abs(local) <= self.half_extents + slack).all(axis=1)

    def corners(self):
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=np.float64,
        )
        return self.center + (signs * self.half_extents) @ self.axes


def fit_obb(points):
    """Covariance-aligned box around a point set."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ContractError("cannot fit a box around zero points")
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / len(pts)
    _, vecs = np.linalg.eigh(cov)
    axes = vecs.T[::-1]  # largest-spread axis first
    local = centered @ axes.T
    lo = local.min(axis=0)
    hi = local.max(axis=0)
    center = mean + 0.5 * (lo + hi) @ axes
    return Obb(center, axes, 0.5 * (hi - lo))


@dataclass(frozen=True)
class ObbNode:
    box: Obb
    triangles: np.ndarray | None
    left: "ObbNode | None" = None
    right: "ObbNode | None" = None

    @property
    def is_leaf(self):
        return self.triangles is not None


class ObbTree:
    """Binary OBB hierarchy over a mesh's triangles."""

    def __init__(self, mesh, leaf_size=4):
        if mesh.triangle_count == 0:
            raise ContractError("cannot build a box tree over an empty mesh")
        if leaf_size < 1:
            raise ContractError("leaf_size must be >= 1")
        self.mesh = mesh
        self.leaf_size = leaf_size
        self._tri_points = mesh.triangle_points()
        self._centroids = self._tri_points.mean(axis=1)
        self.root = self._build(np.arange(mesh.triangle_count, dtype=np.int64))

    def _build(self, tri_ids):
        pts = self._tri_points[tri_ids].reshape(-1, 3)
        box = fit_obb(pts)
        if len(tri_ids) <= self.leaf_size:
            return ObbNode(box, tri_ids)
        axis = int(np.argmax(box.half_extents))
        keys = self._centroids[tri_ids] @ box.axes[axis]
        order = np.argsort(keys, kind="stable")
        mid = len(tri_ids) // 2
        left = tri_ids[order[:mid]]
        right = tri_ids[order[mid:]]
        return ObbNode(box, None, self._build(left), self._build(right))

    def leaves(self):
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.append(node.left)
                stack.append(node.right)
        return out


def obb_overlap(a, b, eps=1e-12):
    """Separating-axis test over the 15 candidate axes of two boxes."""
    rot = a.axes @ b.axes.T
    abs_rot = np.abs(rot) + eps
    t = a.axes @ (b.center - a.center)
    ae = a.half_extents
    be = b.half_extents

    for i in range(3):
        if abs(t[i]) > ae[i] + abs_rot[i] @ be:
            return False
    for j in range(3):
        if abs(t @ rot[:, j]) > be[j] + ae @ abs_rot[:, j]:
            return False
    for i in range(3):
        i1, i2 = (i + 1) % 3, (i + 2) % 3
        for j in range(3):
            j1, j2 = (j + 1) % 3, (j + 2) % 3
            ra = ae[i1] * abs_rot[i2, j] + ae[i2] * abs_rot[i1, j]
            rb = be[j1] * abs_rot[i, j2] + be[j2] * abs_rot[i, j1]
            if abs(t[i2] * rot[i1, j] - t[i1] * rot[i2, j]) > ra + rb:
                return False
    return True


def candidate_pairs(tree_a, tree_b):
    """Triangle index pairs whose leaf boxes overlap, as an (N, 2) array.

    Pairs are unique (each triangle lives in exactly one leaf) and sorted
    for deterministic downstream processing.
    """
    pairs = []
    stack = [(tree_a.root, tree_b.root)]
    while stack:
        na, nb = stack.pop()
        if not obb_overlap(na.box, nb.box):
            continue
        if na.is_leaf and nb.is_leaf:
            pairs.append((na.triangles, nb.triangles))
        elif na.is_leaf or (
            not nb.is_leaf and nb.box.half_extents.max() > na.box.half_extents.max()
        ):
            stack.append((na, nb.left))
            stack.append((na, nb.right))
        else:
            stack.append((na.left, nb))
            stack.append((na.right, nb))
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    blocks = [
        np.stack(np.meshgrid(ta, tb, indexing="ij"), axis=-1).reshape(-1, 2)
        for ta, tb in pairs
    ]
    out = np.vstack(blocks)
    return out[np.lexsort((out[:, 1], out[:, 0]))]
