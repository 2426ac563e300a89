"""Contour drawing on a mesh surface.

The user picks a handful of control points on the anatomy; a cardinal
spline through them, densely resampled and re-projected onto the surface,
becomes the segmentation contour. The spline interpolates its controls
exactly, so picked points always lie on the final loop.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ProjectionError, ValidationError
from .spatial import MeshDistanceQuery, closest_point_on_segments, segment_segment_distance


@dataclass(frozen=True)
class ControlPointSet:
    """Ordered contour control points; edits return new instances."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)

    def add(self, point, index=None):
        """Insert a point (append by default)."""
        p = np.asarray(point, dtype=np.float64).reshape(1, 3)
        idx = len(self.points) if index is None else index
        if not 0 <= idx <= len(self.points):
            raise ContractError(f"insert index {idx} out of range")
        return ControlPointSet(np.insert(self.points, idx, p, axis=0))

    def move(self, index, point):
        if not 0 <= index < len(self.points):
            raise ContractError(f"move index {index} out of range")
        pts = self.points.copy()
        pts[index] = np.asarray(point, dtype=np.float64)
        return ControlPointSet(pts)

    def delete(self, index):
        if not 0 <= index < len(self.points):
            raise ContractError(f"delete index {index} out of range")
        return ControlPointSet(np.delete(self.points, index, axis=0))


@dataclass(frozen=True)
class ContourLoop:
    """Sampled contour polyline. ``closed`` loops imply a segment from the
    last point back to the first; the first point is not repeated."""

    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)

    def segments(self):
        """(start, end) arrays of the polyline segments."""
        a = self.points
        b = np.roll(a, -1, axis=0) if self.closed else a[1:]
        if not self.closed:
            a = a[:-1]
        return a, b

    def length(self):
        a, b = self.segments()
        return float(np.linalg.norm(b - a, axis=1).sum())


def resample_spline(control_points, spacing, tension=0.5, closed=True):
    """Sample a cardinal spline through the control points.

    Tangent at P_i is ``tension * (P_{i+1} - P_{i-1})``; each span gets
    ``ceil(chord / spacing)`` Hermite samples starting exactly at its
    first control, so every control point appears in the output verbatim.

    Parameters
    ----------
    control_points : (M, 3) array, M >= 2 (M >= 3 when closed)
    spacing : float
        Target distance between samples, > 0.
    tension : float
        Cardinal tension; 0.5 gives the classic interpolating spline.
    closed : bool
        Wrap around from the last control to the first.

    Returns
    -------
    (N, 3) sampled polyline (closed loops do not repeat the first point).
    """
    pts = np.asarray(control_points, dtype=np.float64).reshape(-1, 3)
    m = len(pts)
    if spacing <= 0:
        raise ContractError("spacing must be positive")
    if m < (3 if closed else 2):
        raise ContractError(f"need at least {'3 controls for a closed loop' if closed else '2 controls'}")

    if closed:
        prev = np.roll(pts, 1, axis=0)
        nxt = np.roll(pts, -1, axis=0)
        tangents = tension * (nxt - prev)
        spans = [(i, (i + 1) % m) for i in range(m)]
    else:
        tangents = np.empty_like(pts)
        tangents[1:-1] = tension * (pts[2:] - pts[:-2])
        tangents[0] = tension * 2.0 * (pts[1] - pts[0])
        tangents[-1] = tension * 2.0 * (pts[-1] - pts[-2])
        spans = [(i, i + 1) for i in range(m - 1)]

    out = []
    for i, j in spans:
        chord = np.linalg.norm(pts[j] - pts[i])
        n = max(1, int(np.ceil(chord / spacing)))
        t = np.arange(n, dtype=np.float64) / n  # includes t=0, excludes t=1
        t2 = t * t
        t3 = t2 * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        seg = (
            np.outer(h00, pts[i])
            + np.outer(h10, tangents[i])
            + np.outer(h01, pts[j])
            + np.outer(h11, tangents[j])
        )
        out.append(seg)
    result = np.concatenate(out)
    if not closed:
        result = np.concatenate([result, pts[-1][None, :]])
    return result


def project_to_surface(points, mesh, max_distance=None):
    """Snap points onto the mesh surface (closest point on any triangle).

    Raises ProjectionError if a point is farther than ``max_distance``
    from the surface.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d, cp, ti = MeshDistanceQuery(mesh).query(pts)
    if max_distance is not None and (d > max_distance).any():
        worst = int(np.argmax(d))
        raise ProjectionError(
            f"point {worst} is {d[worst]:.3g} mm from the surface (limit {max_distance:.3g})"
        )
    return cp, ti


def build_contour(control_points, mesh, spacing, tension=0.5, closed=True, max_distance=None):
    """Spline-resample the controls and re-project every sample onto the mesh."""
    if isinstance(control_points, ControlPointSet):
        control_points = control_points.points
    sampled = resample_spline(control_points, spacing, tension=tension, closed=closed)
    projected, _ = project_to_surface(sampled, mesh, max_distance=max_distance)
    return ContourLoop(projected, closed=closed)


def validate_loop(loop, mesh, surface_tolerance, hole_clearance=None, crossing_tolerance=None):
    """Reject contours that cannot segment the surface cleanly.

    Checks, in order: at least 3 points; every point within
    ``surface_tolerance`` of the surface; no two non-adjacent segments
    closer than ``crossing_tolerance`` (self-intersection); no point
    within ``hole_clearance`` of a mesh boundary edge (the loop must not
    run into a hole or off the open rim).
    """
    pts = loop.points if isinstance(loop, ContourLoop) else np.asarray(loop, dtype=np.float64)
    n = len(pts)
    if n < 3:
        raise ValidationError(f"contour needs at least 3 points, got {n}")

    d, _, _ = MeshDistanceQuery(mesh).query(pts)
    if (d > surface_tolerance).any():
        worst = int(np.argmax(d))
        raise ValidationError(
            f"contour point {worst} lies {d[worst]:.3g} mm off the surface "
            f"(tolerance {surface_tolerance:.3g})"
        )

    scale = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))) or 1.0
    tol = crossing_tolerance if crossing_tolerance is not None else 1e-9 * scale
    a = pts
    b = np.roll(pts, -1, axis=0)
    ii, jj = np.triu_indices(n, k=2)
    adjacent = (jj - ii == n - 1)  # last segment wraps to the first
    ii, jj = ii[~adjacent], jj[~adjacent]
    if len(ii):
        dist = segment_segment_distance(a[ii], b[ii], a[jj], b[jj])
        if (dist < tol).any():
            k = int(np.argmin(dist))
            raise ValidationError(
                f"contour self-intersects: segments {ii[k]} and {jj[k]} "
                f"are {dist[k]:.3g} mm apart"
            )

    if hole_clearance is not None:
        boundary = mesh.boundary_edges()
        if len(boundary):
            ba = mesh.vertices[boundary[:, 0]]
            bb = mesh.vertices[boundary[:, 1]]
            for i, p in enumerate(pts):
                cp = closest_point_on_segments(np.repeat(p[None, :], len(ba), axis=0), ba, bb)
                dmin = np.linalg.norm(cp - p, axis=1).min()
                if dmin < hole_clearance:
                    raise ValidationError(
                        f"contour point {i} is {dmin:.3g} mm from a surface hole/rim "
                        f"(clearance {hole_clearance:.3g})"
                    )


def read_contour(path):
    """Control points from a text file: one ``x y z`` per line, loop implied.

    Blank lines and ``#`` comments are skipped.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 3:
                raise ContractError(
                    f"contour line {lineno}: expected 3 numbers, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise ContractError(f"contour line {lineno}: unparseable number") from None
    if not rows:
        raise ContractError(f"contour file {path} has no points")
    return ControlPointSet(np.array(rows))


def write_contour(path, points):
    pts = getattr(points, "points", points)
    with open(path, "w") as fh:
        for p in np.asarray(pts, dtype=np.float64).reshape(-1, 3):
            fh.write(" ".join(f"{x:.9g}" for x in p) + "\n")
