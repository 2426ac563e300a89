"""Drill tube solids.

A drill tube is an annular cylinder around a planned drill axis: the bore
guides the surgeon's drill, the outer wall fuses with the template body
during the merge. Tubes are closed manifolds of torus topology.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .mesh import TriangleMesh, orient_consistently


@dataclass(frozen=True)
class DrillAxis:
    """Planned drill trajectory.

    ``entry`` is the point where the axis pierces the anatomy surface,
    ``direction`` points outward (away from the bone, toward the surgeon),
    radii are bore/outer wall in mm, ``length`` is how far the tube
    extends outward from the entry point.
    """

    entry: np.ndarray
    direction: np.ndarray
    inner_radius: float
    outer_radius: float
    length: float

    def __post_init__(self):
        e = np.asarray(self.entry, dtype=np.float64).reshape(3)
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(d)
        if norm == 0.0 or not np.isfinite(norm):
            raise ContractError("drill axis direction must be nonzero and finite")
        if not (0.0 < self.inner_radius < self.outer_radius):
            raise ContractError("need 0 < inner_radius < outer_radius")
        if self.length <= 0.0:
            raise ContractError("tube length must be positive")
        object.__setattr__(self, "entry", e)
        object.__setattr__(self, "direction", d / norm)
        self.entry.setflags(write=False)
        self.direction.setflags(write=False)


def _axis_frame(direction):
    # Deterministic orthonormal basis perpendicular to the axis.
    ref = np.zeros(3)
    ref[int(np.argmin(np.abs(direction)))] = 1.0
    u = np.cross(direction, ref)
    u /= np.linalg.norm(u)
    v = np.cross(direction, u)
    return u, v


def make_tube(axis, segments=64, tail=0.0, axial=1):
    """Annular tube solid around a drill axis.

    The solid spans from ``entry - tail * direction`` to
    ``entry + length * direction``; a positive tail makes the tube pierce
    the template wall so the merged bore goes all the way through.
    ``axial`` rows of wall quads keep triangles short along the axis so a
    merge removes thin bands around each crossing instead of whole walls;
    ``axial=None`` matches the axial step to the circumferential one.
    Result: closed mesh, ``4 * segments * (axial + 1)`` triangles, Euler
    characteristic 0.
    """
    if segments < 3:
        raise ContractError("tube needs at least 3 segments")
    if tail < 0.0:
        raise ContractError("tail must be >= 0")
    height = axis.length + tail
    if axial is None:
        around = 2.0 * np.pi * axis.outer_radius / segments
        axial = max(1, int(np.ceil(height / around)))
    if axial < 1:
        raise ContractError("axial must be >= 1")
    d = axis.direction
    u, v = _axis_frame(d)
    bottom = axis.entry - tail * d

    ang = 2.0 * np.pi * np.arange(segments) / segments
    circle = np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * v
    levels = bottom + np.linspace(0.0, height, axial + 1)[:, None] * d

    # Vertex layout: outer rings level by level, then inner rings.
    rings = np.concatenate(
        [levels[:, None, :] + r * circle for r in (axis.outer_radius, axis.inner_radius)]
    ).reshape(-1, 3)
    ring = np.arange(segments)
    nxt = np.roll(ring, -1)
    outer = lambda lev: lev * segments + ring
    inner = lambda lev: (axial + 1 + lev) * segments + ring

    def quad(a, b, c, dd):
        # Two triangles per quad, consistent diagonal.
        return np.stack([np.stack([a, b, c], axis=1), np.stack([a, c, dd], axis=1)])

    walls = []
    for lev in range(axial):
        o0, o1 = outer(lev), outer(lev + 1)
        i0, i1 = inner(lev), inner(lev + 1)
        walls.append(quad(o0, o0[nxt], o1[nxt], o1).reshape(-1, 3))
        walls.append(quad(i0[nxt], i0, i1, i1[nxt]).reshape(-1, 3))
    bo, bi = outer(0), inner(0)
    to, ti = outer(axial), inner(axial)
    tris = np.concatenate(
        walls
        + [
            quad(bi, bi[nxt], bo[nxt], bo).reshape(-1, 3),      # bottom ring
            quad(to, to[nxt], ti[nxt], ti).reshape(-1, 3),      # top ring
        ]
    )
    return orient_consistently(TriangleMesh(rings, tris))


def read_axes(path):
    """Drill axes from a text file: one ``ex ey ez dx dy dz r_in r_out len`` per line.

    Blank lines and ``#`` comments are skipped.
    """
    axes = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 9:
                raise ContractError(f"axis line {lineno}: expected 9 numbers, got {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise ContractError(f"axis line {lineno}: unparseable number") from None
            axes.append(
                DrillAxis(
                    entry=np.array(vals[0:3]),
                    direction=np.array(vals[3:6]),
                    inner_radius=vals[6],
                    outer_radius=vals[7],
                    length=vals[8],
                )
            )
    return axes


def write_axes(path, axes):
    with open(path, "w") as fh:
        for a in axes:
            row = np.concatenate(
                [a.entry, a.direction, [a.inner_radius, a.outer_radius, a.length]]
            )
            fh.write(" ".join(f"{x:.9g}" for x in row) + "\n")
