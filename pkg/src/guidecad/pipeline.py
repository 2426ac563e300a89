"""End-to-end template generation with per-stage timing.

Once the user has drawn a contour around the target region, the template
builds in five automatic stages: segment the inner surface out of the
anatomy, offset it, project border samples onto the offset, segment the
outer surface with them, and connect the two shells with ruled strips.
Drilling tubes are then fused in one at a time. Every stage is wall-clock
timed; the report lists one ``stage<TAB>seconds`` line per stage.
"""

import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .contour import build_contour, validate_loop
from .errors import ContractError, GuidecadError, SegmentationError, StageError, TopologyError
from .merge import merge_union
from .offset import offset_surface, project_border_points, select_outer_side
from .ruled import connect_shells
from .segmentation import closest_vertices, segment_by_contour
from .tubes import make_tube

STAGE_CONTOUR = "contour validation"
STAGE_INNER = "Inner surface segmentation"
STAGE_OFFSET = "Offset of inner surface"
STAGE_POINTS = "Generation of points for outer surface segmentation"
STAGE_OUTER = "Outer surface segmentation"
STAGE_CONNECT = "Connection of inner and outer surfaces"
STAGE_TOTAL = "Initial template generation"
STAGE_BOOLEAN = "Runtime of Boolean operation(s)"


@dataclass(frozen=True)
class TemplateParams:
    """Generation knobs.

    ``spacing`` controls both contour resampling and the distance-field
    grid step, defaulting to ``thickness / 4``. ``sampling_step`` strides
    the inner border points projected for outer clipping. ``seed_point``
    overrides which side of the contour is kept (default: the patch the
    loop surrounds). ``weld_epsilon`` overrides the merge point weld.
    """

    thickness: float = 2.5
    spacing: float = None
    sampling_step: int = 10
    k_neighbors: int = 8
    tube_segments: int = 64
    weld_epsilon: float = None
    seed_point: np.ndarray = None

    def __post_init__(self):
        if self.thickness <= 0.0:
            raise ContractError("thickness must be positive")
        if self.spacing is not None and self.spacing <= 0.0:
            raise ContractError("spacing must be positive")
        if self.sampling_step < 1:
            raise ContractError("sampling_step must be >= 1")
        if self.k_neighbors < 1:
            raise ContractError("k_neighbors must be >= 1")
        if self.tube_segments < 8:
            raise ContractError("tube_segments must be >= 8")
        if self.weld_epsilon is not None and self.weld_epsilon <= 0.0:
            raise ContractError("weld_epsilon must be positive")
        if self.seed_point is not None:
            seed = np.asarray(self.seed_point, dtype=np.float64).reshape(3)
            seed.setflags(write=False)
            object.__setattr__(self, "seed_point", seed)

    @property
    def grid_spacing(self):
        return self.thickness / 4.0 if self.spacing is None else self.spacing


@dataclass(frozen=True)
class StageTimings:
    """Wall-clock seconds per stage; ``boolean`` is None without tubes."""

    inner_segmentation: float
    offset: float
    point_generation: float
    outer_segmentation: float
    connection: float
    boolean: float = None

    @property
    def initial_template(self):
        """The automatic stages sum to the initial template time."""
        return (
            self.inner_segmentation
            + self.offset
            + self.point_generation
            + self.outer_segmentation
            + self.connection
        )

    def rows(self):
        rows = [
            (STAGE_INNER, self.inner_segmentation),
            (STAGE_OFFSET, self.offset),
            (STAGE_POINTS, self.point_generation),
            (STAGE_OUTER, self.outer_segmentation),
            (STAGE_CONNECT, self.connection),
            (STAGE_TOTAL, self.initial_template),
        ]
        if self.boolean is not None:
            rows.append((STAGE_BOOLEAN, self.boolean))
        return rows

    def report(self):
        return "".join(f"{name}\t{seconds:.3f}\n" for name, seconds in self.rows())


@contextmanager
def _stage(name, clock=None):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except GuidecadError as err:
        raise StageError(name, err) from err
    finally:
        if clock is not None:
            clock[name] = time.perf_counter() - start


def generate_template(mesh, control_points, params=None, axes=()):
    """Full pipeline: (template mesh, stage timings).

    ``control_points`` is the user's contour input, an (M, 3) array or
    ControlPointSet of points on or near the surface; ``axes`` is a
    sequence of DrillAxis. With no axes the result is the initial
    template (plain closed shell, no bores).
    """
    params = TemplateParams() if params is None else params
    spacing = params.grid_spacing
    clock = {}
    axes = tuple(axes or ())

    with _stage(STAGE_CONTOUR):
        contour = build_contour(control_points, mesh, spacing)
        scale = float(np.linalg.norm(mesh.bounds()[1] - mesh.bounds()[0]))
        validate_loop(
            contour,
            mesh,
            surface_tolerance=1e-6 * scale,
            hole_clearance=params.thickness,
        )

    with _stage(STAGE_INNER, clock):
        seed = None
        if params.seed_point is not None:
            seed = int(closest_vertices(mesh, params.seed_point[None, :])[0])
        seg = segment_by_contour(
            mesh, contour.points, seed_vertex=seed, k=params.k_neighbors
        )
        inner = seg.region
        if len(seg.clip.region_cut_loops) != 1:
            raise SegmentationError(
                f"inner surface has {len(seg.clip.region_cut_loops)} cut loops "
                "(needs exactly 1)"
            )

    with _stage(STAGE_OFFSET, clock):
        offset_mesh, _ = offset_surface(inner, params.thickness, spacing=spacing)

    with _stage(STAGE_POINTS, clock):
        border = seg.clip.region_cut_loops[0]
        strided = border[:: params.sampling_step]
        if len(strided) < 3:
            raise SegmentationError(
                f"sampling step {params.sampling_step} leaves "
                f"{len(strided)} border points (needs >= 3)"
            )
        outer_points = project_border_points(
            inner, strided, offset_mesh, max_distance=4.0 * params.thickness
        )

    with _stage(STAGE_OUTER, clock):
        oseg = segment_by_contour(offset_mesh, outer_points, k=params.k_neighbors)
        outer = select_outer_side(oseg.region, oseg.complement, inner)

    with _stage(STAGE_CONNECT, clock):
        template = connect_shells(inner, outer)

    if axes:
        with _stage(STAGE_BOOLEAN, clock):
            for axis in axes:
                tube = make_tube(
                    axis, segments=params.tube_segments, tail=params.thickness, axial=None
                )
                template = merge_union(template, tube, weld_tolerance=params.weld_epsilon)

    if not template.is_closed():
        raise StageError(STAGE_CONNECT, TopologyError("generated template is not closed"))

    return template, StageTimings(
        inner_segmentation=clock[STAGE_INNER],
        offset=clock[STAGE_OFFSET],
        point_generation=clock[STAGE_POINTS],
        outer_segmentation=clock[STAGE_OUTER],
        connection=clock[STAGE_CONNECT],
        boolean=clock.get(STAGE_BOOLEAN),
    )
