"""Exception hierarchy for the guidecad toolkit.

Every error raised by the library derives from GuidecadError so callers
(CLI, HTTP service) can attribute failures to a pipeline stage without
catching bare exceptions.
"""


class GuidecadError(Exception):
    """Base class for all guidecad errors."""


class StlParseError(GuidecadError):
    """Malformed STL input. Carries the byte offset where parsing failed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class TopologyError(GuidecadError):
    """Mesh violates a topological precondition (non-manifold edge, open chain)."""


class ContractError(GuidecadError):
    """An operation was called with arguments outside its contract."""


class ProjectionError(GuidecadError):
    """A point or ray could not be projected onto the target surface."""


class ValidationError(GuidecadError):
    """A contour failed validation (self-intersection, off-surface, near-hole)."""


class SegmentationError(GuidecadError):
    """Segmentation failed: degenerate loop, unreachable anchors, or a loop
    that does not separate the mesh."""


class SideSelectionError(GuidecadError):
    """Outer-surface side selection was ambiguous."""


class ResourceError(GuidecadError):
    """A computation would exceed a configured resource cap."""


class MergeError(GuidecadError):
    """Boolean merge failed: no collision, open polyline chain, or
    unresolvable fragment classification."""


class StageError(GuidecadError):
    """Wraps an error with the pipeline stage it occurred in."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
