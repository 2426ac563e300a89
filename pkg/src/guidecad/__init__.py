"""Mesh toolkit and design service for patient-matched drill guides.

Core flow: load a bone surface STL, sketch a closed contour on it,
segment the contact patch, offset it to a constant-thickness shell,
stitch the shells into a closed template, add drill tubes, and merge
everything into one printable solid.
"""

from .errors import (
    ContractError,
    GuidecadError,
    MergeError,
    ProjectionError,
    ResourceError,
    SegmentationError,
    SideSelectionError,
    StageError,
    StlParseError,
    TopologyError,
    ValidationError,
)
from .mesh import (
    TriangleMesh,
    connected_component,
    extract_boundary_loops,
    merge_meshes,
    orient_consistently,
    weld_vertices,
)
from .pipeline import StageTimings, TemplateParams, generate_template
from .stl import load_stl, read_stl, write_stl
from .tubes import DrillAxis

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "DrillAxis",
    "GuidecadError",
    "MergeError",
    "ProjectionError",
    "ResourceError",
    "SegmentationError",
    "SideSelectionError",
    "StageError",
    "StageTimings",
    "StlParseError",
    "TemplateParams",
    "TopologyError",
    "TriangleMesh",
    "ValidationError",
    "connected_component",
    "extract_boundary_loops",
    "generate_template",
    "load_stl",
    "merge_meshes",
    "orient_consistently",
    "read_stl",
    "weld_vertices",
    "write_stl",
    "__version__",
]
