"""Dirty triangle-soup geometry: loading, defect audit, ray queries."""

from .soup import IssueReport, TriangleSoup, audit_geometry, default_weld_tolerance
from .stl import StlFormatError, load_geometry, save_binary, save_text
from .raytrace import (
    DET_EPS_REL,
    RayHit,
    TriangleIndex,
    build_accelerator,
    line_crossings,
    ray_intersections,
    triangle_box_overlap,
)

__all__ = [
    "IssueReport",
    "TriangleSoup",
    "audit_geometry",
    "default_weld_tolerance",
    "StlFormatError",
    "load_geometry",
    "save_binary",
    "save_text",
    "DET_EPS_REL",
    "RayHit",
    "TriangleIndex",
    "build_accelerator",
    "line_crossings",
    "ray_intersections",
    "triangle_box_overlap",
]
