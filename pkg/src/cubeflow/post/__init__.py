"""Post-processing: surface forces, error norms, field export."""

from .sampling import SurfaceSample, sample_surface, shepard_sample, thin_plate_filter
from .forces import ForceReport, bl_thickness, error_norms, integrate_forces
from .profiles import center_slice, meridian_cp_profile, sample_probes
from .export import (
    export_fields,
    read_vtk_block,
    write_csv,
    write_history_csv,
    write_vtk_block,
)

__all__ = [
    "center_slice",
    "meridian_cp_profile",
    "sample_probes",
    "SurfaceSample",
    "sample_surface",
    "shepard_sample",
    "thin_plate_filter",
    "ForceReport",
    "bl_thickness",
    "error_norms",
    "integrate_forces",
    "export_fields",
    "read_vtk_block",
    "write_csv",
    "write_history_csv",
    "write_vtk_block",
]
