"""Topology-free immersed boundary: classification, wall stencils, forcing."""

from .closure import forcing_weight, ghost_value
from .mask import FLUID, NEAR, WALL, CellMask, classify_cells, dead_end_filter, sweep_crossings
from .blocks import WallStencilSet, build_wall_stencils
from .forcing import compute_forcing

__all__ = [
    "forcing_weight",
    "ghost_value",
    "FLUID",
    "NEAR",
    "WALL",
    "CellMask",
    "classify_cells",
    "dead_end_filter",
    "sweep_crossings",
    "WallStencilSet",
    "build_wall_stencils",
    "compute_forcing",
]
