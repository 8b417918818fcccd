"""Building-cube grid: forest generation, cell fields, halo exchange."""

from .forest import (
    HALO,
    Cube,
    CubeForest,
    RefinementBudgetError,
    check_two_to_one,
    generate_forest,
)
from .field import BoundaryFace, FieldLayout, ax_slices

__all__ = [
    "HALO",
    "Cube",
    "CubeForest",
    "RefinementBudgetError",
    "check_two_to_one",
    "generate_forest",
    "BoundaryFace",
    "FieldLayout",
    "ax_slices",
]
