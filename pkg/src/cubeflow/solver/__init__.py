"""Fractional-step incompressible flow solver on the cube forest."""

from .config import BoundarySpec, FaceBC, SchemeConfig
from .bcs import BoundaryOps
from .operators import FieldOps
from .poisson import PoissonOperator, PoissonSolveError
from .stepper import FieldState, FlowSolver, MomentumSolveError, StepDiagnostics

__all__ = [
    "BoundarySpec",
    "FaceBC",
    "SchemeConfig",
    "BoundaryOps",
    "FieldOps",
    "PoissonOperator",
    "PoissonSolveError",
    "FieldState",
    "FlowSolver",
    "MomentumSolveError",
    "StepDiagnostics",
]
