"""Case configuration, canonical cases, convergence studies, CLI."""

from .analytic import taylor_green_pressure, taylor_green_velocity
from .config import CaseConfig
from .runner import BuiltCase, RunResult, StageError, build_case, run_case
from .study import StudyResult, convergence_study, fit_slope
from . import canonical

__all__ = [
    "taylor_green_pressure",
    "taylor_green_velocity",
    "CaseConfig",
    "BuiltCase",
    "RunResult",
    "StageError",
    "build_case",
    "run_case",
    "StudyResult",
    "convergence_study",
    "fit_slope",
    "canonical",
]
