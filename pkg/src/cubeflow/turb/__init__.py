"""Subgrid-scale model and synthetic isotropic turbulence."""

from .csm import csm_eddy_viscosity, q_criterion, velocity_gradient_parts
from .isotropic import (
    FourierModes,
    SpectrumSpec,
    bundled_cbc_table,
    energy_spectrum,
    generate_isotropic_field,
    load_spectrum_table,
    sample_modes,
    spectrum_parseval_gap,
)

__all__ = [
    "csm_eddy_viscosity",
    "q_criterion",
    "velocity_gradient_parts",
    "FourierModes",
    "SpectrumSpec",
    "bundled_cbc_table",
    "energy_spectrum",
    "generate_isotropic_field",
    "load_spectrum_table",
    "sample_modes",
    "spectrum_parseval_gap",
]
