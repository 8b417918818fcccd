"""Near-field surface force integration and aerodynamic coefficients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ForceReport:
    force: np.ndarray  # net surface force vector
    cd: float
    cl: float
    reference_area: float
    dynamic_pressure: float
    pressure_force: np.ndarray = None
    viscous_force: np.ndarray = None
    sample_count: int = 0
    invalid_samples: int = 0
    filtered_samples: int = 0

    def coefficient(self, direction) -> float:
        d = np.asarray(direction, dtype=np.float64)
        d = d / np.linalg.norm(d)
        return float(self.force[: d.size] @ d / (self.dynamic_pressure * self.reference_area))


def integrate_forces(
    samples: list,
    viscosity: float,
    rho: float = 1.0,
    u_ref: float = 1.0,
    reference_area: float = 1.0,
    drag_dir=(1.0, 0.0, 0.0),
    lift_dir=(0.0, 1.0, 0.0),
) -> ForceReport:
    """Sum per-sample tractions (-p n + viscous) times area.

    The viscous part uses the one-sided wall gradients carried by the
    samples; invalid or filtered samples contribute nothing.  Coefficients
    invert exactly through cd * (q A) = drag force.
    """
    dim = None
    f_p = None
    f_v = None
    invalid = 0
    filtered = 0
    count = 0
    for s in samples:
        if dim is None:
            dim = s.point.size
            f_p = np.zeros(dim)
            f_v = np.zeros(dim)
        if not s.valid:
            invalid += 1
            continue
        if not s.keep:
            filtered += 1
            continue
        count += 1
        f_p += -s.pressure * s.normal * s.area
        if s.grad is not None:
            tau = viscosity * (s.grad + s.grad.T)
            f_v += tau @ s.normal * s.area
    if f_p is None:
        f_p = np.zeros(3)
        f_v = np.zeros(3)
        dim = 3
    force = f_p + f_v
    q = 0.5 * rho * u_ref**2
    drag = np.asarray(drag_dir, dtype=np.float64)[:dim]
    lift = np.asarray(lift_dir, dtype=np.float64)[:dim]
    return ForceReport(
        force=force,
        cd=float(force @ drag / (q * reference_area)),
        cl=float(force @ lift / (q * reference_area)),
        reference_area=reference_area,
        dynamic_pressure=q,
        pressure_force=f_p,
        viscous_force=f_v,
        sample_count=count,
        invalid_samples=invalid,
        filtered_samples=filtered,
    )


def bl_thickness(diameter: float, u0: float, nu: float) -> float:
    """Laminar boundary-layer estimate 3 sqrt((D/2) nu / U0); the case runner
    warns when the cell size cannot resolve it."""
    if diameter <= 0 or u0 <= 0 or nu <= 0:
        raise ValueError("diameter, u0 and nu must be positive")
    return 3.0 * np.sqrt(0.5 * diameter * nu / u0)


def error_norms(field: np.ndarray, reference: np.ndarray, select=None):
    """(L1, L2, Linf) of field - reference over the selected cells."""
    e = np.abs(np.asarray(field) - np.asarray(reference))
    if select is not None:
        e = e[select]
    if e.size == 0:
        return 0.0, 0.0, 0.0
    return float(np.mean(e)), float(np.sqrt(np.mean(e**2))), float(np.max(e))
