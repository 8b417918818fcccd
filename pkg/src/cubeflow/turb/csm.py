"""Coherent-structure eddy viscosity.

The Smagorinsky coefficient is set locally from the second invariant of the
velocity gradient normalized by its magnitude, so the model coefficient
vanishes automatically in laminar shear and damps toward walls without any
averaging or wall function.
"""

from __future__ import annotations

import numpy as np

MODEL_C1 = 1.0 / 20.0
ENERGY_EPS = 1e-30  # F = Q/E degenerate-branch cutoff, squared 1/time units


def velocity_gradient_parts(grad: np.ndarray):
    """Symmetric/antisymmetric split of (..., dim, dim) gradient tensors."""
    gt = np.swapaxes(grad, -1, -2)
    s = 0.5 * (grad + gt)
    w = 0.5 * (grad - gt)
    return s, w


def q_criterion(grad: np.ndarray) -> np.ndarray:
    """Second invariant of the velocity gradient; positive where rotation wins."""
    s, w = velocity_gradient_parts(grad)
    ss = np.einsum("...ij,...ij->...", s, s)
    ww = np.einsum("...ij,...ij->...", w, w)
    return 0.5 * (ww - ss)


def csm_eddy_viscosity(grad: np.ndarray, delta) -> np.ndarray:
    """Eddy viscosity nu_t = C * delta**2 * |S| with the coherent-structure
    coefficient C = (1/20) |Q/E|**(3/2).

    grad: (..., dim, dim) velocity gradient tensors; delta: filter width
    (geometric mean cell size), broadcastable to the leading shape.
    |Q/E| <= 1 always, so 0 <= C <= 1/20 and nu_t >= 0.
    """
    s, w = velocity_gradient_parts(grad)
    ss = np.einsum("...ij,...ij->...", s, s)
    ww = np.einsum("...ij,...ij->...", w, w)
    q = 0.5 * (ww - ss)
    e = 0.5 * (ww + ss)
    f_cs = np.where(e < ENERGY_EPS, 0.0, q / np.where(e < ENERGY_EPS, 1.0, e))
    c = MODEL_C1 * np.abs(f_cs) ** 1.5
    return c * np.asarray(delta) ** 2 * np.sqrt(ss)
