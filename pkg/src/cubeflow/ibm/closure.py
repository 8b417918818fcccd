"""Axis-projected wall closure: ghost values and forcing weights.

All wall treatment is one-dimensional along grid lines.  ``d`` is the
distance from the owning cell center to the first wall crossing on the line;
the ghost value is what the stencil reads past the crossing so the
reconstructed profile passes through the wall value.
"""

from __future__ import annotations

import numpy as np


def ghost_value(q_i, q_im1, q_ib, d, dx):
    """First ghost-cell value for a Dirichlet wall on the axis line.

    Two branches avoid extrapolation with small wall distances:

      0.5 <= d/dx < 1:  (dx/d) q_ib + ((d - dx)/d) q_i
      0   <= d/dx < .5: 2 q_ib + ((2d - dx)/dx) q_im1 - (2d/dx) q_i

    q_i is the owner-cell value, q_im1 its neighbor away from the wall.
    The branches agree at d/dx = 0.5 and preserve wall-matching constants.
    """
    d = np.asarray(d, dtype=np.float64)
    if np.any(d < 0.0) or np.any(d >= dx):
        raise ValueError("ghost_value requires 0 <= d < dx")
    q_i = np.asarray(q_i, dtype=np.float64)
    q_im1 = np.asarray(q_im1, dtype=np.float64)
    q_ib = np.asarray(q_ib, dtype=np.float64)
    far = d / dx >= 0.5
    safe_d = np.where(far, d, dx)  # avoid 0/0 in the unused branch
    g_far = (dx / safe_d) * q_ib + ((d - dx) / safe_d) * q_i
    g_near = 2.0 * q_ib + ((2.0 * d - dx) / dx) * q_im1 - (2.0 * d / dx) * q_i
    out = np.where(far, g_far, g_near)
    return out if out.ndim else float(out)


def bilinear_ghost_value(points, values, imaginary_point, q_ib):
    """Cross-check oracle: ghost value via two-dimensional interpolation.

    Solves the four-point Vandermonde system q = c1 xy + c2 x + c3 y + c4 for
    the imaginary point mirrored across the wall, then imposes the Dirichlet
    reflection 2 q_ib - q_ip.  The solver path never uses this; it exists to
    sanity-check the axis-projected closure on smooth fields.
    """
    pts = np.asarray(points, dtype=np.float64)
    q = np.asarray(values, dtype=np.float64)
    if pts.shape != (4, 2) or q.shape != (4,):
        raise ValueError("need four surrounding points with values")
    x, y = pts[:, 0], pts[:, 1]
    vander = np.stack([x * y, x, y, np.ones(4)], axis=1)
    coeff = np.linalg.solve(vander, q)
    xi, yi = imaginary_point
    q_ip = coeff @ np.array([xi * yi, xi, yi, 1.0])
    return 2.0 * q_ib - q_ip


def forcing_weight(d, dx, region: str):
    """Linear force-distribution weight across a wall crossing.

    The point force at a crossing splits between the flanking cells with one
    distribution of total width dx + d: the near-fluid cell at distance d
    takes d/(dx + d), the ghost cell takes (dx - d)/(dx + d), plain fluid
    takes 0.  Using the same d on both sides keeps the pair conservative.
    """
    d = np.asarray(d, dtype=np.float64)
    if np.any(d < 0.0) or np.any(d > dx):
        raise ValueError("forcing_weight requires 0 <= d <= dx")
    if region == "dum_fluid":
        out = d / (dx + d)
    elif region == "ghost":
        out = (dx - d) / (dx + d)
    elif region == "far_fluid":
        out = np.zeros_like(d)
    else:
        raise ValueError(f"unknown region {region!r}")
    return out if out.ndim else float(out)
