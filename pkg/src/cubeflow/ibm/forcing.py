"""Momentum forcing that imposes the wall velocity near the surface.

The discrete force cancels the momentum right-hand side and drives the
velocity toward the wall value; it is distributed across each crossing onto
the flanking cell pair by the linear weights of the closure module.  Cells
flagged dead-end get their forcing cancelled outright.
"""

from __future__ import annotations

import numpy as np

from ..grid.field import FieldLayout
from .blocks import WallStencilSet
from .mask import CellMask


def compute_forcing(
    layout: FieldLayout,
    stencils: WallStencilSet,
    mask: CellMask,
    rhs: np.ndarray,
    u: np.ndarray,
    dt: float,
    mode: str = "distributed",
    grad_p: np.ndarray | None = None,
) -> np.ndarray:
    """Force density per cell, zero away from the surface.

    rhs, u: (dim, cubes, S, ...) padded arrays (the momentum right-hand side
    and the current velocity).  For every crossing closer than one cell, the
    pair force  -rhs + (u_wall - u)/dt  is scattered with weight d/(dx+d)
    onto the owner and (dx-d)/(dx+d) onto the cell across the wall.

    mode selects how strongly the forcing competes with the ghost-closed
    stencils: "distributed" relaxes both flanking cells toward the wall
    value, "ghost_mirror" relaxes only the cell across the wall toward its
    mirror value, "pins" leaves everything to the stencil closure; every mode
    pins cells whose center nearly touches the wall.

    grad_p (the current cell-centered pressure gradient) pre-compensates the
    upcoming projection so the corrected velocity, not the intermediate one,
    lands on the wall value.
    """
    dim = layout.dim
    force = np.zeros_like(rhs)
    if stencils.m == 0:
        return force
    f_flat = force.reshape(dim, -1)
    r_flat = rhs.reshape(dim, -1)
    u_flat = u.reshape(dim, -1)
    # total distributed weight per cell; cells hit from several crossings
    # (corners, slivers) are normalized so the net relaxation never
    # overshoots the wall value
    w_sum = np.zeros(f_flat.shape[1])

    # crossings nearly on a cell center pin that cell to the wall value
    # outright; splitting such a pair onto the neighbors feeds an unstable
    # seesaw between the unforced on-wall cell and its targets
    pin_frac = 0.1

    mirror = None
    if mode == "ghost_mirror":
        mirror = [stencils.line_values(u[c], "dirichlet", c) for c in range(dim)]
    gp_flat = grad_p.reshape(dim, -1) if grad_p is not None else None

    for q in range(2 * dim):
        a, side = divmod(q, 2)
        ring1 = 2 + (1 if side else -1)
        sel = np.flatnonzero(stencils.has_x[:, q] & (stencils.dist[:, q] < stencils.dx))
        if sel.size == 0:
            continue
        d = stencils.dist[sel, q]
        dx = stencils.dx[sel]
        pinned = d < pin_frac * dx
        if mode == "distributed":
            w_fluid = np.where(pinned, 1.0, d / (dx + d))
            w_ghost = np.where(pinned, 0.0, (dx - d) / (dx + d))
        elif mode == "ghost_mirror":
            w_fluid = np.where(pinned, 1.0, 0.0)
            w_ghost = np.where(pinned, 0.0, (dx - d) / (dx + d))
        else:  # pins: stencil closure does the work, force only on-wall cells
            w_fluid = np.where(pinned, 1.0, 0.0)
            w_ghost = np.zeros_like(d)
        owner = stencils.owner_pad[sel]
        target = stencils.ghost_target[sel, q]
        has_tgt = (target >= 0) & ~pinned
        np.add.at(w_sum, owner, w_fluid)
        if has_tgt.any():
            np.add.at(w_sum, target[has_tgt], w_ghost[has_tgt])
        for c in range(dim):
            shift_own = dt * gp_flat[c, owner] if gp_flat is not None else 0.0
            pair = (
                -r_flat[c, owner]
                + (stencils.u_ib[sel, q, c] + shift_own - u_flat[c, owner]) / dt
            )
            np.add.at(f_flat[c], owner, w_fluid * pair)
            if not has_tgt.any():
                continue
            tsel = target[has_tgt]
            shift_tgt = dt * gp_flat[c, tsel] if gp_flat is not None else 0.0
            if mode == "ghost_mirror":
                goal = mirror[c][sel, a, ring1]
                tgt_force = (goal[has_tgt] + shift_tgt - u_flat[c, tsel]) / dt
            else:
                shift_own_t = shift_own[has_tgt] if gp_flat is not None else 0.0
                tgt_force = pair[has_tgt] + (shift_tgt - shift_own_t) / dt
            np.add.at(f_flat[c], tsel, w_ghost[has_tgt] * tgt_force)

    over = w_sum > 1.0
    if over.any():
        f_flat[:, over] /= w_sum[over]

    if mask.dead_end is not None and mask.dead_end.any():
        keep = ~mask.dead_end.reshape(-1)
        f_flat *= keep
    return force
