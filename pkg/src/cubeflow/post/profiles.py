"""Surface-pressure profiles and field slices."""

from __future__ import annotations

import numpy as np

from ..grid.field import FieldLayout
from ..grid.forest import HALO


def meridian_cp_profile(
    samples: list,
    center,
    flow_dir=(1.0, 0.0, 0.0),
    rho: float = 1.0,
    u_ref: float = 1.0,
    p_ref: float = 0.0,
    n_bins: int = 36,
):
    """Pressure coefficient averaged per circumferential angle from stagnation.

    The angle is measured between the upstream direction (-flow_dir) and the
    sample position relative to the body center, so 0 is the stagnation point
    and 180 degrees the wake pole.  Returns (angle_deg, cp, count) rows.
    """
    center = np.asarray(center, dtype=np.float64)
    d = np.asarray(flow_dir, dtype=np.float64)
    d = d / np.linalg.norm(d)
    q = 0.5 * rho * u_ref**2
    edges = np.linspace(0.0, np.pi, n_bins + 1)
    sums = np.zeros(n_bins)
    counts = np.zeros(n_bins, dtype=np.int64)
    for s in samples:
        if not s.valid or not s.keep:
            continue
        r = s.point - center[: s.point.size]
        nr = np.linalg.norm(r)
        if nr == 0.0:
            continue
        cosphi = np.clip(-(r @ d[: r.size]) / nr, -1.0, 1.0)
        phi = np.arccos(cosphi)
        b = min(int(phi / np.pi * n_bins), n_bins - 1)
        sums[b] += (s.pressure - p_ref) / q
        counts[b] += 1
    angles = np.rad2deg(0.5 * (edges[:-1] + edges[1:]))
    cp = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return [
        (float(a), float(c), int(n)) for a, c, n in zip(angles, cp, counts) if n > 0
    ]


def center_slice(layout: FieldLayout, field: np.ndarray, axis: int, position: float):
    """Cell values of the cube-grid layer containing a plane, as CSV rows.

    Returns (coords..., value) rows for every interior cell whose slab along
    ``axis`` contains ``position``; works across refinement levels.
    """
    dim = layout.dim
    rows = []
    inter = tuple(slice(HALO, HALO + layout.n) for _ in range(dim))
    for cube in layout.forest.cubes:
        lo = cube.origin[axis]
        hi = lo + cube.size
        if not (lo <= position < hi):
            continue
        k = int((position - lo) / cube.dx)
        sel = list(inter)
        sel[axis] = slice(HALO + k, HALO + k + 1)
        block = field[(cube.index,) + tuple(sel)]
        centers = layout.centers[(cube.index,) + tuple(sel)]
        flat_v = block.reshape(-1)
        flat_c = centers.reshape(-1, dim)
        for c, v in zip(flat_c, flat_v):
            rows.append(tuple(float(x) for x in c) + (float(v),))
    rows.sort()
    return rows


def sample_probes(layout: FieldLayout, state, points) -> list:
    """Velocity and pressure at probe locations (cell values at the owners)."""
    out = []
    for pt in points:
        cube, loc = layout.forest.locate_cell(np.asarray(pt, dtype=np.float64))
        idx = layout.padded_index(cube, loc)
        row = [float(state.u[c].reshape(-1)[idx]) for c in range(layout.dim)]
        row.append(float(state.p.reshape(-1)[idx]))
        out.append(tuple(row))
    return out
