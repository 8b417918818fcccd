"""Surface sampling of cell fields (inverse-square-distance weighting).

Samples live on triangle vertices and are taken independently for the two
sides of every face: a cell contributes only when it lies on the side the
sampling normal points to.  A thin-plate filter removes the double counting
that appears when opposing surfaces of a sub-cell-thickness body draw from
the same cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..grid.field import FieldLayout
from ..grid.forest import HALO


@dataclass
class SurfaceSample:
    triangle: int
    side: int  # +1 along the winding normal, -1 the back side
    point: np.ndarray
    normal: np.ndarray  # outward for this side
    area: float  # share of the triangle area carried by this sample
    cells: np.ndarray  # admissible padded cell indices
    weights: np.ndarray
    pressure: float = 0.0
    velocity: np.ndarray | None = None
    grad: np.ndarray | None = None  # one-sided du_c/dx_a estimate
    keep: int = 1  # thin-plate filter flag
    valid: bool = True
    dx: float = 0.0


def _axis_neighbors(layout: FieldLayout, cube: int, local: np.ndarray):
    """Padded indices and centers of the <= 2*dim axis neighbors."""
    dim = layout.dim
    S = layout.S
    pad_shape = (S,) * dim
    strides = [int(np.prod(pad_shape[a + 1 :], dtype=np.int64)) for a in range(dim)]
    base = cube * S**dim + int(np.ravel_multi_index(local + HALO, pad_shape))
    out = []
    for a in range(dim):
        for s in (-1, 1):
            out.append((base + s * strides[a], a, s))
    return base, out


def shepard_sample(
    layout: FieldLayout,
    point,
    normal,
    fields: dict,
    wall_velocity=None,
    eps: float = 1e-30,
) -> SurfaceSample | None:
    """One-sided inverse-square-distance sample of cell fields at a surface point.

    fields: {"p": padded array, "u": (dim, ...) padded array}.  Only the
    owner cell's axis neighbors on the normal's front side contribute; with
    no admissible neighbor the sample is marked invalid and excluded from
    integrals.
    """
    dim = layout.dim
    pt = np.asarray(point, dtype=np.float64)[:dim]
    n = np.asarray(normal, dtype=np.float64)[:dim]
    try:
        cube, local = layout.forest.locate_cell(pt)
    except ValueError:
        return None
    centers_flat = layout.centers.reshape(-1, dim)
    _, nbrs = _axis_neighbors(layout, cube, np.asarray(local))
    dx = layout.dx[cube]

    admissible, weights, axes, signs = [], [], [], []
    for idx, a, s in nbrs:
        x_k = centers_flat[idx]
        if np.dot(n, pt - x_k) < 0.0:
            r2 = float(np.sum((pt - x_k) ** 2))
            admissible.append(idx)
            weights.append(1.0 / max(r2, eps))
            axes.append(a)
            signs.append(s)
    sample = SurfaceSample(
        triangle=-1,
        side=1,
        point=pt,
        normal=n,
        area=0.0,
        cells=np.asarray(admissible, dtype=np.int64),
        weights=np.asarray(weights),
        dx=dx,
    )
    if not admissible:
        sample.valid = False
        return sample
    w = sample.weights / sample.weights.sum()
    p_flat = fields["p"].reshape(-1)
    sample.pressure = float(p_flat[sample.cells] @ w)
    if "u" in fields:
        u_flat = fields["u"].reshape(dim, -1)
        sample.velocity = u_flat[:, sample.cells] @ w
        u_wall = np.zeros(dim)
        if wall_velocity is not None:
            u_wall = np.asarray(wall_velocity(pt.reshape(1, -1), 0.0))[0][:dim]
        grad = np.zeros((dim, dim))
        count = np.zeros(dim)
        for k, idx in enumerate(sample.cells):
            a = axes[k]
            h = centers_flat[idx][a] - pt[a]
            if abs(h) < 1e-12 * dx:
                continue
            grad[:, a] += (u_flat[:, idx] - u_wall) / h
            count[a] += 1
        nonzero = count > 0
        grad[:, nonzero] /= count[nonzero]
        sample.grad = grad
    return sample


def sample_surface(
    layout: FieldLayout,
    soup,
    fields: dict,
    wall_velocity=None,
    sides=(1, -1),
) -> list:
    """Vertex samples for both wetted sides of every non-degenerate triangle."""
    samples: list[SurfaceSample] = []
    for t in range(len(soup)):
        if soup.degenerate[t]:
            continue
        for side in sides:
            n = side * soup.normals[t]
            for corner in range(3):
                s = shepard_sample(layout, soup.vertices[t, corner], n, fields, wall_velocity)
                if s is None:
                    continue
                s.triangle = t
                s.side = side
                s.area = soup.areas[t] / 3.0
                samples.append(s)
    return samples


def thin_plate_filter(samples: list, dx: float | None = None) -> list:
    """Zero back-side samples that share fluid cells with an opposing sample.

    When a closed body is thinner than one cell, the inner (back) surfaces
    sample the same cells as the outer surface across the gap and would
    double-count the load; such back samples get weight zero.  Zero-thickness
    single sheets are untouched: their two sides use disjoint half-spaces.
    """
    valid = [s for s in samples if s.valid and s.cells.size]
    if not valid:
        return samples
    pts = np.asarray([s.point for s in valid])
    tree = cKDTree(pts)
    for i, j in tree.query_pairs(
        (dx if dx is not None else max(s.dx for s in valid)) * 1.0001,
        output_type="ndarray",
    ):
        a, b = valid[i], valid[j]
        if a.triangle == b.triangle:
            continue
        if float(np.dot(a.normal, b.normal)) > -0.5:
            continue
        if not np.intersect1d(a.cells, b.cells, assume_unique=False).size:
            continue
        # opposing samples feed on the same cells: cancel the back side(s)
        cancelled = False
        for s in (a, b):
            if s.side < 0:
                s.keep = 0
                cancelled = True
        if not cancelled:
            (a if a.triangle > b.triangle else b).keep = 0
    return samples
