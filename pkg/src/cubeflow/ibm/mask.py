"""Cell classification against the immersed surface.

A cell is a wall cell when a grid-line segment from its center to an axis
neighbor center crosses a triangle, or a triangle overlaps its volume.  Axis
neighbors of wall cells become wall-adjacent.  No global inside/outside or
flood fill is ever computed: everything is local to grid lines, which is what
makes non-watertight input harmless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geomio.raytrace import TriangleIndex, line_crossings, triangle_box_overlap
from ..grid.field import FieldLayout
from ..grid.forest import HALO

FLUID, WALL, NEAR = 0, 1, 2

# registry key: (cube index, axis) -> per-line sorted crossings
# value: (offsets (n_lines+1,), s (absolute axis coordinate), tri ids)


@dataclass
class CellMask:
    """Per-cell class codes on the padded layout plus wall-derived flags."""

    layout: FieldLayout
    codes: np.ndarray  # int8 padded, halo-exchanged
    dead_end: np.ndarray | None = None  # bool padded

    @property
    def wall(self) -> np.ndarray:
        return self.codes == WALL

    @property
    def near(self) -> np.ndarray:
        return self.codes == NEAR

    @property
    def wall_region(self) -> np.ndarray:
        return self.codes > 0

    def interior_codes(self) -> np.ndarray:
        return self.layout.interior(self.codes)

    def counts(self) -> dict:
        inter = self.interior_codes()
        return {
            "fluid": int(np.sum(inter == FLUID)),
            "wall": int(np.sum(inter == WALL)),
            "wall_adjacent": int(np.sum(inter == NEAR)),
        }


def _line_base_stride(n: int, dim: int, axis: int):
    """Interior flat index of each line's axis=0 cell, plus the axis stride.

    Lines are enumerated in C order over the transverse dims, matching the
    origin ordering used for the crossing sweep.
    """
    shape = (n,) * dim
    idx = [np.arange(n)] * (dim - 1)
    grids = np.meshgrid(*idx, indexing="ij") if dim > 1 else []
    coords = []
    g = iter(grids)
    for a in range(dim):
        coords.append(np.zeros((n,) * (dim - 1), dtype=np.int64) if a == axis else next(g))
    base = np.ravel_multi_index(coords, shape).ravel()
    stride = int(np.prod(shape[axis + 1 :], dtype=np.int64)) if axis + 1 < dim else 1
    return base, stride


def _pad_line_base_stride(layout: FieldLayout, axis: int):
    """Same as _line_base_stride but on the padded block, axis index at 0."""
    S, n, dim = layout.S, layout.n, layout.dim
    shape = (S,) * dim
    idx = [np.arange(HALO, HALO + n)] * (dim - 1)
    grids = np.meshgrid(*idx, indexing="ij") if dim > 1 else []
    coords = []
    g = iter(grids)
    for a in range(dim):
        coords.append(np.zeros((n,) * (dim - 1), dtype=np.int64) if a == axis else next(g))
    base = np.ravel_multi_index(coords, shape).ravel()
    stride = int(np.prod(shape[axis + 1 :], dtype=np.int64)) if axis + 1 < dim else 1
    return base, stride


def sweep_crossings(
    layout: FieldLayout,
    index: TriangleIndex,
    slice_z: float = 0.0,
    reach: float = 2.5,
) -> dict:
    """Crossings of every interior cell-center grid line with the soup.

    Lines extend ``reach`` cells beyond the cube on both ends so wall
    distances up to two cells are visible to edge cells.  Coordinates are
    absolute along the axis.  Line geometry always uses the owning cube's own
    centers, also across refinement jumps.
    """
    forest = layout.forest
    dim = layout.dim
    registry: dict = {}
    n_lines = layout.n ** (dim - 1)
    for cube in forest.cubes:
        margin = reach * cube.dx
        lo3 = np.zeros(3)
        hi3 = np.zeros(3)
        lo3[:dim] = cube.origin - margin
        hi3[:dim] = cube.origin + cube.size + margin
        if dim == 2:
            zlo = index.soup.vertices[..., 2].min()
            zhi = index.soup.vertices[..., 2].max()
            lo3[2], hi3[2] = zlo - margin, zhi + margin
        cands = index.candidates_in_box(lo3, hi3)
        for axis in range(dim):
            key = (cube.index, axis)
            if cands.size == 0:
                registry[key] = (np.zeros(n_lines + 1, dtype=np.int64), np.empty(0), np.empty(0, dtype=np.int64))
                continue
            origins = _line_origins(layout, cube.index, axis, slice_z)
            line, t, tri = line_crossings(
                index,
                origins,
                axis,
                t_min=-margin,
                t_max=cube.size + margin,
                candidates=cands,
            )
            s = t + cube.origin[axis]
            counts = np.bincount(line, minlength=n_lines)
            offsets = np.zeros(n_lines + 1, dtype=np.int64)
            np.cumsum(counts, out=offsets[1:])
            registry[key] = (offsets, s, tri)
    return registry


def _line_origins(layout: FieldLayout, cube_id: int, axis: int, slice_z: float) -> np.ndarray:
    """(n_lines, 3) sweep origins: transverse interior centers, axis at origin."""
    dim = layout.dim
    cube = layout.forest.cubes[cube_id]
    sel = tuple(
        slice(HALO, HALO + 1) if a == axis else slice(HALO, HALO + layout.n) for a in range(dim)
    )
    ctr = layout.centers[cube_id][sel].reshape(-1, dim).copy()
    ctr[:, axis] = cube.origin[axis]
    if dim == 2:
        out = np.zeros((ctr.shape[0], 3))
        out[:, :2] = ctr
        out[:, 2] = slice_z
        return out
    return ctr


def classify_cells(
    layout: FieldLayout,
    index: TriangleIndex | None,
    slice_z: float = 0.0,
    registry: dict | None = None,
) -> tuple[CellMask, dict]:
    """Partition cells into fluid / wall / wall-adjacent.

    Returns the mask plus the crossing registry reused by the wall stencils.
    An empty soup (index None) marks everything fluid.
    """
    dim, n = layout.dim, layout.n
    codes = np.zeros(layout.shape, dtype=np.int8)
    if index is None or len(index.soup) == 0:
        empty = {
            (c.index, a): (np.zeros(n ** (dim - 1) + 1, dtype=np.int64), np.empty(0), np.empty(0, dtype=np.int64))
            for c in layout.forest.cubes
            for a in range(dim)
        }
        return CellMask(layout, codes), empty

    if registry is None:
        registry = sweep_crossings(layout, index, slice_z)

    wall_interior = np.zeros((layout.forest.n_cubes, n**dim), dtype=bool)

    for cube in layout.forest.cubes:
        c = cube.index
        for axis in range(dim):
            offsets, s, _tri = registry[(c, axis)]
            if s.size == 0:
                continue
            base, stride = _line_base_stride(n, dim, axis)
            n_lines = base.size
            line_of = np.repeat(np.arange(n_lines), np.diff(offsets))
            # crossing between centers i and i+1
            u = (s - cube.origin[axis]) / cube.dx - 0.5
            i0 = np.floor(u).astype(np.int64)
            for i in (i0, i0 + 1):
                ok = (i >= 0) & (i < n)
                wall_interior[c, base[line_of[ok]] + i[ok] * stride] = True

        # triangles overlapping a cell volume also make it a wall cell
        margin = 0.5 * cube.dx
        lo3 = np.zeros(3)
        hi3 = np.zeros(3)
        lo3[:dim] = cube.origin - margin
        hi3[:dim] = cube.origin + cube.size + margin
        half = np.full(3, 0.5 * cube.dx)
        if dim == 2:
            zspan = index.soup.vertices[..., 2]
            lo3[2], hi3[2] = zspan.min() - margin, zspan.max() + margin
            half[2] = max(float(zspan.max() - zspan.min()), cube.dx)
        cands = index.candidates_in_box(lo3, hi3)
        if cands.size:
            inter_centers = _interior_centers3(layout, c, slice_z)
            shape = (n,) * dim
            for tid in cands:
                tri3 = index.soup.vertices[tid]
                rlo = np.floor(
                    (tri3.min(axis=0)[:dim] - half[:dim] - cube.origin) / cube.dx
                ).astype(np.int64)
                rhi = np.floor(
                    (tri3.max(axis=0)[:dim] + half[:dim] - cube.origin) / cube.dx
                ).astype(np.int64)
                rlo = np.clip(rlo, 0, n - 1)
                rhi = np.clip(rhi, 0, n - 1)
                if np.any(rhi < rlo):
                    continue
                ranges = [np.arange(rlo[a], rhi[a] + 1) for a in range(dim)]
                grids = np.meshgrid(*ranges, indexing="ij")
                flat = np.ravel_multi_index([g.ravel() for g in grids], shape)
                hit = triangle_box_overlap(tri3, inter_centers[flat], half)
                wall_interior[c, flat[hit]] = True

    # write codes, exchange the wall indicator, then mark wall-adjacent cells
    inter_sl = tuple(slice(HALO, HALO + n) for _ in range(dim))
    for c in range(layout.forest.n_cubes):
        codes[(c,) + inter_sl][wall_interior[c].reshape((n,) * dim)] = WALL

    wall_f = (codes == WALL).astype(np.float64)
    layout.exchange(wall_f)
    near = np.zeros(layout.shape, dtype=bool)
    for axis in range(dim):
        for shift in (-1, 1):
            near[(slice(None),) + inter_sl] |= (
                np.roll(wall_f, -shift, axis=1 + axis)[(slice(None),) + inter_sl] > 1e-9
            )
    near &= codes != WALL
    codes[near] = NEAR
    mask = CellMask(layout, codes)
    exchange_mask(mask)
    return mask, registry


def _interior_centers3(layout: FieldLayout, cube_id: int, slice_z: float) -> np.ndarray:
    dim, n = layout.dim, layout.n
    sel = tuple(slice(HALO, HALO + n) for _ in range(dim))
    ctr = layout.centers[cube_id][sel].reshape(-1, dim)
    if dim == 2:
        out = np.zeros((ctr.shape[0], 3))
        out[:, :2] = ctr
        out[:, 2] = slice_z
        return out
    return ctr


def exchange_mask(mask: CellMask) -> None:
    """Refresh mask halos; fractional fine-to-coarse averages round to WALL."""
    layout = mask.layout
    wall_f = (mask.codes == WALL).astype(np.float64)
    near_f = (mask.codes == NEAR).astype(np.float64)
    layout.exchange(wall_f)
    layout.exchange(near_f)
    halo = np.zeros(layout.shape, dtype=bool)
    halo[...] = True
    inter_sl = (slice(None),) + tuple(slice(HALO, HALO + layout.n) for _ in range(layout.dim))
    halo[inter_sl] = False
    mask.codes[halo & (wall_f > 1e-9)] = WALL
    mask.codes[halo & (wall_f <= 1e-9) & (near_f > 1e-9)] = NEAR
    mask.codes[halo & (wall_f <= 1e-9) & (near_f <= 1e-9)] = FLUID


def dead_end_filter(mask: CellMask) -> CellMask:
    """Flag cells whose forcing must be cancelled: all but at most one axis
    neighbor is a wall cell (sealed sub-grid channels)."""
    layout = mask.layout
    dim = layout.dim
    wall_f = (mask.codes == WALL).astype(np.float64)
    layout.exchange(wall_f)
    count = np.zeros(layout.shape, dtype=np.int64)
    inter_sl = (slice(None),) + tuple(slice(HALO, HALO + layout.n) for _ in range(dim))
    for axis in range(dim):
        for shift in (-1, 1):
            count[inter_sl] += (
                np.roll(wall_f, -shift, axis=1 + axis)[inter_sl] > 1e-9
            ).astype(np.int64)
    mask.dead_end = count >= 2 * dim - 1
    return mask
