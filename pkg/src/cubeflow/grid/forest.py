"""Two-level building-cube forest.

The domain is tiled by cubes that halve in size as they approach the
geometry; every cube carries an identical dense block of cells, which keeps
per-cube work uniform.  Face-adjacent cubes never differ by more than one
level so the halo averaging below stays well defined.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..geomio.raytrace import TriangleIndex
from ..geomio.soup import TriangleSoup

HALO = 2  # halo layers per face; the widest stencil reads two cells out


class RefinementBudgetError(RuntimeError):
    """Refinement would exceed the configured cube-count budget."""


@dataclass(frozen=True)
class Cube:
    index: int
    level: int
    ijk: tuple
    origin: np.ndarray  # lower corner, physical
    size: float  # cube edge length
    dx: float  # cell size = size / cells_per_side


@dataclass
class CubeForest:
    dim: int
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    base_shape: tuple
    cells_per_side: int
    periodic: tuple
    cubes: list = field(default_factory=list)
    _leaf_ids: dict = field(default_factory=dict)
    neighbors: list = field(default_factory=list)  # [cube][axis][side] descriptors

    @property
    def n_cubes(self) -> int:
        return len(self.cubes)

    @property
    def max_level(self) -> int:
        return max(c.level for c in self.cubes)

    @property
    def n_cells(self) -> int:
        return self.n_cubes * self.cells_per_side**self.dim

    def cube_size(self, level: int) -> float:
        return self._base_size / 2**level

    def cell_size(self, level: int) -> float:
        return self.cube_size(level) / self.cells_per_side

    def level_extent(self, level: int) -> np.ndarray:
        return np.asarray(self.base_shape, dtype=np.int64) * 2**level

    def levels_array(self) -> np.ndarray:
        return np.array([c.level for c in self.cubes], dtype=np.int64)

    def origins_array(self) -> np.ndarray:
        return np.array([c.origin for c in self.cubes])

    def dx_array(self) -> np.ndarray:
        return np.array([c.dx for c in self.cubes])

    def leaf_at(self, level: int, ijk: tuple) -> int | None:
        return self._leaf_ids.get((level, tuple(ijk)))

    def summary(self) -> dict:
        per_level: dict[int, int] = {}
        for c in self.cubes:
            per_level[c.level] = per_level.get(c.level, 0) + 1
        return {
            "dim": self.dim,
            "cubes": self.n_cubes,
            "cells_per_side": self.cells_per_side,
            "cells": self.n_cells,
            "cubes_per_level": {str(k): v for k, v in sorted(per_level.items())},
            "finest_dx": self.cell_size(self.max_level),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)

    # -- point location ---------------------------------------------------

    def locate_cell(self, point) -> tuple[int, tuple]:
        """Owning (cube id, local cell index) of a point, half-open cells.

        Points on shared faces belong to the higher-coordinate cell.  Raises
        ValueError outside the domain.
        """
        p = np.asarray(point, dtype=np.float64)[: self.dim]
        if np.any(p < self.domain_lo) or np.any(p >= self.domain_hi):
            raise ValueError(f"point {p} outside domain")
        for level in range(self._finest_level, -1, -1):
            size = self.cube_size(level)
            ijk = tuple(np.floor((p - self.domain_lo) / size).astype(np.int64))
            cid = self._leaf_ids.get((level, ijk))
            if cid is not None:
                cube = self.cubes[cid]
                local = np.floor((p - cube.origin) / cube.dx).astype(np.int64)
                local = np.clip(local, 0, self.cells_per_side - 1)
                return cid, tuple(local)
        raise ValueError(f"point {p} not covered by any leaf (corrupt forest)")

    def locate_cells(self, points: np.ndarray):
        """Vectorized locate for (m, dim) points; returns (cube_ids, locals (m, dim))."""
        pts = np.asarray(points, dtype=np.float64)[:, : self.dim]
        m = pts.shape[0]
        cube_ids = np.full(m, -1, dtype=np.int64)
        locals_ = np.zeros((m, self.dim), dtype=np.int64)
        todo = np.arange(m)
        for level in range(self._finest_level, -1, -1):
            if todo.size == 0:
                break
            size = self.cube_size(level)
            ijk = np.floor((pts[todo] - self.domain_lo) / size).astype(np.int64)
            hit = np.array(
                [self._leaf_ids.get((level, tuple(row)), -1) for row in ijk], dtype=np.int64
            )
            found = hit >= 0
            sel = todo[found]
            cube_ids[sel] = hit[found]
            origins = self.origins_array()[hit[found]]
            dxs = self.dx_array()[hit[found]][:, None]
            loc = np.floor((pts[sel] - origins) / dxs).astype(np.int64)
            locals_[sel] = np.clip(loc, 0, self.cells_per_side - 1)
            todo = todo[~found]
        if todo.size:
            raise ValueError(f"{todo.size} points outside domain or uncovered")
        return cube_ids, locals_

    # internal fields filled by generate_forest
    _base_size: float = 0.0
    _finest_level: int = 0


def _soup_boxes(soup: TriangleSoup, dim: int):
    lo = soup.vertices.min(axis=1)[:, :3]
    hi = soup.vertices.max(axis=1)[:, :3]
    return lo, hi


def generate_forest(
    domain_lo,
    domain_hi,
    soup: TriangleSoup | None = None,
    finest_dx: float | None = None,
    max_levels: int = 0,
    pad_cells: int = 4,
    *,
    cells_per_side: int | None = None,
    base_cubes=None,
    periodic=None,
    cube_budget: int = 200_000,
    index: TriangleIndex | None = None,
) -> CubeForest:
    """Build the cube forest, refining toward the geometry.

    Cubes whose padded box overlaps any triangle bounding box are split until
    max_levels; a cascading pass then restores the one-level-per-face jump
    limit.  The refinement trigger is conservative (AABB overlap), which can
    only over-refine.
    """
    domain_lo = np.asarray(domain_lo, dtype=np.float64)
    domain_hi = np.asarray(domain_hi, dtype=np.float64)
    dim = domain_lo.shape[0]
    if dim not in (2, 3):
        raise ValueError("domain must be 2D or 3D")
    if cells_per_side is None:
        cells_per_side = 16 if dim == 3 else 8
    if periodic is None:
        periodic = (False,) * dim
    extent = domain_hi - domain_lo

    if base_cubes is None:
        if finest_dx is None:
            raise ValueError("give either finest_dx or base_cubes")
        size0 = cells_per_side * finest_dx * 2**max_levels
        shape = extent / size0
        base_shape = tuple(int(round(s)) for s in shape)
        if np.any(np.abs(shape - np.round(shape)) > 1e-6) or min(base_shape) < 1:
            raise ValueError(
                f"domain {extent} not tileable by cubes of size {size0} "
                f"(finest_dx={finest_dx}, cells_per_side={cells_per_side})"
            )
    else:
        base_shape = tuple(int(b) for b in np.atleast_1d(base_cubes)) if np.ndim(base_cubes) else (
            int(base_cubes),
        ) * dim
        if len(base_shape) == 1:
            base_shape = base_shape * dim
    sizes = extent / np.asarray(base_shape)
    if np.any(np.abs(sizes - sizes[0]) > 1e-9 * sizes[0]):
        raise ValueError(f"base cubes must be cubic; got per-axis sizes {sizes}")
    base_size = float(sizes[0])

    forest = CubeForest(
        dim=dim,
        domain_lo=domain_lo,
        domain_hi=domain_hi,
        base_shape=base_shape,
        cells_per_side=int(cells_per_side),
        periodic=tuple(bool(p) for p in periodic),
    )
    forest._base_size = base_size

    leaves: set[tuple[int, tuple]] = set()
    internal: set[tuple[int, tuple]] = set()
    for ijk in np.ndindex(*base_shape):
        leaves.add((0, tuple(ijk)))

    def cube_box(level, ijk):
        size = base_size / 2**level
        lo = domain_lo + np.asarray(ijk) * size
        return lo, lo + size

    def split(key):
        level, ijk = key
        leaves.discard(key)
        internal.add(key)
        children = []
        for off in np.ndindex(*(2,) * dim):
            child = (level + 1, tuple(2 * np.asarray(ijk) + np.asarray(off)))
            leaves.add(child)
            children.append(child)
        if len(leaves) > cube_budget:
            raise RefinementBudgetError(
                f"cube budget {cube_budget} exceeded during refinement"
            )
        return children

    # geometry-driven refinement
    if soup is not None and len(soup) > 0 and max_levels > 0:
        if index is None:
            index = TriangleIndex(soup)
        zlo, zhi = (soup.vertices[..., 2].min(), soup.vertices[..., 2].max()) if dim == 2 else (0, 0)

        def overlaps_geometry(key):
            level, ijk = key
            lo, hi = cube_box(level, ijk)
            pad = pad_cells * (base_size / 2**level) / cells_per_side
            lo3 = np.zeros(3)
            hi3 = np.zeros(3)
            lo3[:dim] = lo - pad
            hi3[:dim] = hi + pad
            if dim == 2:
                lo3[2], hi3[2] = zlo - pad, zhi + pad
            return index.candidates_in_box(lo3, hi3).size > 0

        queue = [k for k in list(leaves)]
        while queue:
            key = queue.pop()
            if key not in leaves:
                continue
            if key[0] >= max_levels:
                continue
            if overlaps_geometry(key):
                queue.extend(split(key))

    # cascade to restore the 2:1 face balance
    def finest_adjacent(level, nijk, axis, side):
        """Deepest leaf level adjacent across the given face region."""
        key = (level, tuple(nijk))
        if key in leaves:
            return level
        k = key
        while k[0] > 0:
            k = (k[0] - 1, tuple(np.asarray(k[1]) // 2))
            if k in leaves:
                return k[0]
        if key not in internal:
            return -1  # outside domain (non-periodic)
        best = level
        stack = [key]
        while stack:
            cur = stack.pop()
            lvl, ijk = cur
            for off in np.ndindex(*(2,) * dim):
                # only children touching the shared face matter
                if off[axis] != (0 if side > 0 else 1):
                    continue
                child = (lvl + 1, tuple(2 * np.asarray(ijk) + np.asarray(off)))
                if child in leaves:
                    best = max(best, lvl + 1)
                elif child in internal:
                    stack.append(child)
        return best

    changed = True
    while changed:
        changed = False
        for key in sorted(leaves):
            level, ijk = key
            if key not in leaves:
                continue
            for axis in range(dim):
                for side in (-1, 1):
                    nijk = np.asarray(ijk).copy()
                    nijk[axis] += side
                    ext = base_shape[axis] * 2**level
                    if nijk[axis] < 0 or nijk[axis] >= ext:
                        if not periodic[axis]:
                            continue
                        nijk[axis] %= ext
                    deepest = finest_adjacent(level, nijk, axis, side)
                    if deepest > level + 1:
                        split(key)
                        changed = True
                        break
                if key not in leaves:
                    break

    # freeze into arrays, deterministic order (level, ijk)
    ordered = sorted(leaves)
    for idx, (level, ijk) in enumerate(ordered):
        size = base_size / 2**level
        origin = domain_lo + np.asarray(ijk) * size
        forest.cubes.append(
            Cube(idx, level, tuple(ijk), origin, size, size / cells_per_side)
        )
        forest._leaf_ids[(level, tuple(ijk))] = idx
    forest._finest_level = max(c.level for c in forest.cubes)

    _build_neighbor_tables(forest)
    return forest


def _build_neighbor_tables(forest: CubeForest) -> None:
    dim = forest.dim
    forest.neighbors = []
    for cube in forest.cubes:
        per_cube = []
        for axis in range(dim):
            per_axis = []
            for side in (-1, 1):
                per_axis.append(_neighbor_descriptor(forest, cube, axis, side))
            per_cube.append(per_axis)
        forest.neighbors.append(per_cube)


def _neighbor_descriptor(forest: CubeForest, cube: Cube, axis: int, side: int):
    dim = forest.dim
    nijk = np.asarray(cube.ijk).copy()
    nijk[axis] += side
    ext = forest.base_shape[axis] * 2**cube.level
    if nijk[axis] < 0 or nijk[axis] >= ext:
        if not forest.periodic[axis]:
            return ("boundary",)
        nijk[axis] %= ext
    same = forest.leaf_at(cube.level, tuple(nijk))
    if same is not None:
        return ("same", same)
    if cube.level > 0:
        coarse = forest.leaf_at(cube.level - 1, tuple(np.asarray(nijk) // 2))
        if coarse is not None:
            return ("coarse", coarse)
    fine_ids = []
    for off in np.ndindex(*(2,) * dim):
        if off[axis] != (0 if side > 0 else 1):
            continue
        child = forest.leaf_at(cube.level + 1, tuple(2 * nijk + np.asarray(off)))
        if child is None:
            raise RuntimeError(
                f"forest violates 2:1 balance at cube {cube.index} axis {axis} side {side}"
            )
        fine_ids.append(child)
    return ("fine", tuple(fine_ids))


def check_two_to_one(forest: CubeForest) -> bool:
    """Scan every face pair: levels may differ by at most one."""
    for cube in forest.cubes:
        for axis in range(forest.dim):
            for side in (0, 1):
                desc = forest.neighbors[cube.index][axis][side]
                if desc[0] == "same":
                    pass
                elif desc[0] == "coarse":
                    if forest.cubes[desc[1]].level != cube.level - 1:
                        return False
                elif desc[0] == "fine":
                    for fid in desc[1]:
                        if forest.cubes[fid].level != cube.level + 1:
                            return False
    return True
