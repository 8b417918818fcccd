"""Per-cube cell fields with halo rings, and the exchange between cubes.

Fields live in one dense array of shape (n_cubes, S, ..., S) with
S = cells_per_side + 2*HALO, so stencil arithmetic vectorizes across every
cube at once.  Halo exchange is precompiled into flat gather maps:

  * same-level faces and coarse-to-fine: zero-order copy of neighbor interiors,
  * fine-to-coarse: arithmetic mean of the 2**dim covered fine interiors.

Only the 2*dim axis faces are exchanged; corner (diagonal) halo cells are
never written and no stencil may read them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forest import HALO, CubeForest


def ax_slices(dim: int, axis: int, sl: slice, rest: slice = slice(None)) -> tuple:
    """Index tuple selecting ``sl`` along one cube-local axis, ``rest`` elsewhere."""
    out = [rest] * dim
    out[axis] = sl
    return tuple(out)


@dataclass
class _AvgMap:
    dst: np.ndarray
    src: list  # 2**dim aligned source index arrays


@dataclass
class BoundaryFace:
    """Domain-boundary halo patch of one cube face, with mirror pairings.

    halo_adj/halo_out are the two halo layers (adjacent to interior, outer);
    int_first/int_second the interior layers they mirror.  face are the
    padded indices of the face-storage slot owned by the boundary face.
    """

    cube: int
    axis: int
    side: int
    halo_adj: np.ndarray
    halo_out: np.ndarray
    int_first: np.ndarray
    int_second: np.ndarray
    face: np.ndarray


class FieldLayout:
    """Allocation plus exchange/boundary maps for one forest."""

    def __init__(self, forest: CubeForest):
        self.forest = forest
        self.dim = forest.dim
        self.n = forest.cells_per_side
        self.S = self.n + 2 * HALO
        self.shape = (forest.n_cubes,) + (self.S,) * self.dim
        self.cells_per_cube = self.n**self.dim
        self.n_interior = forest.n_cubes * self.cells_per_cube

        self.dx = forest.dx_array()  # (n_cubes,)
        self.levels = forest.levels_array()
        self.origins = forest.origins_array()

        self._build_centers()
        self._build_interior_ids()
        self._build_exchange_maps()

    # -- geometry ----------------------------------------------------------

    def _build_centers(self):
        S, H = self.S, HALO
        local = (np.arange(S) - H + 0.5)  # cell centers in units of dx
        grids = np.meshgrid(*([local] * self.dim), indexing="ij")
        unit = np.stack(grids, axis=-1)  # (S,..,S,dim)
        self.centers = (
            self.origins.reshape((-1,) + (1,) * self.dim + (self.dim,))
            + unit[None] * self.dx.reshape((-1,) + (1,) * (self.dim + 1))
        )

    def _build_interior_ids(self):
        S, H, n = self.S, HALO, self.n
        idx = np.arange(S**self.dim).reshape((S,) * self.dim)
        inner = idx[tuple(slice(H, H + n) for _ in range(self.dim))].ravel()
        cube_off = np.arange(self.forest.n_cubes, dtype=np.int64) * S**self.dim
        # padded flat index of interior cell gid (gid = cube * n**dim + local)
        self.interior_flat = (cube_off[:, None] + inner[None, :]).ravel()

    def gid_of(self, cube: int, local) -> int:
        loc = np.asarray(local, dtype=np.int64)
        return int(cube * self.cells_per_cube + np.ravel_multi_index(loc, (self.n,) * self.dim))

    def padded_index(self, cube: int, local) -> int:
        loc = np.asarray(local, dtype=np.int64) + HALO
        return int(cube * self.S**self.dim + np.ravel_multi_index(loc, (self.S,) * self.dim))

    def cell_volumes(self) -> np.ndarray:
        """Interior cell volumes as a gid-ordered vector."""
        v = (self.dx**self.dim)[:, None] * np.ones((1, self.cells_per_cube))
        return v.ravel()

    def interior_centers(self) -> np.ndarray:
        """(n_interior, dim) centers in gid order."""
        flat = self.centers.reshape(-1, self.dim)
        return flat[self.interior_flat]

    # -- allocation ---------------------------------------------------------

    def alloc(self, ncomp: int | None = None) -> np.ndarray:
        shape = self.shape if ncomp is None else (ncomp,) + self.shape
        return np.zeros(shape)

    def interior(self, arr: np.ndarray) -> np.ndarray:
        sl = tuple(slice(HALO, HALO + self.n) for _ in range(self.dim))
        return arr[(Ellipsis,) + sl]

    def to_vector(self, arr: np.ndarray) -> np.ndarray:
        """Interior values as a gid-ordered flat vector."""
        return arr.reshape(arr.shape[: -self.dim - 1] + (-1,))[..., self.interior_flat]

    def from_vector(self, vec: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        ncomp = None if vec.ndim == 1 else vec.shape[0]
        if out is None:
            out = self.alloc(ncomp)
        flat = out.reshape(out.shape[: -self.dim - 1] + (-1,))
        flat[..., self.interior_flat] = vec
        return out

    # -- exchange maps -------------------------------------------------------

    def _halo_layers(self, axis: int, side: int):
        S = self.S
        if side < 0:
            return 1, 0, HALO, HALO + 1  # adj, outer, first interior, second
        return S - 2, S - 1, S - HALO - 1, S - HALO - 2

    def _face_index_grid(self, cube: int, axis: int, along: int):
        """Padded flat indices of one along-axis layer, transverse interior."""
        S = self.S
        axes = []
        for a in range(self.dim):
            if a == axis:
                axes.append(np.array([along]))
            else:
                axes.append(np.arange(HALO, HALO + self.n))
        grids = np.meshgrid(*axes, indexing="ij")
        flat = np.ravel_multi_index([g.ravel() for g in grids], (S,) * self.dim)
        return cube * S**self.dim + flat.astype(np.int64)

    def _layer_centers(self, cube: int, axis: int, along: int) -> np.ndarray:
        sl = ax_slices(self.dim, axis, slice(along, along + 1))
        inner = tuple(
            slice(HALO, HALO + self.n) if a != axis else sl[a] for a in range(self.dim)
        )
        return self.centers[cube][inner].reshape(-1, self.dim)

    def _build_exchange_maps(self):
        forest = self.forest
        copy_dst, copy_src = [], []
        avg_maps: list[_AvgMap] = []
        self.boundary: list[BoundaryFace] = []

        for cube in forest.cubes:
            c = cube.index
            for axis in range(self.dim):
                for si, side in enumerate((-1, 1)):
                    desc = forest.neighbors[c][axis][si]
                    adj, outer, first, second = self._halo_layers(axis, side)
                    dst_adj = self._face_index_grid(c, axis, adj)
                    dst_out = self._face_index_grid(c, axis, outer)
                    if desc[0] == "boundary":
                        face_along = first if side > 0 else adj
                        self.boundary.append(
                            BoundaryFace(
                                cube=c,
                                axis=axis,
                                side=side,
                                halo_adj=dst_adj,
                                halo_out=dst_out,
                                int_first=self._face_index_grid(c, axis, first),
                                int_second=self._face_index_grid(c, axis, second),
                                face=self._face_index_grid(c, axis, face_along),
                            )
                        )
                        continue
                    if desc[0] == "same":
                        nb = desc[1]
                        n_adj, n_out, n_first, n_second = self._halo_layers(axis, -side)
                        copy_dst += [dst_adj, dst_out]
                        copy_src += [
                            self._face_index_grid(nb, axis, n_first),
                            self._face_index_grid(nb, axis, n_second),
                        ]
                    elif desc[0] == "coarse":
                        nb = desc[1]
                        for along in (adj, outer):
                            dst = self._face_index_grid(c, axis, along)
                            ctr = self._layer_centers(c, axis, along)
                            copy_dst.append(dst)
                            copy_src.append(self._locate_in_cube(nb, ctr))
                    else:  # fine neighbors: average 2**dim children per halo cell
                        fine_ids = desc[1]
                        boxes = [
                            (forest.cubes[f].origin, forest.cubes[f].origin + forest.cubes[f].size)
                            for f in fine_ids
                        ]
                        dxf = forest.cubes[fine_ids[0]].dx
                        for along in (adj, outer):
                            dst = self._face_index_grid(c, axis, along)
                            ctr = self._layer_centers(c, axis, along)
                            owner = np.full(ctr.shape[0], -1, dtype=np.int64)
                            for k, (lo, hi) in enumerate(boxes):
                                inside = np.all(ctr >= lo, axis=1) & np.all(ctr < hi, axis=1)
                                owner[inside] = k
                            if np.any(owner < 0):
                                raise RuntimeError("halo cell not covered by fine neighbors")
                            srcs = []
                            for off in np.ndindex(*(2,) * self.dim):
                                shift = (np.asarray(off) - 0.5) * dxf
                                child = ctr + shift
                                src = np.empty(ctr.shape[0], dtype=np.int64)
                                for k, f in enumerate(fine_ids):
                                    m = owner == k
                                    if m.any():
                                        src[m] = self._locate_in_cube(f, child[m])
                                srcs.append(src)
                            avg_maps.append(_AvgMap(dst, srcs))

        if copy_dst:
            self._copy_dst = np.concatenate(copy_dst)
            self._copy_src = np.concatenate(copy_src)
        else:
            self._copy_dst = np.empty(0, dtype=np.int64)
            self._copy_src = np.empty(0, dtype=np.int64)
        if avg_maps:
            self._avg_dst = np.concatenate([m.dst for m in avg_maps])
            self._avg_src = [
                np.concatenate([m.src[k] for m in avg_maps]) for k in range(2**self.dim)
            ]
        else:
            self._avg_dst = np.empty(0, dtype=np.int64)
            self._avg_src = []

    def _locate_in_cube(self, cube_id: int, points: np.ndarray) -> np.ndarray:
        """Padded flat indices of the cells of one cube containing points."""
        cb = self.forest.cubes[cube_id]
        loc = np.floor((points - cb.origin) / cb.dx).astype(np.int64)
        if np.any(loc < 0) or np.any(loc >= self.n):
            raise RuntimeError("point outside target cube interior during map build")
        flat = np.ravel_multi_index((loc + HALO).T, (self.S,) * self.dim)
        return cube_id * self.S**self.dim + flat

    # -- exchange -------------------------------------------------------------

    def exchange(self, arr: np.ndarray) -> np.ndarray:
        """Fill halos from neighbor interiors (copy or average); returns arr."""
        flat = arr.reshape(arr.shape[: -self.dim - 1] + (-1,))
        if self._copy_dst.size:
            flat[..., self._copy_dst] = flat[..., self._copy_src]
        if self._avg_dst.size:
            acc = flat[..., self._avg_src[0]].copy()
            for src in self._avg_src[1:]:
                acc += flat[..., src]
            flat[..., self._avg_dst] = acc / len(self._avg_src)
        return arr
