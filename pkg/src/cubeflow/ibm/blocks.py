"""Per-cell wall stencils (private five-cell axis lines with ghost closure).

Every wall-region cell owns a virtual copy of the five cells on each of its
axis lines.  The first wall crossing within two cells per direction is
recorded with its distance and wall velocity; line cells beyond the crossing
are ghosts whose values come from the one-dimensional closure instead of the
background field.  Because each cell's stencil is private, opposite sides of
a zero-thickness sheet split cleanly with no global inside/outside state.
"""

from __future__ import annotations

import numpy as np

from ..grid.field import FieldLayout
from ..grid.forest import HALO
from .closure import ghost_value
from .mask import CellMask, _pad_line_base_stride

CENTER = 2  # index of the owner cell in a 5-cell line


class WallStencilSet:
    """Vectorized container of all wall stencils on a layout."""

    def __init__(
        self,
        layout: FieldLayout,
        mask: CellMask,
        registry: dict,
        slice_z: float = 0.0,
        nudge: float = 1e-6,
    ):
        self.layout = layout
        self.dim = layout.dim
        self.slice_z = slice_z
        dim, n, S = self.dim, layout.n, layout.S

        owners_c, owners_local = [], []
        region = layout.interior(mask.wall_region)
        for c in range(layout.forest.n_cubes):
            flat = np.flatnonzero(region[c].reshape(-1))
            if flat.size:
                owners_c.append(np.full(flat.size, c, dtype=np.int64))
                owners_local.append(np.stack(np.unravel_index(flat, (n,) * dim), axis=1))
        if owners_c:
            self.cube = np.concatenate(owners_c)
            local = np.concatenate(owners_local)
        else:
            self.cube = np.empty(0, dtype=np.int64)
            local = np.empty((0, dim), dtype=np.int64)
        m = self.cube.size
        self.m = m
        self.local = local
        self.dx = layout.dx[self.cube] if m else np.empty(0)

        pad_shape = (S,) * dim
        if m:
            self.owner_pad = self.cube * S**dim + np.ravel_multi_index(
                (local + HALO).T, pad_shape
            )
        else:
            self.owner_pad = np.empty(0, dtype=np.int64)
        centers_flat = layout.centers.reshape(-1, dim)
        self.center = centers_flat[self.owner_pad] if m else np.empty((0, dim))

        # five-cell line indices per axis (stay inside the padded block)
        strides = [int(np.prod(pad_shape[a + 1 :], dtype=np.int64)) for a in range(dim)]
        self.line_idx = np.empty((m, dim, 5), dtype=np.int64)
        for a in range(dim):
            off = (np.arange(5) - CENTER) * strides[a]
            self.line_idx[:, a, :] = self.owner_pad[:, None] + off[None, :]

        nq = 2 * dim
        self.has_x = np.zeros((m, nq), dtype=bool)
        self.dist = np.full((m, nq), np.inf)
        self.tri = np.full((m, nq), -1, dtype=np.int64)
        self.xpt = np.zeros((m, nq, 3))
        self.xpt[..., 2] = slice_z
        self.u_ib = np.zeros((m, nq, dim))

        self._find_crossings(registry, nudge)
        self._resolve_ghost_targets()
        self._collect_crossed_faces(strides)

    # -- construction -------------------------------------------------------

    def _find_crossings(self, registry: dict, nudge: float) -> None:
        layout, dim, n = self.layout, self.dim, self.layout.n
        trans_shape = (n,) * (dim - 1)
        for c in np.unique(self.cube):
            sel = np.flatnonzero(self.cube == c)
            cube = layout.forest.cubes[c]
            dx = cube.dx
            eps = 1e-12 * dx
            for a in range(dim):
                offsets, s_all, tri_all = registry[(c, a)]
                trans = tuple(
                    self.local[sel, ax] for ax in range(dim) if ax != a
                )
                lines = (
                    np.ravel_multi_index(trans, trans_shape) if dim > 1 else np.zeros(sel.size, int)
                )
                s0 = self.center[sel, a]
                for k, row in enumerate(sel):
                    lo, hi = offsets[lines[k]], offsets[lines[k] + 1]
                    if hi == lo:
                        continue
                    seg = s_all[lo:hi]
                    # forward: first crossing at s in [s0 - eps, s0 + 2 dx)
                    p = int(np.searchsorted(seg, s0[k] - eps))
                    if p < seg.size and seg[p] < s0[k] + 2.0 * dx:
                        q = 2 * a + 1
                        d = max(seg[p] - s0[k], nudge * dx)
                        self.has_x[row, q] = True
                        self.dist[row, q] = d
                        self.tri[row, q] = tri_all[lo + p]
                        self.xpt[row, q, : dim] = self.center[row]
                        self.xpt[row, q, a] = s0[k] + d
                    # backward: last crossing at s in (s0 - 2 dx, s0 + eps]
                    p = int(np.searchsorted(seg, s0[k] + eps)) - 1
                    if p >= 0 and seg[p] > s0[k] - 2.0 * dx:
                        q = 2 * a
                        d = max(s0[k] - seg[p], nudge * dx)
                        self.has_x[row, q] = True
                        self.dist[row, q] = d
                        self.tri[row, q] = tri_all[lo + p]
                        self.xpt[row, q, : dim] = self.center[row]
                        self.xpt[row, q, a] = s0[k] - d

    def _resolve_ghost_targets(self) -> None:
        """Padded index of the cell across each near crossing (forcing target)."""
        layout, dim = self.layout, self.dim
        forest = layout.forest
        self.ghost_target = np.full((self.m, 2 * dim), -1, dtype=np.int64)
        if self.m == 0:
            return
        lo, hi = forest.domain_lo, forest.domain_hi
        ext = hi - lo
        for a in range(dim):
            for side, q in ((-1, 2 * a), (1, 2 * a + 1)):
                sel = np.flatnonzero(self.has_x[:, q] & (self.dist[:, q] < self.dx))
                if sel.size == 0:
                    continue
                pts = self.center[sel].copy()
                pts[:, a] += side * self.dx[sel]
                for ax in range(dim):
                    if forest.periodic[ax]:
                        pts[:, ax] = lo[ax] + np.mod(pts[:, ax] - lo[ax], ext[ax])
                inside = np.all(pts > lo, axis=1) & np.all(pts < hi, axis=1)
                if inside.any():
                    ids, locs = forest.locate_cells(pts[inside])
                    pad = ids * layout.S**dim + np.ravel_multi_index(
                        (locs + HALO).T, (layout.S,) * dim
                    )
                    tgt = np.full(sel.size, -1, dtype=np.int64)
                    tgt[inside] = pad
                    self.ghost_target[sel, q] = tgt

    def _collect_crossed_faces(self, strides) -> None:
        """Faces whose center-to-center segment is crossed, per axis.

        Each crossing severs the owner-side face slot and the neighbor
        cube's copy of the same face (via the resolved cell across the
        crossing), so the pressure graph stays structurally symmetric also
        when the flanking cells live in different cubes.  Duplicates are
        removed keeping the first source so wall-velocity lookups align.
        """
        dim = self.dim
        self.crossed_faces = []
        for a in range(dim):
            faces, src_row, src_q = [], [], []
            for side, q in ((1, 2 * a + 1), (-1, 2 * a)):
                sel = np.flatnonzero(self.has_x[:, q] & (self.dist[:, q] < self.dx))
                if sel.size == 0:
                    continue
                f = self.owner_pad[sel] + (0 if side > 0 else -strides[a])
                faces.append(f)
                src_row.append(sel)
                src_q.append(np.full(sel.size, q, dtype=np.int64))
                tgt = self.ghost_target[sel, q]
                ok = tgt >= 0
                if ok.any():
                    f2 = tgt[ok] + (-strides[a] if side > 0 else 0)
                    faces.append(f2)
                    src_row.append(sel[ok])
                    src_q.append(np.full(ok.sum(), q, dtype=np.int64))
            if faces:
                faces = np.concatenate(faces)
                src_row = np.concatenate(src_row)
                src_q = np.concatenate(src_q)
                faces, first = np.unique(faces, return_index=True)
                self.crossed_faces.append((faces, src_row[first], src_q[first]))
            else:
                e = np.empty(0, dtype=np.int64)
                self.crossed_faces.append((e, e, e))

    # -- per-step refresh -----------------------------------------------------

    def set_wall_velocity(self, fn, time: float = 0.0) -> None:
        """Evaluate the wall velocity at every recorded crossing.

        fn(points (k, 3), time) -> (k, dim); None means a stationary wall.
        """
        if self.m == 0:
            return
        if fn is None:
            self.u_ib[...] = 0.0
            return
        sel = np.flatnonzero(self.has_x.reshape(-1))
        pts = self.xpt.reshape(-1, 3)[sel]
        vals = np.asarray(fn(pts, time), dtype=np.float64)
        flat = self.u_ib.reshape(-1, self.dim)
        flat[sel] = vals

    def crossed_face_values(self, axis: int):
        """(face indices, prescribed face-normal velocity) for crossed faces."""
        faces, rows, qs = self.crossed_faces[axis]
        if faces.size == 0:
            return faces, np.empty(0)
        return faces, self.u_ib[rows, qs, axis]

    # -- ghost-closed line values ----------------------------------------------

    def ghost_rings(self) -> np.ndarray:
        """(m, 2*dim, 2) flags: line cells 1 and 2 past each direction are ghosts."""
        near = self.has_x & (self.dist < self.dx[:, None])
        far = self.has_x & ~near
        out = np.zeros((self.m, 2 * self.dim, 2), dtype=bool)
        out[..., 0] = near
        out[..., 1] = near | far
        return out

    def line_values(self, padded: np.ndarray, mode: str, comp: int | None = None) -> np.ndarray:
        """Five-cell line values per axis with ghost substitution applied.

        mode 'dirichlet' mirrors through the wall velocity (velocity
        components; comp selects which u_ib component), mode 'neumann' copies
        the last fluid value (zero gradient, used for pressure).
        """
        flat = padded.reshape(-1)
        vals = flat[self.line_idx]  # (m, dim, 5)
        if self.m == 0:
            return vals
        bg = vals.copy()
        dxm = self.dx
        for a in range(self.dim):
            for side, q in ((-1, 2 * a), (1, 2 * a + 1)):
                ring1 = CENTER + side
                ring2 = CENTER + 2 * side
                opp = CENTER - side
                near = np.flatnonzero(self.has_x[:, q] & (self.dist[:, q] < dxm))
                if near.size:
                    if mode == "dirichlet":
                        g = ghost_value(
                            bg[near, a, CENTER],
                            bg[near, a, opp],
                            self.u_ib[near, q, comp],
                            self.dist[near, q],
                            dxm[near],
                        )
                    else:
                        g = bg[near, a, CENTER]
                    vals[near, a, ring1] = g
                    vals[near, a, ring2] = g
                far = np.flatnonzero(
                    self.has_x[:, q] & (self.dist[:, q] >= dxm) & (self.dist[:, q] < 2 * dxm)
                )
                if far.size:
                    if mode == "dirichlet":
                        g2 = ghost_value(
                            bg[far, a, ring1],
                            bg[far, a, CENTER],
                            self.u_ib[far, q, comp],
                            self.dist[far, q] - dxm[far],
                            dxm[far],
                        )
                    else:
                        g2 = bg[far, a, ring1]
                    vals[far, a, ring2] = g2
        return vals

    def reconstruction_error(self, u_padded: np.ndarray) -> np.ndarray:
        """|linear wall reconstruction - wall velocity| per near crossing.

        Extrapolates the two real fluid-side cells along each crossed line to
        the crossing point; first-order wall treatment bounds this by C*dx.
        Returns an array of absolute errors (all components, all crossings).
        """
        errs = []
        for a in range(self.dim):
            for side, q in ((-1, 2 * a), (1, 2 * a + 1)):
                sel = np.flatnonzero(self.has_x[:, q] & (self.dist[:, q] < self.dx))
                if sel.size == 0:
                    continue
                d = self.dist[sel, q]
                for c in range(u_padded.shape[0]):
                    flat = u_padded[c].reshape(-1)
                    u_p = flat[self.line_idx[sel, a, CENTER]]
                    u_opp = flat[self.line_idx[sel, a, CENTER - side]]
                    rec = u_p + (d / self.dx[sel]) * (u_p - u_opp)
                    errs.append(np.abs(rec - self.u_ib[sel, q, c]))
        return np.concatenate(errs) if errs else np.empty(0)


def build_wall_stencils(
    layout: FieldLayout,
    mask: CellMask,
    registry: dict,
    slice_z: float = 0.0,
) -> WallStencilSet:
    return WallStencilSet(layout, mask, registry, slice_z=slice_z)
