"""Vectorized stencil operators on padded cube fields.

All operators act on every cube at once; per-cube cell sizes enter as a
broadcast factor.  Face arrays share the padded cell shape: the slot at
index i along an axis holds the face between cells i and i+1, valid on
[HALO-1, HALO+n).  Wall-region cells get their advection and molecular
diffusion recomputed from their private wall stencils.
"""

from __future__ import annotations

import numpy as np

from ..grid.field import FieldLayout
from ..grid.forest import HALO
from ..ibm.blocks import CENTER, WallStencilSet


class FieldOps:
    def __init__(self, layout: FieldLayout):
        self.layout = layout
        self.dim = layout.dim
        self.n = layout.n
        self.S = layout.S
        self.dxr = layout.dx.reshape((-1,) + (1,) * self.dim)
        pad_shape = (self.S,) * self.dim
        self.strides = [
            int(np.prod(pad_shape[a + 1 :], dtype=np.int64)) for a in range(self.dim)
        ]

    # -- slicing helpers ------------------------------------------------------

    def _ax(self, axis: int, lo: int, hi: int) -> tuple:
        sl = [slice(None)] * self.dim
        sl[axis] = slice(lo, hi)
        return (Ellipsis,) + tuple(sl)

    def face_range(self, axis: int) -> tuple:
        return self._ax(axis, HALO - 1, HALO + self.n)

    def interior(self, arr: np.ndarray) -> np.ndarray:
        return self.layout.interior(arr)

    # -- face interpolation -----------------------------------------------------

    def face_avg(self, q: np.ndarray, axis: int) -> np.ndarray:
        out = np.zeros_like(q)
        lo, hi = HALO - 1, HALO + self.n
        out[self._ax(axis, lo, hi)] = 0.5 * (
            q[self._ax(axis, lo, hi)] + q[self._ax(axis, lo + 1, hi + 1)]
        )
        return out

    def face_value(self, q: np.ndarray, U: np.ndarray, axis: int, beta: float) -> np.ndarray:
        """Blended central/upwind-biased-quadratic face value of q."""
        out = np.zeros_like(q)
        lo, hi = HALO - 1, HALO + self.n
        qm = q[self._ax(axis, lo - 1, hi - 1)]
        qc = q[self._ax(axis, lo, hi)]
        qp = q[self._ax(axis, lo + 1, hi + 1)]
        qpp = q[self._ax(axis, lo + 2, hi + 2)]
        central = 0.5 * (qc + qp)
        if beta > 0.0:
            upos = U[self._ax(axis, lo, hi)] >= 0.0
            quick = np.where(
                upos,
                (6.0 * qc + 3.0 * qp - qm) / 8.0,
                (6.0 * qp + 3.0 * qc - qpp) / 8.0,
            )
            out[self._ax(axis, lo, hi)] = (1.0 - beta) * central + beta * quick
        else:
            out[self._ax(axis, lo, hi)] = central
        return out

    def face_grad(self, p: np.ndarray, axis: int) -> np.ndarray:
        out = np.zeros_like(p)
        lo, hi = HALO - 1, HALO + self.n
        out[self._ax(axis, lo, hi)] = (
            p[self._ax(axis, lo + 1, hi + 1)] - p[self._ax(axis, lo, hi)]
        ) / self.dxr
        return out

    # -- divergence / laplacian ---------------------------------------------------

    def div_faces(self, faces: list) -> np.ndarray:
        """Divergence of face-normal values, valid on the interior."""
        out = np.zeros_like(faces[0])
        lo, hi = HALO, HALO + self.n
        for a in range(self.dim):
            out[self._ax(a, lo, hi)] += (
                faces[a][self._ax(a, lo, hi)] - faces[a][self._ax(a, lo - 1, hi - 1)]
            ) / self.dxr
        return out

    def laplacian(self, q: np.ndarray) -> np.ndarray:
        out = np.zeros_like(q)
        lo, hi = HALO, HALO + self.n
        for a in range(self.dim):
            out[self._ax(a, lo, hi)] += (
                q[self._ax(a, lo + 1, hi + 1)]
                - 2.0 * q[self._ax(a, lo, hi)]
                + q[self._ax(a, lo - 1, hi - 1)]
            ) / self.dxr**2
        return out

    def cell_grad_from_faces(self, g: np.ndarray, axis: int) -> np.ndarray:
        """Cell-centered gradient as the mean of the two adjacent face gradients."""
        out = np.zeros_like(g)
        lo, hi = HALO, HALO + self.n
        out[self._ax(axis, lo, hi)] = 0.5 * (
            g[self._ax(axis, lo, hi)] + g[self._ax(axis, lo - 1, hi - 1)]
        )
        return out

    def central_grad(self, q: np.ndarray, axis: int) -> np.ndarray:
        # valid one layer into the halos so face averages of cell gradients
        # stay correct on cube-boundary faces
        out = np.zeros_like(q)
        lo, hi = HALO - 1, HALO + self.n + 1
        out[self._ax(axis, lo, hi)] = (
            q[self._ax(axis, lo + 1, hi + 1)] - q[self._ax(axis, lo - 1, hi - 1)]
        ) / (2.0 * self.dxr)
        return out

    # -- momentum right-hand side ---------------------------------------------------

    def advective_rhs(self, u: np.ndarray, faces: list, beta: float) -> np.ndarray:
        """-(U . grad) u in advective flux form.

        Flux divergence minus u times the face divergence, so constant and
        linear fields are advected exactly also before the field is
        projected divergence-free.
        """
        dim = self.dim
        out = np.zeros_like(u)
        lo, hi = HALO, HALO + self.n
        facediv = self.div_faces(faces)
        for c in range(dim):
            acc = np.zeros_like(u[c])
            for a in range(dim):
                f = faces[a] * self.face_value(u[c], faces[a], a, beta)
                acc[self._ax(a, lo, hi)] += (
                    f[self._ax(a, lo, hi)] - f[self._ax(a, lo - 1, hi - 1)]
                ) / self.dxr
            out[c] = -(acc - u[c] * facediv)
        return out

    def diffusive_rhs(self, u: np.ndarray, re: float, nu_t: np.ndarray | None) -> np.ndarray:
        """(1/Re) lap(u) plus the eddy-viscosity stress div(2 nu_t S)."""
        out = np.empty_like(u)
        for c in range(self.dim):
            out[c] = self.laplacian(u[c]) / re
        if nu_t is not None:
            out += self.sgs_rhs(u, nu_t)
        return out

    def sgs_rhs(self, u: np.ndarray, nu_t: np.ndarray) -> np.ndarray:
        """div(2 nu_t S) with face-interpolated eddy viscosity."""
        dim = self.dim
        lo, hi = HALO, HALO + self.n
        flo, fhi = HALO - 1, HALO + self.n
        out = np.zeros_like(u)
        # cell-centered cross gradients, reused per (a, c) pair; exchanged so
        # face averages near cube corners read consistent neighbor values
        grads = [[self.central_grad(u[c], a) for a in range(dim)] for c in range(dim)]
        for row in grads:
            for g in row:
                self.layout.exchange(g)
        for c in range(dim):
            for a in range(dim):
                nu_f = self.face_avg(nu_t, a)
                flux = np.zeros_like(nu_t)
                dn = (
                    u[c][self._ax(a, flo + 1, fhi + 1)] - u[c][self._ax(a, flo, fhi)]
                ) / self.dxr
                cross = 0.5 * (
                    grads[a][c][self._ax(a, flo, fhi)]
                    + grads[a][c][self._ax(a, flo + 1, fhi + 1)]
                )
                flux[self._ax(a, flo, fhi)] = nu_f[self._ax(a, flo, fhi)] * (dn + cross)
                out[c][self._ax(a, lo, hi)] += (
                    flux[self._ax(a, lo, hi)] - flux[self._ax(a, lo - 1, hi - 1)]
                ) / self.dxr
        return out

    # -- wall-stencil redirection ------------------------------------------------------

    def redirect_rhs(
        self,
        rhs: np.ndarray,
        u: np.ndarray,
        faces: list,
        re: float,
        beta: float,
        stencils: WallStencilSet,
        sgs: np.ndarray | None = None,
    ) -> np.ndarray:
        """Recompute advection and molecular diffusion of wall-region cells
        from their ghost-closed line values."""
        st = stencils
        if st.m == 0:
            return rhs
        dim = self.dim
        dx = st.dx
        owner = st.owner_pad
        u_hi = np.empty((dim, st.m))
        u_lo = np.empty((dim, st.m))
        for a in range(dim):
            fl = faces[a].reshape(-1)
            u_hi[a] = fl[owner]
            u_lo[a] = fl[owner - self.strides[a]]
        for c in range(dim):
            lines = st.line_values(u[c], "dirichlet", c)  # (m, dim, 5)
            adv = np.zeros(st.m)
            diff = np.zeros(st.m)
            for a in range(dim):
                L = lines[:, a, :]
                if beta > 0.0:
                    f_hi = np.where(
                        u_hi[a] >= 0.0,
                        (6 * L[:, 2] + 3 * L[:, 3] - L[:, 1]) / 8.0,
                        (6 * L[:, 3] + 3 * L[:, 2] - L[:, 4]) / 8.0,
                    )
                    f_lo = np.where(
                        u_lo[a] >= 0.0,
                        (6 * L[:, 1] + 3 * L[:, 2] - L[:, 0]) / 8.0,
                        (6 * L[:, 2] + 3 * L[:, 1] - L[:, 3]) / 8.0,
                    )
                    f_hi = (1 - beta) * 0.5 * (L[:, 2] + L[:, 3]) + beta * f_hi
                    f_lo = (1 - beta) * 0.5 * (L[:, 1] + L[:, 2]) + beta * f_lo
                else:
                    f_hi = 0.5 * (L[:, 2] + L[:, 3])
                    f_lo = 0.5 * (L[:, 1] + L[:, 2])
                adv += (u_hi[a] * f_hi - u_lo[a] * f_lo) / dx
                adv -= L[:, CENTER] * (u_hi[a] - u_lo[a]) / dx
                diff += (L[:, 3] - 2.0 * L[:, 2] + L[:, 1]) / dx**2
            val = -adv + diff / re
            if sgs is not None:
                val = val + sgs[c].reshape(-1)[owner]
            rhs[c].reshape(-1)[owner] = val
        return rhs

    def redirected_cell_grad(
        self, p: np.ndarray, stencils: WallStencilSet, axis: int
    ) -> np.ndarray:
        """Owner-cell pressure gradients from zero-gradient closed lines."""
        lines = stencils.line_values(p, "neumann")
        L = lines[:, axis, :]
        return (L[:, 3] - L[:, 1]) / (2.0 * stencils.dx)
