"""Pressure Poisson operator and solvers.

The discrete operator is assembled as the exact composition of the runtime
pieces: halo fill (exchange maps plus boundary mirrors), face gradient with
wall-crossed faces severed, and face divergence.  Projection therefore
drives the *runtime* divergence to the solver residual, not to a merely
similar operator's residual.

Two solvers satisfy the same tolerance contract (residual max-norm):
BiCGStab (preconditioned, reusing one factorization across steps) and
red-black SOR colored by global cell parity.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..grid.field import FieldLayout
from ..grid.forest import HALO
from .bcs import BoundaryOps


class PoissonSolveError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class PoissonOperator:
    def __init__(
        self,
        layout: FieldLayout,
        bops: BoundaryOps,
        crossed_faces: list | None = None,
    ):
        self.layout = layout
        self.bops = bops
        self.n_int = layout.n_interior
        self.n_pad = int(np.prod(layout.shape))
        self.volumes = layout.cell_volumes()
        self.singular = not bops.has_pressure_pin
        self._assemble(crossed_faces)
        self._factor = None
        self._factor_kind = None

    # -- assembly ---------------------------------------------------------------

    def _assemble(self, crossed_faces) -> None:
        layout = self.layout
        dim = layout.dim

        inv = np.full(self.n_pad, -1, dtype=np.int64)
        inv[layout.interior_flat] = np.arange(self.n_int)

        rows = [layout.interior_flat]
        cols = [np.arange(self.n_int)]
        data = [np.ones(self.n_int)]
        if layout._copy_dst.size:
            rows.append(layout._copy_dst)
            cols.append(inv[layout._copy_src])
            data.append(np.ones(layout._copy_dst.size))
        if layout._avg_dst.size:
            w = 1.0 / len(layout._avg_src)
            for src in layout._avg_src:
                rows.append(layout._avg_dst)
                cols.append(inv[src])
                data.append(np.full(layout._avg_dst.size, w))
        for (axis, side), g in self.bops.groups.items():
            sgn = -1.0 if self.bops.spec.faces[(axis, side)].kind == "outflow" else 1.0
            rows += [g["adj"], g["out"]]
            cols += [inv[g["first"]], inv[g["second"]]]
            data += [np.full(g["adj"].size, sgn), np.full(g["out"].size, sgn)]
        H = sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_pad, self.n_int),
        )

        S, n = layout.S, layout.n
        pad_shape = (S,) * dim
        strides = [int(np.prod(pad_shape[a + 1 :], dtype=np.int64)) for a in range(dim)]
        cube_off = np.arange(layout.forest.n_cubes, dtype=np.int64) * S**dim
        inv_dx = 1.0 / layout.dx

        A = sp.csr_matrix((self.n_int, self.n_int))
        for a in range(dim):
            axes = []
            for ax in range(dim):
                if ax == a:
                    axes.append(np.arange(HALO - 1, HALO + n))
                else:
                    axes.append(np.arange(HALO, HALO + n))
            grids = np.meshgrid(*axes, indexing="ij")
            local = np.ravel_multi_index([g.ravel() for g in grids], pad_shape)
            face_rows = (cube_off[:, None] + local[None, :]).ravel()
            coef = np.repeat(inv_dx, local.size)
            g_rows = np.concatenate([face_rows, face_rows])
            g_cols = np.concatenate([face_rows + strides[a], face_rows])
            g_data = np.concatenate([coef, -coef])
            if crossed_faces is not None and crossed_faces[a][0].size:
                drop = np.isin(g_rows, crossed_faces[a][0])
                g_rows, g_cols, g_data = g_rows[~drop], g_cols[~drop], g_data[~drop]
            G = sp.csr_matrix((g_data, (g_rows, g_cols)), shape=(self.n_pad, self.n_pad))

            own = layout.interior_flat
            d_rows = np.concatenate([np.arange(self.n_int)] * 2)
            d_cols = np.concatenate([own, own - strides[a]])
            dcoef = np.repeat(inv_dx, layout.cells_per_cube)
            d_data = np.concatenate([dcoef, -dcoef])
            D = sp.csr_matrix((d_data, (d_rows, d_cols)), shape=(self.n_int, self.n_pad))

            A = A + (D @ G) @ H

        A = A.tocsr()
        A.sum_duplicates()
        A.eliminate_zeros()  # exact cancellations must not fake connectivity
        # cells sealed off on every face (no connections) get p pinned to 0
        diag = A.diagonal()
        dead = np.flatnonzero(diag == 0.0)
        if dead.size:
            pin = sp.csr_matrix(
                (np.ones(dead.size), (dead, dead)), shape=A.shape
            )
            A = A + pin
        self.dead_rows = dead
        self.A = A
        self.diag = A.diagonal()
        self._find_gauge_components()

    def _find_gauge_components(self) -> None:
        """Connected components of the pressure graph that carry no level
        anchor (all-Neumann/periodic) need their own zero-mean gauge; walls
        severing the stencil can seal off such regions."""
        from scipy.sparse.csgraph import connected_components

        n_comp, labels = connected_components(self.A, directed=False)
        rowsum = np.abs(self.A @ np.ones(self.n_int))
        scale = float(np.max(np.abs(self.diag)))
        self.gauge_comps = []
        for comp in range(n_comp):
            rows = np.flatnonzero(labels == comp)
            if rows.size and np.max(rowsum[rows]) < 1e-10 * scale:
                self.gauge_comps.append(rows)

    # -- gauge ------------------------------------------------------------------

    def _project(self, vec: np.ndarray) -> np.ndarray:
        """Zero the mean over every unanchored component (nullspace gauge and
        right-hand-side compatibility in one)."""
        out = vec.copy()
        for rows in self.gauge_comps:
            w = self.volumes[rows]
            out[rows] -= np.sum(out[rows] * w) / np.sum(w)
        return out

    def residual_inf(self, b: np.ndarray, x: np.ndarray) -> float:
        return float(np.max(np.abs(b - self.A @ x))) if b.size else 0.0

    # -- solvers ------------------------------------------------------------------

    def _preconditioner(self, kind: str):
        if kind == "none":
            return None
        if self._factor is not None and self._factor_kind == kind:
            return self._factor
        Ashift = self.A
        if self.gauge_comps:
            shift = 1e-8 * float(np.max(np.abs(self.diag)))
            Ashift = self.A + shift * sp.identity(self.n_int, format="csr")
        Acsc = Ashift.tocsc()
        if kind == "lu":
            lu = spla.splu(Acsc)
        elif kind == "ilu":
            lu = spla.spilu(Acsc, drop_tol=1e-5, fill_factor=10)
        else:
            raise ValueError(f"unknown preconditioner {kind!r}")
        if self.gauge_comps:
            # deflate the nullspace so the shift-induced tiny eigenvalue
            # cannot stall the Krylov iteration
            apply = lambda r: self._project(lu.solve(r))  # noqa: E731
        else:
            apply = lu.solve
        self._factor = spla.LinearOperator(self.A.shape, apply)
        self._factor_kind = kind
        return self._factor

    def solve(
        self,
        b: np.ndarray,
        solver: str = "bicgstab",
        tol: float = 1e-8,
        max_iter: int = 2000,
        omega: float = 1.7,
        precond: str = "ilu",
        x0: np.ndarray | None = None,
    ) -> tuple[np.ndarray, dict]:
        b = np.asarray(b, dtype=np.float64).copy()
        if self.dead_rows.size:
            b[self.dead_rows] = 0.0
        if self.gauge_comps:
            b = self._project(b)
        if x0 is None:
            x0 = np.zeros_like(b)
        elif self.gauge_comps:
            x0 = self._project(x0)
        if solver == "bicgstab":
            x, iters = self._bicgstab(b, x0, tol, max_iter, precond)
        elif solver == "redblack_sor":
            x, iters = self._sor(b, x0, tol, max_iter, omega)
        else:
            raise ValueError(f"unknown poisson solver {solver!r}")
        if self.gauge_comps:
            x = self._project(x)
        res = self.residual_inf(b, x)
        if res > tol:
            raise PoissonSolveError(
                f"poisson {solver} stalled at residual {res:.3e} > {tol:.3e}", residual=res
            )
        return x, {"iterations": iters, "residual": res}

    def _bicgstab(self, b, x0, tol, max_iter, precond):
        M = self._preconditioner(precond)
        iters = 0

        def count(_):
            nonlocal iters
            iters += 1

        # max-norm target via the stricter 2-norm bound
        x, info = spla.bicgstab(
            self.A, b, x0=x0, rtol=0.0, atol=tol, maxiter=max_iter, M=M, callback=count
        )
        if info != 0 and self.residual_inf(b, x) > tol:
            x, info = spla.bicgstab(
                self.A, b, x0=x, rtol=0.0, atol=0.1 * tol, maxiter=max_iter, M=M, callback=count
            )
        return x, iters

    def _sor(self, b, x0, tol, max_iter, omega):
        if not hasattr(self, "_colors"):
            self._colors = self._parity_colors()
            self._A_rows = [self.A[c] for c in self._colors]
        x = x0.copy()
        for sweep in range(max_iter):
            for rows, Ar in zip(self._colors, self._A_rows):
                r = b[rows] - Ar @ x
                x[rows] += omega * r / self.diag[rows]
            if sweep % 5 == 4 or sweep == max_iter - 1:
                if self.residual_inf(b, x) <= tol:
                    return x, sweep + 1
        return x, max_iter

    def _parity_colors(self):
        layout = self.layout
        n, dim = layout.n, layout.dim
        colors = np.empty(self.n_int, dtype=np.int8)
        local = np.stack(
            np.unravel_index(np.arange(layout.cells_per_cube), (n,) * dim), axis=1
        )
        for c, cube in enumerate(layout.forest.cubes):
            base = np.asarray(cube.ijk) * n
            par = (local + base).sum(axis=1) % 2
            colors[c * layout.cells_per_cube : (c + 1) * layout.cells_per_cube] = par
        return [np.flatnonzero(colors == 0), np.flatnonzero(colors == 1)]
