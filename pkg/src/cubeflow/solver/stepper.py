"""Fractional-step time integration.

One step runs: halo exchange -> eddy-viscosity update -> wall-stencil
refresh -> momentum right-hand side -> wall forcing -> momentum solve ->
face velocities with pressure-dissipation correction -> pressure Poisson ->
velocity correction -> outer boundary conditions.  The face divergence after
correction is checked against the Poisson tolerance every step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..grid.field import FieldLayout
from ..ibm.blocks import WallStencilSet
from ..ibm.forcing import compute_forcing
from ..ibm.mask import CellMask, dead_end_filter
from ..turb.csm import csm_eddy_viscosity
from .bcs import BoundaryOps
from .config import BoundarySpec, SchemeConfig
from .operators import FieldOps
from .poisson import PoissonOperator


class MomentumSolveError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class FieldState:
    """Collocated velocity/pressure plus face-normal velocities per cube."""

    u: np.ndarray  # (dim, cubes, S, ...)
    p: np.ndarray
    faces: list  # per axis, face-normal velocity
    nut: np.ndarray | None
    t: float = 0.0
    n: int = 0
    prev_rhs: np.ndarray | None = None


@dataclass
class StepDiagnostics:
    t: float
    n: int
    div_max: float
    poisson_residual: float
    poisson_iterations: int
    energy: float
    cfl: float
    inner_iterations: int = 0
    forcing_active: bool = False

    def row(self) -> dict:
        return {
            "step": self.n,
            "time": f"{self.t:.10g}",
            "div_max": f"{self.div_max:.6e}",
            "poisson_residual": f"{self.poisson_residual:.6e}",
            "poisson_iterations": self.poisson_iterations,
            "inner_iterations": self.inner_iterations,
            "energy": f"{self.energy:.12e}",
            "cfl": f"{self.cfl:.4f}",
        }


class FlowSolver:
    def __init__(
        self,
        layout: FieldLayout,
        scheme: SchemeConfig,
        boundary: BoundarySpec,
        mask: CellMask | None = None,
        stencils: WallStencilSet | None = None,
        wall_velocity=None,
    ):
        self.layout = layout
        self.scheme = scheme
        self.ops = FieldOps(layout)
        self.bops = BoundaryOps(layout, boundary)
        self.mask = mask
        self.stencils = stencils if (stencils is not None and stencils.m > 0) else None
        self.wall_velocity = wall_velocity
        if scheme.dead_end and mask is not None:
            dead_end_filter(mask)

        crossed = None
        if self.stencils is not None and scheme.ib_pressure_mode == "neumann":
            crossed = self.stencils.crossed_faces
        self.poisson = PoissonOperator(layout, self.bops, crossed)
        self._fluid_interior = self._fluid_selector()
        self._volumes = layout.cell_volumes()
        self._grad_p = None
        self._cfl_warned = False

    def _fluid_selector(self) -> np.ndarray:
        if self.mask is None:
            return self.layout.interior_flat
        fluid = self.mask.codes.reshape(-1)[self.layout.interior_flat] == 0
        return self.layout.interior_flat[fluid]

    # -- state construction -------------------------------------------------------

    def initial_state(self, velocity_fn=None, pressure_fn=None, time: float = 0.0) -> FieldState:
        """Sample initial fields at cell centers and derive face velocities."""
        layout = self.layout
        dim = layout.dim
        u = layout.alloc(dim)
        p = layout.alloc()
        if velocity_fn is not None:
            pts = layout.centers.reshape(-1, dim)
            vals = np.asarray(velocity_fn(pts), dtype=np.float64)
            for c in range(dim):
                u[c] = vals[:, c].reshape(layout.shape)
        if pressure_fn is not None:
            pts = layout.centers.reshape(-1, dim)
            p[...] = np.asarray(pressure_fn(pts), dtype=np.float64).reshape(layout.shape)
        layout.exchange(u)
        self.bops.apply_velocity(u)
        layout.exchange(p)
        self.bops.apply_pressure(p)
        faces = [self.ops.face_avg(u[a], a) for a in range(dim)]
        self._override_crossed_faces(faces, time)
        self.bops.prescribe_faces(faces)
        nut = layout.alloc() if self.scheme.turbulence else None
        return FieldState(u=u, p=p, faces=faces, nut=nut, t=time)

    # -- helpers ----------------------------------------------------------------

    def _override_crossed_faces(self, faces: list, time: float) -> None:
        if self.stencils is None or self.scheme.ib_pressure_mode != "neumann":
            return
        self.stencils.set_wall_velocity(self.wall_velocity, time)
        for a in range(self.layout.dim):
            idx, vals = self.stencils.crossed_face_values(a)
            if idx.size:
                faces[a].reshape(-1)[idx] = vals

    def _zero_crossed(self, g: np.ndarray, axis: int) -> None:
        if self.stencils is None or self.scheme.ib_pressure_mode != "neumann":
            return
        idx, _, _ = self.stencils.crossed_faces[axis]
        if idx.size:
            g.reshape(-1)[idx] = 0.0

    def update_eddy_viscosity(self, state: FieldState) -> None:
        """Coherent-structure eddy viscosity from redirected velocity gradients."""
        layout, ops = self.layout, self.ops
        dim = layout.dim
        grad = np.empty((dim, dim) + layout.shape)
        for c in range(dim):
            for a in range(dim):
                grad[c, a] = ops.central_grad(state.u[c], a)
        if self.stencils is not None and self.stencils.m:
            st = self.stencils
            own = st.owner_pad
            for c in range(dim):
                lines = st.line_values(state.u[c], "dirichlet", c)
                for a in range(dim):
                    grad[c, a].reshape(-1)[own] = (lines[:, a, 3] - lines[:, a, 1]) / (
                        2.0 * st.dx
                    )
        gmat = np.moveaxis(grad.reshape(dim, dim, -1), -1, 0)  # (ncell, dim, dim)
        delta = np.broadcast_to(
            self.ops.dxr, layout.shape
        ).reshape(-1)
        nut = csm_eddy_viscosity(gmat, delta)
        state.nut = nut.reshape(layout.shape)
        layout.exchange(state.nut)
        self.bops.apply_scalar_zero_gradient(state.nut)

    def assemble_momentum_rhs(
        self, u: np.ndarray, faces: list, nut: np.ndarray | None
    ) -> np.ndarray:
        """Advection + diffusion (+ SGS stress), wall cells from their stencils."""
        ops, scheme = self.ops, self.scheme
        sgs = ops.sgs_rhs(u, nut) if (scheme.turbulence and nut is not None) else None
        rhs = ops.advective_rhs(u, faces, scheme.quick_blend)
        for c in range(self.layout.dim):
            rhs[c] += ops.laplacian(u[c]) / scheme.re
        if sgs is not None:
            rhs += sgs
        if self.stencils is not None:
            ops.redirect_rhs(
                rhs, u, faces, scheme.re, scheme.quick_blend, self.stencils, sgs=sgs
            )
        return rhs

    def _forcing(self, rhs: np.ndarray, u: np.ndarray) -> np.ndarray | None:
        if self.stencils is None:
            return None
        return compute_forcing(
            self.layout, self.stencils, self.mask, rhs, u, self.scheme.dt,
            mode=self.scheme.ib_forcing_mode, grad_p=self._grad_p,
        )

    def solve_momentum(self, state: FieldState, rhs_n: np.ndarray) -> tuple[np.ndarray, int]:
        """Intermediate velocity by explicit two-level or implicit midpoint step."""
        scheme, layout = self.scheme, self.layout
        dt = scheme.dt
        u_n = state.u
        if scheme.integrator == "adams_bashforth":
            if state.prev_rhs is None:
                rhs_eff = rhs_n
            else:
                rhs_eff = 1.5 * rhs_n - 0.5 * state.prev_rhs
            force = self._forcing(rhs_eff, u_n)
            u_star = u_n + dt * (rhs_eff if force is None else rhs_eff + force)
            return u_star, 0

        u_k = u_n.copy()
        scale = max(float(np.max(np.abs(u_n))), 1e-12)
        for it in range(scheme.inner_cap):
            rhs_k = self.assemble_momentum_rhs(u_k, state.faces, state.nut)
            rhs_cn = 0.5 * (rhs_k + rhs_n)
            force = self._forcing(rhs_cn, u_n)
            u_next = u_n + dt * (rhs_cn if force is None else rhs_cn + force)
            layout.exchange(u_next)
            self.bops.apply_velocity(u_next)
            delta = float(np.max(np.abs(u_next - u_k)))
            scale = max(float(np.max(np.abs(u_next))), 1e-12)
            u_k = u_next
            if delta <= scheme.inner_tol * scale:
                return u_k, it + 1
        raise MomentumSolveError(
            f"inner iteration cap {scheme.inner_cap} reached, residual {delta / scale:.3e}",
            residual=delta / scale,
        )

    def rhie_chow_faces(self, u_star: np.ndarray, p: np.ndarray) -> list:
        """Face velocity: linear interpolation plus the pressure-dissipation
        correction (face gradient minus interpolated cell gradients)."""
        ops, dt = self.ops, self.scheme.dt
        faces = []
        for a in range(self.layout.dim):
            avg = ops.face_avg(u_star[a], a)
            g_face = ops.face_grad(p, a)
            g_cell = ops.central_grad(p, a)
            corr = g_face - ops.face_avg(g_cell, a)
            faces.append(avg - dt * corr)
        return faces

    # -- the full step ---------------------------------------------------------------

    def advance(self, state: FieldState) -> StepDiagnostics:
        layout, ops, scheme = self.layout, self.ops, self.scheme
        dim = layout.dim
        dt = scheme.dt
        t_new = state.t + dt

        layout.exchange(state.u)
        self.bops.apply_velocity(state.u)
        layout.exchange(state.p)
        self.bops.apply_pressure(state.p)

        if scheme.turbulence:
            self.update_eddy_viscosity(state)
        if self.stencils is not None:
            self.stencils.set_wall_velocity(self.wall_velocity, t_new)
            # current pressure gradient pre-compensates the projection in the
            # wall forcing targets
            self._grad_p = np.empty_like(state.u)
            for a in range(dim):
                g = ops.face_grad(state.p, a)
                self._zero_crossed(g, a)
                self._grad_p[a] = ops.cell_grad_from_faces(g, a)

        rhs_n = self.assemble_momentum_rhs(state.u, state.faces, state.nut)
        u_star, inner = self.solve_momentum(state, rhs_n)
        layout.exchange(u_star)
        self.bops.apply_velocity(u_star)

        faces = self.rhie_chow_faces(u_star, state.p)
        self._override_crossed_faces(faces, t_new)
        self.bops.prescribe_faces(faces)

        b = layout.to_vector(ops.div_faces(faces)) / dt
        p_vec, info = self.poisson.solve(
            b,
            solver=scheme.poisson_solver,
            tol=scheme.poisson_tol,
            max_iter=scheme.poisson_max_iter,
            omega=scheme.sor_omega,
            precond=scheme.poisson_precond,
            x0=layout.to_vector(state.p),
        )
        p_new = layout.from_vector(p_vec)
        layout.exchange(p_new)
        self.bops.apply_pressure(p_new)

        u_new = u_star.copy()
        for a in range(dim):
            g = ops.face_grad(p_new, a)
            self._zero_crossed(g, a)
            faces[a] -= dt * g
            u_new[a] -= dt * ops.cell_grad_from_faces(g, a)
        layout.exchange(u_new)
        self.bops.apply_velocity(u_new)

        div = layout.to_vector(ops.div_faces(faces))
        div_max = float(np.max(np.abs(div[self._fluid_vec_selector()])))
        interior_u = np.stack([layout.to_vector(u_new[c]) for c in range(dim)])
        if not np.all(np.isfinite(interior_u)):
            raise FloatingPointError(f"non-finite velocity at step {state.n + 1}")
        energy = 0.5 * float(np.sum((interior_u**2).sum(axis=0) * self._volumes))
        dx_vec = np.repeat(layout.dx, layout.cells_per_cube)
        cfl = float(np.max(np.abs(interior_u) / dx_vec)) * dt
        if cfl > scheme.cfl_warn and not self._cfl_warned:
            warnings.warn(
                f"CFL {cfl:.2f} exceeds {scheme.cfl_warn} at step {state.n + 1}",
                RuntimeWarning,
                stacklevel=2,
            )
            self._cfl_warned = True

        state.u = u_new
        state.p = p_new
        state.faces = faces
        state.prev_rhs = rhs_n
        state.t = t_new
        state.n += 1
        return StepDiagnostics(
            t=state.t,
            n=state.n,
            div_max=div_max,
            poisson_residual=info["residual"],
            poisson_iterations=info["iterations"],
            energy=energy,
            cfl=cfl,
            inner_iterations=inner,
            forcing_active=self.stencils is not None,
        )

    def _fluid_vec_selector(self) -> np.ndarray:
        if self.mask is None:
            return np.arange(self.layout.n_interior)
        return np.flatnonzero(
            self.mask.codes.reshape(-1)[self.layout.interior_flat] == 0
        )

    def run(self, state: FieldState, steps: int, monitor=None) -> list:
        history = []
        for _ in range(steps):
            diag = self.advance(state)
            history.append(diag)
            if monitor is not None:
                monitor(diag)
        return history
