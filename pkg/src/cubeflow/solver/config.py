"""Scheme and solver configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SchemeConfig:
    dt: float
    re: float
    quick_blend: float = 0.10
    integrator: str = "crank_nicolson"  # or "adams_bashforth"
    inner_tol: float = 1e-8
    inner_cap: int = 50
    poisson_solver: str = "bicgstab"  # or "redblack_sor"
    poisson_tol: float = 1e-8
    poisson_max_iter: int = 2000
    sor_omega: float = 1.7
    # preconditioning for the Krylov path: "lu" refactors once and reuses,
    # "ilu" is lighter in memory, "none" for small problems
    poisson_precond: str = "ilu"
    # whether the pressure stencil sees walls (zero-gradient closure at
    # crossed faces) or ignores the immersed boundary entirely
    ib_pressure_mode: str = "neumann"  # or "plain"
    # forcing composition: "distributed" (both flanking cells toward the
    # wall value) or "ghost_mirror" (only across-wall cells, toward their
    # stencil mirror values)
    ib_forcing_mode: str = "distributed"
    turbulence: bool = False
    dead_end: bool = False
    cfl_warn: float = 1.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.re <= 0.0:
            raise ValueError("re must be positive")
        if not 0.0 <= self.quick_blend <= 1.0:
            raise ValueError("quick_blend must be in [0, 1]")
        if self.integrator not in ("crank_nicolson", "adams_bashforth"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.poisson_solver not in ("bicgstab", "redblack_sor"):
            raise ValueError(f"unknown poisson solver {self.poisson_solver!r}")
        if self.ib_pressure_mode not in ("neumann", "plain"):
            raise ValueError(f"unknown ib_pressure_mode {self.ib_pressure_mode!r}")
        if self.ib_forcing_mode not in ("distributed", "ghost_mirror", "pins"):
            raise ValueError(f"unknown ib_forcing_mode {self.ib_forcing_mode!r}")


@dataclass
class FaceBC:
    kind: str  # periodic | inflow | outflow | slip | noslip
    velocity: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("periodic", "inflow", "outflow", "slip", "noslip"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "inflow":
            if self.velocity is None:
                raise ValueError("inflow needs a velocity")
            self.velocity = np.asarray(self.velocity, dtype=np.float64)


@dataclass
class BoundarySpec:
    """Outer boundary condition per domain face, keyed by (axis, side)."""

    faces: dict = field(default_factory=dict)

    @classmethod
    def periodic(cls, dim: int) -> "BoundarySpec":
        return cls(
            {(a, s): FaceBC("periodic") for a in range(dim) for s in (-1, 1)}
        )

    @classmethod
    def channel(cls, dim: int, u0, sides: str = "slip") -> "BoundarySpec":
        """Inflow at x-, outflow at x+, the rest slip (or as named)."""
        faces = {(0, -1): FaceBC("inflow", np.asarray(u0, dtype=np.float64)),
                 (0, 1): FaceBC("outflow")}
        for a in range(1, dim):
            for s in (-1, 1):
                faces[(a, s)] = FaceBC(sides)
        return cls(faces)

    def kind(self, axis: int, side: int) -> str:
        return self.faces[(axis, side)].kind

    def validate(self, dim: int, periodic_axes) -> None:
        """Periodic declarations must pair up and match the forest build."""
        for a in range(dim):
            for s in (-1, 1):
                if (a, s) not in self.faces:
                    raise ValueError(f"missing boundary condition for axis {a} side {s}")
            lo = self.faces[(a, -1)].kind == "periodic"
            hi = self.faces[(a, 1)].kind == "periodic"
            if lo != hi:
                raise ValueError(f"inconsistent periodic pairing on axis {a}")
            if lo != bool(periodic_axes[a]):
                raise ValueError(
                    f"axis {a}: boundary spec says periodic={lo} but the forest "
                    f"was built with periodic={bool(periodic_axes[a])}"
                )
