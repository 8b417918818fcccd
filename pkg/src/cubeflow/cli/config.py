"""Case configuration: a flat, human-editable key = value text format.

Values are JSON literals (numbers, strings, booleans, lists), one per line,
with '#' comments.  Parsing and serialization round-trip exactly, which the
run manifest relies on for config hashing.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

CASE_KINDS = ("tgv2d", "external3d", "isotropic3d", "channel2d")


@dataclass
class CaseConfig:
    name: str = "case"
    kind: str = "tgv2d"
    dim: int = 2

    domain_lo: list = field(default_factory=lambda: [-2.0, -2.0])
    domain_hi: list = field(default_factory=lambda: [2.0, 2.0])
    base_cubes: list = field(default_factory=lambda: [4, 4])
    cells_per_side: int = 10
    max_levels: int = 0
    pad_cells: int = 4
    cube_budget: int = 200_000

    geometry: str | None = None
    geometry_scale: float = 1.0
    slice_z: float = 0.0
    weld_tolerance: float | None = None

    # boundary kinds per face: "<axis><sign>" -> kind; inflow takes bc_velocity
    bc: dict = field(default_factory=lambda: {"x-": "periodic", "x+": "periodic",
                                              "y-": "periodic", "y+": "periodic"})
    bc_velocity: list = field(default_factory=lambda: [1.0, 0.0, 0.0])

    re: float = 100.0
    u_ref: float = 1.0
    rho: float = 1.0
    dt: float = 1e-4
    steps: int = 3000

    quick_blend: float = 0.0
    integrator: str = "adams_bashforth"
    inner_tol: float = 1e-8
    inner_cap: int = 50
    poisson_solver: str = "bicgstab"
    poisson_tol: float = 1e-6
    poisson_max_iter: int = 4000
    sor_omega: float = 1.7
    poisson_precond: str = "lu"
    ib_pressure_mode: str = "plain"
    ib_forcing_mode: str = "pins"

    turbulence: bool = False
    dead_end_filter: bool = False
    thin_plate_filter: bool = True
    wall_velocity: str = "zero"  # zero | tgv

    # case-specific extras
    tgv_shape: str = "none"  # none | square | circle
    reference_area: float | None = None
    reference_diameter: float = 1.0
    force_every: int = 0  # 0 disables force sampling during the run
    force_window: float = 0.25  # trailing fraction of steps averaged for cd

    spectrum_table: str | None = None
    n_modes: int = 1000
    seed: int = 0

    output_dir: str = "runs/case"
    output_every: int = 0  # field exports every k steps (0: final only)
    export_fields: bool = False
    probes: list = field(default_factory=list)  # [[x, y(, z)], ...] per step

    # -- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        lines = [f"# cubeflow case configuration: {self.name}"]
        for key, value in self.to_dict().items():
            lines.append(f"{key} = {json.dumps(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CaseConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip()
            try:
                values[key] = json.loads(val.strip())
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from None
        unknown = set(values) - set(cls().to_dict())
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    @classmethod
    def load(cls, path) -> "CaseConfig":
        return cls.from_text(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    # -- validation ---------------------------------------------------------------

    def validate(self, base_dir=None) -> None:
        if self.kind not in CASE_KINDS:
            raise ValueError(f"unknown case kind {self.kind!r}")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if len(self.domain_lo) != self.dim or len(self.domain_hi) != self.dim:
            raise ValueError("domain extents must match dim")
        if np.any(np.asarray(self.domain_hi) <= np.asarray(self.domain_lo)):
            raise ValueError("domain_hi must exceed domain_lo")
        if self.dt <= 0 or self.steps < 0 or self.re <= 0:
            raise ValueError("dt and re must be positive, steps nonnegative")
        for axis in range(self.dim):
            for sign in "-+":
                key = f"{'xyz'[axis]}{sign}"
                if key not in self.bc:
                    raise ValueError(f"missing boundary condition for face {key}")
        if self.geometry is not None:
            path = Path(self.geometry)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            if not path.exists():
                raise FileNotFoundError(f"geometry file not found: {path}")
        if self.spectrum_table is not None and not Path(self.spectrum_table).exists():
            raise FileNotFoundError(f"spectrum table not found: {self.spectrum_table}")

    def periodic_axes(self) -> tuple:
        out = []
        for axis in range(self.dim):
            out.append(self.bc[f"{'xyz'[axis]}-"] == "periodic")
        return tuple(out)

    @property
    def nu(self) -> float:
        return self.u_ref / self.re
