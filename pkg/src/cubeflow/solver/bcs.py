"""Outer boundary conditions on the domain box.

Halo values at non-periodic domain faces are filled by mirroring so that
face-interpolated quantities meet the named condition; periodic faces are
handled entirely by the halo exchange maps.  Face-normal velocities at
inflow/wall/slip faces are prescribed outright; outflow faces carry a
zero-gradient value plus a uniform correction enforcing global mass balance.
"""

from __future__ import annotations

import numpy as np

from ..grid.field import FieldLayout
from .config import BoundarySpec


class BoundaryOps:
    """Precompiled index arrays for every non-periodic domain face."""

    def __init__(self, layout: FieldLayout, spec: BoundarySpec):
        spec.validate(layout.dim, layout.forest.periodic)
        self.layout = layout
        self.spec = spec
        self.groups: dict = {}
        for bf in layout.boundary:
            key = (bf.axis, bf.side)
            g = self.groups.setdefault(
                key,
                {"adj": [], "out": [], "first": [], "second": [], "face": [], "area": []},
            )
            g["adj"].append(bf.halo_adj)
            g["out"].append(bf.halo_out)
            g["first"].append(bf.int_first)
            g["second"].append(bf.int_second)
            g["face"].append(bf.face)
            area = layout.dx[bf.cube] ** (layout.dim - 1)
            g["area"].append(np.full(bf.face.size, area))
        for key, g in self.groups.items():
            for name in list(g):
                g[name] = np.concatenate(g[name]) if g[name] else np.empty(0, dtype=np.int64)

    def apply_velocity(self, u: np.ndarray) -> np.ndarray:
        """Fill domain-boundary halos of the velocity components."""
        dim = self.layout.dim
        flat = u.reshape(dim, -1)
        for (axis, side), g in self.groups.items():
            bc = self.spec.faces[(axis, side)]
            if bc.kind == "noslip":
                flat[:, g["adj"]] = -flat[:, g["first"]]
                flat[:, g["out"]] = -flat[:, g["second"]]
            elif bc.kind == "slip":
                for c in range(dim):
                    sgn = -1.0 if c == axis else 1.0
                    flat[c, g["adj"]] = sgn * flat[c, g["first"]]
                    flat[c, g["out"]] = sgn * flat[c, g["second"]]
            elif bc.kind == "inflow":
                for c in range(dim):
                    u0 = bc.velocity[c]
                    flat[c, g["adj"]] = 2.0 * u0 - flat[c, g["first"]]
                    flat[c, g["out"]] = 2.0 * u0 - flat[c, g["second"]]
            elif bc.kind == "outflow":
                flat[:, g["adj"]] = flat[:, g["first"]]
                flat[:, g["out"]] = flat[:, g["second"]]
        return u

    def apply_pressure(self, p: np.ndarray) -> np.ndarray:
        """Zero-gradient halos everywhere except outflow, which pins p = 0."""
        flat = p.reshape(-1)
        for (axis, side), g in self.groups.items():
            sgn = -1.0 if self.spec.faces[(axis, side)].kind == "outflow" else 1.0
            flat[g["adj"]] = sgn * flat[g["first"]]
            flat[g["out"]] = sgn * flat[g["second"]]
        return p

    def apply_scalar_zero_gradient(self, q: np.ndarray) -> np.ndarray:
        flat = q.reshape(-1)
        for g in self.groups.values():
            flat[g["adj"]] = flat[g["first"]]
            flat[g["out"]] = flat[g["second"]]
        return q

    def prescribe_faces(self, faces: list) -> None:
        """Impose boundary-face normal velocities (inflow/wall/slip) and
        correct outflow faces so global mass stays balanced."""
        outflux = 0.0
        out_area = 0.0
        out_groups = []
        for (axis, side), g in self.groups.items():
            bc = self.spec.faces[(axis, side)]
            fl = faces[axis].reshape(-1)
            sgn = float(side)
            if bc.kind in ("noslip", "slip"):
                fl[g["face"]] = 0.0
            elif bc.kind == "inflow":
                fl[g["face"]] = bc.velocity[axis]
                outflux += sgn * np.sum(fl[g["face"]] * g["area"])
            elif bc.kind == "outflow":
                out_groups.append((axis, side, g))
                outflux += sgn * np.sum(fl[g["face"]] * g["area"])
                out_area += float(np.sum(g["area"]))
        if out_groups and out_area > 0.0:
            correction = -outflux / out_area
            for axis, side, g in out_groups:
                faces[axis].reshape(-1)[g["face"]] += float(side) * correction

    @property
    def has_pressure_pin(self) -> bool:
        """True when some face pins the pressure level (outflow Dirichlet)."""
        return any(bc.kind == "outflow" for bc in self.spec.faces.values())
