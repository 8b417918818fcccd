"""Canonical case builders: vortex-decay verification, dirty-sphere family,
flat plate, isotropic decay.  Dirty geometry is generated synthetically so
the inputs are reproducible without shipping meshes."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..geomio import save_binary
from ..geomio.dirty import duplicate_faces, inject_gaps, reduce_faces, shrink_faces
from ..geomio.shapes import diamond_square, extruded_polygon, icosphere, rect_plate, regular_polygon
from .config import CaseConfig


def tgv2d_config(n: int, shape: str = "none", steps: int = 3000, dt: float = 1e-4,
                 re: float = 100.0, geometry_dir=None) -> CaseConfig:
    """Decaying-vortex verification at n cells per direction.

    shape 'square' immerses a diagonal square of side sqrt(2); 'circle' a
    radius-1 polygonal circle; both impose the analytic velocity on the
    boundary in time.
    """
    base = 4
    if n % base:
        raise ValueError(f"n = {n} not divisible by {base} cubes per direction")
    cfg = CaseConfig(
        name=f"tgv2d_{shape}_{n}",
        kind="tgv2d",
        dim=2,
        domain_lo=[-2.0, -2.0],
        domain_hi=[2.0, 2.0],
        base_cubes=[base, base],
        cells_per_side=n // base,
        re=re,
        dt=dt,
        steps=steps,
        quick_blend=0.0,
        integrator="adams_bashforth",
        poisson_tol=1e-8 if shape == "none" else 1e-4,
        poisson_precond="lu",
        tgv_shape=shape,
        wall_velocity="tgv" if shape != "none" else "zero",
        output_dir=f"runs/tgv2d_{shape}_{n}",
    )
    if shape != "none":
        cfg.geometry = str(tgv_geometry(shape, geometry_dir))
    return cfg


def tgv_geometry(shape: str, out_dir=None) -> Path:
    out_dir = Path(out_dir) if out_dir is not None else Path("runs/geometry")
    out_dir.mkdir(parents=True, exist_ok=True)
    if shape == "square":
        poly = diamond_square(np.sqrt(2.0))
        n_pts = 4
    elif shape == "circle":
        n_pts = 2048
        poly = regular_polygon(1.0, n_pts)
    else:
        raise ValueError(f"unknown immersed shape {shape!r}")
    soup = extruded_polygon(poly, -0.1, 0.1)
    path = out_dir / f"tgv_{shape}_{n_pts}.stl"
    save_binary(soup, path)
    return path


SPHERE_VARIANTS = ("clean", "gaps", "reduced10", "reduced20", "reduced50", "duplicated")


def sphere_geometry(variant: str, out_dir=None, subdivisions: int = 3, seed: int = 7) -> Path:
    """The dirty-sphere family: one clean tessellation and its defect-injected
    siblings, all sharing the same outermost surface."""
    out_dir = Path(out_dir) if out_dir is not None else Path("runs/geometry")
    out_dir.mkdir(parents=True, exist_ok=True)
    soup = icosphere(diameter=1.0, subdivisions=subdivisions)
    if variant == "clean":
        pass
    elif variant == "gaps":
        soup = inject_gaps(soup, shrink=0.998)
    elif variant.startswith("reduced"):
        soup = reduce_faces(soup, int(variant[7:]) / 100.0, seed=seed)
    elif variant == "shrunk10":
        soup = shrink_faces(soup, 0.10)
    elif variant == "duplicated":
        soup = duplicate_faces(soup, fraction=1.0, seed=seed)
    else:
        raise ValueError(f"unknown sphere variant {variant!r}")
    path = out_dir / f"sphere_{variant}_s{subdivisions}.stl"
    save_binary(soup, path)
    return path


def sphere_config(variant: str = "clean", re: float = 100.0, steps: int = 800,
                  dt: float = 1.5e-2, geometry_dir=None, subdivisions: int = 3,
                  paper_scale: bool = False) -> CaseConfig:
    """Desk-scale flow past a (possibly dirty) unit sphere.

    Two-level grid refined at the surface; inflow/outflow along x, slip side
    walls.  Comparative drag studies change only the geometry path.
    paper_scale switches to the published supercritical setup (Re = 1.14e6,
    205 cells per diameter); expect supercomputer-class cost.
    """
    geo = sphere_geometry(variant, geometry_dir, subdivisions=subdivisions)
    if paper_scale:
        import warnings

        warnings.warn(
            "paper-scale sphere: about 6.7e7 cells and 1.5e5 steps; this is a "
            "multi-node-class run, not a workstation case",
            RuntimeWarning,
            stacklevel=2,
        )
        cfg = CaseConfig(
            name=f"sphere_{variant}_paper",
            kind="external3d",
            dim=3,
            domain_lo=[-15.0, -10.0, -10.0],
            domain_hi=[25.0, 10.0, 10.0],
            base_cubes=[16, 8, 8],
            cells_per_side=16,
            max_levels=4,
            pad_cells=4,
            cube_budget=2_000_000,
            geometry=str(geo),
            bc={"x-": "inflow", "x+": "outflow", "y-": "slip", "y+": "slip",
                "z-": "slip", "z+": "slip"},
            bc_velocity=[1.0, 0.0, 0.0],
            re=1.14e6,
            dt=2.0e-4,
            steps=150_000,
            quick_blend=0.10,
            integrator="crank_nicolson",
            poisson_tol=1e-4,
            poisson_precond="ilu",
            dead_end_filter=True,
            thin_plate_filter=True,
            reference_diameter=1.0,
            force_every=100,
            output_dir=f"runs/sphere_{variant}_paper",
        )
        return cfg
    return CaseConfig(
        name=f"sphere_{variant}",
        kind="external3d",
        dim=3,
        domain_lo=[-2.5, -2.5, -2.5],
        domain_hi=[5.5, 2.5, 2.5],
        base_cubes=[8, 5, 5],
        cells_per_side=8,
        max_levels=1,
        pad_cells=4,
        geometry=str(geo),
        bc={"x-": "inflow", "x+": "outflow", "y-": "slip", "y+": "slip",
            "z-": "slip", "z+": "slip"},
        bc_velocity=[1.0, 0.0, 0.0],
        re=re,
        dt=dt,
        steps=steps,
        quick_blend=0.10,
        integrator="adams_bashforth",
        poisson_tol=1e-4,
        poisson_precond="ilu",
        dead_end_filter=True,
        thin_plate_filter=True,
        reference_diameter=1.0,
        force_every=10,
        output_dir=f"runs/sphere_{variant}",
    )


def flat_plate_geometry(alpha_deg: float, chord: float = 1.0, aspect: float = 6.0,
                        out_dir=None) -> Path:
    """Zero-thickness rectangular wing at incidence (rotated about the span)."""
    out_dir = Path(out_dir) if out_dir is not None else Path("runs/geometry")
    out_dir.mkdir(parents=True, exist_ok=True)
    a = np.deg2rad(alpha_deg)
    chordwise = np.array([chord * np.cos(a), -chord * np.sin(a), 0.0])
    spanwise = np.array([0.0, 0.0, aspect * chord])
    soup = rect_plate((0.0, 0.0, 0.0), spanwise, chordwise, n_span=12, n_chord=4)
    path = out_dir / f"plate_a{alpha_deg:g}.stl"
    save_binary(soup, path)
    return path


def flat_plate_config(alpha_deg: float, re: float = 100.0, steps: int = 600,
                      dt: float = 1e-2, geometry_dir=None,
                      paper_scale: bool = False) -> CaseConfig:
    """Desk-scale thin plate at incidence (aspect ratio 6, coefficients per
    the plan-area convention).  paper_scale selects the published setup
    (Re = 1.14e4, chord resolved by 102 cells, domain 40C x 20C x 40C) with a
    cost warning."""
    chord = 1.0
    if paper_scale:
        import warnings

        warnings.warn(
            "paper-scale plate: order 5e7 to 2e8 cells; far beyond a single "
            "workstation",
            RuntimeWarning,
            stacklevel=2,
        )
        geo = flat_plate_geometry(alpha_deg, chord=chord, out_dir=geometry_dir)
        return CaseConfig(
            name=f"plate_a{alpha_deg:g}_paper",
            kind="external3d",
            dim=3,
            domain_lo=[-13.0, -10.0, -20.0],
            domain_hi=[27.0, 10.0, 20.0],
            base_cubes=[16, 8, 16],
            cells_per_side=16,
            max_levels=4,
            cube_budget=2_000_000,
            geometry=str(geo),
            bc={"x-": "inflow", "x+": "outflow", "y-": "slip", "y+": "slip",
                "z-": "slip", "z+": "slip"},
            bc_velocity=[1.0, 0.0, 0.0],
            re=1.14e4,
            dt=2.0e-3,
            steps=50_000,
            quick_blend=0.0,
            integrator="crank_nicolson",
            poisson_tol=1e-4,
            poisson_precond="ilu",
            thin_plate_filter=True,
            reference_area=6.0 * chord**2,
            force_every=100,
            output_dir=f"runs/plate_a{alpha_deg:g}_paper",
        )
    geo = flat_plate_geometry(alpha_deg, chord=chord, out_dir=geometry_dir)
    return CaseConfig(
        name=f"plate_a{alpha_deg:g}",
        kind="external3d",
        dim=3,
        domain_lo=[-3.0, -3.0, -6.0],
        domain_hi=[6.0, 3.0, 6.0],
        base_cubes=[6, 4, 8],
        cells_per_side=8,
        max_levels=1,
        pad_cells=3,
        geometry=str(geo),
        bc={"x-": "inflow", "x+": "outflow", "y-": "slip", "y+": "slip",
            "z-": "slip", "z+": "slip"},
        bc_velocity=[1.0, 0.0, 0.0],
        re=re,
        dt=dt,
        steps=steps,
        quick_blend=0.10,
        poisson_tol=1e-4,
        poisson_precond="ilu",
        thin_plate_filter=True,
        reference_area=6.0 * chord**2,
        force_every=10,
        output_dir=f"runs/plate_a{alpha_deg:g}",
    )


def isotropic_config(n: int = 64, steps: int = 0, seed: int = 0) -> CaseConfig:
    """Isotropic-turbulence box initialized from the bundled decay spectrum."""
    base = 4
    box = 9 * 2 * np.pi / 100.0  # meters, matching the bundled table units
    return CaseConfig(
        name=f"isotropic_{n}",
        kind="isotropic3d",
        dim=3,
        domain_lo=[0.0, 0.0, 0.0],
        domain_hi=[box, box, box],
        base_cubes=[base, base, base],
        cells_per_side=n // base,
        bc={"x-": "periodic", "x+": "periodic", "y-": "periodic", "y+": "periodic",
            "z-": "periodic", "z+": "periodic"},
        re=1.0 / 1.0e-5,
        u_ref=1.0,
        dt=1e-4,
        steps=steps,
        turbulence=True,
        integrator="adams_bashforth",
        poisson_tol=1e-6,
        poisson_precond="ilu",
        n_modes=5000,
        seed=seed,
        output_dir=f"runs/isotropic_{n}",
    )
