"""Full case pipeline: load -> audit -> grid -> classify -> time loop -> post.

Every run leaves a machine-readable manifest (config hash, library versions,
timings, outputs with checksums) next to its artifacts.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..geomio import TriangleIndex, audit_geometry, load_geometry
from ..grid import FieldLayout, generate_forest
from ..ibm import WallStencilSet, classify_cells
from ..post import (
    bl_thickness,
    error_norms,
    export_fields,
    integrate_forces,
    sample_probes,
    sample_surface,
    thin_plate_filter,
    write_csv,
    write_history_csv,
)
from ..solver import BoundarySpec, FaceBC, FlowSolver, SchemeConfig
from ..turb import SpectrumSpec, bundled_cbc_table, generate_isotropic_field, load_spectrum_table
from .analytic import taylor_green_pressure, taylor_green_velocity
from .config import CaseConfig


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class RunResult:
    config: CaseConfig
    out_dir: Path
    history: list
    norms: dict | None = None
    force_series: list = field(default_factory=list)
    cd_mean: float | None = None
    outputs: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    state: object = None
    layout: object = None
    mask: object = None
    soup: object = None


def boundary_spec_from_config(config: CaseConfig) -> BoundarySpec:
    faces = {}
    for axis in range(config.dim):
        for side, sign in ((-1, "-"), (1, "+")):
            kind = config.bc[f"{'xyz'[axis]}{sign}"]
            vel = config.bc_velocity if kind == "inflow" else None
            faces[(axis, side)] = FaceBC(kind, vel)
    return BoundarySpec(faces)


def scheme_from_config(config: CaseConfig) -> SchemeConfig:
    return SchemeConfig(
        dt=config.dt,
        re=config.re,
        quick_blend=config.quick_blend,
        integrator=config.integrator,
        inner_tol=config.inner_tol,
        inner_cap=config.inner_cap,
        poisson_solver=config.poisson_solver,
        poisson_tol=config.poisson_tol,
        poisson_max_iter=config.poisson_max_iter,
        sor_omega=config.sor_omega,
        poisson_precond=config.poisson_precond,
        ib_pressure_mode=config.ib_pressure_mode,
        ib_forcing_mode=config.ib_forcing_mode,
        turbulence=config.turbulence,
        dead_end=config.dead_end_filter,
    )


def wall_velocity_from_config(config: CaseConfig):
    if config.wall_velocity == "tgv":
        re = config.re

        def fn(pts, t):
            return taylor_green_velocity(pts, t, re)

        return fn
    return None


@dataclass
class BuiltCase:
    layout: FieldLayout
    solver: FlowSolver
    state: object
    soup: object
    index: object
    mask: object
    stencils: object
    audit: object
    warnings: list


def build_case(config: CaseConfig, base_dir=None) -> BuiltCase:
    config.validate(base_dir)
    warnings: list[str] = []

    soup = index = None
    audit = None
    if config.geometry is not None:
        path = Path(config.geometry)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            soup = load_geometry(path, config.geometry_scale)
        except Exception as exc:
            raise StageError("load", str(exc)) from exc
        audit = audit_geometry(soup, config.weld_tolerance)
        if len(soup):
            index = TriangleIndex(soup)

    try:
        forest = generate_forest(
            config.domain_lo,
            config.domain_hi,
            soup=soup,
            base_cubes=config.base_cubes,
            cells_per_side=config.cells_per_side,
            max_levels=config.max_levels,
            pad_cells=config.pad_cells,
            periodic=config.periodic_axes(),
            cube_budget=config.cube_budget,
            index=index,
        )
    except Exception as exc:
        raise StageError("grid", str(exc)) from exc
    layout = FieldLayout(forest)

    try:
        mask, registry = classify_cells(layout, index, slice_z=config.slice_z)
        stencils = WallStencilSet(layout, mask, registry, slice_z=config.slice_z)
    except Exception as exc:
        raise StageError("classify", str(exc)) from exc

    if config.kind == "external3d":
        delta = bl_thickness(config.reference_diameter, config.u_ref, config.nu)
        finest = forest.cell_size(forest.max_level)
        if finest > delta:
            warnings.append(
                f"cell size {finest:.3e} exceeds the laminar boundary-layer "
                f"estimate {delta:.3e}; wall quantities are under-resolved"
            )

    solver = FlowSolver(
        layout,
        scheme_from_config(config),
        boundary_spec_from_config(config),
        mask=mask,
        stencils=stencils,
        wall_velocity=wall_velocity_from_config(config),
    )

    state = _initial_state(config, solver, layout)
    return BuiltCase(layout, solver, state, soup, index, mask, stencils, audit, warnings)


def _initial_state(config: CaseConfig, solver: FlowSolver, layout: FieldLayout):
    if config.kind == "tgv2d":
        re = config.re
        return solver.initial_state(
            lambda pts: taylor_green_velocity(pts, 0.0, re),
            lambda pts: taylor_green_pressure(pts, 0.0, re),
        )
    if config.kind == "isotropic3d":
        if config.spectrum_table is not None:
            k, e = load_spectrum_table(config.spectrum_table)
        else:
            k, e = bundled_cbc_table()
            k, e = k * 100.0, e * 1e-6  # cm units to meters
        n_per_dir = config.base_cubes[0] * config.cells_per_side
        box = config.domain_hi[0] - config.domain_lo[0]
        dk = 2 * np.pi / box
        spec = SpectrumSpec(
            k, e, n_modes=config.n_modes, seed=config.seed,
            k_min=max(dk, float(k[0])), k_max=min(np.pi * n_per_dir / box, float(k[-1])),
        )
        modes_field = generate_isotropic_field(layout.centers.reshape(-1, 3), spec)
        return solver.initial_state(lambda pts: modes_field[: pts.shape[0]])
    if config.kind in ("external3d", "channel2d"):
        u0 = np.asarray(config.bc_velocity[: config.dim], dtype=np.float64)
        return solver.initial_state(lambda pts: np.tile(u0, (pts.shape[0], 1)))
    return solver.initial_state()


def run_case(config: CaseConfig, out_dir=None, base_dir=None, quiet: bool = True) -> RunResult:
    t_start = time.time()
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    built = build_case(config, base_dir)
    layout, solver, state = built.layout, built.solver, built.state

    outputs: list[Path] = []
    cfg_path = out / "config.txt"
    config.save(cfg_path)
    outputs.append(cfg_path)
    if built.audit is not None:
        audit_path = out / "audit.json"
        audit_path.write_text(built.audit.to_json())
        outputs.append(audit_path)
    grid_path = out / "grid.json"
    grid_path.write_text(layout.forest.summary_json())
    outputs.append(grid_path)

    force_series: list = []
    probe_series: list = []
    history = []
    timings = {"build": time.time() - t_start}
    t_loop = time.time()
    try:
        for k in range(config.steps):
            diag = solver.advance(state)
            history.append(diag)
            if config.probes:
                for row in sample_probes(layout, state, config.probes):
                    probe_series.append((state.n, state.t) + row)
            if config.force_every and (k + 1) % config.force_every == 0:
                rep = _measure_forces(config, built, state)
                if rep is not None:
                    force_series.append((state.n, state.t, rep.cd, rep.cl))
            if config.export_fields and config.output_every and (k + 1) % config.output_every == 0:
                outputs += export_fields(layout, state, built.mask, out, tag=f"step{state.n:07d}")
    except Exception as exc:
        raise StageError("timeloop", f"step {state.n + 1}: {exc}") from exc
    timings["timeloop"] = time.time() - t_loop

    if probe_series:
        ncomp = layout.dim
        header = ["step", "time"] + [f"u{c}" for c in range(ncomp)] + ["p"]
        probes_path = out / "probes.csv"
        write_csv(probes_path, probe_series, header=header)
        outputs.append(probes_path)

    hist_path = out / "history.csv"
    write_history_csv(hist_path, history)
    outputs.append(hist_path)

    norms = None
    if config.kind == "tgv2d":
        pts = layout.interior_centers()
        exact = taylor_green_velocity(pts, state.t, config.re)
        got = layout.to_vector(state.u[0])
        l1, l2, linf = error_norms(got, exact[:, 0])
        norms = {"time": state.t, "L1": l1, "L2": l2, "Linf": linf}
        norms_path = out / "norms.json"
        norms_path.write_text(json.dumps(norms, indent=2))
        outputs.append(norms_path)

    cd_mean = None
    if config.force_every and force_series:
        fs_path = out / "forces.csv"
        write_csv(fs_path, force_series, header=["step", "time", "cd", "cl"])
        outputs.append(fs_path)
        tail = max(1, int(len(force_series) * config.force_window))
        cd_mean = float(np.mean([row[2] for row in force_series[-tail:]]))
    elif config.kind == "external3d" and built.soup is not None:
        rep = _measure_forces(config, built, state)
        if rep is not None:
            cd_mean = rep.cd

    if config.export_fields:
        outputs += export_fields(layout, state, built.mask, out, tag="final")

    manifest = {
        "name": config.name,
        "cubeflow": __version__,
        "numpy": np.__version__,
        "config_sha256": config.content_hash(),
        "steps": state.n,
        "time": state.t,
        "wall_seconds": time.time() - t_start,
        "timings": timings,
        "warnings": built.warnings,
        "norms": norms,
        "cd_mean": cd_mean,
        "outputs": [
            {
                "path": p.name,
                "bytes": p.stat().st_size,
                "sha256": hashlib.sha256(p.read_bytes()).hexdigest(),
            }
            for p in outputs
        ],
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2))

    return RunResult(
        config=config,
        out_dir=out,
        history=history,
        norms=norms,
        force_series=force_series,
        cd_mean=cd_mean,
        outputs=outputs + [manifest_path],
        warnings=built.warnings,
        state=state,
        layout=layout,
        mask=built.mask,
        soup=built.soup,
    )


def _measure_forces(config: CaseConfig, built: BuiltCase, state):
    if built.soup is None:
        return None
    fields = {"p": state.p, "u": state.u}
    samples = sample_surface(built.layout, built.soup, fields)
    if config.thin_plate_filter:
        finest = built.layout.forest.cell_size(built.layout.forest.max_level)
        thin_plate_filter(samples, dx=finest)
    area = config.reference_area
    if area is None:
        area = np.pi * config.reference_diameter**2 / 4.0
    return integrate_forces(
        samples,
        viscosity=config.nu * config.rho,
        rho=config.rho,
        u_ref=config.u_ref,
        reference_area=area,
    )
