"""Grid-convergence study driver for the vortex-decay verification cases."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..post import write_csv
from .canonical import tgv2d_config
from .config import CaseConfig
from .runner import run_case


@dataclass
class StudyResult:
    shape: str
    resolutions: list
    norms: dict  # n -> {"L1":, "L2":, "Linf":}
    slopes: dict  # norm -> {"overall":, "coarse3":, "r2":}
    runtime_seconds: dict = field(default_factory=dict)
    out_dir: Path | None = None

    def run_dir(self, n: int) -> Path:
        return Path(self.out_dir) / f"n{n}"

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "resolutions": self.resolutions,
            "norms": {str(k): v for k, v in self.norms.items()},
            "slopes": self.slopes,
            "runtime_seconds": self.runtime_seconds,
        }


def fit_slope(ns, errors) -> tuple[float, float]:
    """Log-log least-squares slope of error versus cell size, with R^2."""
    x = np.log(1.0 / np.asarray(ns, dtype=np.float64))
    y = np.log(np.asarray(errors, dtype=np.float64))
    coef = np.polyfit(x, y, 1)
    fit = np.polyval(coef, x)
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def convergence_study(
    resolutions,
    shape: str = "none",
    steps: int = 3000,
    dt: float = 1e-4,
    re: float = 100.0,
    out_dir=None,
    base_config: CaseConfig | None = None,
    quiet: bool = True,
) -> StudyResult:
    """Run the vortex-decay case over a resolution sweep and fit error slopes.

    Slopes are fitted overall and on the three coarsest grids; at least three
    resolutions are required for a meaningful fit.
    """
    resolutions = sorted(int(n) for n in resolutions)
    if len(resolutions) < 3:
        raise ValueError("need at least three resolutions for a slope fit")
    out = Path(out_dir) if out_dir is not None else Path(f"runs/study_{shape}")
    out.mkdir(parents=True, exist_ok=True)

    norms: dict[int, dict] = {}
    runtimes: dict[int, float] = {}
    for n in resolutions:
        if base_config is not None:
            cfg = CaseConfig(**base_config.to_dict())
            cfg.cells_per_side = n // cfg.base_cubes[0]
            cfg.name = f"{base_config.name}_{n}"
        else:
            cfg = tgv2d_config(n, shape=shape, steps=steps, dt=dt, re=re,
                               geometry_dir=out / "geometry")
        cfg.output_dir = str(out / f"n{n}")
        result = run_case(cfg, quiet=quiet)
        norms[n] = result.norms
        runtimes[n] = next(
            o for o in [json.loads((result.out_dir / "manifest.json").read_text())]
        )["wall_seconds"]
        if not quiet:
            print(f"  N={n}: L2={result.norms['L2']:.4e}  ({runtimes[n]:.1f}s)")

    slopes = {}
    for norm in ("L1", "L2", "Linf"):
        errs = [norms[n][norm] for n in resolutions]
        overall, r2_all = fit_slope(resolutions, errs)
        coarse, r2_c = fit_slope(resolutions[:3], errs[:3])
        slopes[norm] = {"overall": overall, "coarse3": coarse,
                        "r2_overall": r2_all, "r2_coarse3": r2_c}

    result = StudyResult(shape=shape, resolutions=resolutions, norms=norms,
                         slopes=slopes, runtime_seconds=runtimes, out_dir=out)
    (out / "study.json").write_text(json.dumps(result.to_dict(), indent=2))
    rows = [
        [n, norms[n]["L1"], norms[n]["L2"], norms[n]["Linf"]] for n in resolutions
    ]
    write_csv(out / "norms.csv", rows, header=["n", "L1", "L2", "Linf"])
    return result
