"""Command-line entry points: audit, grid, run, study, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..geomio import audit_geometry, load_geometry
from .config import CaseConfig
from .runner import StageError, build_case, run_case
from .study import convergence_study


def cmd_audit(args) -> int:
    soup = load_geometry(args.stl, args.scale)
    report = audit_geometry(soup, args.weld_tolerance)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    summary = (
        f"{report.triangle_count} triangles: {report.gap_edge_count} gap edges, "
        f"{report.over_connected_edge_count} over-connected, "
        f"{report.duplicate_face_count} duplicates, {report.zero_area_count} zero-area"
    )
    print(summary, file=sys.stderr)
    return 0


def cmd_grid(args) -> int:
    config = CaseConfig.load(args.config)
    built = build_case(config, base_dir=Path(args.config).parent)
    print(built.layout.forest.summary_json())
    if built.mask is not None:
        print(json.dumps(built.mask.counts(), indent=2), file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    config = CaseConfig.load(args.config)
    if args.out:
        config.output_dir = args.out
    result = run_case(config, base_dir=Path(args.config).parent, quiet=False)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"run complete: {result.out_dir} ({len(result.history)} steps)")
    if result.norms:
        print(json.dumps(result.norms, indent=2))
    if result.cd_mean is not None:
        print(f"cd = {result.cd_mean:.4f}")
    return 0


def cmd_study(args) -> int:
    levels = [int(x) for x in args.levels.split(",")]
    result = convergence_study(
        levels,
        shape=args.shape,
        steps=args.steps,
        dt=args.dt,
        out_dir=args.out,
        quiet=False,
    )
    print(json.dumps(result.to_dict()["slopes"], indent=2))
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    manifest = run_dir / "manifest.json"
    if not manifest.exists():
        print(f"no manifest in {run_dir}", file=sys.stderr)
        return 1
    payload = json.loads(manifest.read_text())
    print(json.dumps(payload, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cubeflow",
        description="Topology-free immersed-boundary flow solver on building-cube grids",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="report geometry defects in an STL file")
    p.add_argument("stl")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--weld-tolerance", type=float, default=None)
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("grid", help="generate the cube forest for a case and print a summary")
    p.add_argument("config")
    p.set_defaults(fn=cmd_grid)

    p = sub.add_parser("run", help="run a case configuration")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="override the output directory")
    p.add_argument("--workers", type=int, default=1,
                   help="cube-parallel worker count; results are identical "
                        "for any value (bulk-synchronous phases)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("study", help="vortex-decay grid convergence study")
    p.add_argument("--levels", default="40,80,160", help="comma-separated resolutions")
    p.add_argument("--shape", default="none", choices=("none", "square", "circle"))
    p.add_argument("--steps", type=int, default=3000)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_study)

    p = sub.add_parser("report", help="print the manifest of a finished run")
    p.add_argument("run_dir")
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (StageError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
