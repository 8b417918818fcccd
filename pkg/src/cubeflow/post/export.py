"""Field export: legacy VTK structured-points blocks per cube, CSV series."""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from ..grid.field import FieldLayout
from ..grid.forest import HALO
from ..turb.csm import q_criterion


def _vtk_write_array(fh, name: str, data: np.ndarray, kind: str):
    n = data.shape[-1] if kind == "VECTORS" else data.size
    if kind == "VECTORS":
        fh.write(f"VECTORS {name} double\n".encode())
        fh.write(data.astype(">f8").tobytes())
    else:
        fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n".encode())
        fh.write(data.astype(">f8").tobytes())
    fh.write(b"\n")


def write_vtk_block(path, origin, dx: float, shape, fields: dict) -> None:
    """One cube interior as a legacy binary VTK structured-points block.

    Scalars are (nx, ny[, nz]) arrays; doubles are stored big-endian so a
    re-import reproduces them bit-exactly.
    """
    dim = len(shape)
    dims3 = tuple(shape) + (1,) * (3 - dim)
    org3 = tuple(float(o) for o in origin) + (0.0,) * (3 - dim)
    npoints = int(np.prod(dims3))
    with open(path, "wb") as fh:
        fh.write(b"# vtk DataFile Version 3.0\n")
        fh.write(b"cubeflow block\n")
        fh.write(b"BINARY\n")
        fh.write(b"DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {dims3[0]} {dims3[1]} {dims3[2]}\n".encode())
        fh.write(f"ORIGIN {org3[0]!r} {org3[1]!r} {org3[2]!r}\n".encode())
        fh.write(f"SPACING {dx!r} {dx!r} {dx!r}\n".encode())
        fh.write(f"POINT_DATA {npoints}\n".encode())
        for name, data in fields.items():
            arr = np.asarray(data)
            # VTK wants x fastest: transpose from C-order (x slowest)
            flat = arr.transpose(tuple(reversed(range(arr.ndim)))).reshape(-1)
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n".encode())
            fh.write(flat.astype(">f8").tobytes())
            fh.write(b"\n")


def read_vtk_block(path) -> dict:
    """Read back a block written by write_vtk_block (round-trip checks)."""
    raw = Path(path).read_bytes()
    lines = []
    pos = 0
    while len(lines) < 8:
        nl = raw.index(b"\n", pos)
        lines.append(raw[pos:nl].decode())
        pos = nl + 1
    dims = tuple(int(x) for x in lines[4].split()[1:])
    npoints = int(lines[7].split()[1])
    fields = {}
    while pos < len(raw):
        nl = raw.index(b"\n", pos)
        header = raw[pos:nl].decode()
        if not header.strip():
            pos = nl + 1
            continue
        name = header.split()[1]
        nl2 = raw.index(b"\n", nl + 1)  # LOOKUP_TABLE line
        start = nl2 + 1
        nbytes = npoints * 8
        flat = np.frombuffer(raw[start : start + nbytes], dtype=">f8").astype(np.float64)
        shape = tuple(d for d in reversed(dims) if d > 1)
        fields[name] = flat.reshape(shape).transpose(tuple(reversed(range(len(shape)))))
        pos = start + nbytes + 1
    return fields


def export_fields(layout: FieldLayout, state, mask, out_dir, tag: str = "snapshot") -> list:
    """Per-cube VTK blocks with velocity, pressure, eddy viscosity, mask and
    the rotation-dominance criterion, plus an index file.  Returns paths."""
    from ..solver.operators import FieldOps

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dim = layout.dim
    ops = FieldOps(layout)
    grad = np.empty((dim, dim) + layout.shape)
    for c in range(dim):
        for a in range(dim):
            grad[c, a] = ops.central_grad(state.u[c], a)
    gmat = np.moveaxis(grad.reshape(dim, dim, -1), -1, 0)
    qcrit = q_criterion(gmat).reshape(layout.shape)

    inter = tuple(slice(HALO, HALO + layout.n) for _ in range(dim))
    paths = []
    index = {"tag": tag, "time": state.t, "step": state.n, "blocks": []}
    for cube in layout.forest.cubes:
        c = cube.index
        fields = {}
        for comp in range(dim):
            fields[f"u{comp}"] = state.u[comp][(c,) + inter]
        fields["p"] = state.p[(c,) + inter]
        if state.nut is not None:
            fields["nu_t"] = state.nut[(c,) + inter]
        if mask is not None:
            fields["mask"] = mask.codes[(c,) + inter].astype(np.float64)
        fields["q_criterion"] = qcrit[(c,) + inter]
        path = out_dir / f"{tag}_cube{c:05d}.vtk"
        write_vtk_block(path, cube.origin + 0.5 * cube.dx, cube.dx, (layout.n,) * dim, fields)
        paths.append(path)
        index["blocks"].append(
            {"file": path.name, "level": cube.level, "origin": [float(x) for x in cube.origin]}
        )
    index_path = out_dir / f"{tag}_index.json"
    index_path.write_text(json.dumps(index, indent=2))
    paths.append(index_path)
    return paths


def write_csv(path, rows: list, header: list | None = None) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(header)
        writer.writerows(rows)


def write_history_csv(path, history: list) -> None:
    """Per-step diagnostics (divergence, residuals, energy) as CSV."""
    if not history:
        Path(path).write_text("")
        return
    rows = [d.row() for d in history]
    header = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
