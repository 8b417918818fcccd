"""STL reading and writing (little-endian binary and text).

Triangles are loaded verbatim: no welding, repair, or reorientation happens
here.  Normals stored in the file are ignored; the soup derives its own from
vertex winding.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .soup import TriangleSoup

_BINARY_HEADER = 80
_RECORD = 50  # 12 floats (normal + 3 vertices) + uint16 attribute


class StlFormatError(ValueError):
    """Malformed STL content; message carries a byte offset or line number."""


def _looks_binary(raw: bytes) -> bool:
    if len(raw) < _BINARY_HEADER + 4:
        return False
    (count,) = struct.unpack_from("<I", raw, _BINARY_HEADER)
    if len(raw) == _BINARY_HEADER + 4 + count * _RECORD:
        return True
    # a text file must start with "solid"; tolerate leading whitespace
    head = raw[:512].lstrip()
    return not head.lower().startswith(b"solid")


def load_geometry(path, units_scale: float = 1.0) -> TriangleSoup:
    """Load an STL file into a TriangleSoup, scaling coordinates by units_scale.

    Duplicate and degenerate triangles are retained (flagged by the soup, not
    dropped).  Raises FileNotFoundError for missing files and StlFormatError
    with a byte offset (binary) or line number (text) for malformed records.
    """
    if units_scale <= 0.0:
        raise ValueError("units_scale must be positive")
    path = Path(path)
    raw = path.read_bytes()
    if _looks_binary(raw):
        verts = _parse_binary(raw)
    else:
        verts = _parse_text(raw, str(path))
    return TriangleSoup(verts * units_scale)


def _parse_binary(raw: bytes) -> np.ndarray:
    if len(raw) < _BINARY_HEADER + 4:
        raise StlFormatError(f"binary STL truncated before triangle count (byte {len(raw)})")
    (count,) = struct.unpack_from("<I", raw, _BINARY_HEADER)
    expected = _BINARY_HEADER + 4 + count * _RECORD
    if len(raw) < expected:
        raise StlFormatError(
            f"binary STL truncated: {count} triangles declared, data ends at byte {len(raw)}"
            f" (expected {expected})"
        )
    body = np.frombuffer(raw, dtype=np.uint8, count=count * _RECORD, offset=_BINARY_HEADER + 4)
    records = body.reshape(count, _RECORD)
    floats = records[:, :48].copy().view("<f4").reshape(count, 4, 3)
    verts = floats[:, 1:4, :].astype(np.float64)
    if not np.all(np.isfinite(verts)):
        bad = int(np.flatnonzero(~np.isfinite(verts).all(axis=(1, 2)))[0])
        raise StlFormatError(
            f"non-finite vertex in triangle {bad} (byte {_BINARY_HEADER + 4 + bad * _RECORD})"
        )
    return verts


def _parse_text(raw: bytes, name: str) -> np.ndarray:
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise StlFormatError(f"{name}: not ASCII text and not valid binary STL: {exc}") from None
    verts: list[list[float]] = []
    tri: list[list[float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        kw = tokens[0].lower()
        if kw == "vertex":
            if len(tokens) != 4:
                raise StlFormatError(f"{name}:{lineno}: vertex needs 3 coordinates")
            try:
                tri.append([float(t) for t in tokens[1:4]])
            except ValueError:
                raise StlFormatError(f"{name}:{lineno}: bad vertex coordinate") from None
            if len(tri) > 3:
                raise StlFormatError(f"{name}:{lineno}: more than 3 vertices in facet")
        elif kw == "endloop":
            if len(tri) != 3:
                raise StlFormatError(f"{name}:{lineno}: facet has {len(tri)} vertices, need 3")
        elif kw == "endfacet":
            verts.append(tri)
            tri = []
        elif kw in ("solid", "endsolid", "facet", "outer"):
            continue
        else:
            raise StlFormatError(f"{name}:{lineno}: unexpected token {tokens[0]!r}")
    if tri:
        raise StlFormatError(f"{name}: unterminated facet at end of file")
    if not verts:
        return np.zeros((0, 3, 3), dtype=np.float64)
    return np.asarray(verts, dtype=np.float64)


def save_binary(soup: TriangleSoup, path) -> None:
    """Write little-endian binary STL (80-byte header, uint32 count, 50-byte records)."""
    n = len(soup)
    header = b"cubeflow binary STL".ljust(_BINARY_HEADER, b" ")
    records = np.zeros((n, _RECORD), dtype=np.uint8)
    floats = np.empty((n, 4, 3), dtype="<f4")
    floats[:, 0, :] = soup.normals.astype("<f4")
    floats[:, 1:4, :] = soup.vertices.astype("<f4")
    records[:, :48] = floats.reshape(n, 12).view(np.uint8)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(struct.pack("<I", n))
        fh.write(records.tobytes())


def save_text(soup: TriangleSoup, path, name: str = "cubeflow") -> None:
    """Write text STL with full float precision (repr round-trips doubles)."""
    with open(path, "w") as fh:
        fh.write(f"solid {name}\n")
        for i in range(len(soup)):
            nx, ny, nz = (float(c) for c in soup.normals[i])
            fh.write(f"  facet normal {nx!r} {ny!r} {nz!r}\n")
            fh.write("    outer loop\n")
            for k in range(3):
                x, y, z = (float(c) for c in soup.vertices[i, k])
                fh.write(f"      vertex {x!r} {y!r} {z!r}\n")
            fh.write("    endloop\n")
            fh.write("  endfacet\n")
        fh.write(f"endsolid {name}\n")
