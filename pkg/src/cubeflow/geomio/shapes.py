"""Procedural triangle-soup shapes for cases and tests.

Everything returns a TriangleSoup; nothing here guarantees watertightness
beyond what the construction implies.
"""

from __future__ import annotations

import numpy as np

from .soup import TriangleSoup


def box(center=(0.0, 0.0, 0.0), size=(1.0, 1.0, 1.0)) -> TriangleSoup:
    """Closed axis-aligned box, 12 triangles, outward winding."""
    c = np.asarray(center, dtype=np.float64)
    h = 0.5 * np.asarray(size, dtype=np.float64)
    corners = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=np.float64
    )
    p = c + corners * h  # index bit order: x*4 + y*2 + z
    quads = [
        (0, 1, 3, 2, (-1, 0, 0)),
        (4, 6, 7, 5, (1, 0, 0)),
        (0, 4, 5, 1, (0, -1, 0)),
        (2, 3, 7, 6, (0, 1, 0)),
        (0, 2, 6, 4, (0, 0, -1)),
        (1, 5, 7, 3, (0, 0, 1)),
    ]
    tris = []
    for a, b, cc, d, normal in quads:
        v = [p[a], p[b], p[cc], p[d]]
        for t in ((v[0], v[1], v[2]), (v[0], v[2], v[3])):
            n = np.cross(t[1] - t[0], t[2] - t[0])
            if np.dot(n, normal) < 0:
                t = (t[0], t[2], t[1])
            tris.append(t)
    return TriangleSoup(np.asarray(tris))


def box_open(center, size, remove_face: str = "+z") -> TriangleSoup:
    """Box with one face removed (a canonical 4-gap-edge fixture)."""
    full = box(center, size)
    axis = "xyz".index(remove_face[1])
    sign = 1.0 if remove_face[0] == "+" else -1.0
    keep = [
        i
        for i in range(len(full))
        if not (sign * full.normals[i, axis] > 0.99)
    ]
    return TriangleSoup(full.vertices[keep])


def icosphere(center=(0.0, 0.0, 0.0), diameter: float = 1.0, subdivisions: int = 3) -> TriangleSoup:
    """Geodesic sphere by icosahedron subdivision (20 * 4**subdivisions faces)."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        tri = verts[faces]  # (n, 3, 3)
        mid01 = tri[:, 0] + tri[:, 1]
        mid12 = tri[:, 1] + tri[:, 2]
        mid20 = tri[:, 2] + tri[:, 0]
        new = np.concatenate([verts, mid01, mid12, mid20])
        new /= np.linalg.norm(new, axis=1)[:, None]
        n = faces.shape[0]
        base = verts.shape[0]
        i01 = base + np.arange(n)
        i12 = base + n + np.arange(n)
        i20 = base + 2 * n + np.arange(n)
        faces = np.concatenate(
            [
                np.stack([faces[:, 0], i01, i20], axis=1),
                np.stack([faces[:, 1], i12, i01], axis=1),
                np.stack([faces[:, 2], i20, i12], axis=1),
                np.stack([i01, i12, i20], axis=1),
            ]
        )
        verts = new
    tris = verts[faces] * (0.5 * diameter) + np.asarray(center, dtype=np.float64)
    return TriangleSoup(tris)


def rect_plate(center, spanwise, chordwise, n_span: int = 6, n_chord: int = 1) -> TriangleSoup:
    """Zero-thickness rectangular plate split into a triangle grid.

    spanwise/chordwise are full edge vectors; the plate lies in their plane.
    """
    c = np.asarray(center, dtype=np.float64)
    s = np.asarray(spanwise, dtype=np.float64)
    q = np.asarray(chordwise, dtype=np.float64)
    tris = []
    for i in range(n_span):
        for j in range(n_chord):
            a0 = (i / n_span - 0.5)
            a1 = ((i + 1) / n_span - 0.5)
            b0 = (j / n_chord - 0.5)
            b1 = ((j + 1) / n_chord - 0.5)
            p00 = c + a0 * s + b0 * q
            p10 = c + a1 * s + b0 * q
            p01 = c + a0 * s + b1 * q
            p11 = c + a1 * s + b1 * q
            tris.append((p00, p10, p11))
            tris.append((p00, p11, p01))
    return TriangleSoup(np.asarray(tris))


def extruded_polygon(points_2d: np.ndarray, z0: float, z1: float) -> TriangleSoup:
    """Open prism: side walls of a closed 2D polygon extruded along z.

    No caps, so the soup is deliberately non-watertight; planar (x, y) rays
    still see a closed loop.  Used to immerse 2D contours in the 3D geometry
    pipeline.
    """
    pts = np.asarray(points_2d, dtype=np.float64)
    n = pts.shape[0]
    tris = []
    for i in range(n):
        a2, b2 = pts[i], pts[(i + 1) % n]
        a0 = np.array([a2[0], a2[1], z0])
        b0 = np.array([b2[0], b2[1], z0])
        a1 = np.array([a2[0], a2[1], z1])
        b1 = np.array([b2[0], b2[1], z1])
        tris.append((a0, b0, b1))
        tris.append((a0, b1, a1))
    return TriangleSoup(np.asarray(tris))


def regular_polygon(radius: float, n_sides: int, center=(0.0, 0.0), phase: float = 0.0) -> np.ndarray:
    ang = phase + 2.0 * np.pi * np.arange(n_sides) / n_sides
    return np.stack(
        [center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)], axis=1
    )


def diamond_square(side: float, center=(0.0, 0.0)) -> np.ndarray:
    """Square of the given side rotated 45 degrees (vertices on the axes)."""
    half_diag = side / np.sqrt(2.0)
    return regular_polygon(half_diag, 4, center=center, phase=0.0)


def closed_slab(center, lx: float, ly: float, thickness: float, n: int = 4) -> TriangleSoup:
    """Closed thin box of the given thickness along z (outward winding).

    The top/bottom skins are subdivided n x n so surface samples distribute
    over the skin; side bands close the volume.
    """
    c = np.asarray(center, dtype=np.float64)
    hz = 0.5 * thickness
    xs = c[0] + lx * (np.linspace(0.0, 1.0, n + 1) - 0.5)
    ys = c[1] + ly * (np.linspace(0.0, 1.0, n + 1) - 0.5)
    tris = []
    for i in range(n):
        for j in range(n):
            for z, up in ((c[2] + hz, True), (c[2] - hz, False)):
                p00 = np.array([xs[i], ys[j], z])
                p10 = np.array([xs[i + 1], ys[j], z])
                p01 = np.array([xs[i], ys[j + 1], z])
                p11 = np.array([xs[i + 1], ys[j + 1], z])
                if up:
                    tris += [(p00, p10, p11), (p00, p11, p01)]
                else:
                    tris += [(p00, p11, p10), (p00, p01, p11)]
    # four side bands
    z0, z1 = c[2] - hz, c[2] + hz
    loops = [
        (np.array([xs[0], ys[0]]), np.array([xs[-1], ys[0]])),
        (np.array([xs[-1], ys[0]]), np.array([xs[-1], ys[-1]])),
        (np.array([xs[-1], ys[-1]]), np.array([xs[0], ys[-1]])),
        (np.array([xs[0], ys[-1]]), np.array([xs[0], ys[0]])),
    ]
    for a2, b2 in loops:
        a0 = np.array([a2[0], a2[1], z0])
        b0 = np.array([b2[0], b2[1], z0])
        a1 = np.array([a2[0], a2[1], z1])
        b1 = np.array([b2[0], b2[1], z1])
        tris += [(a0, b0, b1), (a0, b1, a1)]
    return TriangleSoup(np.asarray(tris))
