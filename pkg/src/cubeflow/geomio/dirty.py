"""Synthetic geometry-defect injectors.

These reproduce the defect families a solver must survive -- disconnected
seams, missing face area, duplicated faces -- from clean inputs, so dirty
test geometry is generated rather than redistributed.
"""

from __future__ import annotations

import numpy as np

from .soup import TriangleSoup


def inject_gaps(soup: TriangleSoup, shrink: float = 0.998) -> TriangleSoup:
    """Shrink every triangle about its centroid so no edge remains shared.

    The seams are a fraction of the local edge length: far below any practical
    grid resolution, so only the audit (not the flow) can tell the difference.
    """
    if not 0.0 < shrink < 1.0:
        raise ValueError("shrink must be in (0, 1)")
    cent = soup.vertices.mean(axis=1, keepdims=True)
    return TriangleSoup(cent + shrink * (soup.vertices - cent))


def reduce_faces(soup: TriangleSoup, fraction: float, seed: int = 0) -> TriangleSoup:
    """Remove a random fraction of faces, opening grid-resolvable holes."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must be in [0, 1)")
    n = len(soup)
    rng = np.random.default_rng(seed)
    n_remove = int(round(fraction * n))
    removed = rng.choice(n, size=n_remove, replace=False)
    keep = np.ones(n, dtype=bool)
    keep[removed] = False
    return TriangleSoup(soup.vertices[keep])


def shrink_faces(soup: TriangleSoup, area_fraction: float) -> TriangleSoup:
    """Shrink every face so the total surface area drops by area_fraction.

    Opens a uniform seam pattern: the per-face linear scale is
    sqrt(1 - area_fraction).
    """
    if not 0.0 <= area_fraction < 1.0:
        raise ValueError("area_fraction must be in [0, 1)")
    return inject_gaps(soup, shrink=float(np.sqrt(1.0 - area_fraction)))


def duplicate_faces(soup: TriangleSoup, fraction: float = 1.0, seed: int = 0) -> TriangleSoup:
    """Append exact copies of a random fraction of faces."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    n = len(soup)
    rng = np.random.default_rng(seed)
    n_dup = max(1, int(round(fraction * n)))
    picked = rng.choice(n, size=n_dup, replace=False)
    return TriangleSoup(np.concatenate([soup.vertices, soup.vertices[picked]]))
