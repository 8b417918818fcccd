"""Ray-triangle intersection queries against a triangle soup.

Intersection uses the Moller-Trumbore determinant form, kept stable by
skipping triangles whose determinant magnitude falls below a scale-relative
threshold (near-parallel or degenerate).  A uniform-binning spatial index
accelerates queries; by contract it returns exactly the hit set of an
exhaustive scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .soup import TriangleSoup

# Determinant threshold is relative to the squared local triangle scale so
# behaviour does not depend on the model units.
DET_EPS_REL = 1e-12
BARY_EPS = 1e-12


@dataclass(frozen=True)
class RayHit:
    t: float
    triangle: int
    u: float
    v: float


class TriangleIndex:
    """Uniform-bin spatial index over triangle bounding boxes."""

    def __init__(self, soup: TriangleSoup, target_per_bin: float = 4.0):
        if len(soup) == 0:
            raise ValueError("cannot index an empty soup")
        self.soup = soup
        v = soup.vertices
        self.e1 = v[:, 1] - v[:, 0]
        self.e2 = v[:, 2] - v[:, 0]
        self.scale2 = np.maximum((self.e1 * self.e1).sum(1), (self.e2 * self.e2).sum(1))
        self.tri_lo = v.min(axis=1)
        self.tri_hi = v.max(axis=1)

        lo, hi = soup.bounds
        span = np.maximum(hi - lo, 1e-300)
        pad = 1e-9 * float(span.max())
        self.lo = lo - pad
        self.hi = hi + pad
        n = len(soup)
        nb = int(np.clip(round((n / target_per_bin) ** (1.0 / 3.0)), 1, 96))
        self.nbins = np.array([nb, nb, nb], dtype=np.int64)
        self.bin_size = (self.hi - self.lo) / self.nbins

        ranges_lo = self._to_bin(self.tri_lo)
        ranges_hi = self._to_bin(self.tri_hi)
        buckets: dict[tuple[int, int, int], list[int]] = {}
        for i in range(n):
            x0, y0, z0 = ranges_lo[i]
            x1, y1, z1 = ranges_hi[i]
            for bx in range(x0, x1 + 1):
                for by in range(y0, y1 + 1):
                    for bz in range(z0, z1 + 1):
                        buckets.setdefault((bx, by, bz), []).append(i)
        self._buckets = {k: np.asarray(ids, dtype=np.int64) for k, ids in buckets.items()}

    def _to_bin(self, pts: np.ndarray) -> np.ndarray:
        idx = np.floor((pts - self.lo) / self.bin_size).astype(np.int64)
        return np.clip(idx, 0, self.nbins - 1)

    def candidates_in_box(self, box_lo, box_hi) -> np.ndarray:
        """Triangle ids whose AABB may overlap [box_lo, box_hi]."""
        box_lo = np.asarray(box_lo, dtype=np.float64)
        box_hi = np.asarray(box_hi, dtype=np.float64)
        if np.any(box_hi < self.lo) or np.any(box_lo > self.hi):
            return np.empty(0, dtype=np.int64)
        b0 = self._to_bin(box_lo)
        b1 = self._to_bin(box_hi)
        found = []
        for bx in range(b0[0], b1[0] + 1):
            for by in range(b0[1], b1[1] + 1):
                for bz in range(b0[2], b1[2] + 1):
                    ids = self._buckets.get((bx, by, bz))
                    if ids is not None:
                        found.append(ids)
        if not found:
            return np.empty(0, dtype=np.int64)
        cand = np.unique(np.concatenate(found))
        keep = np.all(self.tri_lo[cand] <= box_hi, axis=1) & np.all(
            self.tri_hi[cand] >= box_lo, axis=1
        )
        return cand[keep]


def build_accelerator(soup: TriangleSoup) -> TriangleIndex:
    return TriangleIndex(soup)


def _moller(origin, direction, v0, e1, e2, scale2, det_eps):
    """Vectorized Moller-Trumbore over a triangle batch for one ray.

    Returns (t, u, v, valid); valid excludes near-parallel/degenerate
    determinants and barycentric misses.
    """
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) >= det_eps * scale2
    inv = np.where(ok, 1.0 / np.where(det == 0.0, 1.0, det), 0.0)
    tvec = origin - v0
    u = np.einsum("ij,ij->i", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    v = (qvec * direction).sum(axis=1) * inv
    t = np.einsum("ij,ij->i", e2, qvec) * inv
    ok &= (u >= -BARY_EPS) & (v >= -BARY_EPS) & (u + v <= 1.0 + BARY_EPS)
    return t, u, v, ok


def ray_intersections(
    index: TriangleIndex,
    origin,
    direction,
    max_distance: float,
    det_eps: float = DET_EPS_REL,
    t_weld: float | None = None,
    exhaustive: bool = False,
) -> list[RayHit]:
    """All hits with 0 <= t <= max_distance, sorted ascending by t.

    det_eps is relative to the squared triangle scale.  Coincident hits
    (duplicated faces) within t_weld collapse to one; default t_weld is
    1e-9 of the soup bounding-box diagonal.  A miss returns an empty list.
    """
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    norm = float(np.linalg.norm(direction))
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"direction must be a unit vector (|d| = {norm})")
    if det_eps <= 0.0:
        raise ValueError("det_eps must be positive")
    if t_weld is None:
        t_weld = 1e-9 * max(index.soup.bbox_diagonal, 1e-300)

    if exhaustive:
        cand = np.arange(len(index.soup), dtype=np.int64)
    else:
        seg_end = origin + direction * max_distance
        box_lo = np.minimum(origin, seg_end)
        box_hi = np.maximum(origin, seg_end)
        cand = index.candidates_in_box(box_lo, box_hi)
    if cand.size == 0:
        return []

    v0 = index.soup.vertices[cand, 0]
    t, u, v, ok = _moller(
        origin, direction, v0, index.e1[cand], index.e2[cand], index.scale2[cand], det_eps
    )
    ok &= (t >= 0.0) & (t <= max_distance)
    if not ok.any():
        return []
    t, u, v, ids = t[ok], u[ok], v[ok], cand[ok]
    order = np.lexsort((ids, t))
    hits: list[RayHit] = []
    last_t = None
    for k in order:
        tk = float(t[k])
        if last_t is not None and tk - last_t <= t_weld:
            continue
        hits.append(RayHit(tk, int(ids[k]), float(u[k]), float(v[k])))
        last_t = tk
    return hits


def line_crossings(
    index: TriangleIndex,
    origins: np.ndarray,
    axis: int,
    t_min: float,
    t_max: float,
    det_eps: float = DET_EPS_REL,
    t_weld: float | None = None,
    candidates: np.ndarray | None = None,
):
    """Crossings of many parallel axis-aligned lines with the soup.

    origins: (m, 3) points on the lines; the line parameter is the signed
    distance along +axis from each origin, scanned over [t_min, t_max].
    Returns (line_idx, t, tri) arrays sorted by (line, t), with coincident
    duplicates welded per line.  Used by wall classification, which sweeps
    every cell-center grid line near the geometry.
    """
    origins = np.asarray(origins, dtype=np.float64)
    m = origins.shape[0]
    if t_weld is None:
        t_weld = 1e-9 * max(index.soup.bbox_diagonal, 1e-300)
    if candidates is None:
        lo = origins.min(axis=0).copy()
        hi = origins.max(axis=0).copy()
        lo[axis] += t_min
        hi[axis] += t_max
        candidates = index.candidates_in_box(lo, hi)
    if candidates.size == 0 or m == 0:
        e = np.empty(0)
        return e.astype(np.int64), e, e.astype(np.int64)

    direction = np.zeros(3)
    direction[axis] = 1.0
    v0 = index.soup.vertices[candidates, 0]
    e1 = index.e1[candidates]
    e2 = index.e2[candidates]
    scale2 = index.scale2[candidates]

    # Moller with the ray origin varying: precompute the per-triangle parts.
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok_tri = np.abs(det) >= det_eps * scale2
    if not ok_tri.any():
        e = np.empty(0)
        return e.astype(np.int64), e, e.astype(np.int64)
    v0, e1, e2, pvec, det = v0[ok_tri], e1[ok_tri], e2[ok_tri], pvec[ok_tri], det[ok_tri]
    candidates = candidates[ok_tri]
    inv = 1.0 / det

    out_line, out_t, out_tri = [], [], []
    chunk = max(1, int(2e6) // max(candidates.size, 1))
    for s in range(0, m, chunk):
        o = origins[s : s + chunk]  # (c, 3)
        tvec = o[:, None, :] - v0[None, :, :]  # (c, ntri, 3)
        u = np.einsum("cij,ij->ci", tvec, pvec) * inv
        qvec = np.cross(tvec, e1[None, :, :])
        v = qvec[..., axis] * inv
        t = np.einsum("cij,ij->ci", qvec, e2) * inv
        ok = (
            (u >= -BARY_EPS)
            & (v >= -BARY_EPS)
            & (u + v <= 1.0 + BARY_EPS)
            & (t >= t_min)
            & (t <= t_max)
        )
        ci, ti = np.nonzero(ok)
        out_line.append(ci + s)
        out_t.append(t[ci, ti])
        out_tri.append(candidates[ti])

    line = np.concatenate(out_line)
    tval = np.concatenate(out_t)
    tri = np.concatenate(out_tri)
    if line.size == 0:
        return line, tval, tri
    order = np.lexsort((tri, tval, line))
    line, tval, tri = line[order], tval[order], tri[order]
    # weld coincident crossings (duplicated faces) per line
    keep = np.ones(line.size, dtype=bool)
    keep[1:] = (line[1:] != line[:-1]) | (tval[1:] - tval[:-1] > t_weld)
    return line[keep], tval[keep], tri[keep]


def triangle_box_overlap(tri: np.ndarray, centers: np.ndarray, half: np.ndarray) -> np.ndarray:
    """Exact triangle vs axis-aligned-box overlap (separating axis test).

    tri: (3, 3) triangle vertices; centers: (m, 3) box centers; half: (3,)
    half-extents shared by all boxes.  Returns a boolean mask of overlaps.
    """
    centers = np.atleast_2d(centers)
    v = tri[None, :, :] - centers[:, None, :]  # (m, 3 verts, 3)
    h = np.asarray(half, dtype=np.float64)

    ok = np.ones(centers.shape[0], dtype=bool)
    # box face axes
    lo = v.min(axis=1)
    hi = v.max(axis=1)
    ok &= np.all(lo <= h, axis=1) & np.all(hi >= -h, axis=1)

    # triangle plane
    e = np.stack([tri[1] - tri[0], tri[2] - tri[1], tri[0] - tri[2]])  # (3, 3)
    n = np.cross(e[0], e[1])
    r = np.abs(n) @ h
    s = np.einsum("mj,j->m", v[:, 0, :], n)
    ok &= np.abs(s) <= r

    # nine edge cross-axis tests: axis = cross(unit_j, edge_i)
    for i in range(3):
        ex, ey, ez = e[i]
        axes = np.array([[0.0, -ez, ey], [ez, 0.0, -ex], [-ey, ex, 0.0]])
        for a in axes:
            p = np.einsum("mvj,j->mv", v, a)  # (m, 3) vertex projections
            rad = np.abs(a) @ h
            ok &= (p.min(axis=1) <= rad) & (p.max(axis=1) >= -rad)
    return ok
