"""Triangle-soup container and defect audit.

The soup is deliberately topology-free: triangles are an unordered set with
no connectivity, consistent orientation, or closedness assumed.  Defective
input (gaps, duplicated faces, zero-area slivers) is loaded verbatim and
only *reported*, never repaired.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree


@dataclass
class TriangleSoup:
    """Unordered set of oriented triangles.

    vertices: (n, 3, 3) array, vertices[i, k] is the k-th corner of triangle i.
    Normals come from the vertex winding; degenerate triangles keep a zero
    normal and raise the ``degenerate`` flag instead of being dropped.
    """

    vertices: np.ndarray
    degenerate_area_tol: float = 0.0

    normals: np.ndarray = field(init=False)
    areas: np.ndarray = field(init=False)
    degenerate: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        if v.ndim != 3 or v.shape[1:] != (3, 3):
            raise ValueError(f"vertices must have shape (n, 3, 3), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("triangle vertices must be finite")
        self.vertices = v
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        cross = np.cross(e1, e2)
        two_area = np.linalg.norm(cross, axis=1)
        self.areas = 0.5 * two_area
        tol = self.degenerate_area_tol
        if tol <= 0.0:
            # relative to the largest triangle so pure rescaling never reflags
            tol = 1e-14 * max(float(self.areas.max(initial=0.0)), 1e-300)
        self.degenerate = self.areas <= tol
        with np.errstate(invalid="ignore", divide="ignore"):
            n = cross / np.where(two_area > 0.0, two_area, 1.0)[:, None]
        n[self.degenerate] = 0.0
        self.normals = n

    def __len__(self) -> int:
        return self.vertices.shape[0]

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self) == 0:
            z = np.zeros(3)
            return z, z
        return self.vertices.min(axis=(0, 1)), self.vertices.max(axis=(0, 1))

    @property
    def bbox_diagonal(self) -> float:
        lo, hi = self.bounds
        return float(np.linalg.norm(hi - lo))

    def centroids(self) -> np.ndarray:
        return self.vertices.mean(axis=1)

    def scaled(self, factor: float) -> "TriangleSoup":
        return TriangleSoup(self.vertices * float(factor))

    def translated(self, offset) -> "TriangleSoup":
        return TriangleSoup(self.vertices + np.asarray(offset, dtype=np.float64))


@dataclass
class IssueReport:
    """Defect counts plus the offending edge/face identifiers.

    Edges are reported as (triangle id, corner index) of one incident copy;
    an edge's corner index e means the edge between welded corners e and
    (e + 1) % 3 of that triangle.
    """

    triangle_count: int
    gap_edge_count: int
    over_connected_edge_count: int
    duplicate_face_count: int
    zero_area_count: int
    gap_edges: list
    over_connected_edges: list
    duplicate_faces: list
    zero_area_faces: list
    weld_tolerance: float

    def __post_init__(self):
        assert self.gap_edge_count == len(self.gap_edges)
        assert self.over_connected_edge_count == len(self.over_connected_edges)
        assert self.duplicate_face_count == len(self.duplicate_faces)
        assert self.zero_area_count == len(self.zero_area_faces)

    @property
    def is_watertight(self) -> bool:
        return self.gap_edge_count == 0 and self.over_connected_edge_count == 0

    def to_json(self, indent: int | None = 2) -> str:
        payload = {
            "triangle_count": self.triangle_count,
            "gap_edge_count": self.gap_edge_count,
            "over_connected_edge_count": self.over_connected_edge_count,
            "duplicate_face_count": self.duplicate_face_count,
            "zero_area_count": self.zero_area_count,
            "gap_edges": [list(map(int, e)) for e in self.gap_edges],
            "over_connected_edges": [list(map(int, e)) for e in self.over_connected_edges],
            "duplicate_faces": [int(i) for i in self.duplicate_faces],
            "zero_area_faces": [int(i) for i in self.zero_area_faces],
            "weld_tolerance": self.weld_tolerance,
        }
        return json.dumps(payload, indent=indent)


def _weld_vertices(points: np.ndarray, tol: float) -> np.ndarray:
    """Map each point to a representative id; points within tol are merged.

    Proximity clusters are merged transitively (union-find over KD-tree
    pairs), so chains of nearly-coincident vertices collapse to one id.
    """
    n = points.shape[0]
    parent = np.arange(n)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    if tol > 0.0 and n > 1:
        tree = cKDTree(points)
        for i, j in tree.query_pairs(tol, output_type="ndarray"):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    return np.array([find(i) for i in range(n)], dtype=np.int64)


def default_weld_tolerance(soup: TriangleSoup) -> float:
    """Weld by a tiny fraction of the bounding-box diagonal (unit independent)."""
    diag = soup.bbox_diagonal
    return 1e-6 * diag if diag > 0.0 else 1e-12


def audit_geometry(soup: TriangleSoup, weld_tolerance: float | None = None) -> IssueReport:
    """Count gap edges, over-connected edges, duplicate faces, zero-area faces.

    Edges are matched by welded-vertex proximity: an edge used by exactly two
    triangles is clean, by one is a gap edge, by three or more is
    over-connected.  The audit is total: any soup produces a report.
    """
    if weld_tolerance is None:
        weld_tolerance = default_weld_tolerance(soup)
    if weld_tolerance <= 0.0:
        raise ValueError("weld_tolerance must be positive")

    n = len(soup)
    zero_area_faces = [int(i) for i in np.flatnonzero(soup.degenerate)]
    if n == 0:
        return IssueReport(0, 0, 0, 0, 0, [], [], [], [], weld_tolerance)

    pts = soup.vertices.reshape(-1, 3)
    weld = _weld_vertices(pts, weld_tolerance)
    tri_vids = weld.reshape(n, 3)

    # duplicate faces: identical welded vertex triples (any winding)
    keys = np.sort(tri_vids, axis=1)
    order = np.lexsort(keys.T)
    sorted_keys = keys[order]
    same_as_prev = np.all(sorted_keys[1:] == sorted_keys[:-1], axis=1)
    duplicate_faces = [int(order[i + 1]) for i in np.flatnonzero(same_as_prev)]

    # edge incidence over welded ids; degenerate edges (both ends welded
    # together) belong to slivers and are excluded from the edge census
    edge_count: dict[tuple[int, int], int] = {}
    edge_owner: dict[tuple[int, int], tuple[int, int]] = {}
    for t in range(n):
        for e in range(3):
            a, b = int(tri_vids[t, e]), int(tri_vids[t, (e + 1) % 3])
            if a == b:
                continue
            key = (a, b) if a < b else (b, a)
            edge_count[key] = edge_count.get(key, 0) + 1
            edge_owner.setdefault(key, (t, e))

    gap_edges = sorted(edge_owner[k] for k, c in edge_count.items() if c == 1)
    over_edges = sorted(edge_owner[k] for k, c in edge_count.items() if c >= 3)

    return IssueReport(
        triangle_count=n,
        gap_edge_count=len(gap_edges),
        over_connected_edge_count=len(over_edges),
        duplicate_face_count=len(duplicate_faces),
        zero_area_count=len(zero_area_faces),
        gap_edges=gap_edges,
        over_connected_edges=over_edges,
        duplicate_faces=duplicate_faces,
        zero_area_faces=zero_area_faces,
        weld_tolerance=weld_tolerance,
    )
