"""Icosphere domains and nearest-neighbour resampling of tangent fields."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .diffgeo import TangentVectorField, project_tangent
from .mesh_io import TriangleMesh, load_mesh, save_mesh

logger = logging.getLogger(__name__)

MAX_LEVEL = 8


@dataclass(frozen=True, eq=False)
class IcosphereDomain:
    mesh: TriangleMesh
    level: int

    @property
    def points(self) -> np.ndarray:
        return self.mesh.vertices


@dataclass(frozen=True, eq=False)
class Correspondence:
    index: np.ndarray  # (T,) nearest source vertex for each target
    distance: np.ndarray  # (T,) geodesic distance in radians


def icosahedron() -> tuple[np.ndarray, np.ndarray]:
    t = (1.0 + 5.0**0.5) / 2.0
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=np.float64)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _subdivide(v: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # one new vertex per unique edge, numbered in sorted-edge order
    half = np.stack([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=1)  # (F, 3, 2)
    und = np.sort(half, axis=2).reshape(-1, 2)
    keys, inv = np.unique(und[:, 0] * len(v) + und[:, 1], return_inverse=True)
    edges = np.column_stack([keys // len(v), keys % len(v)])
    mid = v[edges[:, 0]] + v[edges[:, 1]]
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    m = (inv.ravel() + len(v)).reshape(-1, 3)  # midpoints of edges 01, 12, 20
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    nf = np.concatenate([
        np.column_stack([a, m01, m20]),
        np.column_stack([b, m12, m01]),
        np.column_stack([c, m20, m12]),
        np.column_stack([m01, m12, m20]),
    ])
    return np.vstack([v, mid]), nf


@lru_cache(maxsize=4)
def build_icosphere(level: int) -> IcosphereDomain:
    """Recursively subdivided icosahedron on the unit sphere (10 * 4**level + 2 vertices)."""
    level = int(level)
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"icosphere level must be in [0, {MAX_LEVEL}], got {level}")
    v, f = icosahedron()
    for _ in range(level):
        v, f = _subdivide(v, f)
    return IcosphereDomain(TriangleMesh(v, f), level)


def cached_icosphere(level: int, cache_dir=None) -> IcosphereDomain:
    """Icosphere read from (or written to) ``cache_dir/icosphere_<level>.off``."""
    if cache_dir is None:
        return build_icosphere(level)
    path = Path(cache_dir) / f"icosphere_{int(level)}.off"
    if path.exists():
        return IcosphereDomain(load_mesh(path, "off"), int(level))
    dom = build_icosphere(level)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_mesh(dom.mesh, path)
    return dom


def chord_to_geodesic(chord: np.ndarray) -> np.ndarray:
    return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))


class SphereIndex:
    """Exact nearest-neighbour queries on unit vectors.

    Chordal and geodesic distance order points identically, so a k-d tree
    in R^3 answers the geodesic query.  Exact distance ties go to the
    smallest source index.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) == 0:
            raise ValueError("need a non-empty (N, 3) array of source points")
        self.points = pts
        self._tree = cKDTree(pts)

    def query(self, targets) -> Correspondence:
        q = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
        k = min(4, len(self.points))
        d, idx = self._tree.query(q, k=k)
        d = d.reshape(len(q), k)
        idx = idx.reshape(len(q), k)
        # recompute distances directly so ties are judged on identical arithmetic
        exact = np.linalg.norm(self.points[idx] - q[:, None, :], axis=2)
        best = exact.min(axis=1)
        cand = np.where(exact == best[:, None], idx, np.iinfo(np.int64).max)
        choice = cand.min(axis=1)
        full_ties = np.flatnonzero((exact == best[:, None]).all(axis=1) & (k < len(self.points)))
        for t in full_ties:
            hits = self._tree.query_ball_point(q[t], best[t] * (1 + 1e-12) + 1e-300)
            hits = np.asarray(hits, dtype=np.int64)
            dist = np.linalg.norm(self.points[hits] - q[t], axis=1)
            choice[t] = hits[dist == dist.min()].min()
            best[t] = dist.min()
        return Correspondence(index=choice.astype(np.int64), distance=chord_to_geodesic(best))


def nearest_on_sphere(source_points, targets) -> Correspondence:
    """For every target vertex, the nearest source point on the unit sphere."""
    tpts = targets.points if isinstance(targets, IcosphereDomain) else targets
    return SphereIndex(source_points).query(tpts)


def great_circle_rotate(v: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Apply the minimal rotation taking unit ``src`` to unit ``dst`` to ``v`` (row-wise)."""
    w = np.cross(src, dst)
    c = np.einsum("ij,ij->i", src, dst)
    if np.any(c <= 0):
        raise ValueError("source and target points are a quarter turn or more apart")
    wv = np.cross(w, v)
    return v + wv + np.cross(w, wv) / (1.0 + c)[:, None]


def resample_field(
    X: TangentVectorField,
    source_points: np.ndarray,
    corr: Correspondence,
    targets,
    transport: bool = True,
) -> TangentVectorField:
    """Nearest-neighbour resampling of a field from a subject sphere.

    With ``transport`` the vector is carried along the great circle to the
    target point and re-projected onto its tangent plane; without it the
    raw ambient vector is copied (the uncorrected baseline).
    """
    tpts = targets.points if isinstance(targets, IcosphereDomain) else np.asarray(targets)
    src = np.asarray(source_points, dtype=np.float64)[corr.index]
    v = X.vectors[corr.index]
    mask = X.mask[corr.index].copy()
    if transport:
        same = np.all(src == tpts, axis=1)
        moved = ~same
        out = v.copy()
        if moved.any():
            if np.any(corr.distance[moved] >= np.pi / 2):
                raise ValueError("nearest source point is a quarter turn or more away")
            out[moved] = project_tangent(
                great_circle_rotate(v[moved], src[moved], tpts[moved]), tpts[moved]
            )
        v = out
    return TangentVectorField(v, mask)
