"""Pushforward of tangent fields onto the sphere through coordinate gradients.

A tangent vector X at a vertex is described by its chart coefficients
``X_i = <X, grad x_i>``.  When the map to the target surface keeps the
coordinate values (here: the spherical parameterization), the pushed
vector is ``sum_j (Gt @ X)_j grad y_j`` with ``Gt`` the inverse Gram
matrix of the target coordinate gradients.

Spherical coordinates are singular at their poles and cut at phi = +-pi,
so two charts with orthogonal polar axes are used and every vertex takes
the one that keeps it farther from a pole.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffgeo import (
    ILL_CONDITIONED,
    TangentVectorField,
    VertexFrame,
    condition_number,
    face_gradient_from_corners,
    faces_to_vertices,
    gram_matrix,
    vertex_frames,
)
from .mesh_io import MeshError, SphericalParam, TriangleMesh

CHART_A, CHART_B = 0, 1


def chart_b_points(points: np.ndarray) -> np.ndarray:
    """Cyclic axis permutation sending the x axis to the z axis."""
    return points[:, [1, 2, 0]]


def spherical_coords(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.clip(points[:, 2], -1.0, 1.0)
    theta = np.arccos(z)
    phi = np.arctan2(points[:, 1], points[:, 0])
    phi = np.where(np.hypot(points[:, 0], points[:, 1]) < 1e-12, 0.0, phi)
    return theta, phi


@dataclass(frozen=True, eq=False)
class ChartAtlas:
    """Two spherical charts (poles on the z axis, poles on the x axis).

    ``theta[c]`` and ``phi[c]`` hold the coordinates of every vertex in
    chart ``c``; ``chart_id`` is the chart used at each vertex.
    """

    theta: np.ndarray  # (2, V)
    phi: np.ndarray  # (2, V)
    chart_id: np.ndarray  # (V,)
    points: np.ndarray  # (V, 3) unit images

    @property
    def n_vertices(self) -> int:
        return len(self.chart_id)

    def assigned_theta(self) -> np.ndarray:
        return self.theta[self.chart_id, np.arange(self.n_vertices)]

    def with_charts(self, chart_id) -> "ChartAtlas":
        return ChartAtlas(self.theta, self.phi, np.asarray(chart_id, dtype=np.int64), self.points)


def build_atlas(param: SphericalParam) -> ChartAtlas:
    u = param.to_points()
    tb, pb = spherical_coords(chart_b_points(u))
    theta = np.stack([param.theta, tb])
    phi = np.stack([param.phi, pb])
    # chart B only when it is strictly farther from its poles
    chart_id = np.where(np.abs(u[:, 0]) < np.abs(u[:, 2]), CHART_B, CHART_A).astype(np.int64)
    return ChartAtlas(theta, phi, chart_id, u)


def unwrap_corners(phi_corners: np.ndarray) -> np.ndarray:
    """Shift corner azimuths by multiples of 2 pi to within pi of the first corner."""
    ref = phi_corners[:, :1]
    d = phi_corners - ref
    d = d - 2 * np.pi * np.ceil((d - np.pi) / (2 * np.pi))
    return ref + d


def coordinate_gradients(mesh: TriangleMesh, theta, phi, frame: VertexFrame | None = None):
    """Vertex gradients of the coordinate functions theta and (seam-unwrapped) phi."""
    if frame is None:
        frame = vertex_frames(mesh)
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    g_theta = face_gradient_from_corners(mesh, theta[mesh.faces])
    g_phi = face_gradient_from_corners(mesh, unwrap_corners(phi[mesh.faces]))
    return faces_to_vertices(mesh, g_theta, frame), faces_to_vertices(mesh, g_phi, frame)


@dataclass(eq=False)
class ChartGradients:
    grad1: TangentVectorField  # gradient of the assigned chart's theta
    grad2: TangentVectorField  # gradient of the assigned chart's phi
    gram_inv: np.ndarray  # (V, 2, 2) Gram matrix of the gradients
    chart_id: np.ndarray
    mask: np.ndarray  # ill-conditioned Gram matrix

    @property
    def matrix(self) -> np.ndarray:
        """Gradients stacked as (V, 2, 3)."""
        return np.stack([self.grad1.vectors, self.grad2.vectors], axis=1)


def chart_gradients(mesh: TriangleMesh, atlas: ChartAtlas, frame: VertexFrame | None = None) -> ChartGradients:
    if atlas.n_vertices != mesh.n_vertices:
        raise MeshError(f"atlas has {atlas.n_vertices} vertices, mesh has {mesh.n_vertices}")
    if frame is None:
        frame = vertex_frames(mesh)
    grads = [coordinate_gradients(mesh, atlas.theta[c], atlas.phi[c], frame) for c in (CHART_A, CHART_B)]
    pick = (atlas.chart_id == CHART_B)[:, None]
    g1 = np.where(pick, grads[CHART_B][0], grads[CHART_A][0])
    g2 = np.where(pick, grads[CHART_B][1], grads[CHART_A][1])
    if not (np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
        raise MeshError("non-finite chart gradient")
    q = gram_matrix(g1, g2)
    mask = ~(condition_number(q) <= ILL_CONDITIONED)
    return ChartGradients(
        TangentVectorField(g1), TangentVectorField(g2), q, atlas.chart_id.copy(), mask
    )


@dataclass(eq=False)
class ChartCoefficients:
    coeffs: np.ndarray  # (V, 2)
    gram_inv: np.ndarray  # (V, 2, 2)
    chart_id: np.ndarray
    mask: np.ndarray


def decompose(X: TangentVectorField, grads: ChartGradients) -> ChartCoefficients:
    """Chart coefficients ``<X, grad x_i>`` at every vertex."""
    coeffs = np.einsum("vij,vj->vi", grads.matrix, X.vectors)
    return ChartCoefficients(coeffs, grads.gram_inv, grads.chart_id, X.mask | grads.mask)


def reconstruct(coeffs: ChartCoefficients, target: ChartGradients) -> TangentVectorField:
    """Target vector ``sum_j (inv(Q_target) @ X)_j grad y_j``."""
    if not np.array_equal(coeffs.chart_id, target.chart_id):
        raise MeshError("source and target use different charts")
    mask = coeffs.mask | target.mask
    q = target.gram_inv
    det = q[:, 0, 0] * q[:, 1, 1] - q[:, 0, 1] * q[:, 1, 0]
    singular = np.flatnonzero(~mask & ~(det > 0))
    if singular.size:
        raise MeshError(f"singular target Gram matrix at vertex {int(singular[0])}")
    safe = np.where(mask, 1.0, det)
    x1, x2 = coeffs.coeffs[:, 0], coeffs.coeffs[:, 1]
    y1 = (q[:, 1, 1] * x1 - q[:, 0, 1] * x2) / safe
    y2 = (q[:, 0, 0] * x2 - q[:, 1, 0] * x1) / safe
    out = y1[:, None] * target.grad1.vectors + y2[:, None] * target.grad2.vectors
    out[mask] = 0.0
    return TangentVectorField(out, mask)


def sphere_mesh(mesh: TriangleMesh, param: SphericalParam) -> TriangleMesh:
    """The source connectivity with vertices moved to their spherical images."""
    return TriangleMesh(param.to_points(), mesh.faces)


def pushforward(
    X: TangentVectorField,
    source: TriangleMesh,
    target: TriangleMesh,
    atlas: ChartAtlas,
) -> TangentVectorField:
    """Push ``X`` from ``source`` to ``target``; both carry the coordinates in ``atlas``."""
    g_src = chart_gradients(source, atlas)
    g_tgt = chart_gradients(target, atlas)
    return reconstruct(decompose(X, g_src), g_tgt)


def pushforward_to_sphere(
    mesh: TriangleMesh, param: SphericalParam, X: TangentVectorField
) -> TangentVectorField:
    """Pushforward of ``X`` onto the unit-sphere mesh given by ``param``."""
    if len(param) != mesh.n_vertices:
        raise MeshError(f"parameterization has {len(param)} entries, mesh has {mesh.n_vertices} vertices")
    if len(X) != mesh.n_vertices:
        raise MeshError(f"field has {len(X)} entries, mesh has {mesh.n_vertices} vertices")
    atlas = build_atlas(param)
    return pushforward(X, mesh, sphere_mesh(mesh, param), atlas)
