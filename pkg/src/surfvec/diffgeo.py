"""Discrete differential operators on triangle meshes.

Gradients use piecewise-linear (P1) elements: a vertex function is linear
on every triangle, so its gradient is constant per face.  Vertex values are
face-area weighted averages, projected onto the vertex tangent plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh_io import MeshError, TriangleMesh

ILL_CONDITIONED = 1e8


@dataclass(frozen=True, eq=False)
class VertexFrame:
    normal: np.ndarray  # (V, 3) unit normals
    area: np.ndarray  # (V,) one third of the incident face areas


@dataclass(eq=False)
class TangentVectorField:
    """Per-vertex ambient 3-vectors, plus a mask of vertices to ignore."""

    vectors: np.ndarray
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[1] != 3:
            raise ValueError(f"vectors must have shape (V, 3), got {self.vectors.shape}")
        if self.mask is None:
            self.mask = np.zeros(len(self.vectors), dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != (len(self.vectors),):
                raise ValueError("mask length does not match the field")

    def __len__(self):
        return len(self.vectors)

    def masked_as_zero(self) -> np.ndarray:
        """Vectors with masked entries zeroed (the on-disk convention)."""
        out = self.vectors.copy()
        out[self.mask] = 0.0
        return out

    @classmethod
    def from_array(cls, vectors) -> "TangentVectorField":
        """Zero vectors in ``vectors`` become masked entries."""
        v = np.asarray(vectors, dtype=np.float64)
        return cls(v, np.linalg.norm(v, axis=1) == 0)


def _scatter_to_vertices(mesh: TriangleMesh, corner_values: np.ndarray) -> np.ndarray:
    """Sum per-corner values (F, 3[, k]) into vertices with a fixed-order reduction."""
    idx = mesh.faces.ravel()
    vals = corner_values.reshape(len(idx), -1)
    out = np.empty((mesh.n_vertices, vals.shape[1]))
    for k in range(vals.shape[1]):
        out[:, k] = np.bincount(idx, weights=vals[:, k], minlength=mesh.n_vertices)
    return out.reshape((mesh.n_vertices,) + corner_values.shape[2:])


def vertex_frames(mesh: TriangleMesh) -> VertexFrame:
    """Area-weighted vertex normals and one-third vertex areas."""
    cross = mesh.face_cross
    acc = _scatter_to_vertices(mesh, np.repeat(cross[:, None, :], 3, axis=1))
    norm = np.linalg.norm(acc, axis=1)
    bad = np.flatnonzero(norm <= 1e-300)
    if bad.size:
        raise MeshError(f"vertex {int(bad[0])} has a zero accumulated normal")
    area = _scatter_to_vertices(mesh, np.repeat(mesh.face_areas[:, None], 3, axis=1) / 3.0)
    return VertexFrame(normal=acc / norm[:, None], area=area)


def hat_gradients(mesh: TriangleMesh) -> np.ndarray:
    """Gradients of the three P1 hat functions of every face, shape (F, 3, 3).

    For corner i the gradient is ``N x e_i / (2A)`` with ``e_i`` the
    counter-clockwise edge opposite the corner.
    """
    p = mesh.corners
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    n = mesh.face_normals[:, None, :]
    return np.cross(n, e) / (2.0 * mesh.face_areas[:, None, None])


def face_gradient_from_corners(mesh: TriangleMesh, corner_values: np.ndarray) -> np.ndarray:
    """Face gradients of a function given per-face corner values, shape (F, 3)."""
    return np.einsum("fi,fij->fj", corner_values, hat_gradients(mesh))


def face_gradient(mesh: TriangleMesh, f) -> np.ndarray:
    """P1 gradient of the vertex function ``f`` on every face, shape (F, 3)."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (mesh.n_vertices,):
        raise ValueError(f"expected {mesh.n_vertices} vertex values, got shape {f.shape}")
    return face_gradient_from_corners(mesh, f[mesh.faces])


def project_tangent(v, n) -> np.ndarray:
    """Remove the component of ``v`` along the unit normal ``n`` (row-wise)."""
    v = np.asarray(v, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return v - np.sum(v * n, axis=-1, keepdims=True) * n


def faces_to_vertices(mesh: TriangleMesh, face_vectors: np.ndarray, frame: VertexFrame) -> np.ndarray:
    """Face-area weighted average of face vectors around each vertex, made tangent."""
    w = mesh.face_areas
    acc = _scatter_to_vertices(mesh, np.repeat((face_vectors * w[:, None])[:, None, :], 3, axis=1))
    wsum = _scatter_to_vertices(mesh, np.repeat(w[:, None], 3, axis=1))
    return project_tangent(acc / wsum[:, None], frame.normal)


def vertex_gradient(mesh: TriangleMesh, f, frame: VertexFrame | None = None) -> TangentVectorField:
    if frame is None:
        frame = vertex_frames(mesh)
    return TangentVectorField(faces_to_vertices(mesh, face_gradient(mesh, f), frame))


def gram_matrix(g1, g2) -> np.ndarray:
    """Per-vertex 2x2 Gram matrices of two tangent fields, shape (V, 2, 2)."""
    a = g1.vectors if isinstance(g1, TangentVectorField) else np.asarray(g1)
    b = g2.vectors if isinstance(g2, TangentVectorField) else np.asarray(g2)
    q = np.empty((len(a), 2, 2))
    q[:, 0, 0] = np.einsum("ij,ij->i", a, a)
    q[:, 1, 1] = np.einsum("ij,ij->i", b, b)
    q[:, 0, 1] = q[:, 1, 0] = np.einsum("ij,ij->i", a, b)
    return q


def sym2_eigvalsh(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form (smaller, larger) eigenvalues of symmetric 2x2 matrices."""
    a, b, d = q[..., 0, 0], q[..., 0, 1], q[..., 1, 1]
    mean = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), b)
    return mean - rad, mean + rad


def condition_number(q: np.ndarray) -> np.ndarray:
    """2-norm condition number of symmetric PSD 2x2 matrices (inf when singular)."""
    _, hi = sym2_eigvalsh(q)
    det = q[..., 0, 0] * q[..., 1, 1] - q[..., 0, 1] * q[..., 1, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(hi > 0, det / np.where(hi > 0, hi, 1.0), 0.0)
        c = np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), np.inf)
    return c
