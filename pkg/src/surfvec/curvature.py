"""Principal curvatures and directions from per-face normal variation.

Each face gets a second fundamental form fitted by least squares to the
change of vertex normals along its three edges.  The face tensors are
rotated into each vertex's tangent frame, averaged with one-third face-area
weights and diagonalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffgeo import TangentVectorField, VertexFrame, vertex_frames
from .mesh_io import TriangleMesh

UMBILIC_GAP = 0.1


@dataclass(eq=False)
class CurvatureField:
    kappa_max: np.ndarray
    kappa_min: np.ndarray
    dir_max: np.ndarray
    dir_min: np.ndarray
    umbilic: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return 0.5 * (self.kappa_max + self.kappa_min)

    @property
    def gaussian(self) -> np.ndarray:
        return self.kappa_max * self.kappa_min

    def relabel_umbilics(self, gap: float) -> "CurvatureField":
        return CurvatureField(
            self.kappa_max, self.kappa_min, self.dir_max, self.dir_min,
            umbilic_mask(self.kappa_max, self.kappa_min, gap),
        )


def umbilic_mask(kmax, kmin, gap: float = UMBILIC_GAP) -> np.ndarray:
    """Vertices whose principal curvatures differ by at most ``gap`` relative."""
    scale = np.maximum(np.abs(kmax), np.abs(kmin))
    return (kmax - kmin) <= gap * scale


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def tangent_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal (u, v) with u x v = n, per row."""
    n = np.asarray(normal, dtype=np.float64)
    ref = np.zeros_like(n)
    use_x = np.abs(n[:, 0]) < 0.9
    ref[use_x, 0] = 1.0
    ref[~use_x, 1] = 1.0
    u = _normalize(np.cross(ref, n))
    v = np.cross(n, u)
    return u, v


def _face_frames(mesh: TriangleMesh):
    p = mesh.corners
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    fu = _normalize(e[:, 0])
    fn = mesh.face_normals
    fv = np.cross(fn, fu)
    return e, fu, fv, fn


def face_curvature_tensor(mesh: TriangleMesh, frame: VertexFrame | None = None):
    """Per-face symmetric second fundamental form.

    Returns
    -------
    tensors : (F, 2, 2) array
        Shape operator in the face basis ``(fu, fv)``.
    fu, fv : (F, 3) arrays
        Orthonormal in-plane face basis.
    """
    if frame is None:
        frame = vertex_frames(mesh)
    e, fu, fv, _ = _face_frames(mesh)
    n = frame.normal[mesh.faces]
    # normal difference along each edge, endpoints matching the edge order above
    dn = np.stack([n[:, 2] - n[:, 1], n[:, 0] - n[:, 2], n[:, 1] - n[:, 0]], axis=1)
    eu = np.einsum("fkj,fj->fk", e, fu)
    ev = np.einsum("fkj,fj->fk", e, fv)
    du = np.einsum("fkj,fj->fk", dn, fu)
    dv = np.einsum("fkj,fj->fk", dn, fv)
    # rows [eu ev 0] -> du, [0 eu ev] -> dv; unknowns (a, b, c) of [[a, b], [b, c]]
    nf = mesh.n_faces
    A = np.zeros((nf, 6, 3))
    A[:, 0:3, 0] = eu
    A[:, 0:3, 1] = ev
    A[:, 3:6, 1] = eu
    A[:, 3:6, 2] = ev
    rhs = np.concatenate([du, dv], axis=1)
    AtA = np.einsum("fki,fkj->fij", A, A)
    Atb = np.einsum("fki,fk->fi", A, rhs)
    abc = np.linalg.solve(AtA, Atb[..., None])[..., 0]
    t = np.empty((nf, 2, 2))
    t[:, 0, 0] = abc[:, 0]
    t[:, 0, 1] = t[:, 1, 0] = abc[:, 1]
    t[:, 1, 1] = abc[:, 2]
    return t, fu, fv


def rotate_frame(u: np.ndarray, v: np.ndarray, new_normal: np.ndarray):
    """Rotate the frame (u, v) so its normal u x v becomes ``new_normal``.

    The rotation is about the common perpendicular of the two normals.
    """
    old_n = np.cross(u, v)
    ndot = np.einsum("ij,ij->i", old_n, new_normal)
    flip = ndot <= -1.0 + 1e-15
    u = np.where(flip[:, None], -u, u)
    v = np.where(flip[:, None], -v, v)
    ndot = np.where(flip, -ndot, ndot)
    old_n = np.where(flip[:, None], -old_n, old_n)
    perp = new_normal - ndot[:, None] * old_n
    dperp = (old_n + new_normal) / (1.0 + ndot)[:, None]
    u = u - dperp * np.einsum("ij,ij->i", u, perp)[:, None]
    v = v - dperp * np.einsum("ij,ij->i", v, perp)[:, None]
    return u, v


def eig_sym2(t: np.ndarray, u: np.ndarray, v: np.ndarray):
    """Closed-form eigen-decomposition of 2x2 symmetric tensors in basis (u, v).

    Returns (k_max, k_min, dir_max, dir_min).  Equal eigenvalues give
    ``dir_max = u``.
    """
    a, b, d = t[:, 0, 0], t[:, 0, 1], t[:, 1, 1]
    mean = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), b)
    kmax, kmin = mean + rad, mean - rad
    # angle of the major eigenvector: tan(2 alpha) = 2b / (a - d)
    alpha = 0.5 * np.arctan2(2.0 * b, a - d)
    alpha = np.where(rad == 0.0, 0.0, alpha)
    c, s = np.cos(alpha), np.sin(alpha)
    dmax = c[:, None] * u + s[:, None] * v
    dmin = -s[:, None] * u + c[:, None] * v
    return kmax, kmin, dmax, dmin


def vertex_curvature(
    mesh: TriangleMesh, frame: VertexFrame | None = None, umbilic_gap: float = UMBILIC_GAP
) -> CurvatureField:
    if frame is None:
        frame = vertex_frames(mesh)
    tf, fu, fv = face_curvature_tensor(mesh, frame)
    pu, pv = tangent_basis(frame.normal)

    faces = mesh.faces
    corner_v = faces.ravel()
    corner_f = np.repeat(np.arange(mesh.n_faces), 3)
    # vertex frame rotated into the face plane
    ru, rv = rotate_frame(pu[corner_v], pv[corner_v], mesh.face_normals[corner_f])
    u1 = np.einsum("ij,ij->i", ru, fu[corner_f])
    v1 = np.einsum("ij,ij->i", ru, fv[corner_f])
    u2 = np.einsum("ij,ij->i", rv, fu[corner_f])
    v2 = np.einsum("ij,ij->i", rv, fv[corner_f])
    T = tf[corner_f]
    R = np.stack([np.stack([u1, v1], -1), np.stack([u2, v2], -1)], axis=1)  # rows: new axes in face basis
    tv = np.einsum("cij,cjk,clk->cil", R, T, R)

    w = np.repeat(mesh.face_areas / 3.0, 3)
    nv = mesh.n_vertices
    wsum = np.bincount(corner_v, weights=w, minlength=nv)
    acc = np.empty((nv, 2, 2))
    for i, j in ((0, 0), (0, 1), (1, 1)):
        acc[:, i, j] = np.bincount(corner_v, weights=w * tv[:, i, j], minlength=nv)
    acc[:, 1, 0] = acc[:, 0, 1]
    acc /= wsum[:, None, None]

    kmax, kmin, dmax, dmin = eig_sym2(acc, pu, pv)
    return CurvatureField(kmax, kmin, dmax, dmin, umbilic_mask(kmax, kmin, umbilic_gap))


def principal_direction_field(c: CurvatureField, which: str = "max") -> TangentVectorField:
    if which not in ("max", "min"):
        raise ValueError("which must be 'max' or 'min'")
    d = c.dir_max if which == "max" else c.dir_min
    return TangentVectorField(d.copy(), c.umbilic.copy())
