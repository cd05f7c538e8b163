import numpy as np
import pytest

from surfvec.curvature import (
    eig_sym2,
    face_curvature_tensor,
    principal_direction_field,
    rotate_frame,
    tangent_basis,
    vertex_curvature,
)
from surfvec.mesh_io import TriangleMesh
from surfvec.resample import build_icosphere
from surfvec.synth import ellipsoid_curvature, make_ellipsoid

from conftest import axial_deg, grid_mesh, random_rotation


def sin_between(a, b):
    # |sin| of the axial angle; well conditioned for tiny angles unlike arccos
    return np.linalg.norm(np.cross(a, b), axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))


def test_planar_patch_zero(rng):
    mesh = grid_mesh(6, jitter=0.3)
    R = random_rotation(rng)
    mesh = TriangleMesh(mesh.vertices @ R.T, mesh.faces)
    t, _, _ = face_curvature_tensor(mesh)
    assert np.abs(t).max() < 1e-12
    c = vertex_curvature(mesh)
    assert np.abs(c.kappa_max).max() < 1e-12 and np.abs(c.kappa_min).max() < 1e-12


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_sphere_curvature(r):
    mesh = build_icosphere(5).mesh
    c = vertex_curvature(TriangleMesh(r * mesh.vertices, mesh.faces))
    for k in (c.kappa_max, c.kappa_min):
        assert abs(np.median(k) * r - 1.0) < 0.05
    assert c.umbilic.all()


def test_parabolic_graph_center():
    # z = -(0.2 x^2 + 1.0 y^2)/2 with upward normals: kappa 0.2 along x, 1.0 along y
    n = 40
    mesh = grid_mesh(n, size=0.4)
    v = mesh.vertices.copy()
    v[:, :2] -= 0.2
    v[:, 2] = -0.5 * (0.2 * v[:, 0] ** 2 + 1.0 * v[:, 1] ** 2)
    mesh = TriangleMesh(v, mesh.faces)
    c = vertex_curvature(mesh)
    center = np.argmin(np.linalg.norm(v[:, :2], axis=1))
    assert abs(c.kappa_max[center] - 1.0) < 0.01
    assert abs(c.kappa_min[center] - 0.2) < 0.01
    assert axial_deg(c.dir_max[[center]], np.array([[0.0, 1.0, 0.0]]))[0] < 1.0
    assert axial_deg(c.dir_min[[center]], np.array([[1.0, 0.0, 0.0]]))[0] < 1.0


def test_spheroid_against_analytic():
    mesh, param, exact = make_ellipsoid(1.0, 1.0, 0.6, 5)
    c = vertex_curvature(mesh)
    keep = ~exact.umbilic
    assert keep.sum() > 0.5 * mesh.n_vertices
    assert np.median(axial_deg(c.dir_max[keep], exact.dir_max[keep])) < 5.0
    rel = np.abs(c.kappa_max - exact.kappa_max) / np.abs(exact.kappa_max)
    assert np.median(rel) < 0.05
    assert np.median(np.abs(c.mean - exact.mean) / exact.mean) < 0.05
    assert np.median(np.abs(c.gaussian - exact.gaussian) / exact.gaussian) < 0.10


def test_ellipsoid_oracle_sphere_case(rng):
    p = rng.normal(size=(20, 3))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    c = ellipsoid_curvature(2 * p, 2, 2, 2)
    np.testing.assert_allclose(c.kappa_max, 0.5)
    np.testing.assert_allclose(c.kappa_min, 0.5)
    c2 = ellipsoid_curvature(np.array([[1.0, 0, 0]]), 1.0, 1.0, 0.5)
    # meridian curvature a/c^2 = 4 along z, parallel curvature 1 along y
    np.testing.assert_allclose([c2.kappa_max[0], c2.kappa_min[0]], [4.0, 1.0])
    assert axial_deg(c2.dir_max, np.array([[0, 0, 1.0]]))[0] < 1e-6


def test_scale_and_rotation_laws(rng):
    mesh, _, _ = make_ellipsoid(1.0, 0.8, 0.6, 4)
    base = vertex_curvature(mesh)
    s = 2.5
    scaled = vertex_curvature(TriangleMesh(s * mesh.vertices, mesh.faces))
    np.testing.assert_allclose(scaled.kappa_max * s, base.kappa_max, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(scaled.kappa_min * s, base.kappa_min, rtol=1e-9, atol=1e-12)
    assert sin_between(scaled.dir_max, base.dir_max).max() < 1e-9
    R = random_rotation(rng)
    rot = vertex_curvature(TriangleMesh(mesh.vertices @ R.T, mesh.faces))
    np.testing.assert_allclose(rot.kappa_max, base.kappa_max, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(rot.kappa_min, base.kappa_min, rtol=1e-9, atol=1e-12)
    keep = ~base.umbilic
    assert sin_between(rot.dir_max[keep], base.dir_max[keep] @ R.T).max() < 1e-9


def test_tangent_basis_orthonormal(rng):
    n = rng.normal(size=(100, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    n[0] = [1, 0, 0]
    u, v = tangent_basis(n)
    np.testing.assert_allclose(np.cross(u, v), n, atol=1e-14)
    np.testing.assert_allclose(np.einsum("ij,ij->i", u, n), 0, atol=1e-14)


def test_rotate_frame(rng):
    n0 = rng.normal(size=(50, 3))
    n0 /= np.linalg.norm(n0, axis=1, keepdims=True)
    u, v = tangent_basis(n0)
    n1 = n0 + 0.3 * rng.normal(size=(50, 3))
    n1 /= np.linalg.norm(n1, axis=1, keepdims=True)
    ru, rv = rotate_frame(u, v, n1)
    np.testing.assert_allclose(np.cross(ru, rv), n1, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(ru, axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(np.einsum("ij,ij->i", ru, rv), 0, atol=1e-12)
    # identity when the normal is unchanged
    ru, rv = rotate_frame(u, v, n0)
    np.testing.assert_allclose(ru, u, atol=1e-14)


def test_eig_sym2(rng):
    t = rng.normal(size=(30, 2, 2))
    t = t + np.swapaxes(t, 1, 2)
    u = np.tile([1.0, 0, 0], (30, 1))
    v = np.tile([0, 1.0, 0], (30, 1))
    kmax, kmin, dmax, dmin = eig_sym2(t, u, v)
    w, vec = np.linalg.eigh(t)
    np.testing.assert_allclose(kmax, w[:, 1], atol=1e-12)
    np.testing.assert_allclose(kmin, w[:, 0], atol=1e-12)
    assert sin_between(dmax, np.column_stack([vec[:, :, 1], np.zeros(30)])).max() < 1e-12
    kmax, kmin, dmax, _ = eig_sym2(np.tile(np.eye(2), (3, 1, 1)), u[:3], v[:3])
    np.testing.assert_array_equal(dmax, u[:3])


def test_principal_direction_field_masks_umbilics():
    mesh = build_icosphere(3).mesh
    c = vertex_curvature(mesh)
    X = principal_direction_field(c, "min")
    assert X.mask.all()
    with pytest.raises(ValueError):
        principal_direction_field(c, "mid")
