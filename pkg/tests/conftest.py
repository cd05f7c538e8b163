import numpy as np
import pytest

from surfvec.mesh_io import TriangleMesh
from surfvec.resample import build_icosphere


def grid_mesh(n=8, size=1.0, jitter=0.0, seed=0):
    """Counter-clockwise triangulation of the square [0, size]^2 in the z=0 plane."""
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, size, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    v = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    if jitter:
        interior = (v[:, 0] > 0) & (v[:, 0] < size) & (v[:, 1] > 0) & (v[:, 1] < size)
        v[interior, :2] += rng.uniform(-jitter, jitter, (interior.sum(), 2)) * size / n
    faces = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b, c, d = a + 1, a + n + 2, a + n + 1
            faces += [[a, b, c], [a, c, d]]
    return TriangleMesh(v, np.array(faces))


def sphere_frame(points):
    """Analytic (e_theta, e_phi, theta, phi) at unit points."""
    theta = np.arccos(np.clip(points[:, 2], -1, 1))
    phi = np.arctan2(points[:, 1], points[:, 0])
    e_theta = np.column_stack([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)])
    e_phi = np.column_stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)])
    return e_theta, e_phi, theta, phi


def axial_deg(a, b):
    a = a / np.linalg.norm(a, axis=1, keepdims=True)
    b = b / np.linalg.norm(b, axis=1, keepdims=True)
    return np.degrees(np.arccos(np.clip(np.abs(np.einsum("ij,ij->i", a, b)), 0.0, 1.0)))


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ico3():
    return build_icosphere(3).mesh


@pytest.fixture(scope="session")
def ico5():
    return build_icosphere(5).mesh
