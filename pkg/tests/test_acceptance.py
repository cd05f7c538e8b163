"""Acceptance criteria 1-12.

Every test prints exactly one ``[ACCEPT nn] PASS|FAIL`` line (visible even
under output capture) and then asserts the criterion, including its
runtime budget.
"""

import json
import time

import numpy as np
import pytest
import sympy as sp

from surfvec.curvature import principal_direction_field, vertex_curvature
from surfvec.diffgeo import TangentVectorField, project_tangent, vertex_frames, face_gradient
from surfvec.mesh_io import SphericalParam, TriangleMesh, validate_spherical_topology
from surfvec.pipeline import load_config, run_pipeline
from surfvec.resample import build_icosphere, nearest_on_sphere
from surfvec.stats import average_fields
from surfvec.synth import (
    FoldedSphereSpec,
    make_ellipsoid,
    make_folded_sphere,
    random_subject_spec,
    write_synth,
)
from surfvec.transport import build_atlas, chart_gradients, pushforward, pushforward_to_sphere, sphere_mesh

from conftest import grid_mesh, random_rotation, sphere_frame


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, seconds, budget):
        ok = bool(ok) and seconds < budget
        with capsys.disabled():
            print(f"\n[ACCEPT {n:02d}] {'PASS' if ok else 'FAIL'} {detail} ({seconds:.2f} s, budget {budget:g} s)")
        return ok

    return emit


def random_tangent(mesh, rng, k=None):
    n = vertex_frames(mesh).normal
    shape = (mesh.n_vertices, 3) if k is None else (k, mesh.n_vertices, 3)
    return project_tangent(rng.normal(size=shape), n)


def max_rel(a, b):
    return float((np.linalg.norm(a - b, axis=-1) / np.linalg.norm(b, axis=-1)).max())


def axial_deg(a, b):
    cos = np.abs(np.einsum("ij,ij->i", a, b)) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
    return np.degrees(np.arccos(np.clip(cos, 0.0, 1.0)))


# --------------------------------------------------------------------------

def test_01_fem_affine_exactness(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    flat = grid_mesh(10, jitter=0.3, seed=1)  # 200 faces
    R = random_rotation(rng)
    mesh = TriangleMesh(flat.vertices @ R.T, flat.faces)
    n = R[:, 2]
    worst = 0.0
    for _ in range(20):
        a = rng.normal(size=3)
        g = face_gradient(mesh, mesh.vertices @ a + rng.normal())
        expect = a - (a @ n) * n
        worst = max(worst, float(np.linalg.norm(g - expect, axis=1).max() / np.linalg.norm(expect)))
    dt = time.perf_counter() - t0
    ok = report(1, mesh.n_faces >= 100 and worst <= 1e-12,
                f"affine gradients on {mesh.n_faces} faces: max rel error {worst:.2e} (<= 1e-12)", dt, 1)
    assert ok


def test_02_gram_matrix_inverse_metric(report):
    t0 = time.perf_counter()
    med = {}
    for level in (4, 5, 6):
        mesh = build_icosphere(level).mesh
        atlas = build_atlas(SphericalParam.from_points(mesh.vertices))
        q = chart_gradients(mesh, atlas).gram_inv
        th = atlas.assigned_theta()
        G_inv = np.zeros_like(q)
        G_inv[:, 0, 0] = 1.0
        G_inv[:, 1, 1] = 1.0 / np.sin(th) ** 2
        err = np.linalg.norm(q - G_inv, axis=(1, 2)) / np.linalg.norm(G_inv, axis=(1, 2))
        med[level] = float(np.median(err))
    dt = time.perf_counter() - t0
    ok = med[5] < 0.05 and med[5] <= med[4] and med[6] <= med[5]
    detail = "median rel Frobenius error " + ", ".join(f"L{k}={v:.2e}" for k, v in med.items())
    assert report(2, ok, detail + " (L5 < 5%, non-increasing)", dt, 30)


def test_03_identity_pushforward(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    mesh, param = make_folded_sphere(random_subject_spec(3, base_level=4, amplitude=0.15))
    atlas = build_atlas(param)
    worst = 0.0
    for X in random_tangent(mesh, rng, 100):
        Y = pushforward(TangentVectorField(X), mesh, mesh, atlas)
        assert not Y.mask.any()
        worst = max(worst, max_rel(Y.vectors, X))
    dt = time.perf_counter() - t0
    assert report(3, worst < 1e-9, f"100 random fields, max rel error {worst:.2e} (< 1e-9)", dt, 10)


def test_04_scaling_law(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    unit = build_icosphere(5).mesh
    big = TriangleMesh(2.0 * unit.vertices, unit.faces)
    param = SphericalParam.from_points(unit.vertices)
    X = random_tangent(big, rng)
    Y = pushforward_to_sphere(big, param, TangentVectorField(X))
    err = max_rel(Y.vectors, 0.5 * X)
    dt = time.perf_counter() - t0
    assert report(4, err < 1e-6, f"radius 2 -> 1 halves vectors, max rel error {err:.2e} (< 1e-6)", dt, 10)


def test_05_round_trip(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    mesh, param = make_folded_sphere(random_subject_spec(5, base_level=6, amplitude=0.15))
    atlas = build_atlas(param)
    S = sphere_mesh(mesh, param)
    X = random_tangent(mesh, rng)
    Z = pushforward(pushforward(TangentVectorField(X), mesh, S, atlas), S, mesh, atlas)
    assert not Z.mask.any()
    err = max_rel(Z.vectors, X)
    dt = time.perf_counter() - t0
    assert report(5, err < 1e-6, f"M->S->M at level 6, max rel error {err:.2e} (< 1e-6)", dt, 60)


def revolution_oracle(theta, amp=0.1, k=3):
    """Principal curvatures of r = 1 + amp cos(k theta) revolved about z (outward normal).

    Profile (rho, z) = r (sin, cos); meridian curvature
    (rho'' z' - z'' rho') / s^3 and parallel curvature -z' / (s rho), s = |(rho', z')|.
    """
    t = sp.Symbol("t", real=True)
    r = 1 + amp * sp.cos(k * t)
    rho, z = r * sp.sin(t), r * sp.cos(t)
    d1r, d1z = sp.diff(rho, t), sp.diff(z, t)
    d2r, d2z = sp.diff(rho, t, 2), sp.diff(z, t, 2)
    s = sp.sqrt(d1r**2 + d1z**2)
    k_mer = sp.lambdify(t, (d2r * d1z - d2z * d1r) / s**3, "numpy")
    k_par = sp.lambdify(t, -d1z / (s * rho), "numpy")
    return k_mer(theta), k_par(theta)


def test_06_surface_of_revolution(report):
    t0 = time.perf_counter()
    spec = FoldedSphereSpec(base_level=6, amplitude=0.1, terms=(("cos", 3, 1.0),), seed=6)
    mesh, param = make_folded_sphere(spec)
    X = principal_direction_field(vertex_curvature(mesh), "max")
    Y = pushforward_to_sphere(mesh, param, X)

    u = param.to_points()
    e_theta, e_phi, _, _ = sphere_frame(u)
    k_mer, k_par = revolution_oracle(param.theta)
    # meridian direction d/dtheta pushes to e_theta, the parallel d/dphi to sin(theta) e_phi
    expect = np.where((k_mer > k_par)[:, None], e_theta, e_phi)
    gap = np.abs(k_mer - k_par) / np.maximum(np.abs(k_mer), np.abs(k_par))
    oracle_umbilic = (gap <= 0.1) | (np.sin(param.theta) < 1e-3)
    keep = ~(oracle_umbilic | Y.mask)
    err = axial_deg(Y.vectors[keep], expect[keep])
    med = float(np.median(err))
    dt = time.perf_counter() - t0
    ok = keep.sum() > 0.3 * mesh.n_vertices and med < 5.0
    assert report(6, ok, f"median axial error {med:.3f} deg on {keep.sum()} vertices (< 5 deg)", dt, 60)


def test_07_scan_rescan(report, tmp_path):
    t0 = time.perf_counter()
    write_synth({"kind": "scan_rescan", "n_subjects": 5, "base_level": 5, "level": 6, "seed": 0}, tmp_path)
    cfg = load_config(tmp_path / "pipeline.json", out_dir=str(tmp_path / "results"))
    assert cfg.level == 6
    status, manifest = run_pipeline(cfg)
    assert status == 0
    rows = [(r["name"], r["pushforward"]["median"], r["naive"]["median"]) for r in manifest["subjects"]]
    ok = all(p < 20.0 and p < n for _, p, n in rows)
    dt = time.perf_counter() - t0
    detail = "; ".join(f"{name} {p:.1f} vs naive {n:.1f}" for name, p, n in rows)
    assert report(7, ok, f"median axial deg (pushforward < 20 and < naive): {detail}", dt, 300)


def test_08_icosphere_cardinality(report):
    t0 = time.perf_counter()
    build_icosphere.cache_clear()
    mesh = build_icosphere(7).mesh
    topo = validate_spherical_topology(mesh)
    dt = time.perf_counter() - t0
    ok = mesh.n_vertices == 163842 and topo.euler_characteristic == 2 and topo.spherical
    assert report(8, ok, f"level 7: {mesh.n_vertices} vertices, chi={topo.euler_characteristic}", dt, 30)


def brute_nearest(src, tgt, chunk=256):
    out = np.empty(len(tgt), dtype=np.int64)
    for i in range(0, len(tgt), chunk):
        d = np.linalg.norm(tgt[i:i + chunk, None, :] - src[None, :, :], axis=2)
        out[i:i + chunk] = np.argmin(d, axis=1)  # first index among exact ties
    return out


def test_09_nearest_neighbour(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    mismatches = 0
    for k in range(20):
        n_src = int(rng.integers(10, 10_001))
        n_tgt = int(rng.integers(10, 2_001))
        src = rng.normal(size=(n_src, 3))
        src /= np.linalg.norm(src, axis=1, keepdims=True)
        if k % 4 == 0:
            # exact duplicates force distance ties
            src = np.vstack([src, src[: n_src // 3]])[:10_000]
        tgt = rng.normal(size=(n_tgt, 3))
        tgt /= np.linalg.norm(tgt, axis=1, keepdims=True)
        if k % 5 == 0:
            tgt[: n_tgt // 2] = src[rng.integers(0, len(src), n_tgt // 2)]
        mismatches += int(np.sum(nearest_on_sphere(src, tgt).index != brute_nearest(src, tgt)))
    dt = time.perf_counter() - t0
    assert report(9, mismatches == 0, f"20 instances, {mismatches} mismatches vs brute force", dt, 60)


def test_10_curvature_oracles(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    sphere = vertex_curvature(build_icosphere(5).mesh)
    k_err = max(abs(float(np.median(sphere.kappa_max)) - 1), abs(float(np.median(sphere.kappa_min)) - 1))

    mesh, _, exact = make_ellipsoid(1.0, 1.0, 0.6, 5)
    est = vertex_curvature(mesh)
    keep = ~exact.umbilic
    d_err = float(np.median(axial_deg(est.dir_max[keep], exact.dir_max[keep])))

    s = 3.0
    scaled = vertex_curvature(TriangleMesh(s * mesh.vertices, mesh.faces))
    R = random_rotation(rng)
    rotated = vertex_curvature(TriangleMesh(mesh.vertices @ R.T, mesh.faces))
    ref = np.abs(est.kappa_max).max()
    law = max(
        float(np.abs(s * scaled.kappa_max - est.kappa_max).max() / ref),
        float(np.abs(s * scaled.kappa_min - est.kappa_min).max() / ref),
        float(np.abs(rotated.kappa_max - est.kappa_max).max() / ref),
        float(np.abs(rotated.kappa_min - est.kappa_min).max() / ref),
    )
    # direction laws as |sin| of the axial angle (arccos cannot resolve 1e-9)
    nz = ~est.umbilic
    sin = lambda a, b: np.linalg.norm(np.cross(a, b), axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
    law_dir = max(float(sin(scaled.dir_max[nz], est.dir_max[nz]).max()),
                  float(sin(rotated.dir_max[nz], est.dir_max[nz] @ R.T).max()))
    dt = time.perf_counter() - t0
    ok = k_err < 0.05 and d_err < 5.0 and law < 1e-9 and law_dir < 1e-9
    detail = (f"sphere median kappa error {k_err:.2%} (< 5%), spheroid median dir error {d_err:.3f} deg (< 5), "
              f"scale/rotation laws {law:.1e} / dirs {law_dir:.1e} (< 1e-9)")
    assert report(10, ok, detail, dt, 60)


def test_11_axial_average(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    grid = np.radians(np.arange(0.0, 180.0, 0.1))
    worst, masked = 0.0, 0
    for _ in range(1000):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        e1 = np.cross(n, [1.0, 0, 0] if abs(n[0]) < 0.9 else [0, 1.0, 0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        k = int(rng.integers(2, 11))
        coef = rng.normal(size=(k, 2)) * rng.uniform(0.1, 3.0, size=(k, 1))
        vs = coef[:, :1] * e1 + coef[:, 1:] * e2
        avg = average_fields([TangentVectorField(v[None, :]) for v in vs], "axial", normals=n[None, :])
        if avg.mask[0]:
            masked += 1
            continue
        dirs = np.cos(grid)[:, None] * e1 + np.sin(grid)[:, None] * e2
        unit = vs / np.linalg.norm(vs, axis=1, keepdims=True)
        best = dirs[np.argmax(((dirs @ unit.T) ** 2).sum(axis=1))]
        worst = max(worst, float(axial_deg(avg.vectors, best[None, :])[0]))
    dt = time.perf_counter() - t0
    ok = worst <= 0.2 and masked == 0
    assert report(11, ok, f"1000 cases, max deviation from grid maximizer {worst:.3f} deg (<= 0.2), {masked} masked", dt, 60)


def test_12_determinism(report, tmp_path):
    t0 = time.perf_counter()
    write_synth({"kind": "scan_rescan", "n_subjects": 3, "base_level": 4, "level": 5, "seed": 12}, tmp_path)
    outs = []
    for run in ("a", "b"):
        cfg = load_config(tmp_path / "pipeline.json", out_dir=str(tmp_path / run), jobs=2)
        status, _ = run_pipeline(cfg)
        assert status == 0
        outs.append(tmp_path / run)
    files = sorted(p.name for p in outs[0].iterdir() if p.name != "manifest.json")
    same = files == sorted(p.name for p in outs[1].iterdir() if p.name != "manifest.json")
    differing = [f for f in files if (outs[0] / f).read_bytes() != (outs[1] / f).read_bytes()]
    m = [json.loads((o / "manifest.json").read_text()) for o in outs]
    same = same and not differing and m[0]["config_sha256"] == m[1]["config_sha256"]
    dt = time.perf_counter() - t0
    assert report(12, same, f"{len(files)} data artifacts compared, {len(differing)} differ", dt, 300)
