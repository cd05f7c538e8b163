"""Synthetic genus-0 surfaces with exact spherical parameterizations.

Folded spheres are radial graphs ``r(u) * u`` over icosphere directions
``u`` with ``r = 1 + amplitude * sum(terms)``; their parameterization is
the spherical coordinates of ``u``.  Random numbers come from numpy's
PCG64 generator, whose output is fixed for a given seed on every platform.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import sympy as sp
from scipy.spatial.transform import Rotation

from .curvature import CurvatureField, tangent_basis, umbilic_mask
from .diffgeo import vertex_frames
from .mesh_io import MeshError, SphericalParam, TriangleMesh, save_field, save_mesh, save_param
from .resample import build_icosphere

_theta, _phi = sp.symbols("theta phi", real=True)


@dataclass(frozen=True)
class FoldedSphereSpec:
    """Radial folding of the unit sphere.

    ``terms`` entries are either ``("sh", l, m, coef)`` for a real
    spherical harmonic or ``("cos", k, coef)`` for ``cos(k * theta)``.
    ``seed`` picks a random orientation of the underlying icosphere so
    subject meshes do not share vertices with the comparison domain.
    """

    base_level: int = 5
    amplitude: float = 0.0
    terms: tuple = ()
    seed: int = 0
    rotate_tessellation: bool = True

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(tuple(t) for t in self.terms))
        for t in self.terms:
            if t[0] == "sh" and len(t) == 4:
                l, m = int(t[1]), int(t[2])
                if l < 0 or abs(m) > l:
                    raise ValueError(f"invalid harmonic degree/order ({l}, {m})")
            elif not (t[0] == "cos" and len(t) == 3):
                raise ValueError(f"unrecognized term {t!r}")

    def to_json(self) -> dict:
        terms = []
        for t in self.terms:
            if t[0] == "sh":
                terms.append({"sh": [int(t[1]), int(t[2])], "coef": float(t[3])})
            else:
                terms.append({"cos": int(t[1]), "coef": float(t[2])})
        return {
            "kind": "folded_sphere",
            "base_level": self.base_level,
            "amplitude": self.amplitude,
            "terms": terms,
            "seed": self.seed,
            "rotate_tessellation": self.rotate_tessellation,
        }

    @classmethod
    def from_json(cls, d: dict) -> "FoldedSphereSpec":
        terms = []
        for t in d.get("terms", []):
            if "sh" in t:
                terms.append(("sh", int(t["sh"][0]), int(t["sh"][1]), float(t["coef"])))
            elif "cos" in t:
                terms.append(("cos", int(t["cos"]), float(t["coef"])))
            else:
                raise ValueError(f"unrecognized term {t!r}")
        return cls(
            base_level=int(d.get("base_level", 5)),
            amplitude=float(d.get("amplitude", 0.0)),
            terms=tuple(terms),
            seed=int(d.get("seed", 0)),
            rotate_tessellation=bool(d.get("rotate_tessellation", True)),
        )


def real_sph_harm(l: int, m: int):
    """Orthonormal real spherical harmonic as a sympy expression in (theta, phi)."""
    x = sp.Symbol("x")
    am = abs(m)
    dP = sp.diff(sp.legendre(l, x), x, am).subs(x, sp.cos(_theta))
    plm = (-1) ** am * sp.sin(_theta) ** am * dP
    norm = sp.sqrt(sp.Rational(2 * l + 1, 4) / sp.pi * sp.factorial(l - am) / sp.factorial(l + am))
    if m == 0:
        return norm * plm
    trig = sp.cos(am * _phi) if m > 0 else sp.sin(am * _phi)
    return sp.sqrt(2) * norm * plm * trig


def radius_expr(spec: FoldedSphereSpec):
    total = sp.Integer(0)
    for t in spec.terms:
        if t[0] == "sh":
            total += sp.Float(t[3]) * real_sph_harm(int(t[1]), int(t[2]))
        else:
            total += sp.Float(t[2]) * sp.cos(int(t[1]) * _theta)
    return 1 + sp.Float(spec.amplitude) * total


@lru_cache(maxsize=32)
def _radius_fn(spec: FoldedSphereSpec):
    return sp.lambdify((_theta, _phi), radius_expr(spec), "numpy")


def radius(spec: FoldedSphereSpec, theta, phi) -> np.ndarray:
    r = _radius_fn(spec)(np.asarray(theta, dtype=np.float64), np.asarray(phi, dtype=np.float64))
    return np.broadcast_to(np.asarray(r, dtype=np.float64), np.shape(theta)).copy()


def _tessellation(level: int, seed: int, rotate: bool) -> np.ndarray:
    dom = build_icosphere(level)
    u = dom.mesh.vertices
    if rotate:
        rot = Rotation.random(random_state=np.random.default_rng(seed))
        u = rot.apply(u)
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
    return u, dom.mesh.faces


def make_folded_sphere(spec: FoldedSphereSpec) -> tuple[TriangleMesh, SphericalParam]:
    u, faces = _tessellation(spec.base_level, spec.seed, spec.rotate_tessellation)
    param = SphericalParam.from_points(u)
    r = radius(spec, param.theta, param.phi)
    # dense check so the surface stays star-shaped between vertices too
    probe = SphericalParam.from_points(build_icosphere(max(spec.base_level, 6)).mesh.vertices)
    r_probe = radius(spec, probe.theta, probe.phi)
    if min(r.min(), r_probe.min()) <= 0:
        raise MeshError("folded sphere radius is not positive everywhere")
    return TriangleMesh(r[:, None] * param.to_points(), faces), param


def random_subject_spec(
    seed: int, base_level: int = 5, amplitude: float = 0.15, lmax: int = 4
) -> FoldedSphereSpec:
    """A folded sphere with random harmonic coefficients, normalized to unit RMS."""
    rng = np.random.default_rng(seed)
    terms = []
    for l in range(2, lmax + 1):
        for m in range(-l, l + 1):
            terms.append(("sh", l, m, float(rng.normal() / (l * l))))
    coefs = np.array([t[3] for t in terms])
    # sum of squared coefficients equals 4 pi times the mean squared field
    scale = math.sqrt(4 * math.pi) / np.linalg.norm(coefs)
    terms = [(k, l, m, c * scale) for k, l, m, c in terms]
    return FoldedSphereSpec(base_level, amplitude, tuple(terms), seed)


# --------------------------------------------------------------------------
# analytic references

@lru_cache(maxsize=32)
def _embedding_fns(spec: FoldedSphereSpec):
    r = radius_expr(spec)
    X = sp.Matrix([r * sp.sin(_theta) * sp.cos(_phi), r * sp.sin(_theta) * sp.sin(_phi), r * sp.cos(_theta)])
    parts = {
        "Xt": X.diff(_theta),
        "Xp": X.diff(_phi),
        "Xtt": X.diff(_theta, 2),
        "Xtp": X.diff(_theta).diff(_phi),
        "Xpp": X.diff(_phi, 2),
    }
    return {k: sp.lambdify((_theta, _phi), list(v), "numpy") for k, v in parts.items()}


def _eval_vec(fn, theta, phi) -> np.ndarray:
    out = fn(theta, phi)
    return np.column_stack([np.broadcast_to(np.asarray(c, dtype=np.float64), theta.shape) for c in out])


def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


def folded_sphere_curvature(
    spec: FoldedSphereSpec, param: SphericalParam, umbilic_gap: float = 0.1, pole_sin: float = 1e-3
) -> CurvatureField:
    """Exact principal curvatures/directions of a folded sphere at the given coordinates.

    Computed from the symbolic first and second fundamental forms of the
    parameterized surface.  The theta/phi chart is singular at its poles,
    so points with ``sin(theta) < pole_sin`` are reported as umbilic.
    """
    fns = _embedding_fns(spec)
    th, ph = param.theta, param.phi
    Xt, Xp = _eval_vec(fns["Xt"], th, ph), _eval_vec(fns["Xp"], th, ph)
    Xtt, Xtp, Xpp = (_eval_vec(fns[k], th, ph) for k in ("Xtt", "Xtp", "Xpp"))
    N = np.cross(Xt, Xp)
    nn = np.linalg.norm(N, axis=1)
    polar = np.sin(th) < pole_sin
    nn = np.where(polar, 1.0, nn)
    n = N / nn[:, None]
    g = np.stack([np.stack([_dot(Xt, Xt), _dot(Xt, Xp)], -1), np.stack([_dot(Xt, Xp), _dot(Xp, Xp)], -1)], 1)
    # shape operator with dn = S dX: B_ij = dn_i . X_j = -n . X_ij
    B = -np.stack([np.stack([_dot(n, Xtt), _dot(n, Xtp)], -1), np.stack([_dot(n, Xtp), _dot(n, Xpp)], -1)], 1)
    g = np.where(polar[:, None, None], np.eye(2), g)
    B = np.where(polar[:, None, None], np.eye(2), B)
    # C = L^-1 B L^-T with g = L L^T; eigenvectors map back through L^-T
    L = np.linalg.cholesky(g)
    Linv = np.linalg.inv(L)
    C = Linv @ B @ np.swapaxes(Linv, 1, 2)
    C = 0.5 * (C + np.swapaxes(C, 1, 2))
    w, y = np.linalg.eigh(C)
    LinvT = np.swapaxes(Linv, 1, 2)
    wmax = np.einsum("vij,vj->vi", LinvT, y[:, :, 1])
    wmin = np.einsum("vij,vj->vi", LinvT, y[:, :, 0])
    dmax = wmax[:, :1] * Xt + wmax[:, 1:] * Xp
    dmin = wmin[:, :1] * Xt + wmin[:, 1:] * Xp
    dmax /= np.linalg.norm(dmax, axis=1, keepdims=True)
    dmin /= np.linalg.norm(dmin, axis=1, keepdims=True)
    kmax, kmin = w[:, 1], w[:, 0]
    if polar.any():
        pu, pv = tangent_basis(n[polar])
        dmax[polar], dmin[polar] = pu, pv
    umb = umbilic_mask(kmax, kmin, umbilic_gap) | polar
    return CurvatureField(kmax, kmin, dmax, dmin, umb)


def ellipsoid_curvature(points, a: float, b: float, c: float, umbilic_gap: float = 0.1) -> CurvatureField:
    """Exact principal curvatures/directions at points of the ellipsoid (a, b, c).

    Uses the implicit form: with ``m = (x/a^2, y/b^2, z/c^2)`` the shape
    operator on the tangent plane is ``P diag(1/a^2, 1/b^2, 1/c^2) P / |m|``.
    """
    p = np.asarray(points, dtype=np.float64)
    D = np.array([1 / a**2, 1 / b**2, 1 / c**2])
    m = p * D
    mn = np.linalg.norm(m, axis=1)
    n = m / mn[:, None]
    t1, t2 = tangent_basis(n)
    S = np.empty((len(p), 2, 2))
    S[:, 0, 0] = _dot(t1 * D, t1) / mn
    S[:, 1, 1] = _dot(t2 * D, t2) / mn
    S[:, 0, 1] = S[:, 1, 0] = _dot(t1 * D, t2) / mn
    w, y = np.linalg.eigh(S)
    dmax = y[:, 0, 1:2] * t1 + y[:, 1, 1:2] * t2
    dmin = y[:, 0, 0:1] * t1 + y[:, 1, 0:1] * t2
    return CurvatureField(w[:, 1], w[:, 0], dmax, dmin, umbilic_mask(w[:, 1], w[:, 0], umbilic_gap))


def make_ellipsoid(a: float, b: float, c: float, level: int, seed: int | None = None):
    """Ellipsoid mesh over icosphere directions, its parameterization and exact curvature."""
    if min(a, b, c) <= 0:
        raise ValueError("semi-axes must be positive")
    u, faces = _tessellation(level, seed or 0, seed is not None)
    param = SphericalParam.from_points(u)
    verts = param.to_points() * np.array([a, b, c])
    return TriangleMesh(verts, faces), param, ellipsoid_curvature(verts, a, b, c)


# --------------------------------------------------------------------------
# scan-rescan simulation

def perturb_scan(mesh: TriangleMesh, sigma: float, seed: int, pose_deg: float = 0.0) -> TriangleMesh:
    """Simulated rescan: Gaussian displacement of every vertex along its normal.

    The displacement standard deviation is ``sigma`` times the mean edge
    length.  ``pose_deg`` additionally rotates the whole surface about the
    origin by that angle around a random axis, as a change of head position
    in the scanner would.  Connectivity (and hence the parameterization) is
    unchanged.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0 and pose_deg == 0:
        return TriangleMesh(mesh.vertices.copy(), mesh.faces)
    rng = np.random.default_rng(seed)
    step = rng.standard_normal(mesh.n_vertices) * sigma * mesh.mean_edge_length
    normals = vertex_frames(mesh).normal
    out = TriangleMesh(mesh.vertices + step[:, None] * normals, mesh.faces)
    flipped = np.flatnonzero(np.einsum("ij,ij->i", out.face_normals, mesh.face_normals) < 0)
    if flipped.size:
        warnings.warn(f"rescan perturbation flipped {flipped.size} faces", stacklevel=2)
    if pose_deg:
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        rot = Rotation.from_rotvec(np.radians(pose_deg) * axis)
        out = TriangleMesh(rot.apply(out.vertices), mesh.faces)
    return out



def _subject_seeds(seed: int, index: int) -> tuple[int, int, int]:
    s = np.random.SeedSequence([int(seed), int(index)]).generate_state(3, dtype=np.uint32)
    return int(s[0]), int(s[1]), int(s[2])


def scan_rescan_subjects(
    n_subjects: int,
    base_level: int = 5,
    amplitude: float = 0.2,
    lmax: int = 6,
    sigma: float = 0.05,
    pose_deg: float = 10.0,
    seed: int = 0,
):
    """Yield ``(name, scan, rescan, param)`` for a synthetic scan-rescan cohort.

    The scan carries normal noise only; the rescan has independent normal
    noise plus a ``pose_deg`` head-position change.
    """
    for i in range(n_subjects):
        s_shape, s_scan, s_rescan = _subject_seeds(seed, i)
        spec = random_subject_spec(s_shape, base_level, amplitude, lmax)
        mesh, param = make_folded_sphere(spec)
        scan = perturb_scan(mesh, sigma, s_scan)
        rescan = perturb_scan(mesh, sigma, s_rescan, pose_deg=pose_deg)
        yield f"sub{i:02d}", scan, rescan, param


def _write_oracle(out: Path, curv: CurvatureField) -> list[str]:
    dmax = np.where(curv.umbilic[:, None], 0.0, curv.dir_max)
    dmin = np.where(curv.umbilic[:, None], 0.0, curv.dir_min)
    files = {
        "oracle_kmax.csv": curv.kappa_max,
        "oracle_kmin.csv": curv.kappa_min,
        "oracle_dir_max.csv": dmax,
        "oracle_dir_min.csv": dmin,
    }
    for name, values in files.items():
        save_field(values, out / name)
    return list(files)


def write_synth(spec: dict, out_dir) -> list[str]:
    """Materialize a synthetic fixture described by a JSON-style dict.

    ``kind`` is ``folded_sphere``, ``ellipsoid`` or ``scan_rescan``.
    Returns the written file names (relative to ``out_dir``).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kind = spec.get("kind", "folded_sphere")
    written = []
    if kind == "folded_sphere":
        fs = FoldedSphereSpec.from_json(spec)
        mesh, param = make_folded_sphere(fs)
        curv = folded_sphere_curvature(fs, param)
    elif kind == "ellipsoid":
        mesh, param, curv = make_ellipsoid(
            float(spec["a"]), float(spec["b"]), float(spec["c"]), int(spec.get("level", 5)), spec.get("seed")
        )
    elif kind == "scan_rescan":
        subjects = []
        for name, scan, rescan, param in scan_rescan_subjects(
            int(spec.get("n_subjects", 5)),
            int(spec.get("base_level", 5)),
            float(spec.get("amplitude", 0.2)),
            int(spec.get("lmax", 6)),
            float(spec.get("sigma", 0.05)),
            float(spec.get("pose_deg", 10.0)),
            int(spec.get("seed", 0)),
        ):
            save_mesh(scan, out / f"{name}_scan.off")
            save_mesh(rescan, out / f"{name}_rescan.off")
            save_param(param, out / f"{name}_param.csv")
            written += [f"{name}_scan.off", f"{name}_rescan.off", f"{name}_param.csv"]
            subjects.append({
                "name": name,
                "mesh": f"{name}_scan.off",
                "param": f"{name}_param.csv",
                "rescan_mesh": f"{name}_rescan.off",
                "rescan_param": f"{name}_param.csv",
            })
        config = {
            "subjects": subjects,
            "out_dir": "results",
            "level": int(spec.get("level", 7)),
            "mode": spec.get("mode", "axial"),
            "seed": int(spec.get("seed", 0)),
        }
        (out / "pipeline.json").write_text(json.dumps(config, indent=2) + "\n")
        return written + ["pipeline.json"]
    else:
        raise ValueError(f"unknown synthetic kind {kind!r}")
    save_mesh(mesh, out / "mesh.off")
    save_param(param, out / "param.csv")
    return ["mesh.off", "param.csv"] + _write_oracle(out, curv)
