"""File-level stages and the multi-subject comparison pipeline.

Each stage reads and writes files so stages can be run one at a time from
the command line; :func:`run_pipeline` chains the same functions.
Tangent fields are stored as ``index,x,y,z`` CSV with masked vertices
written as zero vectors.
"""

from __future__ import annotations

import hashlib
import json
import logging
import platform
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .curvature import UMBILIC_GAP, principal_direction_field, vertex_curvature
from .diffgeo import TangentVectorField
from .mesh_io import (
    MeshError,
    load_field,
    load_mesh,
    load_param,
    save_field,
    save_mesh,
    validate_spherical_topology,
)
from .resample import cached_icosphere, nearest_on_sphere, resample_field
from .stats import angular_error, average_fields, histogram
from .transport import pushforward_to_sphere, sphere_mesh

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# field files

def save_tangent(X: TangentVectorField, path) -> None:
    save_field(X.masked_as_zero(), path)


def load_tangent(path, n_vertices: int | None = None) -> TangentVectorField:
    a = load_field(path, n_vertices=n_vertices)
    if a.ndim != 2:
        raise MeshError(f"{path}: expected a vector field")
    return TangentVectorField.from_array(a)


# --------------------------------------------------------------------------
# single stages

def stage_curvature(mesh_path, out_path, which: str = "max", umbilic_gap: float = UMBILIC_GAP,
                    kmax_path=None, kmin_path=None) -> TangentVectorField:
    mesh = load_mesh(mesh_path)
    curv = vertex_curvature(mesh, umbilic_gap=umbilic_gap)
    X = principal_direction_field(curv, which)
    save_tangent(X, out_path)
    if kmax_path:
        save_field(curv.kappa_max, kmax_path)
    if kmin_path:
        save_field(curv.kappa_min, kmin_path)
    return X


def stage_pushforward(mesh_path, param_path, field_path, out_path, sphere_path=None) -> TangentVectorField:
    mesh = load_mesh(mesh_path)
    topo = validate_spherical_topology(mesh)
    if not topo.spherical:
        raise MeshError(
            f"{mesh_path}: needs a closed oriented manifold with Euler characteristic 2 "
            f"(got chi={topo.euler_characteristic}, manifold={topo.manifold}, oriented={topo.oriented})"
        )
    param = load_param(param_path, n_vertices=mesh.n_vertices)
    X = load_tangent(field_path, mesh.n_vertices)
    Y = pushforward_to_sphere(mesh, param, X)
    save_tangent(Y, out_path)
    if sphere_path:
        save_mesh(sphere_mesh(mesh, param), sphere_path)
    return Y


def stage_resample(param_path, field_path, out_path, level: int = 7, naive: bool = False,
                   cache_dir=None) -> TangentVectorField:
    param = load_param(param_path)
    X = load_tangent(field_path, len(param))
    dom = cached_icosphere(level, cache_dir)
    pts = param.to_points()
    out = resample_field(X, pts, nearest_on_sphere(pts, dom), dom, transport=not naive)
    save_tangent(out, out_path)
    return out


def stage_compare(a_path, b_path, mode: str = "axial", bin_width: float = 1.0,
                  map_path=None, hist_path=None, summary_path=None) -> dict:
    A = load_tangent(a_path)
    B = load_tangent(b_path, len(A))
    amap = angular_error(A, B, mode)
    hist = histogram(amap, bin_width)
    if map_path:
        amap.to_csv(map_path)
    if hist_path:
        hist.to_csv(hist_path)
    summary = {"mode": mode, "bin_width": bin_width, "masked": int(amap.mask.sum()), **hist.summary}
    if summary_path:
        Path(summary_path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def stage_average(field_paths, out_path, mode: str = "axial", level: int | None = None,
                  cache_dir=None) -> TangentVectorField:
    """Average fields on a shared domain; with ``level`` the result is made tangent to that icosphere."""
    fields = [load_tangent(p) for p in field_paths]
    normals = cached_icosphere(level, cache_dir).points if level is not None else None
    avg = average_fields(fields, mode, normals=normals)
    save_tangent(avg, out_path)
    return avg


# --------------------------------------------------------------------------
# pipeline

@dataclass
class SubjectEntry:
    name: str
    mesh: str
    param: str
    rescan_mesh: str | None = None
    rescan_param: str | None = None


@dataclass
class PipelineConfig:
    subjects: list[SubjectEntry]
    out_dir: str = "out"
    level: int = 7
    umbilic_gap: float = UMBILIC_GAP
    mode: str = "axial"
    which: str = "max"
    bin_width: float = 1.0
    seed: int = 0
    jobs: int = 1
    cache_dir: str | None = None

    def validate(self) -> None:
        if not 0 <= self.level <= 8:
            raise ValueError(f"level must be in [0, 8], got {self.level}")
        if self.mode not in ("axial", "vector"):
            raise ValueError(f"mode must be axial or vector, got {self.mode!r}")
        names = [s.name for s in self.subjects]
        if len(set(names)) != len(names):
            raise ValueError("subject names must be unique")
        for s in self.subjects:
            for p in (s.mesh, s.param, s.rescan_mesh, s.rescan_param):
                if p is not None and not Path(p).exists():
                    raise FileNotFoundError(p)
            if (s.rescan_mesh is None) != (s.rescan_param is None):
                raise ValueError(f"subject {s.name}: rescan needs both mesh and param")

    def data_dict(self) -> dict:
        d = asdict(self)
        d.pop("jobs")
        d.pop("cache_dir")
        return d

    def digest(self) -> str:
        """Hash of everything that affects results (not where they are written)."""
        d = self.data_dict()
        d.pop("out_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def load_config(path, **overrides) -> PipelineConfig:
    """Read a JSON pipeline config; relative paths resolve against its folder."""
    path = Path(path)
    raw = json.loads(path.read_text())
    base = path.parent

    def rel(p):
        if p is None:
            return None
        p = Path(p)
        return str(p if p.is_absolute() else base / p)

    subjects = [
        SubjectEntry(
            name=s["name"], mesh=rel(s["mesh"]), param=rel(s["param"]),
            rescan_mesh=rel(s.get("rescan_mesh")), rescan_param=rel(s.get("rescan_param")),
        )
        for s in raw.pop("subjects")
    ]
    if "out_dir" in raw:
        raw["out_dir"] = rel(raw["out_dir"])
    if raw.get("cache_dir"):
        raw["cache_dir"] = rel(raw["cache_dir"])
    raw.update({k: v for k, v in overrides.items() if v is not None})
    cfg = PipelineConfig(subjects=subjects, **raw)
    cfg.validate()
    return cfg


def _session_files(out: Path, name: str) -> dict:
    return {
        "dir": out / f"{name}_dir.csv",
        "kmax": out / f"{name}_kmax.csv",
        "kmin": out / f"{name}_kmin.csv",
        "sphere": out / f"{name}_sphere.csv",
        "ico": out / f"{name}_ico.csv",
        "ico_naive": out / f"{name}_ico_naive.csv",
    }


def _compare_files(out: Path, name: str) -> dict:
    return {
        "map_path": out / f"{name}_map.csv",
        "hist_path": out / f"{name}_hist.csv",
        "summary_path": out / f"{name}_summary.json",
    }


def _run_session(cfg: PipelineConfig, name: str, mesh: str, param: str) -> dict:
    out = Path(cfg.out_dir)
    files = _session_files(out, name)
    timings = {}
    t = time.perf_counter()
    stage_curvature(mesh, files["dir"], cfg.which, cfg.umbilic_gap, files["kmax"], files["kmin"])
    timings["curvature"] = time.perf_counter() - t
    t = time.perf_counter()
    stage_pushforward(mesh, param, files["dir"], files["sphere"])
    timings["pushforward"] = time.perf_counter() - t
    t = time.perf_counter()
    stage_resample(param, files["sphere"], files["ico"], cfg.level, cache_dir=cfg.cache_dir)
    stage_resample(param, files["dir"], files["ico_naive"], cfg.level, naive=True, cache_dir=cfg.cache_dir)
    timings["resample"] = time.perf_counter() - t
    return timings


def _run_subject(cfg: PipelineConfig, subj: SubjectEntry) -> dict:
    record = {"name": subj.name, "status": 0, "timings": {}}
    out = Path(cfg.out_dir)
    try:
        record["timings"]["scan"] = _run_session(cfg, f"{subj.name}_scan", subj.mesh, subj.param)
        if subj.rescan_mesh:
            record["timings"]["rescan"] = _run_session(
                cfg, f"{subj.name}_rescan", subj.rescan_mesh, subj.rescan_param
            )
            t = time.perf_counter()
            a, b = _session_files(out, f"{subj.name}_scan"), _session_files(out, f"{subj.name}_rescan")
            record["pushforward"] = stage_compare(
                a["ico"], b["ico"], cfg.mode, cfg.bin_width, **_compare_files(out, f"{subj.name}_pushforward")
            )
            record["naive"] = stage_compare(
                a["ico_naive"], b["ico_naive"], cfg.mode, cfg.bin_width, **_compare_files(out, f"{subj.name}_naive")
            )
            record["timings"]["compare"] = time.perf_counter() - t
    except Exception as exc:  # one subject failing must not stop the others
        logger.error("subject %s failed: %s", subj.name, exc)
        record["status"] = 1
        record["error"] = f"{type(exc).__name__}: {exc}"
        record["traceback"] = traceback.format_exc()
    return record


def run_pipeline(cfg: PipelineConfig) -> tuple[int, dict]:
    """Run every subject, then the group comparison on the subjects that succeeded.

    Returns the exit status and the run manifest (also written to
    ``out_dir/manifest.json``).
    """
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    cached_icosphere(cfg.level, cfg.cache_dir)
    if cfg.jobs > 1 and len(cfg.subjects) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(_run_subject, [cfg] * len(cfg.subjects), cfg.subjects))
    else:
        records = [_run_subject(cfg, s) for s in cfg.subjects]

    ok = [s for s, r in zip(cfg.subjects, records) if r["status"] == 0]
    group = None
    if len(ok) >= 2:
        t = time.perf_counter()
        group = {"subjects": [s.name for s in ok], "partial": len(ok) < len(cfg.subjects)}
        if group["partial"]:
            logger.warning("group stage runs on %d of %d subjects", len(ok), len(cfg.subjects))
        sessions = ["scan"] + (["rescan"] if all(s.rescan_mesh for s in ok) else [])
        for variant, key in (("pushforward", "ico"), ("naive", "ico_naive")):
            for session in sessions:
                paths = [_session_files(out, f"{s.name}_{session}")[key] for s in ok]
                stage_average(paths, out / f"group_{session}_{variant}_avg.csv", cfg.mode, cfg.level, cfg.cache_dir)
            if len(sessions) == 2:
                group[variant] = stage_compare(
                    out / f"group_scan_{variant}_avg.csv",
                    out / f"group_rescan_{variant}_avg.csv",
                    cfg.mode,
                    cfg.bin_width,
                    **_compare_files(out, f"group_{variant}"),
                )
        group["seconds"] = time.perf_counter() - t

    status = 0 if len(ok) == len(cfg.subjects) else 1
    manifest = {
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config_sha256": cfg.digest(),
        "config": cfg.data_dict(),
        "subjects": records,
        "group": group,
        "status": status,
        "seconds": time.perf_counter() - t0,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return status, manifest
