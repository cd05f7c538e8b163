"""Angular errors between tangent fields, group averages and histograms."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diffgeo import TangentVectorField, project_tangent
from .resample import IcosphereDomain, nearest_on_sphere, resample_field

MODES = ("vector", "axial")
GAP_TOL = 1e-9


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass(eq=False)
class AngularErrorMap:
    angles: np.ndarray  # degrees; masked entries are 0
    mode: str
    mask: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return self.angles[~self.mask]

    def summary(self) -> dict:
        return summarize(self.valid)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["vertex", "angle", "masked"])
            for i, (a, m) in enumerate(zip(self.angles.tolist(), self.mask.tolist())):
                w.writerow([i, format(a, ".17g"), int(m)])

    @classmethod
    def from_csv(cls, path, mode: str = "axial") -> "AngularErrorMap":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        angles = np.array([float(r[1]) for r in rows])
        mask = np.array([r[2] == "1" for r in rows], dtype=bool)
        return cls(angles, mode, mask)


def summarize(values: np.ndarray) -> dict:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return {"n": 0, "median": None, "mean": None, "p90": None}
    return {
        "n": int(v.size),
        "median": float(np.median(v)),
        "mean": float(np.mean(v)),
        "p90": float(np.percentile(v, 90)),
    }


def angular_error(A: TangentVectorField, B: TangentVectorField, mode: str = "axial") -> AngularErrorMap:
    """Per-vertex angle in degrees; zero or masked vectors are masked."""
    _check_mode(mode)
    if len(A) != len(B):
        raise ValueError(f"fields have {len(A)} and {len(B)} entries")
    na = np.linalg.norm(A.vectors, axis=1)
    nb = np.linalg.norm(B.vectors, axis=1)
    mask = A.mask | B.mask | (na == 0) | (nb == 0)
    safe_a = np.where(mask, 1.0, na)
    safe_b = np.where(mask, 1.0, nb)
    cos = np.einsum("ij,ij->i", A.vectors, B.vectors) / (safe_a * safe_b)
    if mode == "axial":
        cos = np.abs(cos)
    angles = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    angles[mask] = 0.0
    return AngularErrorMap(angles, mode, mask)


def naive_angular_error(
    X1: TangentVectorField,
    X2: TangentVectorField,
    points1: np.ndarray,
    points2: np.ndarray,
    domain: IcosphereDomain,
    mode: str = "axial",
) -> AngularErrorMap:
    """Angles between the raw surface vectors, matched through the spherical images.

    ``points1``/``points2`` are each subject's unit-sphere vertex images.
    No pushforward and no tangent-plane transport is applied.
    """
    r1 = resample_field(X1, points1, nearest_on_sphere(points1, domain), domain, transport=False)
    r2 = resample_field(X2, points2, nearest_on_sphere(points2, domain), domain, transport=False)
    return angular_error(r1, r2, mode)


def average_fields(fields, mode: str = "axial", normals: np.ndarray | None = None) -> TangentVectorField:
    """Per-vertex mean of fields sharing one domain.

    ``vector`` mode averages and re-projects.  ``axial`` mode normalizes
    the inputs and returns the unit leading eigenvector of the mean outer
    product; vertices whose two leading eigenvalues tie are masked.
    ``normals`` default to the unit position vectors (sphere domain).
    """
    _check_mode(mode)
    fields = list(fields)
    if not fields:
        raise ValueError("need at least one field")
    n = len(fields[0])
    if any(len(f) != n for f in fields):
        raise ValueError("fields live on different domains")
    V = np.stack([f.vectors for f in fields])  # (k, V, 3)
    M = np.stack([f.mask for f in fields]) | (np.linalg.norm(V, axis=2) == 0)
    used = (~M).sum(axis=0)
    if mode == "vector":
        W = np.where(M[..., None], 0.0, V)
        out = W.sum(axis=0) / np.maximum(used, 1)[:, None]
        if normals is not None:
            out = project_tangent(out, normals)
        mask = (used == 0) | (np.linalg.norm(out, axis=1) == 0)
        out[mask] = 0.0
        return TangentVectorField(out, mask)

    norms = np.linalg.norm(V, axis=2, keepdims=True)
    U = np.where(M[..., None], 0.0, V / np.where(norms == 0, 1.0, norms))
    T = np.einsum("kvi,kvj->vij", U, U) / np.maximum(used, 1)[:, None, None]
    w, vecs = np.linalg.eigh(T)
    lead = vecs[:, :, 2]
    if normals is not None:
        lead = project_tangent(lead, normals)
    ln = np.linalg.norm(lead, axis=1)
    mask = (used == 0) | (w[:, 2] - w[:, 1] < GAP_TOL) | (ln == 0)
    out = lead / np.where(ln == 0, 1.0, ln)[:, None]
    out[mask] = 0.0
    return TangentVectorField(out, mask)


@dataclass(eq=False)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    normalization: str = "count"
    summary: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_lo", "bin_hi", "count"])
            for lo, hi, c in zip(self.bin_edges[:-1].tolist(), self.bin_edges[1:].tolist(), self.counts.tolist()):
                w.writerow([format(lo, ".17g"), format(hi, ".17g"), format(c, ".17g") if isinstance(c, float) else c])

    def to_json(self) -> dict:
        return {
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
            "normalization": self.normalization,
            "summary": self.summary,
        }

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")


def histogram(amap: AngularErrorMap, bin_width: float = 1.0, normalization: str = "count") -> Histogram:
    """Histogram of unmasked angles over [0, 90] (axial) or [0, 180] (vector)."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if normalization not in ("count", "density"):
        raise ValueError("normalization must be 'count' or 'density'")
    top = 90.0 if amap.mode == "axial" else 180.0
    nbins = int(np.ceil(top / bin_width - 1e-9))
    edges = np.arange(nbins + 1) * float(bin_width)
    vals = amap.valid
    counts, _ = np.histogram(vals, bins=edges)
    if normalization == "density":
        counts = counts / max(vals.size, 1) / bin_width
    return Histogram(edges, counts, normalization, summarize(vals))
