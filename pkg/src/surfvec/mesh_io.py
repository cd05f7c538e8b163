"""Triangle meshes, spherical parameterizations and per-vertex data on disk.

Readers cover OFF, ASCII PLY, OBJ and the FreeSurfer binary triangle
surface format; per-vertex fields go to CSV, JSON or FreeSurfer ``curv``
files.  Every loaded object is immutable.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import struct
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

FS_TRIANGLE_MAGIC = b"\xff\xff\xfe"
FS_CURV_MAGIC = b"\xff\xff\xff"

MESH_FORMATS = ("off", "ply_ascii", "obj", "freesurfer_binary")
PARAM_FORMATS = ("csv_theta_phi", "freesurfer_sphere_surface")
FIELD_FORMATS = ("csv", "freesurfer_curv", "json")

# relative to the squared mean edge length
DEGENERATE_AREA_TOL = 1e-12
POLE_SIN_TOL = 1e-12


class MeshError(ValueError):
    """Base class for malformed mesh or per-vertex data."""


class ParseError(MeshError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class IndexRangeError(MeshError):
    pass


class DegenerateFaceError(MeshError):
    def __init__(self, faces):
        self.faces = [int(f) for f in faces]
        shown = ", ".join(str(f) for f in self.faces[:20])
        more = "" if len(self.faces) <= 20 else f" (+{len(self.faces) - 20} more)"
        super().__init__(f"degenerate faces: {shown}{more}")


class UnsupportedFormatError(MeshError):
    pass


class LengthMismatchError(MeshError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Vertex positions plus counter-clockwise triangle connectivity.

    Construction checks that face indices are in range and that no face is
    degenerate.  Topological checks (closedness, orientation) live in
    :func:`validate_spherical_topology`.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64)
        f = np.array(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must have shape (V, 3), got {v.shape}")
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must have shape (F, 3), got {f.shape}")
        if not np.all(np.isfinite(v)):
            raise MeshError("non-finite vertex coordinates")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            bad = np.flatnonzero((f < 0).any(axis=1) | (f >= len(v)).any(axis=1))
            raise IndexRangeError(
                f"face {int(bad[0])} references vertex {f[bad[0]].tolist()} "
                f"but the mesh has {len(v)} vertices"
            )
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "faces", _frozen(f))
        if len(f):
            area = self.face_areas
            tol = DEGENERATE_AREA_TOL * self.mean_edge_length**2
            bad = np.flatnonzero(area <= tol)
            if bad.size:
                raise DegenerateFaceError(bad)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def corners(self) -> np.ndarray:
        """Face corner positions, shape (F, 3, 3)."""
        return self.vertices[self.faces]

    @cached_property
    def face_cross(self) -> np.ndarray:
        """Unnormalized face normals (twice the area vector)."""
        p = self.corners
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @cached_property
    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_cross, axis=1)

    @cached_property
    def face_normals(self) -> np.ndarray:
        return self.face_cross / (2.0 * self.face_areas[:, None])

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted vertex pairs, shape (E, 2)."""
        f = self.faces
        e = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
        keys = np.unique(e[:, 0] * self.n_vertices + e[:, 1])
        return np.column_stack([keys // self.n_vertices, keys % self.n_vertices])

    @cached_property
    def mean_edge_length(self) -> float:
        e = self.edges
        return float(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1).mean())

    def with_vertices(self, vertices) -> "TriangleMesh":
        return TriangleMesh(vertices, self.faces)


@dataclass(frozen=True, eq=False)
class SphericalParam:
    """Per-vertex colatitude ``theta`` in [0, pi] and azimuth ``phi`` in (-pi, pi]."""

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64).ravel()
        phi = np.array(self.phi, dtype=np.float64).ravel()
        if theta.shape != phi.shape:
            raise LengthMismatchError(f"theta has {theta.size} entries, phi has {phi.size}")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(phi))):
            raise MeshError("non-finite spherical coordinates")
        if theta.size and (theta.min() < 0 or theta.max() > np.pi):
            raise MeshError("theta outside [0, pi]")
        # fold -pi onto pi so the range is half-open
        phi = np.where(phi <= -np.pi, phi + 2 * np.pi, phi)
        if phi.size and (phi.min() <= -np.pi or phi.max() > np.pi):
            raise MeshError("phi outside (-pi, pi]")
        object.__setattr__(self, "theta", _frozen(theta))
        object.__setattr__(self, "phi", _frozen(phi))

    def __len__(self):
        return self.theta.size

    @classmethod
    def from_points(cls, points) -> "SphericalParam":
        """Spherical coordinates of the directions of ``points`` (normalized first)."""
        p = np.asarray(points, dtype=np.float64)
        p = p / np.linalg.norm(p, axis=1, keepdims=True)
        z = np.clip(p[:, 2], -1.0, 1.0)
        theta = np.arccos(z)
        phi = np.arctan2(p[:, 1], p[:, 0])
        phi = np.where(np.hypot(p[:, 0], p[:, 1]) < POLE_SIN_TOL, 0.0, phi)
        return cls(theta, phi)

    def to_points(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.column_stack([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    def flipped_faces(self, mesh: TriangleMesh) -> np.ndarray:
        """Indices of faces whose spherical image has negative orientation."""
        u = self.to_points()[mesh.faces]
        vol = np.einsum("ij,ij->i", u[:, 0], np.cross(u[:, 1], u[:, 2]))
        return np.flatnonzero(vol < 0)


@dataclass(frozen=True)
class TopologyReport:
    euler_characteristic: int
    manifold: bool
    oriented: bool
    n_vertices: int
    n_edges: int
    n_faces: int
    boundary_edges: int = 0
    nonmanifold_edges: int = 0
    nonmanifold_vertices: list[int] = field(default_factory=list)

    @property
    def spherical(self) -> bool:
        return self.manifold and self.oriented and self.euler_characteristic == 2


def validate_spherical_topology(mesh: TriangleMesh) -> TopologyReport:
    """Euler characteristic, closed-manifold and orientation checks.

    ``manifold`` uses the closed-mesh rule: every edge must have exactly two
    incident faces and every vertex link must be a single fan.
    """
    f = mesh.faces
    nv, nf = mesh.n_vertices, mesh.n_faces
    half = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    und = np.sort(half, axis=1)
    _, inverse, counts = np.unique(und[:, 0] * nv + und[:, 1], return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    ne = len(counts)
    boundary = int(np.sum(counts == 1))
    over = int(np.sum(counts > 2))

    # oriented: no directed half-edge repeats, and two-face edges are traversed both ways
    _, half_counts = np.unique(half[:, 0] * nv + half[:, 1], return_counts=True)
    forward = (half[:, 0] < half[:, 1]).astype(np.int64)
    fwd_per_edge = np.bincount(inverse, weights=forward, minlength=ne)
    two = counts == 2
    oriented = bool(np.all(half_counts == 1) and np.all(fwd_per_edge[two] == 1))

    if over == 0 and boundary == 0 and oriented:
        bad_vertices = np.flatnonzero(_fan_count_oriented(f, nv) > 1).tolist()
    else:
        bad_vertices = _nonmanifold_vertices(f, nv)
    used = np.zeros(nv, dtype=bool)
    used[f.ravel()] = True
    manifold = boundary == 0 and over == 0 and not bad_vertices and bool(used.all())
    return TopologyReport(
        euler_characteristic=int(nv - ne + nf),
        manifold=manifold,
        oriented=oriented,
        n_vertices=nv,
        n_edges=ne,
        n_faces=nf,
        boundary_edges=boundary,
        nonmanifold_edges=over,
        nonmanifold_vertices=bad_vertices,
    )


def _nonmanifold_vertices(faces: np.ndarray, nv: int) -> list[int]:
    # a vertex is manifold iff its incident faces form one edge-connected fan
    order = np.argsort(faces.ravel(), kind="stable")
    vert_of_corner = faces.ravel()[order]
    face_of_corner = order // 3
    starts = np.searchsorted(vert_of_corner, np.arange(nv + 1))
    bad = []
    for v in range(nv):
        inc = face_of_corner[starts[v]:starts[v + 1]]
        if len(inc) <= 1:
            continue
        parent: dict[int, int] = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ends = []
        for fi in inc:
            a, b = [int(x) for x in faces[fi] if x != v]
            parent[find(a)] = find(b)
            ends += [a, b]
        if len({find(x) for x in ends}) > 1:
            bad.append(v)
    return bad


def _fan_count_oriented(faces: np.ndarray, nv: int) -> np.ndarray:
    """Fans per vertex of a closed, oriented, edge-manifold mesh.

    Corners around a vertex are linked through twin half-edges; the number
    of cycles of that permutation restricted to a vertex is its fan count.
    """
    nf = len(faces)
    nxt = np.roll(faces, -1, axis=1)
    prv = np.roll(faces, 1, axis=1)
    # half-edge (a -> b) keyed by a * nv + b, owned by corner of a
    key_out = (faces * nv + nxt).ravel()
    sorter = np.argsort(key_out)
    # twin of the incoming half-edge (prev -> v) is (v -> prev), owned by v's corner in the neighbor
    key_twin = (faces * nv + prv).ravel()
    pos = np.searchsorted(key_out, key_twin, sorter=sorter)
    sigma = sorter[pos]
    label = np.arange(3 * nf)
    while True:
        new = np.minimum(label, label[sigma])
        if np.array_equal(new, label):
            break
        label = new
    vert = faces.ravel()
    uniq = np.unique(np.column_stack([vert, label]), axis=0)
    return np.bincount(uniq[:, 0], minlength=nv)


# --------------------------------------------------------------------------
# readers

class _TextTokens:
    """Whitespace tokens of a text mesh file, with byte offsets for errors."""

    def __init__(self, data: bytes, comment: bytes = b"#"):
        self.lines = []
        offset = 0
        for raw in data.splitlines(keepends=True):
            line = raw.split(comment, 1)[0].strip()
            if line:
                self.lines.append((offset, line.decode("ascii", errors="replace")))
            offset += len(raw)
        self.pos = 0
        self.end_offset = offset

    def next_line(self, what: str) -> tuple[int, list[str]]:
        if self.pos >= len(self.lines):
            raise ParseError(f"unexpected end of file while reading {what}", self.end_offset)
        off, line = self.lines[self.pos]
        self.pos += 1
        return off, line.split()


def _ints(tokens, offset, what):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"expected integers for {what}, got {' '.join(tokens)!r}", offset) from None


def _floats(tokens, offset, what):
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ParseError(f"expected numbers for {what}, got {' '.join(tokens)!r}", offset) from None


def _read_off(data: bytes) -> TriangleMesh:
    tok = _TextTokens(data)
    off, head = tok.next_line("header")
    if not head or not head[0].endswith("OFF"):
        raise ParseError("missing OFF header", off)
    counts = head[1:]
    if not counts:
        off, counts = tok.next_line("counts")
    nv, nf = _ints(counts[:2], off, "counts")
    verts = []
    for i in range(nv):
        off, t = tok.next_line(f"vertex {i}")
        xyz = _floats(t[:3], off, f"vertex {i}")
        if len(xyz) != 3:
            raise ParseError(f"vertex {i} has {len(xyz)} coordinates", off)
        verts.append(xyz)
    faces = []
    for i in range(nf):
        off, t = tok.next_line(f"face {i}")
        vals = _ints(t, off, f"face {i}")
        if not vals or vals[0] != 3 or len(vals) < 4:
            raise ParseError(f"face {i} is not a triangle", off)
        faces.append(vals[1:4])
    return TriangleMesh(np.array(verts).reshape(-1, 3), np.array(faces).reshape(-1, 3))


def _read_obj(data: bytes) -> TriangleMesh:
    tok = _TextTokens(data)
    verts, faces = [], []
    for off, line in tok.lines:
        t = line.split()
        if t[0] == "v":
            verts.append(_floats(t[1:4], off, "vertex"))
        elif t[0] == "f":
            idx = _ints([s.split("/")[0] for s in t[1:]], off, "face")
            if len(idx) != 3:
                raise ParseError("only triangular faces are supported", off)
            n = len(verts)
            faces.append([i - 1 if i > 0 else n + i for i in idx])
    return TriangleMesh(np.array(verts).reshape(-1, 3), np.array(faces).reshape(-1, 3))


def _read_ply_ascii(data: bytes) -> TriangleMesh:
    tok = _TextTokens(data, comment=b"\x00")
    off, t = tok.next_line("magic")
    if t != ["ply"]:
        raise ParseError("missing ply magic", off)
    elements = []  # (name, count, [property names], list-property flag)
    while True:
        off, t = tok.next_line("header")
        if t[0] == "format":
            if t[1] != "ascii":
                raise UnsupportedFormatError(f"PLY format {t[1]!r} is not supported (ascii only)")
        elif t[0] == "element":
            elements.append([t[1], _ints(t[2:3], off, "element count")[0], []])
        elif t[0] == "property":
            if not elements:
                raise ParseError("property before element", off)
            elements[-1][2].append(t[-1] if t[1] != "list" else ("list", t[-1]))
        elif t[0] in ("comment", "obj_info"):
            continue
        elif t[0] == "end_header":
            break
    verts = faces = None
    for name, count, props in elements:
        rows = []
        for i in range(count):
            off, t = tok.next_line(f"{name} {i}")
            rows.append((off, t))
        if name == "vertex":
            try:
                ix = [props.index(k) for k in ("x", "y", "z")]
            except ValueError:
                raise ParseError("vertex element lacks x/y/z properties") from None
            verts = [[_floats([t[j]], off, "vertex")[0] for j in ix] for off, t in rows]
        elif name == "face":
            faces = []
            for off, t in rows:
                vals = _ints(t, off, "face")
                if vals[0] != 3:
                    raise ParseError("only triangular faces are supported", off)
                faces.append(vals[1:4])
    if verts is None or faces is None:
        raise ParseError("PLY file needs vertex and face elements")
    return TriangleMesh(np.array(verts).reshape(-1, 3), np.array(faces).reshape(-1, 3))


def _read_exact(data: bytes, offset: int, nbytes: int, what: str) -> bytes:
    if offset + nbytes > len(data):
        raise ParseError(
            f"truncated file: {what} needs {nbytes} bytes, {len(data) - offset} left", offset
        )
    return data[offset:offset + nbytes]


def _read_freesurfer_triangles(data: bytes) -> tuple[np.ndarray, np.ndarray]:
    if data[:3] != FS_TRIANGLE_MAGIC:
        raise ParseError("missing FreeSurfer triangle magic 0xFFFFFE", 0)
    pos = 3
    for k in range(2):
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise ParseError(f"unterminated comment line {k + 1}", pos)
        pos = nl + 1
    nv, nf = struct.unpack(">ii", _read_exact(data, pos, 8, "vertex/face counts"))
    pos += 8
    if nv < 0 or nf < 0:
        raise ParseError(f"negative counts ({nv}, {nf})", pos - 8)
    v = np.frombuffer(_read_exact(data, pos, 12 * nv, "vertex block"), dtype=">f4")
    pos += 12 * nv
    f = np.frombuffer(_read_exact(data, pos, 12 * nf, "face block"), dtype=">i4")
    return v.reshape(nv, 3).astype(np.float64), f.reshape(nf, 3).astype(np.int64)


def _read_freesurfer(data: bytes) -> TriangleMesh:
    v, f = _read_freesurfer_triangles(data)
    return TriangleMesh(v, f)


_READERS = {
    "off": _read_off,
    "obj": _read_obj,
    "ply_ascii": _read_ply_ascii,
    "freesurfer_binary": _read_freesurfer,
}


def detect_mesh_format(path, data: bytes | None = None) -> str:
    ext = Path(path).suffix.lower()
    if ext in (".off", ".obj"):
        return ext[1:]
    if ext == ".ply":
        return "ply_ascii"
    if data is None:
        with open(path, "rb") as fh:
            data = fh.read(3)
    if data[:3] == FS_TRIANGLE_MAGIC:
        return "freesurfer_binary"
    if data[:3] == b"OFF" or data[:4] == b"COFF":
        return "off"
    if data[:3] == b"ply":
        return "ply_ascii"
    raise UnsupportedFormatError(f"cannot detect mesh format of {path}")


def load_mesh(path, format: str | None = None) -> TriangleMesh:
    """Read a triangle mesh.

    Parameters
    ----------
    path : path-like
    format : {'off', 'ply_ascii', 'obj', 'freesurfer_binary'}, optional
        Detected from extension or magic bytes when omitted.
    """
    data = Path(path).read_bytes()
    fmt = format or detect_mesh_format(path, data)
    if fmt not in _READERS:
        raise UnsupportedFormatError(f"unsupported mesh format {fmt!r}")
    return _READERS[fmt](data)


def save_mesh(mesh: TriangleMesh, path) -> None:
    """Write an OFF file with coordinates at full double precision."""
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} 0"]
    lines += [" ".join(repr(float(x)) for x in row) for row in mesh.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


# --------------------------------------------------------------------------
# spherical parameterizations

def load_param(path, format: str | None = None, n_vertices: int | None = None) -> SphericalParam:
    """Read a spherical parameterization.

    ``csv_theta_phi`` files carry a header ``index,theta,phi``.  A
    ``freesurfer_sphere_surface`` is normalized to unit radius first; a
    radius spread above 1% triggers a warning.
    """
    fmt = format or ("csv_theta_phi" if Path(path).suffix.lower() == ".csv" else "freesurfer_sphere_surface")
    if fmt == "csv_theta_phi":
        rows = _read_csv_rows(path)
        if rows and len(rows[0]) != 3:
            raise ParseError(f"{path}: expected columns index,theta,phi")
        values = np.array([[float(x) for x in r[1:]] for r in rows]).reshape(-1, 2)
        param = SphericalParam(values[:, 0], values[:, 1])
    elif fmt == "freesurfer_sphere_surface":
        v, _ = _read_freesurfer_triangles(Path(path).read_bytes())
        r = np.linalg.norm(v, axis=1)
        if np.any(r == 0) or not np.all(np.isfinite(r)):
            raise MeshError("sphere surface has a vertex at the origin")
        spread = (r.max() - r.min()) / np.median(r)
        if spread > 0.01:
            warnings.warn(f"sphere surface radius varies by {spread:.1%}; normalizing", stacklevel=2)
        param = SphericalParam.from_points(v)
    else:
        raise UnsupportedFormatError(f"unsupported parameterization format {fmt!r}")
    if n_vertices is not None and len(param) != n_vertices:
        raise LengthMismatchError(f"parameterization has {len(param)} entries, mesh has {n_vertices} vertices")
    return param


def save_param(param: SphericalParam, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "theta", "phi"])
        for i, (t, p) in enumerate(zip(param.theta.tolist(), param.phi.tolist())):
            w.writerow([i, _fmt(t), _fmt(p)])


# --------------------------------------------------------------------------
# per-vertex fields

def _fmt(x: float) -> str:
    return format(x, ".17g")


def _read_csv_rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0][0].strip() not in ("index", "vertex"):
        raise ParseError(f"{path}: missing header row")
    return rows[1:]


def save_field(values, path, format: str | None = None) -> None:
    """Write a per-vertex scalar (V,) or vector (V, 3) field.

    CSV and JSON keep 17 significant digits so doubles round-trip exactly;
    ``freesurfer_curv`` stores big-endian float32 scalars.
    """
    a = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise MeshError("field has non-finite entries")
    fmt = format or _field_format_from_path(path)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if a.ndim == 1:
                w.writerow(["index", "value"])
                for i, x in enumerate(a.tolist()):
                    w.writerow([i, _fmt(x)])
            else:
                w.writerow(["index", "x", "y", "z"])
                for i, row in enumerate(a.tolist()):
                    w.writerow([i] + [_fmt(x) for x in row])
    elif fmt == "json":
        # json.dumps uses repr for floats, which round-trips
        Path(path).write_text(json.dumps(a.tolist()) + "\n", encoding="ascii")
    elif fmt == "freesurfer_curv":
        if a.ndim != 1:
            raise UnsupportedFormatError("freesurfer_curv holds scalar fields only")
        with open(path, "wb") as fh:
            fh.write(FS_CURV_MAGIC)
            fh.write(struct.pack(">iii", a.size, 0, 1))
            fh.write(a.astype(">f4").tobytes())
    else:
        raise UnsupportedFormatError(f"unsupported field format {fmt!r}")


def load_field(path, format: str | None = None, n_vertices: int | None = None) -> np.ndarray:
    fmt = format or _field_format_from_path(path)
    if fmt == "csv":
        rows = _read_csv_rows(path)
        try:
            a = np.array([[float(x) for x in r[1:]] for r in rows], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}") from None
        if a.size == 0:
            a = a.reshape(0)
        elif a.shape[1] == 1:
            a = a[:, 0]
        elif a.shape[1] != 3:
            raise ParseError(f"{path}: expected 1 or 3 value columns")
    elif fmt == "json":
        a = np.array(json.loads(Path(path).read_text()), dtype=np.float64)
    elif fmt == "freesurfer_curv":
        data = Path(path).read_bytes()
        if data[:3] != FS_CURV_MAGIC:
            raise ParseError("missing FreeSurfer curv magic 0xFFFFFF", 0)
        nv, _, per = struct.unpack(">iii", _read_exact(data, 3, 12, "curv header"))
        if per != 1 or nv < 0:
            raise ParseError(f"unsupported curv layout (V={nv}, values per vertex={per})", 3)
        a = np.frombuffer(_read_exact(data, 15, 4 * nv, "curv values"), dtype=">f4").astype(np.float64)
    else:
        raise UnsupportedFormatError(f"unsupported field format {fmt!r}")
    if not np.all(np.isfinite(a)):
        raise MeshError(f"{path}: non-finite field values")
    if n_vertices is not None and len(a) != n_vertices:
        raise LengthMismatchError(f"{path}: field has {len(a)} entries, expected {n_vertices}")
    return a


def _field_format_from_path(path) -> str:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".csv":
        return "csv"
    if ext == ".json":
        return "json"
    return "freesurfer_curv"
