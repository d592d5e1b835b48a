"""CSV persistence for profiles, spectra, trajectories and mode series.

Tables are comma-separated with an exact header row, LF line endings and
UTF-8 text. Reals are written with 17 significant digits, which round-trips
every double exactly. Each table may carry a ``<name>.meta`` sidecar in the
same flat ``key=value`` format as the CLI configuration; the sidecar holds
what is needed to rebuild the mesh on load. Every file is written to a
temporary sibling and renamed into place, so an interrupted run never leaves
a partial artifact at the target path.
"""
from __future__ import annotations

import csv
import io as _io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Annulus, Field, Interval, RadialBall, Rectangle, build_mesh, validate_params
from .errors import SchemaMismatch, ValidationError
from .merlezaag import ModeSeries

PROFILE_COLUMNS = ("V", "dist")
SPECTRUM_COLUMNS = ("index", "lambda", "class")
TRAJECTORY_COLUMNS = ("t", "norm_p1", "norm_inf", "energy")
MODESERIES_COLUMNS = ("s", "X", "Y", "Z")
CENTER_RTOL = 1e-12


def fmt(x):
    """17 significant digits: lossless for doubles."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# key=value text
# ---------------------------------------------------------------------------

def parse_kv(text, source="<string>"):
    """Parse flat ``key=value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{num}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or any(c.isspace() for c in key):
            raise ValidationError(f"{source}:{num}: malformed key {key!r}")
        if key in out:
            raise ValidationError(f"{source}:{num}: duplicate key {key!r}")
        out[key] = value
    return out


def format_kv(pairs):
    return "".join(f"{k}={v}\n" for k, v in pairs.items())


def read_kv(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    return parse_kv(text, str(path))


# ---------------------------------------------------------------------------
# atomic files and raw tables
# ---------------------------------------------------------------------------

def _umask():
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write_text(path, text):
    """Write ``text`` to a temporary sibling, then rename it onto ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def meta_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta")


def table_text(header, columns):
    """CSV text for equal-length columns; float columns are formatted with :func:`fmt`."""
    n = {len(c) for c in columns}
    if len(n) > 1 or len(header) != len(columns):
        raise SchemaMismatch("columns must be rectangular and match the header")
    buf = _io.StringIO()
    buf.write(",".join(header) + "\n")
    cells = []
    for col in columns:
        col = np.asarray(col)
        if col.dtype.kind in "iu":
            cells.append([str(int(v)) for v in col])
        elif col.dtype.kind in "US":
            cells.append([str(v) for v in col])
        else:
            cells.append([fmt(v) for v in col])
    for row in zip(*cells):
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_table(path, header, columns, meta=None):
    """Atomically write a CSV table and, if given, its ``.meta`` sidecar."""
    text = table_text(header, columns)
    if meta is not None:
        atomic_write_text(meta_path(path), format_kv(meta))
    return atomic_write_text(path, text)


def read_table(path, expected=None):
    """Read a CSV table as ``(header, rows)`` with rows as lists of strings.

    ``expected`` is a header tuple or a predicate on the header.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise SchemaMismatch(f"{path} is empty")
    header, body = tuple(rows[0]), rows[1:]
    if expected is not None:
        ok = expected(header) if callable(expected) else header == tuple(expected)
        if not ok:
            raise SchemaMismatch(f"{path}: unexpected header {','.join(header)}")
    for i, row in enumerate(body, 2):
        if len(row) != len(header):
            raise SchemaMismatch(f"{path}:{i}: {len(row)} fields, header has {len(header)}")
    return header, body


def _floats(body, j, path):
    try:
        return np.array([float(r[j]) for r in body])
    except ValueError as exc:
        raise SchemaMismatch(f"{path}: non-numeric entry in column {j}") from exc


def read_meta(path):
    mp = meta_path(path)
    return read_kv(mp) if mp.exists() else {}


# ---------------------------------------------------------------------------
# domains and meshes in key=value form
# ---------------------------------------------------------------------------

def domain_to_kv(spec, prefix="domain"):
    if isinstance(spec, Interval):
        items = {"kind": "interval", "a": spec.a, "b": spec.b}
    elif isinstance(spec, RadialBall):
        items = {"kind": "ball", "R": spec.R, "n": spec.n}
    elif isinstance(spec, Rectangle):
        items = {"kind": "rectangle", "Lx": spec.Lx, "Ly": spec.Ly}
    elif isinstance(spec, Annulus):
        items = {"kind": "annulus", "r0": spec.r0, "r1": spec.r1}
    else:
        raise ValidationError(f"unknown domain {spec!r}")
    return {f"{prefix}.{k}": (fmt(v) if isinstance(v, float) else str(v)) for k, v in items.items()}


_DOMAINS = {
    "interval": (Interval, {"a": float, "b": float}),
    "ball": (RadialBall, {"R": float, "n": int}),
    "rectangle": (Rectangle, {"Lx": float, "Ly": float}),
    "annulus": (Annulus, {"r0": float, "r1": float}),
}


def domain_from_kv(pairs, prefix="domain"):
    kind = pairs.get(f"{prefix}.kind", "interval")
    if kind not in _DOMAINS:
        raise ValidationError(f"{prefix}.kind must be one of {sorted(_DOMAINS)}, got {kind!r}")
    cls, fields = _DOMAINS[kind]
    kwargs = {}
    for name, conv in fields.items():
        key = f"{prefix}.{name}"
        if key in pairs:
            try:
                kwargs[name] = conv(pairs[key])
            except ValueError as exc:
                raise ValidationError(f"{key}: cannot parse {pairs[key]!r}") from exc
    return cls(**kwargs)


def mesh_to_kv(mesh):
    out = domain_to_kv(mesh.domain)
    out["mesh.resolution"] = str(mesh.shape[0])
    if isinstance(mesh.domain, Annulus):
        out["mesh.angular"] = str(mesh.shape[1])
    return out


def mesh_from_kv(pairs):
    try:
        res = int(pairs["mesh.resolution"])
        angular = int(pairs["mesh.angular"]) if "mesh.angular" in pairs else None
    except (KeyError, ValueError) as exc:
        raise SchemaMismatch(f"metadata lacks a valid mesh description: {exc}") from exc
    return build_mesh(domain_from_kv(pairs), res, angular=angular)


def params_to_kv(params):
    return {"params.m": fmt(params.m), "params.n": str(params.n)}


def params_from_kv(pairs):
    try:
        return validate_params(float(pairs["params.m"]), int(pairs["params.n"]))
    except (KeyError, ValueError) as exc:
        raise SchemaMismatch(f"metadata lacks valid params: {exc}") from exc


def _coord_header(mesh):
    return ("x",) if mesh.dim == 1 else ("x", "y")


def _coord_columns(mesh):
    return [mesh.centers[:, j] for j in range(mesh.dim)]


def _check_centers(mesh, body, path):
    for j in range(mesh.dim):
        c = _floats(body, j, path)
        if c.size != mesh.ncells or not np.allclose(c, mesh.centers[:, j], rtol=CENTER_RTOL, atol=CENTER_RTOL):
            raise SchemaMismatch(f"{path}: cell centres do not match the mesh in the metadata")


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProfileRecord:
    V: Field
    params: object
    meta: dict


def persist_profile(profile, path, params=None):
    """Write ``x[,y],V,dist`` plus a sidecar holding domain, mesh and params."""
    V = getattr(profile, "V", profile)
    params = getattr(profile, "params", params)
    if params is None:
        raise ValidationError("params are required to persist a bare field")
    mesh = V.mesh
    meta = {"kind": "profile", **mesh_to_kv(mesh), **params_to_kv(params)}
    if hasattr(profile, "residual_norm"):
        meta["profile.method"] = profile.method
        meta["profile.residual_norm"] = fmt(profile.residual_norm)
    header = _coord_header(mesh) + PROFILE_COLUMNS
    return write_table(path, header, _coord_columns(mesh) + [V.values, mesh.dist], meta)


def load_profile(path):
    meta = read_meta(path)
    if meta.get("kind") != "profile":
        raise SchemaMismatch(f"{path}: missing or wrong profile metadata")
    mesh = mesh_from_kv(meta)
    header, body = read_table(path, _coord_header(mesh) + PROFILE_COLUMNS)
    _check_centers(mesh, body, path)
    V = Field(mesh, _floats(body, mesh.dim, path))
    return ProfileRecord(V, params_from_kv(meta), meta)


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectrumRecord:
    index: np.ndarray
    eigenvalues: np.ndarray
    classes: np.ndarray
    eigenfields: np.ndarray | None
    meta: dict


def persist_spectrum(dec, directory, fields=True):
    """``spectrum.csv`` (index,lambda,class) plus ``eigen_<i>.csv`` per mode."""
    directory = Path(directory)
    mesh = dec.mesh
    k = dec.eigenvalues.size
    meta = {"kind": "spectrum", **mesh_to_kv(mesh), **params_to_kv(dec.params),
            "spectrum.zero_tol": fmt(dec.zero_tol), "spectrum.I": str(dec.I), "spectrum.K": str(dec.K)}
    if fields:
        for i in range(k):
            write_table(directory / f"eigen_{i}.csv", _coord_header(mesh) + ("phi",),
                        _coord_columns(mesh) + [dec.eigenfields[:, i]])
    return write_table(directory / "spectrum.csv", SPECTRUM_COLUMNS,
                       [np.arange(k), dec.eigenvalues, dec.classes()], meta)


def load_spectrum(directory, fields=True):
    directory = Path(directory)
    path = directory / "spectrum.csv"
    _, body = read_table(path, SPECTRUM_COLUMNS)
    meta = read_meta(path)
    try:
        index = np.array([int(r[0]) for r in body])
    except ValueError as exc:
        raise SchemaMismatch(f"{path}: non-integer index") from exc
    lam = _floats(body, 1, path)
    cls = np.array([r[2] for r in body])
    if not set(cls) <= {"u", "c", "s"}:
        raise SchemaMismatch(f"{path}: class must be one of u, c, s")
    phis = None
    if fields and index.size:
        cols = []
        for i in index:
            f = directory / f"eigen_{i}.csv"
            header, fb = read_table(f, lambda h: h[-1] == "phi" and h[:-1] in (("x",), ("x", "y")))
            cols.append(_floats(fb, len(header) - 1, f))
        if len({c.size for c in cols}) != 1:
            raise SchemaMismatch("eigenfield files have different lengths")
        phis = np.column_stack(cols)
    return SpectrumRecord(index, lam, cls, phis, meta)


# ---------------------------------------------------------------------------
# trajectory
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    t: np.ndarray
    norm_p1: np.ndarray
    norm_inf: np.ndarray
    energy: np.ndarray
    projections: np.ndarray | None = None    # one column y_j per mode
    meta: dict | None = None


def trajectory_record(traj):
    return TrajectoryRecord(traj.times, traj.norm_series, traj.sup_series, traj.energy_series,
                            traj.projections, {"kind": "trajectory", "trajectory.kind": traj.kind,
                                               "trajectory.stopped_early": str(bool(traj.stopped_early))})


def persist_trajectory(traj, path, meta=None):
    """``t,norm_p1,norm_inf,energy[,y_0..y_J]``; accepts a Trajectory or a TrajectoryRecord."""
    rec = traj if isinstance(traj, TrajectoryRecord) else trajectory_record(traj)
    cols = [rec.t, rec.norm_p1, rec.norm_inf, rec.energy]
    header = TRAJECTORY_COLUMNS
    if rec.projections is not None:
        P = np.asarray(rec.projections)
        header = header + tuple(f"y_{j}" for j in range(P.shape[1]))
        cols += [P[:, j] for j in range(P.shape[1])]
    full_meta = dict(rec.meta or {"kind": "trajectory"})
    full_meta.update(meta or {})
    return write_table(path, header, cols, full_meta)


def _is_trajectory_header(h):
    if h[:4] != TRAJECTORY_COLUMNS:
        return False
    return all(name == f"y_{j}" for j, name in enumerate(h[4:]))


def load_trajectory(path):
    header, body = read_table(path, _is_trajectory_header)
    cols = [_floats(body, j, path) for j in range(len(header))]
    proj = np.column_stack(cols[4:]) if len(header) > 4 else None
    return TrajectoryRecord(*cols[:4], projections=proj, meta=read_meta(path))


# ---------------------------------------------------------------------------
# mode series
# ---------------------------------------------------------------------------

def persist_modeseries(series, path, meta=None):
    return write_table(path, MODESERIES_COLUMNS, [series.s, series.X, series.Y, series.Z],
                       {"kind": "modeseries", **(meta or {})})


def load_modeseries(path):
    _, body = read_table(path, MODESERIES_COLUMNS)
    return ModeSeries(*(_floats(body, j, path) for j in range(4)))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def verdict_record(verdict):
    """One-line machine-readable record of a DichotomyVerdict."""
    parts = [f"tag={verdict.tag}"]
    for name in ("rate", "exponent", "t_value_min"):
        v = getattr(verdict, name)
        if v is not None:
            parts.append(f"{name}={fmt(v)}")
    if verdict.window is not None:
        lo, hi = verdict.window
        parts.append(f"window={fmt(lo)}:{fmt(hi)}")
    parts.append(f"truncated={str(bool(verdict.truncated)).lower()}")
    return " ".join(parts)


def write_report(path, row):
    """Single-row CSV report; values formatted as reals when numeric."""
    header = tuple(row)
    cols = []
    for v in row.values():
        if isinstance(v, (bool, np.bool_, str)) or v is None:
            cols.append(np.array([str(v)]))
        elif isinstance(v, (int, np.integer)):
            cols.append(np.array([int(v)]))
        else:
            cols.append(np.array([float(v)]))
    return write_table(path, header, cols)
