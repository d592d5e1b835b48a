"""Parameters, meshes, fields and the finite-volume building blocks.

Everything here is cell-centred finite volume on uniform grids. A mesh stores
its interior faces as cell pairs together with the transmissibility
``area / centre distance``; boundary faces store the adjacent cell and the
transmissibility to the face itself (half a cell away). Operators are built
from these two lists only, so the four domain kinds share one code path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    MeshMismatch,
    NegativeWeight,
    NonPositive,
    NotFastDiffusion,
    ResolutionTooCoarse,
    SubcriticalityViolated,
    UnsupportedDimension,
    ValidationError,
)

MIN_RESOLUTION = 8


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MediumParams:
    """Diffusion exponent ``m``, its reciprocal ``p`` and the dimension."""

    m: float
    p: float
    n: int
    m_crit: float


def critical_exponent(n):
    """Sobolev threshold ``(n - 2) / (n + 2)`` below which ``m`` is supercritical."""
    q = 1.0 - n / 2.0
    return 1.0 - 2.0 / (n + q)


def validate_params(m, n):
    if n not in (1, 2):
        raise UnsupportedDimension(f"dimension n={n} is not supported (only 1 and 2)")
    m = float(m)
    if not math.isfinite(m):
        raise ValidationError(f"m must be finite, got {m}")
    if m <= 0.0:
        raise NonPositive(f"m must be positive, got {m}")
    if m >= 1.0:
        raise NotFastDiffusion(f"m must be < 1 for fast diffusion, got {m}")
    m_crit = critical_exponent(n)
    if m <= m_crit:
        raise SubcriticalityViolated(f"m={m} is not above the critical value {m_crit} for n={n}")
    return MediumParams(m=m, p=1.0 / m, n=n, m_crit=m_crit)


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

def _require_positive(**lengths):
    for name, value in lengths.items():
        if not (math.isfinite(value) and value > 0):
            raise ValidationError(f"{name} must be a positive length, got {value}")


@dataclass(frozen=True)
class Interval:
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise ValidationError(f"Interval needs a < b, got a={self.a}, b={self.b}")

    dim = 1

    @property
    def measure(self):
        return self.b - self.a

    @property
    def inradius(self):
        return 0.5 * (self.b - self.a)


@dataclass(frozen=True)
class RadialBall:
    """Ball of radius R in dimension n, discretised along the radius only."""

    R: float = 1.0
    n: int = 2

    def __post_init__(self):
        _require_positive(R=self.R)
        if self.n not in (1, 2):
            raise UnsupportedDimension(f"RadialBall supports n in (1, 2), got {self.n}")

    @property
    def dim(self):
        return self.n

    @property
    def measure(self):
        return _sphere_area(self.n) * self.R ** self.n / self.n

    @property
    def inradius(self):
        return self.R


@dataclass(frozen=True)
class Rectangle:
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self):
        _require_positive(Lx=self.Lx, Ly=self.Ly)

    dim = 2

    @property
    def measure(self):
        return self.Lx * self.Ly

    @property
    def inradius(self):
        return 0.5 * min(self.Lx, self.Ly)


@dataclass(frozen=True)
class Annulus:
    r0: float = 1.0
    r1: float = 2.0

    def __post_init__(self):
        _require_positive(r0=self.r0, r1=self.r1)
        if not self.r0 < self.r1:
            raise ValidationError(f"Annulus needs r0 < r1, got {self.r0}, {self.r1}")

    dim = 2

    @property
    def measure(self):
        return math.pi * (self.r1 ** 2 - self.r0 ** 2)

    @property
    def inradius(self):
        return 0.5 * (self.r1 - self.r0)


DomainSpec = Interval | RadialBall | Rectangle | Annulus


def _sphere_area(n):
    # |S^{n-1}|: two endpoints for n=1, the unit circle for n=2
    return 2.0 if n == 1 else 2.0 * math.pi


# ---------------------------------------------------------------------------
# meshes and fields
# ---------------------------------------------------------------------------

def _frozen(a, dtype=float):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Uniform cell-centred mesh.

    ``centers`` has one row per cell (x for intervals, r for radial balls,
    cartesian x, y for rectangles and annuli). Interior faces are the rows of
    ``faces`` with transmissibility ``face_trans``; boundary faces are
    ``bnd_cells`` with ``bnd_trans``.
    """

    domain: DomainSpec
    shape: tuple
    centers: np.ndarray
    measures: np.ndarray
    faces: np.ndarray
    face_area: np.ndarray
    face_trans: np.ndarray
    bnd_cells: np.ndarray
    bnd_area: np.ndarray
    bnd_trans: np.ndarray
    dist: np.ndarray
    spacing: float
    extra: dict = field(default_factory=dict)

    @property
    def ncells(self):
        return self.measures.size

    @property
    def dim(self):
        return self.centers.shape[1]

    def same_as(self, other):
        return self is other or (
            self.domain == other.domain
            and self.shape == other.shape
        )

    def field(self, values):
        return Field(self, values)

    def constant(self, value=1.0):
        return Field(self, np.full(self.ncells, float(value)))


@dataclass(frozen=True, eq=False)
class Field:
    """One real value per cell of ``mesh``."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != self.mesh.ncells:
            raise ValidationError(f"field has {v.size} values for {self.mesh.ncells} cells")
        if not np.all(np.isfinite(v)):
            raise ValidationError("field values must be finite")
        object.__setattr__(self, "values", v)

    def with_values(self, values):
        return Field(self.mesh, values)


def check_same_mesh(*fields):
    first = fields[0].mesh
    for f in fields[1:]:
        if not first.same_as(f.mesh):
            raise MeshMismatch("fields live on different meshes")
    return first


def build_mesh(spec, resolution, angular=None):
    """Build a uniform mesh with ``resolution`` cells across the domain.

    Rectangles get square-ish cells (``ny`` scaled by the aspect ratio); annuli
    get ``resolution`` radial cells and, unless ``angular`` is given, enough
    angular cells to make them roughly square at mid radius.
    """
    resolution = int(resolution)
    if resolution < MIN_RESOLUTION:
        raise ResolutionTooCoarse(f"resolution must be >= {MIN_RESOLUTION}, got {resolution}")
    if isinstance(spec, Interval):
        return _interval_mesh(spec, resolution)
    if isinstance(spec, RadialBall):
        return _radial_mesh(spec, resolution)
    if isinstance(spec, Rectangle):
        return _rectangle_mesh(spec, resolution)
    if isinstance(spec, Annulus):
        return _annulus_mesh(spec, resolution, angular)
    raise ValidationError(f"unknown domain spec {spec!r}")


def _interval_mesh(spec, N):
    h = (spec.b - spec.a) / N
    x = spec.a + (np.arange(N) + 0.5) * h
    idx = np.arange(N - 1)
    return Mesh(
        domain=spec,
        shape=(N,),
        centers=_frozen(x[:, None]),
        measures=_frozen(np.full(N, h)),
        faces=_frozen(np.column_stack([idx, idx + 1]), int),
        face_area=_frozen(np.ones(N - 1)),
        face_trans=_frozen(np.full(N - 1, 1.0 / h)),
        bnd_cells=_frozen([0, N - 1], int),
        bnd_area=_frozen([1.0, 1.0]),
        bnd_trans=_frozen([2.0 / h, 2.0 / h]),
        dist=_frozen(np.minimum(x - spec.a, spec.b - x)),
        spacing=h,
    )


def _radial_mesh(spec, N):
    n, R = spec.n, spec.R
    h = R / N
    omega = _sphere_area(n)
    edges = np.arange(N + 1) * h
    r = 0.5 * (edges[:-1] + edges[1:])
    measures = omega * (edges[1:] ** n - edges[:-1] ** n) / n
    inner = edges[1:-1]
    area = omega * inner ** (n - 1)
    idx = np.arange(N - 1)
    b_area = omega * R ** (n - 1)
    # no face at r=0: the centre is a symmetry point with zero flux
    return Mesh(
        domain=spec,
        shape=(N,),
        centers=_frozen(r[:, None]),
        measures=_frozen(measures),
        faces=_frozen(np.column_stack([idx, idx + 1]), int),
        face_area=_frozen(area),
        face_trans=_frozen(area / h),
        bnd_cells=_frozen([N - 1], int),
        bnd_area=_frozen([b_area]),
        bnd_trans=_frozen([2.0 * b_area / h]),
        dist=_frozen(R - r),
        spacing=h,
    )


def _rectangle_mesh(spec, nx):
    ny = max(MIN_RESOLUTION, int(round(nx * spec.Ly / spec.Lx)))
    dx, dy = spec.Lx / nx, spec.Ly / ny
    x = (np.arange(nx) + 0.5) * dx
    y = (np.arange(ny) + 0.5) * dy
    X, Y = np.meshgrid(x, y, indexing="ij")
    ids = np.arange(nx * ny).reshape(nx, ny)

    fx = np.column_stack([ids[:-1, :].ravel(), ids[1:, :].ravel()])
    fy = np.column_stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()])
    faces = np.vstack([fx, fy])
    area = np.concatenate([np.full(len(fx), dy), np.full(len(fy), dx)])
    trans = np.concatenate([np.full(len(fx), dy / dx), np.full(len(fy), dx / dy)])

    bx = np.concatenate([ids[0, :], ids[-1, :]])
    by = np.concatenate([ids[:, 0], ids[:, -1]])
    bnd = np.concatenate([bx, by])
    b_area = np.concatenate([np.full(len(bx), dy), np.full(len(by), dx)])
    b_trans = np.concatenate([np.full(len(bx), 2 * dy / dx), np.full(len(by), 2 * dx / dy)])

    dist = np.minimum.reduce([X, spec.Lx - X, Y, spec.Ly - Y]).ravel()
    return Mesh(
        domain=spec,
        shape=(nx, ny),
        centers=_frozen(np.column_stack([X.ravel(), Y.ravel()])),
        measures=_frozen(np.full(nx * ny, dx * dy)),
        faces=_frozen(faces, int),
        face_area=_frozen(area),
        face_trans=_frozen(trans),
        bnd_cells=_frozen(bnd, int),
        bnd_area=_frozen(b_area),
        bnd_trans=_frozen(b_trans),
        dist=_frozen(dist),
        spacing=max(dx, dy),
    )


def default_angular_count(spec, nr):
    dr = (spec.r1 - spec.r0) / nr
    r_mid = 0.5 * (spec.r0 + spec.r1)
    return max(MIN_RESOLUTION, int(round(2 * math.pi * r_mid / dr)))


def _annulus_mesh(spec, nr, nt):
    if nt is None:
        nt = default_angular_count(spec, nr)
    nt = int(nt)
    if nt < MIN_RESOLUTION:
        raise ResolutionTooCoarse(f"angular count must be >= {MIN_RESOLUTION}, got {nt}")
    dr = (spec.r1 - spec.r0) / nr
    dth = 2 * math.pi / nt
    edges = spec.r0 + np.arange(nr + 1) * dr
    r = 0.5 * (edges[:-1] + edges[1:])
    th = (np.arange(nt) + 0.5) * dth
    Rg, Tg = np.meshgrid(r, th, indexing="ij")
    ids = np.arange(nr * nt).reshape(nr, nt)
    measures = 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2) * dth

    fr = np.column_stack([ids[:-1, :].ravel(), ids[1:, :].ravel()])
    fr_area = np.repeat(edges[1:-1] * dth, nt)
    # angular faces wrap periodically: last column joins the first
    ft = np.column_stack([ids.ravel(), np.roll(ids, -1, axis=1).ravel()])
    ft_area = np.full(nr * nt, dr)
    ft_trans = dr / (Rg.ravel() * dth)

    bnd = np.concatenate([ids[0, :], ids[-1, :]])
    b_area = np.concatenate([np.full(nt, spec.r0 * dth), np.full(nt, spec.r1 * dth)])

    return Mesh(
        domain=spec,
        shape=(nr, nt),
        centers=_frozen(np.column_stack([(Rg * np.cos(Tg)).ravel(), (Rg * np.sin(Tg)).ravel()])),
        measures=_frozen(np.repeat(measures, nt)),
        faces=_frozen(np.vstack([fr, ft]), int),
        face_area=_frozen(np.concatenate([fr_area, ft_area])),
        face_trans=_frozen(np.concatenate([fr_area / dr, ft_trans])),
        bnd_cells=_frozen(bnd, int),
        bnd_area=_frozen(b_area),
        bnd_trans=_frozen(2 * b_area / dr),
        dist=_frozen(np.minimum(Rg - spec.r0, spec.r1 - Rg).ravel()),
        spacing=max(dr, spec.r1 * dth),
        extra={"r": _frozen(Rg.ravel()), "theta": _frozen(Tg.ravel())},
    )


# ---------------------------------------------------------------------------
# quadrature and operators
# ---------------------------------------------------------------------------

def weighted_inner(f, g, V, sigma):
    """Midpoint quadrature of ``f g V**sigma`` over the mesh."""
    mesh = check_same_mesh(f, g, V)
    return float(np.sum(f.values * g.values * V.values ** sigma * mesh.measures))


def weighted_norm(f, V, sigma):
    return math.sqrt(max(weighted_inner(f, f, V, sigma), 0.0))


def integrate(f):
    return float(np.sum(f.values * f.mesh.measures))


class WeightedStiffness:
    """Symmetric flux operator ``x -> sum_faces w_f (x_i - x_j)`` (per row).

    Only interior faces contribute, so boundary fluxes vanish identically.
    ``apply`` works in flux form, which makes ``apply(constant) == 0``
    exact; ``matrix`` is the assembled CSR matrix for solvers.
    """

    def __init__(self, mesh, weights):
        self.mesh = mesh
        self.weights = np.asarray(weights, dtype=float)
        self._matrix = None

    @property
    def shape(self):
        return (self.mesh.ncells, self.mesh.ncells)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        i, j = self.mesh.faces[:, 0], self.mesh.faces[:, 1]
        flux = self.weights * (x[i] - x[j])
        out = np.zeros(self.mesh.ncells)
        np.add.at(out, i, flux)
        np.add.at(out, j, -flux)
        return out

    def __matmul__(self, x):
        if isinstance(x, Field):
            return self.apply(x.values)
        return self.apply(x)

    def quadratic(self, x):
        """``x^T A x`` summed face by face (never negative)."""
        x = np.asarray(x, dtype=float)
        d = x[self.mesh.faces[:, 0]] - x[self.mesh.faces[:, 1]]
        return float(np.sum(self.weights * d * d))

    @property
    def matrix(self):
        if self._matrix is None:
            self._matrix = flux_matrix(self.mesh, self.weights)
        return self._matrix


def flux_matrix(mesh, weights, bnd_weights=None):
    """Assemble ``sum_f w_f (e_i - e_j)(e_i - e_j)^T`` (+ boundary diagonal)."""
    N = mesh.ncells
    i, j = mesh.faces[:, 0], mesh.faces[:, 1]
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([weights, weights, -weights, -weights])
    if bnd_weights is not None:
        rows = np.concatenate([rows, mesh.bnd_cells])
        cols = np.concatenate([cols, mesh.bnd_cells])
        vals = np.concatenate([vals, bnd_weights])
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


def face_values(V):
    """Arithmetic mean of V across each interior face, clamped at zero."""
    mesh = V.mesh
    v = V.values
    return np.maximum(0.5 * (v[mesh.faces[:, 0]] + v[mesh.faces[:, 1]]), 0.0)


def assemble_weighted_stiffness(V, weight_exponent):
    if np.any(V.values < 0):
        raise NegativeWeight("weight field V has negative cells")
    mesh = V.mesh
    w = face_values(V) ** weight_exponent * mesh.face_trans
    return WeightedStiffness(mesh, w)


def dirichlet_stiffness(mesh):
    """Flux matrix of ``-Laplace`` with a zero value on the boundary faces.

    Dividing a row by the cell measure gives the discrete Laplacian with a
    mirrored ghost cell, i.e. ``(Laplace_h v)_i = -(K v)_i / |cell_i|``.
    """
    key = "dirichlet_stiffness"
    if key not in mesh.extra:
        mesh.extra[key] = flux_matrix(mesh, np.asarray(mesh.face_trans), np.asarray(mesh.bnd_trans)).tocsc()
    return mesh.extra[key]


def dirichlet_laplacian(v):
    """Apply ``Laplace_h`` to the field ``v`` (value 0 imposed on the boundary)."""
    mesh = v.mesh
    return -(dirichlet_stiffness(mesh) @ v.values) / mesh.measures


def dirichlet_gradient_energy(v):
    """``||grad v||_{L^2}^2`` from face differences, boundary faces included."""
    mesh = v.mesh
    x = v.values
    d = x[mesh.faces[:, 0]] - x[mesh.faces[:, 1]]
    return float(np.sum(mesh.face_trans * d * d) + np.sum(mesh.bnd_trans * x[mesh.bnd_cells] ** 2))
