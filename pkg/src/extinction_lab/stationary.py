"""Positive solutions of ``Laplace V + V**p = 0`` with ``V = 0`` on the boundary.

Two independent routes: radial shooting (adaptive RK4 on the radial ODE
followed by the scaling map ``V(x) = alpha u(beta |x - c|)``) and damped
Newton on the finite-volume mesh.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (
    Field,
    Interval,
    RadialBall,
    dirichlet_gradient_energy,
    dirichlet_laplacian,
    dirichlet_stiffness,
)
from .errors import (
    ConvergedToZero,
    EmptyBand,
    InvalidExponent,
    LostPositivity,
    MaxIterExceeded,
    NoZeroFound,
    ValidationError,
)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100
POSITIVITY_CLAMP = 1e-14
ZERO_FLOOR = 1e-8
DEFAULT_BAND = 0.1


@dataclass(frozen=True, eq=False)
class StationaryProfile:
    """A positive stationary profile on a mesh plus solver diagnostics.

    ``residual_norm`` is the residual of the problem the producing solver
    actually solved: the relative discrete residual for Newton, the
    largest accepted local error of the ODE integration for shooting.
    """

    V: Field
    params: object
    residual_norm: float
    growth_ratio_lo: float
    growth_ratio_hi: float
    energy: float
    method: str
    info: dict = field(default_factory=dict)

    @property
    def mesh(self):
        return self.V.mesh


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------

def _rhs(r, u, du, n, p):
    src = -np.sign(u) * np.abs(u) ** p
    if n > 1:
        return du, src - (n - 1) * du / r
    return du, src


def _rk4(r, u, du, h, n, p):
    k1u, k1v = _rhs(r, u, du, n, p)
    k2u, k2v = _rhs(r + h / 2, u + h / 2 * k1u, du + h / 2 * k1v, n, p)
    k3u, k3v = _rhs(r + h / 2, u + h / 2 * k2u, du + h / 2 * k2v, n, p)
    k4u, k4v = _rhs(r + h, u + h * k3u, du + h * k3v, n, p)
    return (u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u),
            du + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v))


@dataclass(frozen=True)
class RadialSolution:
    """Solution of ``u'' + (n-1)/r u' + u^p = 0``, ``u(0)=1``, ``u'(0)=0`` up to its first zero."""

    n: int
    p: float
    r_star: float
    nodes: np.ndarray      # columns r, u, u'
    error_estimate: float  # largest accepted local error, relative to max(1, |u|, |u'|)
    accumulated_error: float = 0.0

    def __call__(self, r):
        """Evaluate u at radii in [0, r_star] by one RK4 step from the nearest node on the left."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        nr = self.nodes[:, 0]
        k = np.clip(np.searchsorted(nr, r, side="right") - 1, 0, len(nr) - 1)
        r0, u0, v0 = self.nodes[k, 0], self.nodes[k, 1], self.nodes[k, 2]
        h = r - r0
        # two half steps keep the interpolation error below the integration tolerance;
        # radii left of the first node take the series branch below
        with np.errstate(divide="ignore", invalid="ignore"):
            u1, v1 = _rk4(r0, u0, v0, h / 2, self.n, self.p)
            u2, _ = _rk4(r0 + h / 2, u1, v1, h / 2, self.n, self.p)
        out = np.where(h == 0, u0, u2)
        out = np.where(r < nr[0], 1.0 - r * r / (2 * self.n), out)
        return np.where(r >= self.r_star, 0.0, out)


def shoot_first_zero(n, p, tol=1e-12, r_max=1e3, h0=1e-3):
    """Adaptive RK4 (step doubling) for the radial Lane-Emden ODE up to its first zero."""
    if p <= 1:
        raise InvalidExponent(f"need p > 1, got {p}")
    if n > 1:
        # series start u = 1 - r^2/(2n) avoids the 1/r term at the origin
        r = 1e-6
        u, du = 1.0 - r * r / (2 * n), -r / n
    else:
        r, u, du = 0.0, 1.0, 0.0
    nodes = [(r, u, du)]
    h = h0
    err_total = 0.0
    err_max = 0.0
    while True:
        if r > r_max or len(nodes) > 2_000_000:
            raise NoZeroFound(f"no zero of u found up to r={r:.3g}")
        uf, vf = _rk4(r, u, du, h, n, p)
        uh, vh = _rk4(r, u, du, h / 2, n, p)
        uh, vh = _rk4(r + h / 2, uh, vh, h / 2, n, p)
        err = max(abs(uh - uf), abs(vh - vf)) / 15.0
        scale = max(1.0, abs(u), abs(du))
        if err <= tol * scale:
            if uh <= 0.0:
                break
            r, u, du = r + h, uh + (uh - uf) / 15.0, vh + (vh - vf) / 15.0
            nodes.append((r, u, du))
            err_total += err
            err_max = max(err_max, err / scale)
            fac = 0.9 * (tol * scale / err) ** 0.2 if err > 0 else 4.0
            h *= min(4.0, max(0.2, fac))
        else:
            h *= max(0.1, 0.9 * (tol * scale / err) ** 0.2)
    # Newton on the step length from the last node: g(d) = u(r + d)
    d = -u / du if du < 0 else h / 2
    d = min(max(d, 0.0), h)
    for _ in range(50):
        ud, vd = _rk4(r, u, du, d / 2, n, p)
        ud, vd = _rk4(r + d / 2, ud, vd, d / 2, n, p)
        step = ud / vd
        d -= step
        if abs(step) <= 1e-15 * max(1.0, r):
            break
    r_star = r + d
    return RadialSolution(n=n, p=p, r_star=r_star, nodes=np.array(nodes),
                          error_estimate=err_max, accumulated_error=err_total)


def solve_radial_shooting(params, mesh, tol=1e-12):
    """Sample the rescaled radial solution onto ``mesh``.

    ``mesh`` must be an Interval mesh (n=1, symmetric about the midpoint) or
    a RadialBall mesh. The half-length or radius plays the role of R.
    """
    dom = mesh.domain
    if isinstance(dom, Interval):
        if params.n != 1:
            raise ValidationError("interval shooting needs n = 1")
        R = 0.5 * (dom.b - dom.a)
        rho = np.abs(mesh.centers[:, 0] - 0.5 * (dom.a + dom.b))
        n = 1
    elif isinstance(dom, RadialBall):
        if params.n != dom.n:
            raise ValidationError("ball dimension differs from params.n")
        R = dom.R
        rho = mesh.centers[:, 0]
        n = dom.n
    else:
        raise ValidationError("shooting needs an Interval or RadialBall domain")
    p = params.p
    if p <= 1:
        raise InvalidExponent(f"need p > 1, got {p}")
    sol = shoot_first_zero(n, p, tol=tol)
    beta = sol.r_star / R
    alpha = beta ** (2.0 / (p - 1.0))
    V = Field(mesh, alpha * sol(beta * rho))
    info = {"r_star": sol.r_star, "alpha": alpha, "beta": beta, "R": R, "solution": sol,
            "accumulated_error": sol.accumulated_error}
    return _make_profile(V, params, sol.error_estimate, "shooting", info)


# ---------------------------------------------------------------------------
# Newton
# ---------------------------------------------------------------------------

def residual(V, params):
    """``Laplace_h V + V^p`` per cell (negative parts of V treated as zero)."""
    return dirichlet_laplacian(V) + np.maximum(V.values, 0.0) ** params.p


def _l2(x, measures):
    return math.sqrt(float(np.sum(x * x * measures)))


def relative_residual(V, params):
    """Discrete ``||Laplace_h V + V^p||_{L^2} / ||V^p||_{L^2}``."""
    M = V.mesh.measures
    den = _l2(np.maximum(V.values, 0.0) ** params.p, M)
    if den == 0.0:
        return 0.0
    return _l2(residual(V, params), M) / den


def roundoff_floor(V, params):
    """Relative residual attainable in double precision for this V.

    The discrete Laplacian amplifies the rounding of V by ~1/h^2, so at fine
    resolution a fixed tolerance can sit below what any iterate can reach.
    """
    mesh = V.mesh
    K = abs(dirichlet_stiffness(mesh))
    noise = np.finfo(float).eps * (K @ np.abs(V.values)) / mesh.measures
    den = _l2(np.maximum(V.values, 0.0) ** params.p, mesh.measures)
    return 4.0 * _l2(noise, mesh.measures) / den if den > 0 else 0.0


def first_dirichlet_mode(mesh):
    """Lowest Dirichlet eigenpair ``(mu, psi)`` of ``-Laplace_h``, psi > 0."""
    K = dirichlet_stiffness(mesh)
    Mw = mesh.measures
    if mesh.ncells <= 600:
        import scipy.linalg as sla
        s = 1.0 / np.sqrt(Mw)
        C = (K.toarray() * s[:, None]) * s[None, :]
        w, y = sla.eigh(C, subset_by_index=[0, 0])
        mu, psi = w[0], y[:, 0] * s
    else:
        w, y = spla.eigsh(K, k=1, M=sp.diags(Mw), sigma=0.0, which="LM")
        mu, psi = w[0], y[:, 0]
    psi = np.abs(psi)
    return float(mu), psi / psi.max()


def eigenfunction_guess(mesh, params):
    """First Dirichlet mode scaled to the Galerkin amplitude balance.

    Testing ``-Laplace V = V^p`` against V = a psi gives
    ``a^{p-1} = mu int psi^2 / int psi^{p+1}``.
    """
    mu, psi = first_dirichlet_mode(mesh)
    M = mesh.measures
    a = (mu * np.sum(psi ** 2 * M) / np.sum(psi ** (params.p + 1) * M)) ** (1.0 / (params.p - 1.0))
    return Field(mesh, a * psi)


def solve_newton(mesh, params, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Damped Newton for ``F(V) = Laplace_h V + V^p = 0`` with Armijo backtracking.

    Converges when the relative residual is below ``tol`` (or below the
    double-precision floor of the discrete Laplacian, whichever is larger).
    """
    if init is None:
        init = eigenfunction_guess(mesh, params)
    elif not isinstance(init, Field):
        init = Field(mesh, init)
    if np.any(init.values < 0):
        raise ValidationError("Newton initial guess must be non-negative")
    p = params.p
    K = dirichlet_stiffness(mesh)
    Mw = mesh.measures
    V = init.values.copy()
    clamp_streak = 0

    def F(v):
        return -(K @ v) / Mw + np.maximum(v, 0.0) ** p

    def norm(r):
        return _l2(r, Mw)

    Fv = F(V)
    for it in range(max_iter + 1):
        if np.max(np.abs(V)) < ZERO_FLOOR:
            raise ConvergedToZero("Newton iterate collapsed to the trivial solution")
        field_V = Field(mesh, V)
        rel = relative_residual(field_V, params)
        if rel <= max(tol, roundoff_floor(field_V, params)):
            break
        if it == max_iter:
            raise MaxIterExceeded(f"no convergence in {max_iter} iterations (relative residual {rel:.3e})")
        # symmetric form: (-K + p M diag(V^{p-1})) dV = -M F
        J = (-K + sp.diags(p * Mw * np.maximum(V, 0.0) ** (p - 1))).tocsc()
        dV = spla.spsolve(J, -Mw * Fv)
        f0 = norm(Fv)
        t = 1.0
        while True:
            trial = V + t * dV
            Ft = F(trial)
            if norm(Ft) <= (1 - 1e-4 * t) * f0 or t < 1e-10:
                break
            t *= 0.5
        V = trial
        neg = V <= 0.0
        if np.any(neg):
            V = np.where(neg, POSITIVITY_CLAMP, V)
            clamp_streak += 1
            if clamp_streak >= 5:
                raise LostPositivity("negative cells persisted for 5 consecutive iterations")
            Ft = F(V)
        else:
            clamp_streak = 0
        Fv = Ft
    info = {"iterations": it, "init": init}
    return _make_profile(Field(mesh, V), params, rel, "newton", info)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def growth_ratios(V, band_fraction=DEFAULT_BAND):
    if not 0.0 < band_fraction < 0.5:
        raise EmptyBand(f"band_fraction must lie in (0, 1/2), got {band_fraction}")
    mesh = V.mesh
    band = mesh.dist <= band_fraction * mesh.domain.inradius
    if not np.any(band):
        raise EmptyBand("no cells within the boundary band")
    ratio = V.values[band] / mesh.dist[band]
    return float(ratio.min()), float(ratio.max())


def check_boundary_growth(profile, band_fraction):
    """Min and max of ``V / dist`` over the cells within ``band_fraction * inradius`` of the boundary."""
    V = profile.V if isinstance(profile, StationaryProfile) else profile
    return growth_ratios(V, band_fraction)


def energy(v, params):
    """Discrete ``1/2 ||grad v||^2 - ||v||_{p+1}^{p+1} / (p+1)``."""
    p = params.p
    vals = np.maximum(v.values, 0.0)
    return 0.5 * dirichlet_gradient_energy(v) - float(np.sum(vals ** (p + 1) * v.mesh.measures)) / (p + 1)


def _make_profile(V, params, res, method, info):
    if np.any(V.values <= 0):
        raise LostPositivity(f"{method} profile has non-positive cells")
    lo, hi = growth_ratios(V, DEFAULT_BAND)
    return StationaryProfile(
        V=V,
        params=params,
        residual_norm=float(res),
        growth_ratio_lo=lo,
        growth_ratio_hi=hi,
        energy=energy(V, params),
        method=method,
        info=info,
    )
