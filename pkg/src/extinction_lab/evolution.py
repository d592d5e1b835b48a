"""Time stepping in relative-error form and in the original variables.

Rescaled dynamics are advanced in the form

    (1+h)^{p-1} dh/dt = -(B^{-1} A - (p-1)) h + M(h),   M(h) = (1+h)^p - 1 - p h,

with the prefactor and M frozen at the old step (one SPD solve per step).
The original equation ``w_tau = Laplace(w^m)`` is stepped fully implicitly in
the pressure-like unknown ``u = w^m``, which keeps the Newton Jacobian
``diag(p u^{p-1} / dtau) + K`` symmetric positive definite even where w = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq

from .core import Field, check_same_mesh, dirichlet_gradient_energy, dirichlet_stiffness
from .errors import (
    BeyondExtinction,
    EmptyTrajectory,
    LinearSolveFailure,
    NewtonDivergence,
    PositivityLost,
    ValidationError,
)
from .spectrum import _profile_field, assemble_pencil
from .stationary import energy

EARLY_STOP = 0.5


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    snapshot_stride: int = 10
    positivity_floor: float = 1e-14

    def __post_init__(self):
        if not (self.dt > 0 and self.t_end > 0 and self.dt < self.t_end):
            raise ValidationError(f"need 0 < dt < t_end, got dt={self.dt}, t_end={self.t_end}")
        if self.snapshot_stride < 1:
            raise ValidationError("snapshot_stride must be >= 1")
        if not self.positivity_floor > 0:
            raise ValidationError("positivity_floor must be positive")

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))


@dataclass(eq=False)
class Trajectory:
    """Per-step series plus strided snapshots of one run.

    ``kind`` is ``"relative"`` (snapshots are h, times are t) or
    ``"original"`` (snapshots are w, times are tau). The ``nonlin_*`` arrays
    hold one entry per step interval and are only filled for relative runs.
    """

    kind: str
    mesh: object
    params: object
    times: np.ndarray
    norm_series: np.ndarray
    sup_series: np.ndarray
    energy_series: np.ndarray
    dissipation: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    stopped_early: bool = False
    projections: np.ndarray | None = None
    nonlin_norm: np.ndarray | None = None
    dth_sup: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def dissipation_accumulator(self):
        return float(self.dissipation[-1])

    def snapshot(self, i):
        return Field(self.mesh, self.snapshots[i])


def M_nonlinearity(h, p):
    """``(1+h)^p - 1 - p h``."""
    return (1.0 + h) ** p - 1.0 - p * h


def N_nonlinearity(h, dh_dt, p):
    """``(1+h)^p - 1 - p h + (1 - (1+h)^{p-1}) dh/dt``."""
    return M_nonlinearity(h, p) + (1.0 - (1.0 + h) ** (p - 1.0)) * dh_dt


class _ShiftedSolver:
    """Solves ``(A + diag(d)) x = b`` for a fixed symmetric sparse ``A``.

    Tridiagonal matrices (1D and radial meshes) go through a banded
    Cholesky solve, everything else through SuperLU.
    """

    def __init__(self, A):
        self.A = A.tocsr()
        coo = self.A.tocoo()
        self.banded = bool(np.all(np.abs(coo.row - coo.col) <= 1))
        if self.banded:
            self._diag = self.A.diagonal()
            self._upper = np.concatenate(([0.0], self.A.diagonal(1)))

    def solve(self, d, b):
        try:
            if self.banded:
                ab = np.vstack((self._upper, self._diag + d))
                out = sla.solveh_banded(ab, b, check_finite=False)
            else:
                out = spla.spsolve((self.A + sp.diags(d)).tocsc(), b)
        except (sla.LinAlgError, RuntimeError) as exc:
            raise LinearSolveFailure(str(exc)) from exc
        if not np.all(np.isfinite(out)):
            raise LinearSolveFailure("non-finite values in linear solve")
        return out


class RelativeErrorStepper:
    """Reusable semi-implicit stepper around a fixed profile."""

    def __init__(self, V, params, dt):
        V = _profile_field(V)
        self.V = V
        self.params = params
        self.dt = float(dt)
        self.pencil = assemble_pencil(V, params)
        self.B = self.pencil.B
        self._solver = _ShiftedSolver(self.pencil.A.matrix)

    def step(self, h):
        p, dt, B = self.params.p, self.dt, self.B
        if np.any(1.0 + h <= 0.0):
            raise PositivityLost("1 + h <= 0 at some cell")
        D = (1.0 + h) ** (p - 1.0)
        diag = B * (D / dt - (p - 1.0))
        rhs = B * (D * h / dt + M_nonlinearity(h, p))
        return self._solver.solve(diag, rhs)


def step_relative_error(h, V, params, dt):
    V = _profile_field(V)
    check_same_mesh(h, V)
    return Field(h.mesh, RelativeErrorStepper(V, params, dt).step(h.values))


def evolve(h0, V, params, config, dec=None):
    """Iterate the stepper from ``h0`` and record norm, sup, energy and dissipation series.

    Stops early (``stopped_early=True``) once ``||h||_inf > 0.5``. If a
    spectral decomposition is given, the mode projections of every step are
    recorded as well.
    """
    V = _profile_field(V)
    check_same_mesh(h0, V)
    h = h0.values.copy()
    if np.max(np.abs(h)) >= 1.0:
        raise ValidationError("evolve needs ||h0||_inf < 1")
    stepper = RelativeErrorStepper(V, params, config.dt)
    p, dt, B = params.p, config.dt, stepper.B
    A = stepper.pencil.A
    mesh = V.mesh
    vv = V.values

    def record(hk):
        norms.append(math.sqrt(float(np.sum(hk * hk * B))))
        sups.append(float(np.max(np.abs(hk))))
        energies.append(energy(Field(mesh, vv * (1.0 + hk)), params))
        if dec is not None:
            proj.append(dec.eigenfields.T @ (hk * B))

    norms, sups, energies, proj = [], [], [], []
    times = [0.0]
    diss = [0.0]
    snaps, snap_t = [h.copy()], [0.0]
    nl, dts = [], []
    record(h)
    stopped = False
    for k in range(1, config.steps + 1):
        h_new = stepper.step(h)
        dh = (h_new - h) / dt
        nl.append(math.sqrt(float(np.sum(N_nonlinearity(h, dh, p) ** 2 * B))))
        dts.append(float(np.max(np.abs(dh))))
        h = h_new
        times.append(k * dt)
        diss.append(diss[-1] + dt * A.quadratic(h))
        record(h)
        if k % config.snapshot_stride == 0 or k == config.steps:
            snaps.append(h.copy())
            snap_t.append(k * dt)
        if sups[-1] > EARLY_STOP:
            stopped = True
            if snap_t[-1] != times[-1]:
                snaps.append(h.copy())
                snap_t.append(times[-1])
            break
    return Trajectory(
        kind="relative",
        mesh=mesh,
        params=params,
        times=np.array(times),
        norm_series=np.array(norms),
        sup_series=np.array(sups),
        energy_series=np.array(energies),
        dissipation=np.array(diss),
        snapshot_times=np.array(snap_t),
        snapshots=np.array(snaps),
        stopped_early=stopped,
        projections=np.array(proj) if dec is not None else None,
        nonlin_norm=np.array(nl),
        dth_sup=np.array(dts),
        info={"dt": dt},
    )


def pin_coefficients(base, phis, end_projection, scale):
    """Adjust ``base + phis @ a`` so that ``end_projection`` vanishes.

    ``end_projection(values)`` runs a trajectory and returns the projections
    to be cancelled at its final time; these depend affinely on ``a`` to
    leading order, so a finite-difference Jacobian followed by chord
    iterations suffices.
    """
    k = phis.shape[1]
    a = np.zeros(k)
    g = end_projection(base)
    s = 1e-3 * scale
    J = np.empty((k, k))
    for i in range(k):
        J[:, i] = (end_projection(base + s * phis[:, i]) - g) / s
    for _ in range(2):
        a = a - np.linalg.solve(J, g)
        g = end_projection(base + phis @ a)
    return base + phis @ a


def stabilize_seed(h0, V, params, config, dec, modes=None):
    """Remove the drift of a seed along the given modes (default: the unstable ones).

    A seed that is not exactly on the stable manifold picks up an O(amplitude^2)
    unstable component (in the original variables: a shifted extinction
    time) which grows like ``exp(|lambda_{-1}| t)``. Pinning the coefficients
    of ``modes`` so that their projections vanish at ``config.t_end`` puts
    the seed on the manifold to roundoff. Passing lower stable modes as well
    selects a seed tangent to a faster mode.
    """
    V = _profile_field(V)
    modes = list(range(dec.I)) if modes is None else list(modes)
    if not modes:
        return h0
    phis = dec.eigenfields[:, modes]

    def end_projection(values):
        tr = evolve(Field(h0.mesh, values), V, params, config, dec)
        return tr.projections[-1, modes]

    scale = max(float(np.max(np.abs(h0.values))), 1e-12)
    return Field(h0.mesh, pin_coefficients(h0.values.copy(), phis, end_projection, scale))


# ---------------------------------------------------------------------------
# original variables
# ---------------------------------------------------------------------------

def _step_sizes(dtau, tau_end):
    if np.ndim(dtau) == 0:
        dtau = float(dtau)
        if not (dtau > 0 and tau_end > 0):
            raise ValidationError("need dtau > 0 and tau_end > 0")
        n = int(round(tau_end / dtau))
        return np.full(n, dtau)
    steps = np.asarray(dtau, dtype=float)
    if np.any(steps <= 0):
        raise ValidationError("step sizes must be positive")
    return steps


def evolve_original(w0, params, dtau, tau_end=None, snapshot_stride=1, newton_tol=1e-13, max_newton=50):
    """Implicit Euler for ``w_tau = Laplace_h(w^m)`` with ``w = 0`` on the boundary.

    ``dtau`` is either a fixed step (with ``tau_end``) or an array of step
    sizes (see :func:`geometric_steps`).
    """
    if np.any(w0.values < 0):
        raise ValidationError("w0 must be non-negative")
    steps = _step_sizes(dtau, tau_end)
    mesh = w0.mesh
    K = dirichlet_stiffness(mesh)
    solver = _ShiftedSolver(K)
    Mw = mesh.measures
    p, m = params.p, params.m
    w = w0.values.copy()
    u = w ** m

    def record(u_, w_):
        norms.append(float(np.sum(w_ ** (p + 1) * Mw)) ** (1.0 / (p + 1)))
        sups.append(float(np.max(w_)))
        energies.append(0.5 * dirichlet_gradient_energy(Field(mesh, u_)))

    norms, sups, energies = [], [], []
    times, snaps, snap_t = [0.0], [w.copy()], [0.0]
    record(u, w)
    tau = 0.0
    for k, dt in enumerate(steps, start=1):
        target = Mw * w / dt
        scale = max(float(np.linalg.norm(target)), 1e-300)
        un = u.copy()
        for it in range(max_newton):
            G = Mw * un ** p / dt + K @ un - target
            if np.linalg.norm(G) <= newton_tol * scale:
                break
            try:
                du = solver.solve(Mw * p * un ** (p - 1) / dt, -G)
            except LinearSolveFailure as exc:
                raise NewtonDivergence(str(exc)) from exc
            un = np.maximum(un + du, 0.0)
        else:
            raise NewtonDivergence(f"implicit step {k} did not converge in {max_newton} Newton iterations")
        u = un
        w = u ** p
        tau += dt
        times.append(tau)
        record(u, w)
        if k % snapshot_stride == 0 or k == len(steps):
            snaps.append(w.copy())
            snap_t.append(tau)
    n = len(times)
    return Trajectory(
        kind="original",
        mesh=mesh,
        params=params,
        times=np.array(times),
        norm_series=np.array(norms),
        sup_series=np.array(sups),
        energy_series=np.array(energies),
        dissipation=np.zeros(n),
        snapshot_times=np.array(snap_t),
        snapshots=np.array(snaps),
        info={"steps": steps},
    )


@dataclass(frozen=True)
class RescaleMap:
    """``w = ((1-m)(T-tau))^{1/(1-m)} v^{1/m}``, ``t = m/(1-m) ln(T/(T-tau))``."""

    params: object
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValidationError("extinction time T must be positive")

    def _check(self, tau):
        if np.any(np.asarray(tau) >= self.T) or np.any(np.asarray(tau) < 0):
            raise BeyondExtinction(f"tau must lie in [0, T={self.T})")

    def amplitude(self, tau):
        self._check(tau)
        m = self.params.m
        return ((1.0 - m) * (self.T - tau)) ** (1.0 / (1.0 - m))

    def time(self, tau):
        self._check(tau)
        m = self.params.m
        return m / (1.0 - m) * np.log(self.T / (self.T - tau))

    def tau(self, t):
        m = self.params.m
        return self.T * (1.0 - np.exp(-(1.0 - m) * np.asarray(t) / m))

    def to_rescaled(self, w, tau):
        """``(w, tau) -> (v, t)``; w may be an array or a Field."""
        vals = w.values if isinstance(w, Field) else np.asarray(w, dtype=float)
        v = (vals / self.amplitude(tau)) ** self.params.m
        if isinstance(w, Field):
            v = Field(w.mesh, v)
        return v, self.time(tau)

    def to_original(self, v, t):
        tau = self.tau(t)
        vals = v.values if isinstance(v, Field) else np.asarray(v, dtype=float)
        w = self.amplitude(tau) * vals ** self.params.p
        if isinstance(v, Field):
            w = Field(v.mesh, w)
        return w, tau

    def separable(self, V, tau):
        """The separation-of-variables solution ``W(., tau)``."""
        V = _profile_field(V)
        return Field(V.mesh, self.amplitude(tau) * V.values ** self.params.p)


def perturbed_separable(V, params, T, h):
    """``w0 = W(., 0) (1 + h)^p``: the datum whose rescaled relative error is ``h``."""
    V = _profile_field(V)
    return Field(V.mesh, RescaleMap(params, T).separable(V, 0.0).values * (1.0 + h.values) ** params.p)


def stabilize_original_seed(h0, V, params, T, steps, dec, modes=None):
    """:func:`stabilize_seed` for original-variable runs with the given step sizes.

    The relative error at the last step is measured against the numerical
    separable solution ``c_k V^p`` (see :func:`discrete_separable_amplitudes`).
    """
    V = _profile_field(V)
    modes = list(range(dec.I)) if modes is None else list(modes)
    if not modes:
        return h0
    c_end = discrete_separable_amplitudes(params, RescaleMap(params, T).amplitude(0.0), steps)[-1]
    ref = c_end * V.values ** params.p
    B = dec.V.values ** (params.p + 1) * V.mesh.measures
    phis = dec.eigenfields[:, modes]

    def end_projection(values):
        w0 = perturbed_separable(V, params, T, Field(V.mesh, values))
        tr = evolve_original(w0, params, steps, snapshot_stride=len(steps))
        h_end = (tr.snapshots[-1] / ref) ** params.m - 1.0
        return phis.T @ (h_end * B)

    scale = max(float(np.max(np.abs(h0.values))), 1e-12)
    return Field(h0.mesh, pin_coefficients(h0.values.copy(), phis, end_projection, scale))


def discrete_separable_amplitudes(params, c0, steps):
    """Amplitudes ``c_k`` with ``c_{k+1} + dtau_k c_{k+1}^m = c_k``.

    If ``V`` solves the discrete stationary problem, ``c_k V^p`` is the exact
    implicit-Euler solution started from ``c_0 V^p``.
    """
    m = params.m
    out = [float(c0)]
    for dt in np.asarray(steps, dtype=float):
        ck = out[-1]
        if ck <= 0.0:
            out.append(0.0)
            continue
        out.append(brentq(lambda c: c + dt * c ** m - ck, 0.0, ck, xtol=1e-300, rtol=4 * np.finfo(float).eps))
    return np.array(out)


def rescale_maps(params, T):
    return RescaleMap(params, float(T))


def geometric_steps(params, T, dt, t_end):
    """Original-time steps that are uniform (``dt``) in rescaled time up to ``t_end``."""
    rm = RescaleMap(params, T)
    n = int(round(t_end / dt))
    taus = rm.tau(np.arange(n + 1) * dt)
    return np.diff(taus)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyDiagnostics:
    energy: np.ndarray
    monotone: bool
    worst_excess: float          # largest E_{k+1} - E_k - slack (<= 0 when monotone)
    first_violation: int | None
    quotient: np.ndarray         # (||h||^2 + sum dt ||grad h||^2_{L^2_2}) / ||h0||^2
    growth_constant: float       # smallest C with exp(C t) >= quotient on the run


def energy_and_estimate_series(traj, V=None, params=None):
    if traj is None or len(traj.times) < 2:
        raise EmptyTrajectory("trajectory needs at least two recorded times")
    E = traj.energy_series
    slack = 1e-10 * np.abs(E[:-1]) + 1e-12
    excess = np.diff(E) - slack
    bad = np.nonzero(excess > 0)[0]
    n0 = traj.norm_series[0] ** 2
    total = traj.norm_series ** 2 + traj.dissipation
    if n0 == 0.0:
        Q = np.where(total == 0.0, 1.0, np.inf)
    else:
        Q = total / n0
    t = traj.times
    with np.errstate(divide="ignore", invalid="ignore"):
        rates = np.where(t > 0, np.log(Q) / t, -np.inf)
    C = max(0.0, float(np.max(rates[1:])))
    return EnergyDiagnostics(
        energy=E,
        monotone=bad.size == 0,
        worst_excess=float(excess.max()),
        first_violation=int(bad[0]) if bad.size else None,
        quotient=Q,
        growth_constant=C,
    )


def nonlinearity_bound_ratio(traj):
    """``||N(h)||_{p+1} / (||h||_inf (||h||_inf + ||dh/dt||_inf))`` per step interval."""
    if traj.nonlin_norm is None or traj.nonlin_norm.size == 0:
        raise EmptyTrajectory("no nonlinearity series on this trajectory")
    hs = traj.sup_series[:-1][: traj.nonlin_norm.size]
    den = hs * (hs + traj.dth_sup)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, traj.nonlin_norm / den, 0.0)


def quadratic_bound_constant(p):
    """Taylor constant ``C_1`` with ``|N(h)| <~ C_1 |h| (|h| + |dh/dt|)`` for small h."""
    return max(0.5 * p * abs(p - 1.0), abs(p - 1.0))
