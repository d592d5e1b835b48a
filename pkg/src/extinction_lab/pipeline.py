"""Subspace splitting of relative-error runs and the end-to-end dichotomy experiment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import DecayThresholds, classify_decay, estimate_floor
from .core import Field, Interval, RadialBall, build_mesh, check_same_mesh, validate_params
from .evolution import EvolutionConfig, evolve, stabilize_seed
from .merlezaag import ModeSeries, check_conclusion_mz, check_hypotheses_mz
from .spectrum import assemble_pencil, solve_eigens
from .stationary import solve_newton, solve_radial_shooting


@dataclass(frozen=True, eq=False)
class SubspaceSplit:
    unstable: tuple
    center: tuple
    stable: tuple              # computed stable columns; E_s also holds every uncomputed mode
    times: np.ndarray
    norm_u: np.ndarray
    norm_c: np.ndarray
    norm_s: np.ndarray         # norm of h - P_u h - P_c h
    norm_total: np.ndarray
    lam: float                 # s = lam * t with lam = min(|lambda_{-1}|, lambda_K)/2
    bessel_excess: float       # max over snapshots of |y_u|^2 + |y_c|^2 + |y_s computed|^2 - |h|^2

    @property
    def s(self):
        return self.lam * self.times

    def mode_series(self, t_lo=None, t_hi=None):
        sel = np.ones(self.times.size, dtype=bool)
        if t_lo is not None:
            sel &= self.times >= t_lo
        if t_hi is not None:
            sel &= self.times <= t_hi
        return ModeSeries(self.s[sel], self.norm_u[sel], self.norm_c[sel], self.norm_s[sel])


def split_lambda(dec):
    lam = dec.eigenvalues
    neg = lam[lam < -dec.zero_tol]
    cands = [dec.lambda_K] + ([abs(float(neg.max()))] if neg.size else [])
    return 0.5 * min(cands)


def split_trajectory(traj, dec):
    """Norms of the unstable, center and stable parts of every snapshot."""
    check_same_mesh(Field(traj.mesh, np.zeros(traj.mesh.ncells)), dec.V)
    cls = dec.classes()
    u = tuple(int(i) for i in np.nonzero(cls == "u")[0])
    c = tuple(int(i) for i in np.nonzero(cls == "c")[0])
    s = tuple(int(i) for i in np.nonzero(cls == "s")[0])
    B = dec.V.values ** (dec.params.p + 1) * dec.mesh.measures
    H = traj.snapshots
    Y = H @ (B[:, None] * dec.eigenfields)
    Phi = dec.eigenfields
    hu = Y[:, list(u)] @ Phi[:, list(u)].T if u else np.zeros_like(H)
    hc = Y[:, list(c)] @ Phi[:, list(c)].T if c else np.zeros_like(H)
    hs = H - hu - hc

    def nrm(A):
        return np.sqrt(np.sum(A * A * B, axis=1))

    total = nrm(H)
    bessel = np.sum(Y ** 2, axis=1) - total ** 2
    return SubspaceSplit(
        unstable=u,
        center=c,
        stable=s,
        times=traj.snapshot_times.copy(),
        norm_u=nrm(hu),
        norm_c=nrm(hc),
        norm_s=nrm(hs),
        norm_total=total,
        lam=split_lambda(dec),
        bessel_excess=float(bessel.max()),
    )


def measured_eps(traj, lam, t_lo=None, t_hi=None):
    """``max ||N(h)|| / ||h||`` over the window, divided by the time-scale factor ``lam``."""
    t = traj.times[:-1][: traj.nonlin_norm.size]
    sel = np.ones(t.size, dtype=bool)
    if t_lo is not None:
        sel &= t >= t_lo
    if t_hi is not None:
        sel &= t <= t_hi
    ratio = traj.nonlin_norm[sel] / traj.norm_series[:-1][sel]
    return float(np.max(ratio)) / lam


@dataclass(frozen=True)
class VerdictPair:
    mz: object                 # MzVerdict or None
    mz_error: str | None
    hypotheses_ok: bool
    hypothesis_log: tuple
    decay: object              # DichotomyVerdict
    eps: float

    @property
    def agree(self):
        if self.mz is None:
            return False
        stable = self.mz.tag == "StableDominates"
        expo = self.decay.tag == "Exponential"
        neutral = self.mz.tag == "NeutralDominates"
        alg = self.decay.tag == "AlgebraicOrSlower"
        return (stable and expo) or (neutral and alg)

    @property
    def outcome(self):
        return "Agree" if self.agree else "VerdictMismatch"


def verdicts_from_split(split, eps, t_lo, t_hi=None, thresholds=None):
    """Merle-Zaag verdict on the split norms and dichotomy verdict on the total norm."""
    series = split.mode_series(t_lo, t_hi)
    s0 = float(series.s[0])
    mz, err, ok, log = None, None, False, ()
    if 0.0 < eps < 0.01:
        try:
            ok, log = check_hypotheses_mz(series, eps, s0)
            mz = check_conclusion_mz(series, eps, s0)
        except Exception as exc:  # verifier outcomes are part of the report
            err = f"{type(exc).__name__}: {exc}"
    else:
        err = f"measured eps = {eps:.3g} lies outside (0, 1/100)"
    sel = split.times >= t_lo
    if t_hi is not None:
        sel &= split.times <= t_hi
    decay = classify_decay(split.times[sel], split.norm_total[sel], thresholds)
    return VerdictPair(mz, err, ok, tuple(log), decay, eps)


@dataclass(frozen=True)
class DichotomyConfig:
    domain: object = field(default_factory=lambda: Interval(0.0, 1.0))
    m: float = 0.5
    resolution: int = 400
    n_modes: int = 10
    seed_mode: int | None = None      # column index; None means the first stable mode
    seed_amplitude: float = 1e-3
    dt: float = 1e-3
    t_end: float = 5.0
    snapshot_stride: int = 5
    stabilize: bool = True
    window: tuple | None = None       # (t_lo, t_hi) for the verdicts; default (1, t_end)
    min_span: float = 4.0
    newton_tol: float = 1e-10


@dataclass(frozen=True, eq=False)
class DichotomyReport:
    config: DichotomyConfig
    lambda_K: float
    I: int
    K: int
    eigenvalues: np.ndarray
    verdicts: VerdictPair
    split: SubspaceSplit
    trajectory: object
    profile: object
    decomposition: object

    @property
    def outcome(self):
        return self.verdicts.outcome

    def summary(self):
        v = self.verdicts
        mz = v.mz.tag if v.mz is not None else f"none ({v.mz_error})"
        return (f"I={self.I} K={self.K} lambda_K={self.lambda_K:.8g} eps={v.eps:.3g} "
                f"mz={mz} decay={v.decay.describe()} outcome={self.outcome}")


def stationary_profile(mesh, params, tol=1e-10):
    """Newton profile, started from the shooting profile where one exists."""
    init = None
    if isinstance(mesh.domain, (Interval, RadialBall)):
        init = solve_radial_shooting(params, mesh).V
    return solve_newton(mesh, params, init=init, tol=tol)


def dichotomy_experiment(config):
    """stationary -> spectrum -> evolution -> split -> Merle-Zaag and dichotomy verdicts."""
    dim = 1 if isinstance(config.domain, Interval) else (config.domain.n if isinstance(config.domain, RadialBall) else 2)
    params = validate_params(config.m, dim)
    mesh = build_mesh(config.domain, config.resolution)
    prof = stationary_profile(mesh, params, config.newton_tol)
    dec = solve_eigens(assemble_pencil(prof, params), min(config.n_modes, mesh.ncells))
    col = dec.index_K if config.seed_mode is None else int(config.seed_mode)
    phi = dec.eigenfields[:, col]
    h0 = Field(mesh, config.seed_amplitude * phi / np.max(np.abs(phi)))
    ecfg = EvolutionConfig(dt=config.dt, t_end=config.t_end, snapshot_stride=config.snapshot_stride)
    if config.stabilize:
        h0 = stabilize_seed(h0, prof, params, ecfg, dec)
    traj = evolve(h0, prof, params, ecfg, dec)
    split = split_trajectory(traj, dec)
    t_lo, t_hi = config.window if config.window is not None else (1.0, float(traj.times[-1]))
    eps = measured_eps(traj, split.lam, t_lo, t_hi)
    floor = estimate_floor(split.times, split.norm_total)
    th = DecayThresholds(min_span=config.min_span, floor=floor if floor > 0 else None)
    verdicts = verdicts_from_split(split, eps, t_lo, t_hi, th)
    return DichotomyReport(config, dec.lambda_K, dec.I, dec.K, dec.eigenvalues, verdicts, split, traj, prof, dec)


# ---------------------------------------------------------------------------
# thin-annulus experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnulusConfig:
    r0: float = 1.0
    r1: float = 1.05
    m: float = 0.5
    radial: int = 10
    angular: tuple = (400, 800, 1600)   # refinement sweep for the near-zero eigenvalue
    run_angular: int = 800              # mesh used for the nonlinear run
    spike_width: float = 0.05           # angular width of the initial guess
    n_modes: int = 6
    seed_amplitude: float = 1e-3
    dt: float = 1e-2
    t_end: float = 5.0
    min_span: float = 4.0


@dataclass(frozen=True, eq=False)
class AnnulusReport:
    angular: tuple
    near_zero: np.ndarray          # eigenvalue closest to 0 at each angular count
    zero_tols: np.ndarray
    detected: np.ndarray           # |lambda| <= zero_tol per mesh
    observed_order: np.ndarray     # log2 ratios of successive near-zero eigenvalues
    rotation_overlap: float        # |<phi, dV/dtheta / V>| on the run mesh (normalized)
    symmetry_ratio: float          # max/min over theta of max_r V, on the run mesh
    eigenvalues: np.ndarray        # spectrum on the run mesh
    verdict: object                # DichotomyVerdict for the distance to the rotated family
    rate: float
    stable_rate: float             # first eigenvalue above the near-zero one
    distance: np.ndarray           # ||P dh/dt||_{p+1} without rotation and unstable parts
    times: np.ndarray

    @property
    def zero_mode_detected(self):
        return bool(self.detected[-1])

    @property
    def exponential(self):
        return self.verdict.tag == "Exponential"


def spike_profile(mesh, params, width):
    """Non-radial profile on an annulus mesh by Newton from a spike-shaped guess."""
    radial = solve_newton(mesh, params)
    theta = np.angle(np.exp(1j * mesh.extra["theta"]))
    guess = radial.V.values * np.exp(-(theta / width) ** 2) + 1e-300
    return solve_newton(mesh, params, init=Field(mesh, guess))


def _near_zero(dec):
    lam = dec.eigenvalues
    j = int(np.argmin(np.where(lam > -0.5 * abs(1 - dec.params.p), np.abs(lam), np.inf)))
    return j, float(lam[j])


def annulus_experiment(config=AnnulusConfig()):
    """Symmetry-broken profile on a thin annulus: rotational zero mode and a nearby run.

    The profile concentrates in angle, so V spans dozens of orders of
    magnitude; the spectrum uses the sparse solver, which never forms
    ``B^{-1/2}``. The nonlinear run starts from a seed along the rotation
    mode and the first stable mode. Convergence to the rotated family is
    read off the speed ``||dh/dt||`` with the near-zero and unstable
    components removed (h itself keeps an O(amplitude^2) offset, since a
    rotated profile is not V times a constant-in-time field).
    """
    from .core import Annulus

    params = validate_params(config.m, 2)
    dom = Annulus(config.r0, config.r1)
    near, tols, hits = [], [], []
    for nt in config.angular:
        mesh = build_mesh(dom, config.radial, angular=nt)
        prof = spike_profile(mesh, params, config.spike_width)
        dec = solve_eigens(assemble_pencil(prof, params), config.n_modes, method="sparse")
        _, lam0 = _near_zero(dec)
        near.append(lam0)
        tols.append(dec.zero_tol)
        hits.append(abs(lam0) <= dec.zero_tol)
    near = np.array(near)
    with np.errstate(divide="ignore", invalid="ignore"):
        order = np.log2(np.abs(near[:-1] / near[1:]))

    mesh = build_mesh(dom, config.radial, angular=config.run_angular)
    prof = spike_profile(mesh, params, config.spike_width)
    dec = solve_eigens(assemble_pencil(prof, params), config.n_modes, method="sparse")
    j0, _ = _near_zero(dec)
    nr, nt = mesh.shape
    v = prof.V.values.reshape(nr, nt)
    dth = 2 * math.pi / nt
    rot = ((np.roll(v, -1, 1) - np.roll(v, 1, 1)) / (2 * dth) / v).ravel()
    B = prof.V.values ** (params.p + 1) * mesh.measures
    rot /= math.sqrt(float(np.sum(rot * rot * B)))
    overlap = abs(float(np.sum(rot * dec.eigenfields[:, j0] * B)))
    ang = v.max(axis=0)

    stable = [i for i in range(dec.eigenvalues.size) if i != j0 and dec.eigenvalues[i] > dec.zero_tol]
    js = stable[0]
    seed = np.zeros(mesh.ncells)
    for j in (j0, js):
        phi = dec.eigenfields[:, j]
        seed += config.seed_amplitude * phi / np.max(np.abs(phi))
    ecfg = EvolutionConfig(dt=config.dt, t_end=config.t_end, snapshot_stride=1)
    h0 = stabilize_seed(Field(mesh, seed), prof, params, ecfg, dec)
    traj = evolve(h0, prof, params, ecfg, dec)
    # speed of the run with the rotation and unstable directions projected out:
    # it tends to zero exponentially iff the run settles onto the rotated family
    drop = [i for i in range(dec.eigenvalues.size) if dec.eigenvalues[i] < -dec.zero_tol] + [j0]
    H = traj.snapshots
    dH = np.diff(H, axis=0) / config.dt
    Phi = dec.eigenfields[:, drop]
    dH = dH - (dH @ (B[:, None] * Phi)) @ Phi.T
    dist = np.sqrt(np.sum(dH * dH * B, axis=1))
    times = traj.snapshot_times[1:]
    floor = estimate_floor(times, dist)
    th = DecayThresholds(min_span=config.min_span, floor=floor if floor > 0 else None)
    sel = times >= 1.0
    verdict = classify_decay(times[sel], dist[sel], th)
    return AnnulusReport(
        angular=tuple(config.angular),
        near_zero=near,
        zero_tols=np.array(tols),
        detected=np.array(hits),
        observed_order=order,
        rotation_overlap=overlap,
        symmetry_ratio=float(ang.max() / ang.min()),
        eigenvalues=dec.eigenvalues,
        verdict=verdict,
        rate=verdict.rate if verdict.rate is not None else math.nan,
        stable_rate=float(dec.eigenvalues[js]),
        distance=dist,
        times=times,
    )
