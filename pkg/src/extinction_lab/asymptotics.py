"""Decay-rate extraction, the exponential/algebraic dichotomy classifier and
expansion coefficients of decaying runs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Field
from .errors import (
    MismatchedProfile,
    ModeCutoffEmpty,
    NonPositiveValues,
    NotDecaying,
    ValidationError,
    WindowTooShort,
)
from .evolution import discrete_separable_amplitudes
from .spectrum import _profile_field

MIN_SAMPLES = 20


@dataclass(frozen=True)
class RateFit:
    window: tuple
    slope: float          # decay rate; positive means decay
    intercept: float
    rms_residual: float
    drift: float          # |slope(first half) - slope(second half)|
    samples: int

    @property
    def relative_drift(self):
        return self.drift / abs(self.slope) if self.slope != 0 else math.inf


def _line(x, y):
    A = np.vstack((x, np.ones_like(x))).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res ** 2)))


def _loglinear(x, values, window, what):
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    if x.shape != v.shape:
        raise ValidationError("times and values must have equal length")
    if window is None:
        sel = np.ones(x.size, dtype=bool)
    else:
        lo, hi = window
        if not lo < hi:
            raise ValidationError("window needs t_lo < t_hi")
        sel = (x >= lo) & (x <= hi)
    if int(sel.sum()) < MIN_SAMPLES:
        raise WindowTooShort(f"{what} fit needs at least {MIN_SAMPLES} samples, got {int(sel.sum())}")
    xs, vs = x[sel], v[sel]
    if np.any(~(vs > 0)):
        raise NonPositiveValues("values must be positive on the fit window")
    ly = np.log(vs)
    slope, icpt, rms = _line(xs, ly)
    half = xs.size // 2
    s1 = _line(xs[:half], ly[:half])[0]
    s2 = _line(xs[half:], ly[half:])[0]
    return RateFit((float(xs[0]), float(xs[-1])), -slope, icpt, rms, abs(s1 - s2), int(xs.size))


def fit_exponential_rate(times, values, window=None):
    """Least-squares line through ``(t, log value)``; ``slope`` is the decay rate."""
    return _loglinear(times, values, window, "exponential")


def fit_algebraic_exponent(times, values, window=None):
    """Least-squares line through ``(log t, log value)``; ``slope`` is the decay exponent."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, v = t[sel], v[sel]
    if np.any(t <= 0):
        raise ValidationError("algebraic fit needs t > 0 on the window")
    fit = _loglinear(np.log(t), v, None, "algebraic")
    return RateFit((float(t[0]), float(t[-1])), fit.slope, fit.intercept, fit.rms_residual, fit.drift, fit.samples)


@dataclass(frozen=True)
class DecayThresholds:
    drift_rel: float = 0.05
    min_span: float = 10.0
    window_fraction: float = 0.4
    floor: float | None = None
    floor_factor: float = 100.0
    plateau_elasticity: float = 0.05


@dataclass(frozen=True)
class DichotomyVerdict:
    tag: str                  # "Exponential" | "AlgebraicOrSlower" | "Inconclusive"
    rate: float | None = None
    exponent: float | None = None
    t_value_min: float | None = None
    window: tuple | None = None
    truncated: bool = False
    floor: float = 0.0
    evidence: dict = field(default_factory=dict)

    def describe(self):
        if self.tag == "Exponential":
            return f"Exponential{{{self.rate:.6g}}}"
        if self.tag == "AlgebraicOrSlower":
            return f"AlgebraicOrSlower{{{self.exponent:.6g}}}"
        return "Inconclusive"


def estimate_floor(times, values, thresholds=DecayThresholds()):
    """Noise floor of a decaying series, or 0 if none is visible.

    A floor shows up either as a flat tail (log-log slope of the last 10%
    below ``plateau_elasticity``) or as a minimum followed by growth.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    n = v.size
    i_min = int(np.argmin(v))
    if i_min < n - 1 and v[-1] > 2.0 * v[i_min]:
        return float(v[i_min])
    tail = slice(max(0, n - max(n // 10, 3)), n)
    tt, vt = t[tail], v[tail]
    if np.all(tt > 0) and tt.size >= 3 and vt.min() > 0 and v[0] > 1e3 * vt.min():
        el = abs(_line(np.log(tt), np.log(vt))[0])
        if el < thresholds.plateau_elasticity:
            return float(np.median(vt))
    return 0.0


def classify_decay(times, values, thresholds=None):
    """Exponential vs algebraic-or-slower verdict on the late window of a series."""
    th = thresholds or DecayThresholds()
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < MIN_SAMPLES:
        raise WindowTooShort(f"need at least {MIN_SAMPLES} samples")
    if np.any(~(v > 0)):
        raise NonPositiveValues("series must be positive")
    # only a declared solver floor truncates the series; an estimated floor is
    # reported together with the window it would leave
    estimated = estimate_floor(t, v, th)
    floor = th.floor if th.floor is not None else 0.0
    keep = np.arange(t.size)
    truncated = False
    if floor > 0:
        above = v > th.floor_factor * floor
        cut = int(np.argmin(above)) if not above.all() else t.size
        truncated = cut < t.size
        keep = keep[:cut]
    suggested = None
    if th.floor is None and estimated > 0:
        above = v > th.floor_factor * estimated
        cut = int(np.argmin(above)) if not above.all() else t.size
        suggested = (float(t[0]), float(t[max(cut - 1, 0)]))
    if keep.size < MIN_SAMPLES or t[keep[-1]] - t[keep[0]] < th.min_span:
        return DichotomyVerdict("Inconclusive", truncated=truncated, floor=floor,
                                evidence={"reason": "span below minimum after floor truncation",
                                          "floor_estimate": estimated, "suggested_window": suggested})
    n_win = max(MIN_SAMPLES, int(round(th.window_fraction * keep.size)))
    idx = keep[-n_win:]
    tw, vw = t[idx], v[idx]
    window = (float(tw[0]), float(tw[-1]))
    ev = {"floor_estimate": estimated, "suggested_window": suggested}
    candidates = []
    ef = fit_exponential_rate(tw, vw)
    ev["exp"] = ef
    if ef.slope > 0 and ef.drift <= th.drift_rel * ef.slope:
        candidates.append(("Exponential", ef))
    if tw[0] > 0:
        af = fit_algebraic_exponent(tw, vw)
        ev["alg"] = af
        if af.slope > 0 and af.drift <= th.drift_rel * af.slope:
            candidates.append(("AlgebraicOrSlower", af))
    if not candidates:
        return DichotomyVerdict("Inconclusive", window=window, truncated=truncated, floor=floor, evidence=ev)
    tag, fit = min(candidates, key=lambda c: c[1].rms_residual)
    if tag == "Exponential":
        return DichotomyVerdict(tag, rate=fit.slope, window=window, truncated=truncated, floor=floor, evidence=ev)
    return DichotomyVerdict(tag, exponent=fit.slope, t_value_min=float(np.min(tw * vw)), window=window,
                            truncated=truncated, floor=floor, evidence=ev)


# ---------------------------------------------------------------------------
# expansion coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionReport:
    lam: float
    mu: float
    modes: tuple                 # retained column indices of the decomposition
    mode_rates: np.ndarray       # decay rates used for the retained modes
    coefficients: np.ndarray     # C_i, one per retained mode
    noise: np.ndarray            # spread of e^{r_i t} y_i on the averaging window
    residual_times: np.ndarray
    residual_series: np.ndarray
    residual_fit: RateFit | None
    predicted_rate: float
    resonant: bool
    window: tuple

    @property
    def residual_rate(self):
        return self.residual_fit.slope if self.residual_fit is not None else math.nan

    def vanishing(self, below):
        """Retained modes with eigenvalue in [0, below)."""
        return [j for j, r in enumerate(self.mode_rates) if 0.0 <= r < below]


def discrete_mode_rate(lam, dt):
    """Decay rate of a linear mode under implicit Euler with step ``dt``."""
    lam = np.asarray(lam, dtype=float)
    if dt is None or dt <= 0:
        return lam
    return np.log1p(lam * dt) / dt


def extract_coefficients(traj, dec, lam, window=None, resonance_tol=None, discrete=True):
    """Fit ``h(t) ~ sum_i C_i e^{-lambda_i t} phi_i`` over modes with ``0 <= lambda_i < 2 lambda``.

    ``C_i`` is the late-window limit of ``e^{lambda_i t} y_i(t)``: a line is
    fitted over the last quarter of ``window`` and evaluated at its right end.
    With ``discrete=True`` each mode's decay rate is the implicit-Euler rate
    ``log(1 + lambda_i dt)/dt`` of the stepper that produced the run, so the
    subtraction is not polluted by O(dt) rate mismatch.
    """
    if not lam > 0:
        raise NotDecaying("lambda must be positive")
    if traj.kind != "relative":
        raise ValidationError("extract_coefficients needs a rescaled-variable trajectory")
    t_all = traj.snapshot_times
    snaps = traj.snapshots
    B = dec.V.values ** (dec.params.p + 1) * dec.mesh.measures
    Y = snaps @ (B[:, None] * dec.eigenfields)
    norms = np.sqrt(np.sum(snaps ** 2 * B, axis=1))
    if window is None:
        window = (t_all[0] + 0.25 * (t_all[-1] - t_all[0]), t_all[-1])
    sel = (t_all >= window[0]) & (t_all <= window[1])
    if np.count_nonzero(sel) < MIN_SAMPLES:
        raise WindowTooShort("window holds too few snapshots")
    if fit_exponential_rate(t_all[sel], norms[sel]).slope <= 0:
        raise NotDecaying("norm series is not decaying on the window")
    eig = dec.eigenvalues
    keep = [i for i in range(eig.size) if eig[i] >= -dec.zero_tol and eig[i] < 2.0 * lam]
    if not keep:
        raise ModeCutoffEmpty(f"no non-negative eigenvalue below 2*lambda = {2 * lam}")
    above = eig[eig >= 2.0 * lam]
    mu = float(above.min()) if above.size else math.inf
    dt = traj.info.get("dt") if discrete else None
    rates = discrete_mode_rate(np.maximum(eig[keep], 0.0), dt)

    tw = t_all[sel]
    q = tw >= tw[0] + 0.75 * (tw[-1] - tw[0])
    coeffs, noise = [], []
    for j, i in enumerate(keep):
        g = np.exp(rates[j] * tw) * Y[sel, i]
        slope, icpt, rms = _line(tw[q], g[q])
        coeffs.append(slope * tw[-1] + icpt)
        noise.append(rms + abs(slope) * (tw[q][-1] - tw[q][0]))
    coeffs = np.array(coeffs)

    approx = (np.exp(-np.outer(t_all, rates)) * coeffs) @ dec.eigenfields[:, keep].T
    diff = snaps - approx
    resid = np.sqrt(np.sum(diff ** 2 * B, axis=1))
    if resonance_tol is None:
        resonance_tol = 2.0 * dec.zero_tol
    resonant = math.isfinite(mu) and abs(mu - 2.0 * lam) < resonance_tol
    predicted = min(2.0 * lam, mu)
    fit = None
    rs = resid[sel]
    if np.all(rs > 0):
        vals = rs / tw if resonant else rs
        if resonant and np.any(tw <= 0):
            vals = rs
        fit = fit_exponential_rate(tw, vals)
    return ExpansionReport(
        lam=float(lam),
        mu=mu,
        modes=tuple(keep),
        mode_rates=rates,
        coefficients=coeffs,
        noise=np.array(noise),
        residual_times=t_all,
        residual_series=resid,
        residual_fit=fit,
        predicted_rate=predicted,
        resonant=resonant,
        window=(float(tw[0]), float(tw[-1])),
    )


# ---------------------------------------------------------------------------
# original variables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OriginalVariableReport:
    one_minus_tau: np.ndarray     # 1 - tau/T (effective value for the discrete reference)
    normalized_diff: np.ndarray   # (T - tau)^{-1/(1-m)} ||w - W||_inf
    exponent_fit: RateFit | None  # slope = exponent in (1 - tau/T)
    predicted_exponent: float | None
    rescaled_rate: float          # exponent * (1-m)/m
    log_bound_constant: float     # max of 1/(d log^2(1-tau/T)); finite means the slow-decay form holds
    reference: str

    @property
    def exponent(self):
        return self.exponent_fit.slope if self.exponent_fit is not None else math.nan


def original_variable_check(traj, V, params, T, lambda_K=None, reference="exact", window=None):
    """Normalized distance to the separable solution and its power in ``1 - tau/T``.

    ``reference="exact"`` compares with ``W(tau)`` built from ``V`` and ``T``.
    ``reference="discrete"`` compares with ``c_k V^p`` where ``c_k`` solves
    the scalar implicit-Euler recursion of the run's own steps, and uses
    ``(c_k/c_0)^{1-m}`` as the effective ``1 - tau/T``. If ``V`` is the
    discrete profile, that reference is the exact numerical separable
    solution, so time and space discretization errors drop out.
    """
    V = _profile_field(V)
    if traj.kind != "original":
        raise ValidationError("original_variable_check needs an original-variable trajectory")
    if not V.mesh.same_as(traj.mesh):
        raise MismatchedProfile("profile and trajectory live on different meshes")
    m, p = params.m, params.p
    Vp = V.values ** p
    tau = traj.snapshot_times
    if reference == "exact":
        ok = tau < T
        x = 1.0 - tau[ok] / T
        amp = ((1.0 - m) * (T - tau[ok])) ** (1.0 / (1.0 - m))
        snaps = traj.snapshots[ok]
    elif reference == "discrete":
        steps = traj.info["steps"]
        c = discrete_separable_amplitudes(params, ((1.0 - m) * T) ** (1.0 / (1.0 - m)), steps)
        # snapshot k sits at the cumulative step index matching its time
        cum = np.concatenate(([0.0], np.cumsum(steps)))
        idx = np.searchsorted(cum, tau - 1e-12 * max(1.0, tau[-1]))
        amp = c[idx]
        x = (amp / c[0]) ** (1.0 - m)
        snaps = traj.snapshots
    else:
        raise ValidationError(f"unknown reference {reference!r}")
    d = (1.0 - m) ** (1.0 / (1.0 - m)) * np.max(np.abs(snaps - amp[:, None] * Vp), axis=1) / amp
    pred = None if lambda_K is None else m * lambda_K / (1.0 - m)
    fit = None
    if np.all(d[1:] > 0) and d.size > MIN_SAMPLES:
        # fit in the variable -log(1 - tau/T); ``window`` is given in these units
        lx = -np.log(x)
        sel = np.ones(d.size, dtype=bool) if window is None else (lx >= window[0]) & (lx <= window[1])
        sel &= d > 0
        if np.count_nonzero(sel) >= MIN_SAMPLES:
            fit = fit_exponential_rate(lx[sel], d[sel])
    with np.errstate(divide="ignore"):
        lb = 1.0 / (d * np.log(x) ** 2)
    lbc = float(np.max(lb[np.isfinite(lb)])) if np.any(np.isfinite(lb)) else math.inf
    rate = fit.slope * (1.0 - m) / m if fit is not None else math.nan
    return OriginalVariableReport(x, d, fit, pred, rate, lbc, reference)
