"""Sampled three-mode systems and discrete checks of the Merle-Zaag alternatives.

The verifiers consume sampled non-negative series (X, Y, Z) on a grid in s.
Derivatives are central differences; every differential inequality is
checked at interior samples with slack ``2 max|second difference|`` of the
differentiated series, which absorbs the O(ds^2) differencing error.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BlowUp,
    EtaBoundViolated,
    GridTooCoarse,
    HypothesesFailed,
    NotDecaying,
    ValidationError,
)

BLOWUP = 1e12
COARSE_FRACTION = 0.1
NEUTRAL_RATIO = 0.1
STABLE_FACTOR = 100.0


@dataclass(frozen=True, eq=False)
class ModeSeries:
    s: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        arrs = [np.asarray(a, dtype=float) for a in (self.X, self.Y, self.Z)]
        if s.ndim != 1 or s.size < 3 or any(a.shape != s.shape for a in arrs):
            raise ValidationError("s, X, Y, Z must be 1D arrays of equal length >= 3")
        if np.any(np.diff(s) <= 0):
            raise ValidationError("s grid must be strictly increasing")
        if any(np.any(~np.isfinite(a)) or np.any(a < 0) for a in arrs):
            raise ValidationError("X, Y, Z must be finite and non-negative")
        object.__setattr__(self, "s", s)
        for name, a in zip("XYZ", arrs):
            object.__setattr__(self, name, a)

    @property
    def total(self):
        return self.X + self.Y + self.Z

    def scaled(self, c):
        return ModeSeries(self.s, c * self.X, c * self.Y, c * self.Z)


@dataclass(frozen=True)
class ModeSystemSpec:
    """Coupled system realizing the differential inequalities with equality-type couplings.

        X' = rate_x X + eps a_x (Y + Z)
        Y' = eps (b_y (X + Z) - d_y Y) - q_y Y^2
        Z' = -rate_z Z + eps c_z (X + Y)

    With ``rate_x = rate_z = 1``, ``a_x >= -1``, ``|b_y| + d_y + q_y Y / eps <= 1``
    and ``c_z <= 1`` these satisfy the hypotheses exactly.
    """

    eps: float
    x0: float
    y0: float
    z0: float
    rate_x: float = 1.0
    rate_z: float = 1.0
    a_x: float = 0.0
    b_y: float = 0.0
    d_y: float = 0.0
    q_y: float = 0.0
    c_z: float = 0.0

    def __post_init__(self):
        if min(self.x0, self.y0, self.z0) < 0:
            raise ValidationError("initial values must be non-negative")
        if not (self.rate_x > 0 and self.rate_z > 0):
            raise ValidationError("rate_x and rate_z must be positive")
        if self.eps < 0:
            raise ValidationError("eps must be non-negative")

    def rhs(self, u):
        x, y, z = u
        e = self.eps
        return np.array([
            self.rate_x * x + e * self.a_x * (y + z),
            e * (self.b_y * (x + z) - self.d_y * y) - self.q_y * y * y,
            -self.rate_z * z + e * self.c_z * (x + y),
        ])


def simulate_mode_system(spec, s_span, ds):
    """RK4 with clamping at zero after every step."""
    s_lo, s_hi = map(float, s_span)
    if not (ds > 0 and s_hi > s_lo and np.isfinite(s_hi)):
        raise ValidationError("need ds > 0 and a finite span with s_hi > s_lo")
    n = int(round((s_hi - s_lo) / ds))
    s = s_lo + ds * np.arange(n + 1)
    out = np.empty((n + 1, 3))
    u = np.array([spec.x0, spec.y0, spec.z0], dtype=float)
    out[0] = u
    f = spec.rhs
    for k in range(n):
        k1 = f(u)
        k2 = f(u + 0.5 * ds * k1)
        k3 = f(u + 0.5 * ds * k2)
        k4 = f(u + ds * k3)
        u = np.maximum(u + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0)
        if not np.all(u <= BLOWUP):
            raise BlowUp(f"mode system exceeded {BLOWUP:g} at s = {s[k + 1]:.6g}")
        out[k + 1] = u
    return ModeSeries(s, out[:, 0], out[:, 1], out[:, 2])


# ---------------------------------------------------------------------------
# hypothesis checks
# ---------------------------------------------------------------------------

def _derivative(f, s):
    return (f[2:] - f[:-2]) / (s[2:] - s[:-2])


def derivative_slack(f):
    """``2 max|f_{i+1} - 2 f_i + f_{i-1}|``."""
    return 2.0 * float(np.max(np.abs(f[2:] - 2.0 * f[1:-1] + f[:-2])))


def _tail_index(series, s0):
    if not series.s[0] <= s0 <= series.s[-1]:
        raise ValidationError(f"s0 = {s0} lies outside the grid [{series.s[0]}, {series.s[-1]}]")
    return int(np.searchsorted(series.s, s0))


def _check_system(series, grow, decay, coupling, start):
    """Discrete check of X' - grow X >= -c(Y+Z), |Y'| <= c(X+Y+Z), Z' + decay Z <= c(X+Y)."""
    s = series.s
    X, Y, Z = series.X, series.Y, series.Z
    log = []
    slacks = {}
    # the inequalities compare against eps-multiples of the whole system, so
    # the coarseness test uses the scale of X + Y + Z
    scale = float(np.max(X + Y + Z))
    for name, f in (("X", X), ("Y", Y), ("Z", Z)):
        sl = derivative_slack(f) + 1e-12 * scale
        if scale > 0 and sl > COARSE_FRACTION * scale:
            raise GridTooCoarse(f"derivative slack for {name} is {sl:.3g}, above {COARSE_FRACTION:.0%} of the scale {scale:.3g}")
        slacks[name] = sl
    # interior samples i = 1..n-2 with s_i >= start
    idx = np.arange(1, s.size - 1)
    mask = s[idx] >= s[start]
    dX, dY, dZ = _derivative(X, s), _derivative(Y, s), _derivative(Z, s)
    Xi, Yi, Zi = X[1:-1], Y[1:-1], Z[1:-1]
    checks = (
        ("dX/ds - X >= -eps(Y+Z)", dX - grow * Xi + coupling * (Yi + Zi) + slacks["X"]),
        ("|dY/ds| <= eps(X+Y+Z)", coupling * (Xi + Yi + Zi) - np.abs(dY) + slacks["Y"]),
        ("dZ/ds + Z <= eps(X+Y)", coupling * (Xi + Yi) - dZ - decay * Zi + slacks["Z"]),
    )
    for label, margin in checks:
        bad = np.nonzero((margin < 0) & mask)[0]
        if bad.size:
            i = bad[0] + 1
            log.append(f"{label} fails at s = {s[i]:.6g} (first of {bad.size}), margin {margin[bad[0]]:.3g}")
    return not log, log


def check_hypotheses_mz(series, eps, s0):
    """Whether the three Merle-Zaag inequalities hold on ``s >= s0``; returns ``(ok, log)``."""
    if not 0.0 < eps < 0.01:
        raise ValidationError("eps must lie in (0, 1/100)")
    start = _tail_index(series, s0)
    return _check_system(series, 1.0, 1.0, eps, start)


def decays_to_floor(series, s0, rtol=1e-9):
    """Finite-horizon proxy for ``X + Y + Z -> 0``: non-increasing on the tail and strictly smaller at its end."""
    start = _tail_index(series, s0)
    S = series.total[start:]
    if S.size < 2 or not S[-1] < S[0]:
        return False
    return bool(np.all(np.diff(S) <= rtol * S[:-1]))


@dataclass(frozen=True)
class MzVerdict:
    tag: str                   # "NeutralDominates" | "StableDominates" | "Violation"
    gate_ok: bool              # X <= 2 eps (Y + Z) on the tail
    final_ratio: float         # (X + Z)/Y at the last sample
    stable_margin: float       # min of 100 eps Z - (X + Y) on the tail
    notes: tuple = field(default=("o(Y) proxied by (X+Z)/Y non-increasing on the late half of the tail and ending below 0.1",))


def check_conclusion_mz(series, eps, s0):
    """Verdict of the Merle-Zaag alternative on the tail ``s >= s0``.

    The gate ``X <= 2 eps (Y + Z)`` is tested first; a failing gate is a
    Violation regardless of the hypotheses. Otherwise the hypotheses must
    hold (else ``HypothesesFailed``) and the series must decay (else
    ``NotDecaying``).
    """
    if not 0.0 < eps < 0.01:
        raise ValidationError("eps must lie in (0, 1/100)")
    start = _tail_index(series, s0)
    X, Y, Z = series.X[start:], series.Y[start:], series.Z[start:]
    scale = float(np.max(series.total[start:]))
    gate = bool(np.all(X <= 2.0 * eps * (Y + Z) + 1e-12 * scale))
    stable_margin = float(np.min(STABLE_FACTOR * eps * Z - (X + Y)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(Y > 0, (X + Z) / Y, np.inf)
    final = float(ratio[-1])
    if not gate:
        return MzVerdict("Violation", False, final, stable_margin)
    ok, log = check_hypotheses_mz(series, eps, s0)
    if not ok:
        raise HypothesesFailed("; ".join(log))
    if not decays_to_floor(series, s0):
        raise NotDecaying("X + Y + Z does not decay over the tail")
    # o(Y) is asymptotic, so the ratio is examined on the late half of the tail
    late = ratio[ratio.size // 2:]
    neutral = bool(np.all(np.isfinite(late)) and np.all(np.diff(late) <= 1e-9 * np.maximum(late[:-1], 1e-300))
                   and final < NEUTRAL_RATIO)
    if neutral:
        return MzVerdict("NeutralDominates", True, final, stable_margin)
    if np.all(X + Y <= STABLE_FACTOR * eps * Z + 1e-12 * scale):
        return MzVerdict("StableDominates", True, final, stable_margin)
    return MzVerdict("Violation", True, final, stable_margin)


@dataclass(frozen=True)
class ChoiSunReport:
    ok: bool                # conclusion holds at every sample of [-L/2, L/2]
    margin: float           # min of (8 sigma/Lambda) Y + 4 eta e^{-Lambda L/4} - (X + Z)
    sigma_gate: bool        # sigma <= Lambda/16, the stand-in for sigma < sigma_0(Lambda)
    L: float


def check_choi_sun(series, sigma, Lambda, eta):
    """Compact-interval alternative on a grid spanning ``[-L, L]``."""
    s = series.s
    L = float(s[-1])
    if not (L > 0 and abs(s[0] + L) <= 1e-9 * L):
        raise ValidationError("series must be sampled on a symmetric interval [-L, L]")
    if not (Lambda > 0 and sigma >= 0 and eta > 0):
        raise ValidationError("need Lambda > 0, sigma >= 0, eta > 0")
    S = series.total
    if np.any(S <= 0) or np.any(S >= eta):
        raise EtaBoundViolated(f"0 < X+Y+Z < eta fails (range [{S.min():.3g}, {S.max():.3g}], eta = {eta:.3g})")
    ok, log = _check_system(series, Lambda, Lambda, sigma, 0)
    if not ok:
        raise HypothesesFailed("; ".join(log))
    mid = np.abs(s) <= 0.5 * L * (1 + 1e-12)
    rhs = 8.0 * sigma / Lambda * series.Y[mid] + 4.0 * eta * np.exp(-Lambda * L / 4.0)
    margin = float(np.min(rhs - (series.X[mid] + series.Z[mid])))
    return ChoiSunReport(margin >= 0, margin, sigma <= Lambda / 16.0, L)
