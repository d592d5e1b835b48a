"""Static SVG figures for decay series, dichotomy reports and mode series.

Output is byte-deterministic for fixed input: the SVG hash salt is fixed,
the date stamp is dropped and text is emitted as paths.
"""
from __future__ import annotations

import io as _io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import EmptySeries, ValidationError  # noqa: E402
from .io import atomic_write_text  # noqa: E402

KINDS = ("norm", "dichotomy", "modeseries", "spectrum")
_RC = {
    "svg.hashsalt": "extinction-lab",
    "svg.fonttype": "path",
    "figure.dpi": 72,
    "font.size": 9,
}


def _as_series(series):
    """Normalise input to an ordered list of ``(label, x, y)``."""
    if isinstance(series, dict):
        items = list(series.items())
    elif isinstance(series, (list, tuple)) and len(series) == 2 and not isinstance(series[0], str):
        items = [("", series)]
    else:
        raise ValidationError("series must be (x, y) or a mapping label -> (x, y)")
    out = []
    for label, (x, y) in items:
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.size != y.size:
            raise ValidationError(f"series {label!r}: x and y lengths differ")
        out.append((str(label), x, y))
    if not out or any(x.size == 0 for _, x, _ in out):
        raise EmptySeries("nothing to plot")
    return out


def _positive(x, y, need_x=False):
    keep = np.isfinite(y) & (y > 0)
    if need_x:
        keep &= x > 0
    return x[keep], y[keep]


def _finish(ax, xlabel, ylabel, labelled):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    if labelled:
        ax.legend(loc="best")


def _render(fig, path):
    buf = _io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return atomic_write_text(path, buf.getvalue())


def emit_plot(series, kind, path, title=None, xlabel="t", ylabel=None):
    """Write an SVG figure of ``series`` to ``path``.

    kind ``norm``: semilog-y of each series. ``dichotomy``: two panels,
    semilog-y and log-log, of the same series. ``modeseries``: semilog-y of
    ``{"X": (s, X), ...}``. ``spectrum``: eigenvalue against index.
    """
    if kind not in KINDS:
        raise ValidationError(f"plot kind must be one of {KINDS}, got {kind!r}")
    items = _as_series(series)
    labelled = any(label for label, _, _ in items)
    with matplotlib.rc_context(_RC):
        if kind == "dichotomy":
            fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.6))
            for label, x, y in items:
                a1.semilogy(*_positive(x, y), label=label or None)
                a2.loglog(*_positive(x, y, need_x=True), label=label or None)
            _finish(a1, xlabel, ylabel or "norm", labelled)
            _finish(a2, xlabel, ylabel or "norm", False)
            a1.set_title("semilog-y")
            a2.set_title("log-log")
        else:
            fig, ax = plt.subplots(figsize=(6, 3.6))
            for label, x, y in items:
                if kind == "spectrum":
                    ax.plot(x, y, "o", ms=3, label=label or None)
                    ax.axhline(0.0, color="0.5", lw=0.8)
                else:
                    ax.semilogy(*_positive(x, y), label=label or None)
            default_y = {"norm": "norm", "modeseries": "X, Y, Z", "spectrum": "eigenvalue"}[kind]
            _finish(ax, xlabel if kind != "spectrum" else "index", ylabel or default_y, labelled)
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        return _render(fig, path)


def plot_modeseries(series, path, title=None):
    return emit_plot({"X": (series.s, series.X), "Y": (series.s, series.Y), "Z": (series.s, series.Z)},
                     "modeseries", path, title=title, xlabel="s")


def plot_dichotomy(split, path, title=None):
    """Two-panel figure of the total norm and the three subspace norms of a split."""
    t = split.times
    return emit_plot({"total": (t, split.norm_total), "unstable": (t, split.norm_u),
                      "neutral": (t, split.norm_c), "stable": (t, split.norm_s)},
                     "dichotomy", path, title=title)
