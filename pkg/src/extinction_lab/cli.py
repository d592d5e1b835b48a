"""Command-line front end: ``extinction-lab <subcommand> [options]``.

Configuration files are flat ``key=value`` text with section prefixes, for
example ``evolve.dt=1e-3``. Unknown keys and unparsable values are rejected
before any computation, so a bad configuration leaves no artifacts. Exit
codes: 0 on success, 2 on validation errors, 3 on solver failures.

``EXTLAB_THREADS`` caps the BLAS/OpenMP thread pools; it is applied before
numpy is imported, which is why the numerical modules are imported lazily.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


def apply_thread_cap(environ=os.environ):
    value = environ.get("EXTLAB_THREADS")
    if value is None:
        return None
    if not value.isdigit() or int(value) < 1:
        raise ValueError(f"EXTLAB_THREADS must be a positive integer, got {value!r}")
    for var in _THREAD_VARS:
        environ[var] = value
    return int(value)


# ---------------------------------------------------------------------------
# configuration schema
# ---------------------------------------------------------------------------

def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _pos_float(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise ValueError("must be a positive finite number")
    return v


def _finite(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text
    return parse


def _seed_mode(text):
    return "K" if text == "K" else int(text)


SCHEMA = {
    "job.id": (str, "job"),
    "output.dir": (str, "."),
    "domain.kind": (_choice("interval", "ball", "rectangle", "annulus"), "interval"),
    "domain.a": (_finite, 0.0),
    "domain.b": (_finite, 1.0),
    "domain.R": (_pos_float, 1.0),
    "domain.n": (int, 2),
    "domain.Lx": (_pos_float, 1.0),
    "domain.Ly": (_pos_float, 1.0),
    "domain.r0": (_pos_float, 1.0),
    "domain.r1": (_pos_float, 2.0),
    "mesh.resolution": (int, 400),
    "mesh.angular": (_pos_int, None),
    "params.m": (_finite, 0.5),
    "stationary.method": (_choice("newton", "shooting"), "newton"),
    "stationary.init": (_choice("auto", "eigenfunction", "spike"), "auto"),
    "stationary.spike_width": (_pos_float, 0.05),
    "stationary.tol": (_pos_float, 1e-10),
    "stationary.max_iter": (_pos_int, 100),
    "spectrum.k": (_pos_int, 10),
    "spectrum.zero_tol": (_pos_float, None),
    "spectrum.method": (_choice("auto", "dense", "sparse"), "auto"),
    "seed.mode": (_seed_mode, "K"),
    "seed.amplitude": (_finite, 1e-3),
    "seed.file": (str, None),
    "seed.stabilize": (_bool, True),
    "evolve.dt": (_pos_float, 1e-3),
    "evolve.t_end": (_pos_float, 5.0),
    "evolve.snapshot_stride": (_pos_int, 5),
    "original.T": (_pos_float, 1.0),
    "original.dt": (_pos_float, 1e-3),
    "original.t_end": (_pos_float, 5.0),
    "original.snapshot_stride": (_pos_int, 5),
    "original.window_lo": (_finite, 1.0),
    "original.window_hi": (_finite, 4.0),
    "rates.min_span": (_pos_float, 4.0),
    "rates.drift_rel": (_pos_float, 0.05),
    "split.t_lo": (_finite, 1.0),
    "split.t_hi": (_finite, None),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed, typed and validated configuration."""

    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @property
    def output_dir(self):
        return Path(self.values["output.dir"])

    @property
    def job_id(self):
        return self.values["job.id"]


def parse_config(pairs):
    """Type-convert ``pairs`` against :data:`SCHEMA`; unknown keys are errors."""
    from .errors import ValidationError

    values = {k: default for k, (_, default) in SCHEMA.items()}
    for key, raw in pairs.items():
        if key not in SCHEMA:
            raise ValidationError(f"unknown config key {key!r}")
        conv = SCHEMA[key][0]
        try:
            values[key] = conv(raw)
        except ValueError as exc:
            raise ValidationError(f"{key}={raw}: {exc}") from exc
    return ExperimentConfig(values)


def load_config(path=None, overrides=()):
    from .errors import ValidationError
    from .io import parse_kv, read_kv

    pairs = read_kv(path) if path is not None else {}
    for item in overrides:
        extra = parse_kv(item, "--set")
        if not extra:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        pairs.update(extra)
    return parse_config(pairs)


def build_domain(cfg):
    from .core import Annulus, Interval, RadialBall, Rectangle

    kind = cfg["domain.kind"]
    if kind == "interval":
        return Interval(cfg["domain.a"], cfg["domain.b"])
    if kind == "ball":
        return RadialBall(cfg["domain.R"], cfg["domain.n"])
    if kind == "rectangle":
        return Rectangle(cfg["domain.Lx"], cfg["domain.Ly"])
    return Annulus(cfg["domain.r0"], cfg["domain.r1"])


def domain_dimension(domain):
    from .core import Interval, RadialBall

    if isinstance(domain, Interval):
        return 1
    if isinstance(domain, RadialBall):
        return domain.n
    return 2


@dataclass(frozen=True, eq=False)
class Setup:
    cfg: ExperimentConfig
    domain: object
    params: object
    mesh: object


def validate_setup(cfg, evolve=False, original=False):
    """Everything that can be checked without solving: domain, params, mesh, time stepping, seed file."""
    from .core import Annulus, Interval, RadialBall, build_mesh, validate_params
    from .errors import ValidationError
    from .evolution import EvolutionConfig

    domain = build_domain(cfg)
    params = validate_params(cfg["params.m"], domain_dimension(domain))
    mesh = build_mesh(domain, cfg["mesh.resolution"], angular=cfg["mesh.angular"])
    if cfg["stationary.method"] == "shooting" and not isinstance(domain, (Interval, RadialBall)):
        raise ValidationError("shooting needs an interval or a radial ball")
    if cfg["stationary.init"] == "spike" and not isinstance(domain, Annulus):
        raise ValidationError("stationary.init=spike needs an annulus")
    if cfg["spectrum.k"] > mesh.ncells:
        raise ValidationError(f"spectrum.k = {cfg['spectrum.k']} exceeds the {mesh.ncells} cells")
    if evolve:
        EvolutionConfig(cfg["evolve.dt"], cfg["evolve.t_end"], cfg["evolve.snapshot_stride"])
    if original:
        EvolutionConfig(cfg["original.dt"], cfg["original.t_end"], cfg["original.snapshot_stride"])
        if not cfg["original.window_lo"] < cfg["original.window_hi"]:
            raise ValidationError("original.window_lo must be below original.window_hi")
    if evolve or original:
        if cfg["seed.file"] is not None and not Path(cfg["seed.file"]).is_file():
            raise ValidationError(f"seed.file {cfg['seed.file']} does not exist")
        mode = cfg["seed.mode"]
        if mode != "K" and not 0 <= mode < cfg["spectrum.k"]:
            raise ValidationError("seed.mode must be K or a column index below spectrum.k")
        if not abs(cfg["seed.amplitude"]) < 0.5:
            raise ValidationError("seed.amplitude must be below 0.5 in absolute value")
    return Setup(cfg, domain, params, mesh)


# ---------------------------------------------------------------------------
# pipeline stages
# ---------------------------------------------------------------------------

def compute_profile(setup):
    from .core import Annulus
    from .pipeline import spike_profile, stationary_profile
    from .stationary import solve_newton, solve_radial_shooting

    cfg, mesh, params = setup.cfg, setup.mesh, setup.params
    if cfg["stationary.method"] == "shooting":
        return solve_radial_shooting(params, mesh)
    init = cfg["stationary.init"]
    if init == "spike" or (init == "auto" and isinstance(setup.domain, Annulus)):
        return spike_profile(mesh, params, cfg["stationary.spike_width"])
    if init == "eigenfunction":
        return solve_newton(mesh, params, tol=cfg["stationary.tol"], max_iter=cfg["stationary.max_iter"])
    return stationary_profile(mesh, params, cfg["stationary.tol"])


def compute_spectrum(profile, params, cfg):
    from .spectrum import assemble_pencil, solve_eigens

    k = min(cfg["spectrum.k"], profile.V.mesh.ncells)
    return solve_eigens(assemble_pencil(profile, params), k, zero_tol=cfg["spectrum.zero_tol"],
                        method=cfg["spectrum.method"])


def build_seed(setup, dec):
    import numpy as np

    from .core import Field
    from .errors import SchemaMismatch
    from .io import _check_centers, _floats, read_table

    cfg, mesh = setup.cfg, setup.mesh
    if cfg["seed.file"] is not None:
        path = cfg["seed.file"]
        coords = ("x",) if mesh.dim == 1 else ("x", "y")
        _, body = read_table(path, coords + ("h",))
        if len(body) != mesh.ncells:
            raise SchemaMismatch(f"{path}: {len(body)} rows for {mesh.ncells} cells")
        _check_centers(mesh, body, path)
        return Field(mesh, _floats(body, mesh.dim, path))
    col = dec.index_K if cfg["seed.mode"] == "K" else cfg["seed.mode"]
    phi = dec.eigenfields[:, col]
    return Field(mesh, cfg["seed.amplitude"] * phi / np.max(np.abs(phi)))


def run_relative(setup, profile, dec):
    from .evolution import EvolutionConfig, evolve, stabilize_seed

    cfg = setup.cfg
    ecfg = EvolutionConfig(cfg["evolve.dt"], cfg["evolve.t_end"], cfg["evolve.snapshot_stride"])
    h0 = build_seed(setup, dec)
    if cfg["seed.stabilize"]:
        h0 = stabilize_seed(h0, profile, setup.params, ecfg, dec)
    return evolve(h0, profile, setup.params, ecfg, dec)


def _announce(path):
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_stationary(args):
    from .io import persist_profile

    setup = validate_setup(load_config(args.config, args.set))
    out = Path(args.output) if args.output else setup.cfg.output_dir
    prof = compute_profile(setup)
    _announce(persist_profile(prof, out / "profile.csv"))
    print(f"method={prof.method} residual={prof.residual_norm:.3e} energy={prof.energy:.17g}")
    return EXIT_OK


def cmd_spectrum(args):
    from .errors import ValidationError
    from .io import load_profile, persist_spectrum
    from .spectrum import assemble_pencil, solve_eigens

    if args.k < 1:
        raise ValidationError("-k must be positive")
    rec = load_profile(args.profile)
    if args.k > rec.V.mesh.ncells:
        raise ValidationError(f"-k = {args.k} exceeds the {rec.V.mesh.ncells} cells")
    out = Path(args.output) if args.output else Path(args.profile).parent
    dec = solve_eigens(assemble_pencil(rec.V, rec.params), args.k, zero_tol=args.zero_tol, method=args.method)
    _announce(persist_spectrum(dec, out, fields=not args.no_fields))
    print(f"I={dec.I} K={dec.K} lambda_K={dec.lambda_K:.17g}")
    return EXIT_OK


def cmd_evolve(args):
    from .io import fmt, persist_profile, persist_trajectory

    setup = validate_setup(load_config(args.config, args.set), evolve=True)
    out = Path(args.output) if args.output else setup.cfg.output_dir
    prof = compute_profile(setup)
    dec = compute_spectrum(prof, setup.params, setup.cfg)
    traj = run_relative(setup, prof, dec)
    _announce(persist_profile(prof, out / "profile.csv"))
    meta = {"trajectory.dt": fmt(setup.cfg["evolve.dt"]), "spectrum.lambda_K": fmt(dec.lambda_K)}
    _announce(persist_trajectory(traj, out / "trajectory.csv", meta))
    print(f"steps={traj.times.size - 1} stopped_early={traj.stopped_early} final_norm={traj.norm_series[-1]:.6e}")
    return EXIT_OK


def cmd_evolve_original(args):
    from .asymptotics import original_variable_check
    from .evolution import geometric_steps, evolve_original, perturbed_separable, stabilize_original_seed
    from .io import fmt, persist_trajectory, write_report

    setup = validate_setup(load_config(args.config, args.set), original=True)
    cfg, params = setup.cfg, setup.params
    out = Path(args.output) if args.output else cfg.output_dir
    T = cfg["original.T"]
    prof = compute_profile(setup)
    dec = compute_spectrum(prof, params, cfg)
    steps = geometric_steps(params, T, cfg["original.dt"], cfg["original.t_end"])
    h0 = build_seed(setup, dec)
    if cfg["seed.stabilize"]:
        h0 = stabilize_original_seed(h0, prof, params, T, steps, dec)
    traj = evolve_original(perturbed_separable(prof, params, T, h0), params, steps,
                           snapshot_stride=cfg["original.snapshot_stride"])
    window = (cfg["original.window_lo"], cfg["original.window_hi"])
    rep = original_variable_check(traj, prof, params, T, lambda_K=dec.lambda_K, reference="discrete", window=window)
    _announce(persist_trajectory(traj, out / "trajectory_original.csv",
                                 {"original.T": fmt(T), "spectrum.lambda_K": fmt(dec.lambda_K)}))
    _announce(write_report(out / "original_check.csv", {
        "job": cfg.job_id, "exponent": rep.exponent, "predicted_exponent": rep.predicted_exponent,
        "rescaled_rate": rep.rescaled_rate, "lambda_K": dec.lambda_K, "reference": rep.reference}))
    print(f"exponent={rep.exponent:.6g} predicted={rep.predicted_exponent:.6g}")
    return EXIT_OK


def cmd_rates(args):
    import numpy as np

    from .asymptotics import DecayThresholds, classify_decay
    from .errors import ValidationError
    from .io import load_trajectory, verdict_record, write_report

    rec = load_trajectory(args.trajectory)
    columns = {"norm_p1": rec.norm_p1, "norm_inf": rec.norm_inf}
    if rec.projections is not None:
        columns.update({f"y_{j}": np.abs(rec.projections[:, j]) for j in range(rec.projections.shape[1])})
    if args.column not in columns:
        raise ValidationError(f"column {args.column!r} not in {sorted(columns)}")
    t, v = rec.t, columns[args.column]
    sel = np.ones(t.size, dtype=bool)
    if args.t_lo is not None:
        sel &= t >= args.t_lo
    if args.t_hi is not None:
        sel &= t <= args.t_hi
    th = DecayThresholds(min_span=args.min_span, drift_rel=args.drift_rel)
    verdict = classify_decay(t[sel], v[sel], th)
    line = verdict_record(verdict)
    print(line)
    if args.output:
        ef = verdict.evidence.get("exp")
        _announce(write_report(Path(args.output), {
            "column": args.column, "tag": verdict.tag,
            "rate": verdict.rate if verdict.rate is not None else math.nan,
            "exponent": verdict.exponent if verdict.exponent is not None else math.nan,
            "exp_slope": ef.slope if ef is not None else math.nan,
            "exp_drift": ef.drift if ef is not None else math.nan}))
    return EXIT_OK


def cmd_split(args):
    from .io import fmt, persist_modeseries
    from .pipeline import measured_eps, split_trajectory

    setup = validate_setup(load_config(args.config, args.set), evolve=True)
    cfg = setup.cfg
    out = Path(args.output) if args.output else cfg.output_dir
    prof = compute_profile(setup)
    dec = compute_spectrum(prof, setup.params, cfg)
    traj = run_relative(setup, prof, dec)
    split = split_trajectory(traj, dec)
    t_lo, t_hi = cfg["split.t_lo"], cfg["split.t_hi"]
    eps = measured_eps(traj, split.lam, t_lo, t_hi)
    series = split.mode_series(t_lo, t_hi)
    _announce(persist_modeseries(series, out / "modeseries.csv",
                                 {"split.lam": fmt(split.lam), "split.eps": fmt(eps)}))
    print(f"lam={split.lam:.6g} eps={eps:.6g} I={dec.I} K={dec.K}")
    return EXIT_OK


def cmd_mzcheck(args):
    from .errors import ValidationError
    from .io import load_modeseries, read_meta, write_report
    from .merlezaag import check_conclusion_mz, check_hypotheses_mz

    series = load_modeseries(args.modeseries)
    eps = args.eps
    if eps is None:
        meta = read_meta(args.modeseries)
        if "split.eps" not in meta:
            raise ValidationError("--eps is required when the mode series carries no measured eps")
        eps = float(meta["split.eps"])
    s0 = float(series.s[0]) if args.s0 is None else args.s0
    ok, log = check_hypotheses_mz(series, eps, s0)
    for line in log:
        print(line, file=sys.stderr)
    verdict = check_conclusion_mz(series, eps, s0)
    print(f"tag={verdict.tag} gate={str(verdict.gate_ok).lower()} final_ratio={verdict.final_ratio:.6g} "
          f"hypotheses={str(ok).lower()}")
    if args.output:
        _announce(write_report(Path(args.output), {
            "tag": verdict.tag, "gate_ok": verdict.gate_ok, "hypotheses_ok": ok, "eps": eps,
            "final_ratio": verdict.final_ratio, "stable_margin": verdict.stable_margin}))
    return EXIT_OK


def cmd_dichotomy(args):
    from .asymptotics import DecayThresholds, estimate_floor
    from .io import atomic_write_text, fmt, persist_modeseries, persist_trajectory, verdict_record, write_report
    from .pipeline import measured_eps, split_trajectory, verdicts_from_split
    from .plotting import plot_dichotomy

    setup = validate_setup(load_config(args.config, args.set), evolve=True)
    cfg = setup.cfg
    out = Path(args.output) if args.output else cfg.output_dir
    prof = compute_profile(setup)
    dec = compute_spectrum(prof, setup.params, cfg)
    traj = run_relative(setup, prof, dec)
    split = split_trajectory(traj, dec)
    t_lo = cfg["split.t_lo"]
    t_hi = cfg["split.t_hi"] if cfg["split.t_hi"] is not None else float(traj.times[-1])
    eps = measured_eps(traj, split.lam, t_lo, t_hi)
    floor = estimate_floor(split.times, split.norm_total)
    th = DecayThresholds(min_span=cfg["rates.min_span"], drift_rel=cfg["rates.drift_rel"],
                         floor=floor if floor > 0 else None)
    pair = verdicts_from_split(split, eps, t_lo, t_hi, th)
    mz = pair.mz.tag if pair.mz is not None else "None"
    _announce(persist_trajectory(traj, out / "trajectory.csv", {"spectrum.lambda_K": fmt(dec.lambda_K)}))
    _announce(persist_modeseries(split.mode_series(t_lo, t_hi), out / "modeseries.csv",
                                 {"split.lam": fmt(split.lam), "split.eps": fmt(eps)}))
    _announce(write_report(out / "report.csv", {
        "job": cfg.job_id, "I": dec.I, "K": dec.K, "lambda_K": dec.lambda_K, "eps": eps, "mz": mz,
        "decay": pair.decay.tag,
        "rate": pair.decay.rate if pair.decay.rate is not None else math.nan,
        "outcome": pair.outcome}))
    summary = (f"job {cfg.job_id}\n"
               f"spectrum: I={dec.I} K={dec.K} lambda_K={dec.lambda_K:.10g}\n"
               f"measured eps: {eps:.4g}\n"
               f"merle-zaag: {mz}" + (f" ({pair.mz_error})" if pair.mz_error else "") + "\n"
               f"decay: {verdict_record(pair.decay)}\n"
               f"outcome: {pair.outcome}\n")
    _announce(atomic_write_text(out / "summary.txt", summary))
    _announce(plot_dichotomy(split, out / "dichotomy.svg", title=cfg.job_id))
    print(summary, end="")
    return EXIT_OK


def cmd_plot(args):
    from .errors import SchemaMismatch
    from .io import load_modeseries, load_spectrum, load_trajectory, read_table
    from .plotting import emit_plot

    path = Path(args.input)
    header, _ = read_table(path)
    out = Path(args.output) if args.output else path.with_suffix(".svg")
    if header[:4] == ("t", "norm_p1", "norm_inf", "energy"):
        rec = load_trajectory(path)
        kind = args.kind or "norm"
        series = {"norm_p1": (rec.t, rec.norm_p1), "norm_inf": (rec.t, rec.norm_inf)}
    elif header == ("s", "X", "Y", "Z"):
        ms = load_modeseries(path)
        kind = args.kind or "modeseries"
        series = {"X": (ms.s, ms.X), "Y": (ms.s, ms.Y), "Z": (ms.s, ms.Z)}
    elif header == ("index", "lambda", "class"):
        rec = load_spectrum(path.parent, fields=False)
        kind = args.kind or "spectrum"
        series = (rec.index.astype(float), rec.eigenvalues)
    else:
        raise SchemaMismatch(f"{path}: no plot recipe for header {','.join(header)}")
    _announce(emit_plot(series, kind, out, title=args.title, xlabel="s" if kind == "modeseries" else "t"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="extinction-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def configured(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one key")
        p.add_argument("-o", "--output", help="output directory (default: output.dir)")
        p.set_defaults(func=func)
        return p

    configured("stationary", cmd_stationary, "solve for the stationary profile; writes profile.csv")
    configured("evolve", cmd_evolve, "relative-error run; writes trajectory.csv")
    configured("evolve-original", cmd_evolve_original, "original-variable run and exponent check")
    configured("split", cmd_split, "relative-error run split into unstable/center/stable norms")
    configured("dichotomy", cmd_dichotomy, "end-to-end dichotomy experiment with consolidated report")

    p = sub.add_parser("spectrum", help="eigenpairs of the linearized operator for a saved profile")
    p.add_argument("--profile", required=True)
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--zero-tol", type=float, default=None)
    p.add_argument("--method", choices=("auto", "dense", "sparse"), default="auto")
    p.add_argument("--no-fields", action="store_true", help="skip the eigen_<i>.csv files")
    p.add_argument("-o", "--output", help="output directory (default: next to the profile)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("rates", help="classify the decay of a saved trajectory column")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--column", default="norm_p1")
    p.add_argument("--t-lo", type=float, default=None)
    p.add_argument("--t-hi", type=float, default=None)
    p.add_argument("--min-span", type=float, default=4.0)
    p.add_argument("--drift-rel", type=float, default=0.05)
    p.add_argument("-o", "--output", help="CSV report path")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("mzcheck", help="Merle-Zaag hypotheses and verdict for a saved mode series")
    p.add_argument("--modeseries", required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--s0", type=float, default=None)
    p.add_argument("-o", "--output", help="CSV report path")
    p.set_defaults(func=cmd_mzcheck)

    p = sub.add_parser("plot", help="SVG figure of a saved trajectory, mode series or spectrum")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", choices=("norm", "dichotomy", "modeseries", "spectrum"), default=None)
    p.add_argument("--title", default=None)
    p.add_argument("-o", "--output", help="SVG path (default: input with .svg suffix)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    try:
        apply_thread_cap()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    parser = build_parser()
    args = parser.parse_args(argv)

    from .errors import SolverError, ValidationError

    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
