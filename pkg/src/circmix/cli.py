"""Command-line interface.

Subcommands: simulate, fit, density, bench, slope, ident.  Sample files are
newline-delimited angles in radians; all diagnostics go to stderr.

Exit codes: 0 success; 2 usage / bad flag or spec; 3 unreadable or
malformed input file; 4 estimation failure; 5 inference (covariance)
failure; 6 experiment or calibration failure.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import bench
from .circ import MixtureParams, normalize, parse_density, sample_mixture
from .contrast import FitOptions, estimate_theta
from .errors import (CalibrationError, CircmixError, DomainError, EstimationError,
                     ExperimentError, InferenceError)
from .ident import classify, mixture_residual
from .npdens import estimate_density

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_ESTIMATION = 4
EXIT_INFERENCE = 5
EXIT_EXPERIMENT = 6


class _CliUsage(CircmixError):
    pass


def _parse_theta(text: str, degrees: bool, p_cap: float = 0.5) -> MixtureParams:
    parts = text.split(",")
    if len(parts) != 3:
        raise _CliUsage("theta must be 'p,alpha,beta'")
    try:
        p, alpha, beta = (float(v) for v in parts)
    except ValueError as exc:
        raise _CliUsage(f"theta components must be numeric: {text!r}") from exc
    if degrees:
        alpha, beta = math.radians(alpha), math.radians(beta)
    if not 0.0 <= p < p_cap:
        raise _CliUsage(f"p must lie in [0, {p_cap:g}), got {p}")
    return MixtureParams(p, normalize(alpha), normalize(beta))


def _read_angles(path: str) -> np.ndarray:
    try:
        with open(path) as fh:
            lines = [line.strip() for line in fh]
    except OSError as exc:
        raise FileNotFoundError(f"cannot read sample file {path}: {exc}") from exc
    values = []
    for i, line in enumerate(lines, 1):
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{i}: not a number: {line!r}") from exc
    if not values:
        raise ValueError(f"{path}: no angles found")
    return normalize(np.array(values))


def _fit_options(args, covariance: bool) -> FitOptions:
    kwargs = dict(n_starts=args.starts, seed=args.seed, p_max=args.pmax,
                  compute_covariance=covariance)
    if getattr(args, "box", None):
        parts = [float(v) for v in args.box.split(",")]
        if len(parts) != 6:
            raise _CliUsage("--box must be pmin,pmax,amin,amax,bmin,bmax")
        kwargs.update(p_min=parts[0], p_max=parts[1],
                      angle_min=parts[2], angle_max=parts[3])
        if (parts[2], parts[3]) != (parts[4], parts[5]):
            raise _CliUsage("--box currently requires identical alpha and beta ranges")
    if getattr(args, "tol", None) is not None:
        kwargs.update(xatol=args.tol)
    return FitOptions(**kwargs)


def _write_or_print(text: str, out: str | None):
    if out in (None, "-"):
        print(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text + "\n")


def cmd_simulate(args) -> int:
    density = parse_density(args.density)
    theta = _parse_theta(args.theta, args.degrees)
    if args.n < 1:
        raise _CliUsage("--n must be >= 1")
    rng = np.random.default_rng(args.seed)
    sample = sample_mixture(theta, density, args.n, rng)
    lines = "\n".join(f"{x:.12g}" for x in sample.angles)
    _write_or_print(lines, args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    angles = _read_angles(args.infile)
    if len(angles) < 2:
        raise EstimationError("estimation needs at least 2 angles")
    fit = estimate_theta(angles, _fit_options(args, covariance=not args.no_cov))
    if fit.near_degenerate:
        print("warning: near-degenerate fit, beta - alpha close to a multiple of 2*pi/3",
              file=sys.stderr)
    if args.format == "csv":
        _write_or_print(fit.CSV_HEADER + "\n" + fit.to_csv_row(), args.out)
    else:
        _write_or_print(fit.to_kv_record(), args.out)
    if not args.no_cov and fit.std_errors is None:
        print(f"warning: covariance unavailable: {fit.inference_warning}", file=sys.stderr)
        return EXIT_INFERENCE
    return EXIT_OK


def cmd_density(args) -> int:
    angles = _read_angles(args.infile)
    if len(angles) < 2:
        raise EstimationError("estimation needs at least 2 angles")
    fit = estimate_theta(angles, _fit_options(args, covariance=False))
    penalty = None if args.penalty == "slope" else float(args.penalty)
    estimate = estimate_density(angles, fit, l_max=args.lmax, penalty=penalty,
                                p_cap=args.pmax)
    x, f_hat = estimate.grid(args.grid)
    header = ["x", "f_hat"]
    cols = [x, f_hat]
    if args.true_density:
        true = parse_density(args.true_density)
        header.append("f")
        cols.append(true.pdf(x))
    rows = [[bench.FLOAT_FMT.format(c[i]) for c in cols] for i in range(len(x))]
    bench.write_csv(args.out, header, rows)
    if args.coeffs_out:
        lm = estimate.coeffs.l_max
        bench.write_csv(args.coeffs_out, ["l", "re_f_hat", "im_f_hat"],
                        [[l, bench.FLOAT_FMT.format(estimate.coeffs.f(l).real),
                          bench.FLOAT_FMT.format(estimate.coeffs.f(l).imag)]
                         for l in range(-lm, lm + 1)])
    print(f"L_hat = {estimate.level}")
    print(f"lambda = {estimate.penalty:.6g}")
    if estimate.slope_fit is not None:
        floor = estimate.slope_fit.theoretical_floor
        print(f"lambda_floor_diagnostic = {floor:.6g} "
              f"({'above' if estimate.penalty >= floor else 'below'} theoretical floor)")
    return EXIT_OK


def cmd_slope(args) -> int:
    angles = _read_angles(args.infile)
    if len(angles) < 2:
        raise EstimationError("estimation needs at least 2 angles")
    fit = estimate_theta(angles, _fit_options(args, covariance=False))
    estimate = estimate_density(angles, fit, l_max=args.lmax, p_cap=args.pmax)
    slope_fit = estimate.slope_fit
    window = set(slope_fit.window)
    bench.write_csv(args.out,
                    ["L", "penalty_shape", "coeff_mass", "in_window", "slope", "lambda_hat"],
                    [[L, bench.FLOAT_FMT.format(xv), bench.FLOAT_FMT.format(yv),
                      int(L in window), bench.FLOAT_FMT.format(slope_fit.slope),
                      bench.FLOAT_FMT.format(slope_fit.lambda_hat)]
                     for L, xv, yv in slope_fit.couples])
    print(f"slope = {slope_fit.slope:.6g}")
    print(f"lambda_hat = {slope_fit.lambda_hat:.6g}")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = bench.ExperimentConfig.from_file(args.config)
    if args.out:
        config = _replace_config(config, outdir=args.out)
    if args.jobs:
        config = _replace_config(config, jobs=args.jobs)
    results = bench.run_experiments(config)
    for kind in config.experiments:
        if kind == "mse":
            for row in results[kind]:
                print(f"mse: density={row.density} n={row.n} excluded={row.excluded} "
                      f"p={row.mse_p:.5e} alpha={row.mse_alpha:.5e} beta={row.mse_beta:.5e}")
        elif kind == "normality":
            for s in results[kind][0]:
                print(f"normality: n={s.n} coord={s.coord} mean={s.mean:.4f} "
                      f"var={s.variance:.4f} skew={s.skewness:.4f} reps={s.reps_used}")
        elif kind == "density":
            info = results[kind][1]
            print(f"density: L_hat={info['level']} lambda={info['penalty']:.6g} "
                  f"l2_error_f={info['l2_error_f']:.6g}")
        elif kind == "slope":
            sf = results[kind][0]
            print(f"slope: a={sf.slope:.6g} lambda_hat={sf.lambda_hat:.6g}")
    return EXIT_OK


def _replace_config(config, **kwargs):
    from dataclasses import replace
    return replace(config, **kwargs)


def cmd_ident(args) -> int:
    theta = _parse_theta(args.theta, args.degrees, p_cap=1.0)
    density = parse_density(args.density) if args.density else None
    # CLI inputs are typically rounded, so the default classification
    # tolerance here is looser than the library's exact 1e-9.
    result = classify(theta, tol=args.tol, density=density)
    print(f"tag = {result.tag.value}")
    rows = []
    for w in result.witnesses:
        tp = w.theta_prime
        line = (f"witness {w.kind.value}: p'={tp.p:.6g} alpha'={tp.alpha:.6g} "
                f"beta'={tp.beta:.6g} weights="
                + ";".join(f"({s:.6g},{wt:.6g})" for s, wt in w.f_weights))
        residual = ""
        if density is not None:
            residual = mixture_residual(theta, density, w)
            line += f" residual={residual:.3e}"
        if w.f_prime_nonneg is not None:
            line += f" f_prime_nonneg={w.f_prime_nonneg} f_prime_min={w.f_prime_min:.6g}"
        print(line)
        rows.append([w.kind.value, f"{tp.p:.12g}", f"{tp.alpha:.12g}", f"{tp.beta:.12g}",
                     "" if residual == "" else f"{residual:.5e}"])
    if args.out:
        bench.write_csv(args.out,
                        ["kind", "p_prime", "alpha_prime", "beta_prime", "residual"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="circmix",
        description="Semiparametric estimation for two-component rotation mixtures "
                    "of circular data.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a sample from the mixture model")
    sim.add_argument("--density", required=True, help="e.g. 'vonmises:kappa=5'")
    sim.add_argument("--theta", required=True, help="p,alpha,beta (radians)")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--degrees", action="store_true",
                     help="interpret the theta angles in degrees")
    sim.add_argument("--out", default="-", help="output file, '-' for stdout")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="estimate (p, alpha, beta) from a sample file")
    _add_fit_flags(fit)
    fit.add_argument("--no-cov", action="store_true", help="skip covariance estimation")
    fit.add_argument("--format", choices=("kv", "csv"), default="kv")
    fit.add_argument("--out", default="-")
    fit.set_defaults(func=cmd_fit)

    dens = sub.add_parser("density", help="adaptive component-density estimate")
    _add_fit_flags(dens)
    dens.add_argument("--lmax", type=int, default=None)
    dens.add_argument("--lambda", dest="penalty", default="slope",
                      help="penalty constant, or 'slope' for the data-driven choice")
    dens.add_argument("--grid", type=int, default=512)
    dens.add_argument("--true", dest="true_density", default=None,
                      help="optional true density spec to tabulate alongside")
    dens.add_argument("--coeffs-out", default=None)
    dens.add_argument("--out", required=True)
    dens.set_defaults(func=cmd_density)

    slo = sub.add_parser("slope", help="slope-heuristic couples and lambda_hat")
    _add_fit_flags(slo)
    slo.add_argument("--lmax", type=int, default=None)
    slo.add_argument("--out", required=True)
    slo.set_defaults(func=cmd_slope)

    ben = sub.add_parser("bench", help="run Monte Carlo experiments from a config file")
    ben.add_argument("--config", required=True)
    ben.add_argument("--out", default=None, help="override the output directory")
    ben.add_argument("--jobs", type=int, default=None, help="worker processes")
    ben.set_defaults(func=cmd_bench)

    ide = sub.add_parser("ident", help="identifiability classification and aliases")
    ide.add_argument("--theta", required=True)
    ide.add_argument("--tol", type=float, default=1e-3,
                     help="classification tolerance in radians")
    ide.add_argument("--degrees", action="store_true")
    ide.add_argument("--density", default=None,
                     help="optional density spec for residual and positivity checks")
    ide.add_argument("--out", default=None, help="optional CSV of witnesses")
    ide.set_defaults(func=cmd_ident)
    return parser


def _add_fit_flags(sub):
    sub.add_argument("--in", dest="infile", required=True, help="sample file")
    sub.add_argument("--starts", type=int, default=10)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--pmax", type=float, default=0.49)
    sub.add_argument("--box", default=None,
                     help="pmin,pmax,amin,amax,bmin,bmax search box")
    sub.add_argument("--tol", type=float, default=None,
                     help="parameter tolerance of the simplex search")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (_CliUsage, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except InferenceError as exc:
        print(f"inference error: {exc}", file=sys.stderr)
        return EXIT_INFERENCE
    except (CalibrationError, ExperimentError) as exc:
        print(f"experiment error: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
