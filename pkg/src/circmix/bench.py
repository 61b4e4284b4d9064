"""Monte Carlo experiment harness: MSE tables, normality diagnostics,
slope-calibration couples, and density-reconstruction curves.

Every replication derives its generator from the root seed and its indices,
so runs are byte-identical across repeats and across worker counts; results
are aggregated in replication order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .circ import MixtureParams, parse_density, sample_mixture
from .contrast import FitOptions, estimate_theta, squared_error
from .errors import EstimationError, ExperimentError
from .npdens import default_l_max, estimate_density, l2_error

EXPERIMENT_KINDS = ("mse", "normality", "density", "slope")
_STREAM_TAG = {kind: i for i, kind in enumerate(EXPERIMENT_KINDS)}

FLOAT_FMT = "{:.5e}"  # six significant digits, '.' decimal separator


@dataclass(frozen=True)
class ExperimentConfig:
    density_spec: str
    theta0: MixtureParams
    n_list: tuple
    reps: int
    seed: int
    experiments: tuple = ("mse",)
    n_starts: int = 10
    p_max: float = 0.49
    l_max: int | None = None
    penalty: float | None = None  # None -> slope heuristic
    jobs: int = 1
    outdir: str = "."

    def __post_init__(self):
        if self.reps < 1:
            raise ExperimentError("reps must be >= 1")
        if not self.n_list or any(n < 2 for n in self.n_list):
            raise ExperimentError("all sample sizes must be >= 2")
        if self.seed is None:
            raise ExperimentError("bench experiments refuse to run unseeded")
        unknown = set(self.experiments) - set(EXPERIMENT_KINDS)
        if unknown:
            raise ExperimentError(f"unknown experiments: {sorted(unknown)}")

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        values = {}
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ExperimentError(f"malformed config line: {raw.strip()!r}")
                key, _, val = line.partition("=")
                values[key.strip().lower()] = val.strip()
        return cls.from_dict(values)

    @classmethod
    def from_dict(cls, values: dict) -> "ExperimentConfig":
        values = dict(values)

        def pop(key, default=None, required=False):
            if key in values:
                return values.pop(key)
            if required:
                raise ExperimentError(f"config key {key!r} is required")
            return default

        density = pop("density", required=True)
        theta_raw = pop("theta0", required=True)
        try:
            p, alpha, beta = (float(v) for v in theta_raw.split(","))
        except ValueError as exc:
            raise ExperimentError("theta0 must be 'p,alpha,beta'") from exc
        n_list = tuple(int(v) for v in str(pop("n", required=True)).split(","))
        seed_raw = pop("seed")
        if seed_raw is None:
            raise ExperimentError("bench experiments refuse to run unseeded; set seed")
        experiments = tuple(v.strip() for v in str(pop("experiment", "mse")).split(",") if v.strip())
        penalty_raw = pop("lambda", "slope")
        penalty = None if str(penalty_raw).lower() == "slope" else float(penalty_raw)
        l_max_raw = pop("l_max", None)
        cfg = cls(
            density_spec=density,
            theta0=MixtureParams(p, alpha, beta),
            n_list=n_list,
            reps=int(pop("reps", required=True)),
            seed=int(seed_raw),
            experiments=experiments,
            n_starts=int(pop("starts", 10)),
            p_max=float(pop("p_max", 0.49)),
            l_max=None if l_max_raw is None else int(l_max_raw),
            penalty=penalty,
            jobs=int(pop("jobs", 1)),
            outdir=str(pop("out", ".")),
        )
        if values:
            raise ExperimentError(f"unknown config keys: {sorted(values)}")
        return cfg

    def fit_options(self, seed: int, covariance: bool) -> FitOptions:
        return FitOptions(n_starts=self.n_starts, seed=seed, p_max=self.p_max,
                          compute_covariance=covariance)


def _rep_rng(config: ExperimentConfig, kind: str, n: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([config.seed, _STREAM_TAG[kind], n, rep]))


def _map_reps(config: ExperimentConfig, worker, tasks):
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(worker, tasks, chunksize=1))
    return [worker(t) for t in tasks]


def _fmt(x) -> str:
    return FLOAT_FMT.format(float(x))


def write_csv(path: str, header, rows) -> str:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")
    return path


@dataclass
class MseRow:
    density: str
    n: int
    reps: int
    excluded: int
    mse_p: float
    mse_alpha: float
    mse_beta: float


def _mse_rep(task):
    config, n, rep = task
    rng = _rep_rng(config, "mse", n, rep)
    density = parse_density(config.density_spec)
    sample = sample_mixture(config.theta0, density, n, rng)
    opts = config.fit_options(seed=int(rng.integers(2 ** 31)), covariance=False)
    try:
        fit = estimate_theta(sample, opts)
    except EstimationError:
        return None
    return squared_error(fit.theta_hat, config.theta0)


def run_mse(config: ExperimentConfig, write: bool = True) -> list:
    """Mean squared errors of theta_hat per sample size.

    Angular errors use the squared distance modulo pi (documented in the
    output header name); replications whose fit fails are excluded and
    counted, and more than 10% failures abort the experiment.
    """
    rows = []
    label = parse_density(config.density_spec).label
    for n in config.n_list:
        results = _map_reps(config, _mse_rep,
                            [(config, n, r) for r in range(config.reps)])
        good = [r for r in results if r is not None]
        excluded = config.reps - len(good)
        if excluded > 0.1 * config.reps:
            raise ExperimentError(
                f"{excluded}/{config.reps} replications failed at n={n}")
        mse = np.mean(good, axis=0)
        rows.append(MseRow(label, n, config.reps, excluded, *mse))
    if write:
        write_csv(os.path.join(config.outdir, "mse.csv"),
                  ["density", "n", "reps", "excluded",
                   "mse_p", "mse_alpha_modpi", "mse_beta_modpi"],
                  [[r.density, r.n, r.reps, r.excluded,
                    _fmt(r.mse_p), _fmt(r.mse_alpha), _fmt(r.mse_beta)] for r in rows])
    return rows


def _normality_rep(task):
    config, n, rep = task
    rng = _rep_rng(config, "normality", n, rep)
    density = parse_density(config.density_spec)
    sample = sample_mixture(config.theta0, density, n, rng)
    opts = config.fit_options(seed=int(rng.integers(2 ** 31)), covariance=True)
    try:
        fit = estimate_theta(sample, opts)
    except EstimationError:
        return None
    if fit.std_errors is None or np.any(fit.std_errors <= 0):
        return None
    err = fit.theta_hat.as_array() - config.theta0.as_array()
    for j in (1, 2):  # signed angular error modulo pi
        err[j] = math.remainder(err[j], math.pi)
    return err, err / fit.std_errors


@dataclass
class NormalitySummary:
    n: int
    coord: str
    mean: float
    variance: float
    skewness: float
    reps_used: int


def run_normality(config: ExperimentConfig, write: bool = True):
    """Centered/standardized fit statistics for histogramming.

    Emits per-replication raw errors and standardized values; returns
    per-coordinate summaries.  Covariance failures beyond 10% abort.
    """
    if config.reps < 50:
        raise ExperimentError("normality experiments need reps >= 50")
    csv_rows = []
    summaries = []
    raw_by_n = {}
    for n in config.n_list:
        results = _map_reps(config, _normality_rep,
                            [(config, n, r) for r in range(config.reps)])
        good = [(i, r) for i, r in enumerate(results) if r is not None]
        if config.reps - len(good) > 0.1 * config.reps:
            raise ExperimentError(
                f"covariance unavailable in {config.reps - len(good)}/{config.reps} reps at n={n}")
        errs = np.array([r[0] for _, r in good])
        zs = np.array([r[1] for _, r in good])
        raw_by_n[n] = (errs, zs)
        for (i, _), e, z in zip(good, errs, zs):
            csv_rows.append([n, i, *[_fmt(v) for v in e], *[_fmt(v) for v in z]])
        for j, coord in enumerate(("p", "alpha", "beta")):
            zj = zs[:, j]
            m, v = float(zj.mean()), float(zj.var(ddof=1))
            skew = float(np.mean((zj - m) ** 3) / v ** 1.5) if v > 0 else 0.0
            summaries.append(NormalitySummary(n, coord, m, v, skew, len(zj)))
    if write:
        write_csv(os.path.join(config.outdir, "normality.csv"),
                  ["n", "rep", "err_p", "err_alpha", "err_beta",
                   "z_p", "z_alpha", "z_beta"], csv_rows)
    return summaries, raw_by_n


def run_density_recon(config: ExperimentConfig, write: bool = True):
    """Single-replication reconstruction curves for f and the mixture g.

    Emits a 512-point grid with the true and estimated component density
    and the corresponding mixtures; returns the grid arrays and the
    realized squared L2 error of f_hat.
    """
    if len(config.n_list) != 1:
        raise ExperimentError("density reconstruction uses a single sample size")
    n = config.n_list[0]
    rng = _rep_rng(config, "density", n, 0)
    density = parse_density(config.density_spec)
    sample = sample_mixture(config.theta0, density, n, rng)
    fit = estimate_theta(sample, config.fit_options(seed=int(rng.integers(2 ** 31)),
                                                    covariance=False))
    estimate = estimate_density(sample, fit, l_max=config.l_max,
                                penalty=config.penalty, p_cap=config.p_max)
    x, f_hat = estimate.grid(512)
    f_true = density.pdf(x)
    from .circ import mixture_density
    g_true = mixture_density(config.theta0, density, x)
    g_hat = estimate.mixture_pdf(x)
    info = {
        "level": estimate.level,
        "penalty": estimate.penalty,
        "l2_error_f": l2_error(estimate, density),
        "theta_hat": fit.theta_hat,
    }
    if write:
        write_csv(os.path.join(config.outdir, "density.csv"),
                  ["x", "f", "f_hat", "g", "g_hat"],
                  [[_fmt(a), _fmt(b), _fmt(c), _fmt(d), _fmt(e)]
                   for a, b, c, d, e in zip(x, f_true, f_hat, g_true, g_hat)])
    return (x, f_true, f_hat, g_true, g_hat), info


def run_slope(config: ExperimentConfig, write: bool = True):
    """Slope-calibration couples for one replication.

    Emits ((2L+1)/n, sum_{|l|<=L} |f_hat_l|^2) for L = 0..l_max together
    with the fitted slope and lambda_hat.
    """
    if len(config.n_list) != 1:
        raise ExperimentError("slope experiments use a single sample size")
    n = config.n_list[0]
    rng = _rep_rng(config, "slope", n, 0)
    density = parse_density(config.density_spec)
    sample = sample_mixture(config.theta0, density, n, rng)
    fit = estimate_theta(sample, config.fit_options(seed=int(rng.integers(2 ** 31)),
                                                    covariance=False))
    l_max = config.l_max if config.l_max is not None else default_l_max(n)
    estimate = estimate_density(sample, fit, l_max=l_max, p_cap=config.p_max)
    slope_fit = estimate.slope_fit
    if slope_fit is None:
        from .npdens import slope_lambda
        slope_fit = slope_lambda(estimate.coeffs)
    if write:
        window = set(slope_fit.window)
        write_csv(os.path.join(config.outdir, "slope.csv"),
                  ["L", "penalty_shape", "coeff_mass", "in_window",
                   "slope", "lambda_hat"],
                  [[L, _fmt(x), _fmt(y), int(L in window),
                    _fmt(slope_fit.slope), _fmt(slope_fit.lambda_hat)]
                   for L, x, y in slope_fit.couples])
    return slope_fit, estimate


def run_experiments(config: ExperimentConfig) -> dict:
    """Run every experiment listed in the config; returns per-kind results."""
    os.makedirs(config.outdir, exist_ok=True)
    out = {}
    for kind in config.experiments:
        if kind == "mse":
            out[kind] = run_mse(config)
        elif kind == "normality":
            out[kind] = run_normality(config)
        elif kind == "density":
            out[kind] = run_density_recon(config)
        elif kind == "slope":
            out[kind] = run_slope(config)
    return out
