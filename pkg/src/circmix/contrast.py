"""Minimum-contrast estimation of the mixture parameters (p, alpha, beta).

The empirical contrast is the diagonal-removed U-statistic

    S_n(theta) = 1/(n(n-1)) * sum_{l=-4..4} sum_{k != j} Z_k^l Z_j^l,
    Z_k^l(theta) = Im(e^{i l X_k} M^l(theta)) / (2 pi),
    M^l(theta)   = p e^{-i l alpha} + (1-p) e^{-i l beta}.

Expanding the off-diagonal double sum as (sum_k Z)^2 - sum_k Z^2 and using
that Z, its gradient and Hessian are all linear in e^{i l X_k}, every
quantity needed by the optimizer reduces to the power sums
P_m = sum_k e^{i m X_k} for m <= 8.  Those are computed once per sample
(O(n)); each contrast evaluation afterwards costs O(1).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, minimize

from .circ import ANGLE_TOL, MixtureParams, Sample, normalize
from .errors import DomainError, EstimationError, InferenceError

TWO_PI = 2.0 * math.pi
FOUR_PI2 = 4.0 * math.pi ** 2
L_MAX_CONTRAST = 4

#: Reciprocal-condition floor below which the curvature matrix is treated
#: as singular.
RCOND_MIN = 1e-10

#: Estimates closer than this (radians) to a multiple of 2*pi/3 in
#: beta - alpha are flagged as near-non-identifiable.
DEGENERACY_WARN_RADIUS = 0.05


def _theta_array(theta) -> np.ndarray:
    if isinstance(theta, MixtureParams):
        return theta.as_array()
    arr = np.asarray(theta, dtype=float)
    if arr.shape != (3,):
        raise DomainError("theta must have three components (p, alpha, beta)")
    return arr


def mixture_weight(theta, l: int) -> complex:
    """M^l(theta) = p e^{-i l alpha} + (1-p) e^{-i l beta}."""
    p, alpha, beta = _theta_array(theta)
    return p * cmath.exp(-1j * l * alpha) + (1.0 - p) * cmath.exp(-1j * l * beta)


def mixture_weight_grad(theta, l: int) -> np.ndarray:
    """Gradient of M^l with respect to (p, alpha, beta), complex 3-vector."""
    p, alpha, beta = _theta_array(theta)
    ea = cmath.exp(-1j * l * alpha)
    eb = cmath.exp(-1j * l * beta)
    return np.array([ea - eb, -1j * l * p * ea, -1j * l * (1.0 - p) * eb])


def mixture_weight_hess(theta, l: int) -> np.ndarray:
    """Hessian of M^l with respect to (p, alpha, beta), complex 3x3."""
    p, alpha, beta = _theta_array(theta)
    ea = cmath.exp(-1j * l * alpha)
    eb = cmath.exp(-1j * l * beta)
    il = 1j * l
    l2 = float(l * l)
    return np.array([
        [0.0, -il * ea, il * eb],
        [-il * ea, -l2 * p * ea, 0.0],
        [il * eb, 0.0, -l2 * (1.0 - p) * eb],
    ])


def z_values(angles, l: int, theta) -> np.ndarray:
    """Z_k^l(theta) = Im(e^{i l X_k} M^l(theta)) / (2 pi) for each angle."""
    m = mixture_weight(theta, l)
    return np.imag(np.exp(1j * l * np.asarray(angles, dtype=float)) * m) / TWO_PI


def z_grads(angles, l: int, theta) -> np.ndarray:
    """Gradients of Z_k^l, shape (n, 3)."""
    dm = mixture_weight_grad(theta, l)
    phases = np.exp(1j * l * np.asarray(angles, dtype=float))
    return np.imag(phases[:, None] * dm[None, :]) / TWO_PI


def z_hessians(angles, l: int, theta) -> np.ndarray:
    """Hessians of Z_k^l, shape (n, 3, 3)."""
    d2m = mixture_weight_hess(theta, l)
    phases = np.exp(1j * l * np.asarray(angles, dtype=float))
    return np.imag(phases[:, None, None] * d2m[None, :, :]) / TWO_PI


class ContrastMoments:
    """Power sums of a sample, from which S_n and its derivatives follow.

    Holds P_m = sum_k e^{i m X_k} for m = 1..8; evaluation of the contrast
    at any theta is then O(1).
    """

    def __init__(self, angles):
        angles = np.asarray(angles, dtype=float)
        if angles.ndim != 1:
            raise DomainError("angles must be one-dimensional")
        if len(angles) < 2:
            raise DomainError("the contrast needs at least two observations")
        self.angles = angles
        self.n = len(angles)
        base = np.exp(1j * angles)
        power = base.copy()
        sums = []
        for _ in range(2 * L_MAX_CONTRAST):
            sums.append(complex(power.sum()))
            power = power * base
        self.power_sums = sums  # index m-1 holds P_m

    def _per_level(self, theta_arr):
        p, alpha, beta = theta_arr
        q = 1.0 - p
        ea_step = cmath.exp(-1j * alpha)
        eb_step = cmath.exp(-1j * beta)
        ea, eb = 1.0 + 0.0j, 1.0 + 0.0j
        for l in range(1, L_MAX_CONTRAST + 1):
            ea *= ea_step
            eb *= eb_step
            yield l, p, q, ea, eb, self.power_sums[l - 1], self.power_sums[2 * l - 1]

    def value(self, theta) -> float:
        """S_n(theta)."""
        theta_arr = _theta_array(theta)
        n = self.n
        total = 0.0
        for l, p, q, ea, eb, pl, p2l in self._per_level(theta_arr):
            m = p * ea + q * eb
            a = (m * pl).imag / TWO_PI
            b = (n * (m.real * m.real + m.imag * m.imag) - (m * m * p2l).real) / (2.0 * FOUR_PI2)
            total += a * a - b
        return 2.0 * total / (n * (n - 1))

    def value_grad(self, theta):
        """(S_n, gradient)."""
        value, grad, _ = self._derivatives(theta, hessian=False)
        return value, grad

    def value_grad_hess(self, theta):
        """(S_n, gradient, Hessian)."""
        return self._derivatives(theta, hessian=True)

    def _derivatives(self, theta, hessian: bool):
        theta_arr = _theta_array(theta)
        n = self.n
        value = 0.0
        grad = np.zeros(3)
        hess = np.zeros((3, 3)) if hessian else None
        for l, p, q, ea, eb, pl, p2l in self._per_level(theta_arr):
            m = p * ea + q * eb
            il = 1j * l
            dm = np.array([ea - eb, -il * p * ea, -il * q * eb])
            a = (m * pl).imag / TWO_PI
            b = (n * abs(m) ** 2 - (m * m * p2l).real) / (2.0 * FOUR_PI2)
            value += a * a - b
            # T = sum_k e^{ilX_k} Z_k^l = (M P_2l - n conj(M)) / (4 pi i)
            t = (m * p2l - n * m.conjugate()) / (4j * math.pi)
            g_sum = np.imag(dm * pl) / TWO_PI          # sum_k dZ_k
            zg_cross = np.imag(dm * t) / TWO_PI        # sum_k dZ_k Z_k
            grad += 2.0 * (g_sum * a - zg_cross)
            if hessian:
                l2 = float(l * l)
                d2m = np.array([
                    [0.0, -il * ea, il * eb],
                    [-il * ea, -l2 * p * ea, 0.0],
                    [il * eb, 0.0, -l2 * q * eb],
                ])
                h_sum = np.imag(d2m * pl) / TWO_PI     # sum_k d2Z_k
                h_cross = np.imag(d2m * t) / TWO_PI    # sum_k d2Z_k Z_k
                outer_conj = np.real(dm[:, None] * dm.conjugate()[None, :])
                outer_plain = np.real(dm[:, None] * dm[None, :] * p2l)
                gg_cross = (n * outer_conj - outer_plain) / (2.0 * FOUR_PI2)
                hess += h_sum * a - h_cross + np.outer(g_sum, g_sum) - gg_cross
        scale = 2.0 / (n * (n - 1))
        value *= scale
        grad *= scale
        if hessian:
            hess *= 2.0 * scale
        return value, grad, hess


def contrast(sample, theta):
    """Evaluate S_n with gradient and Hessian at theta.

    Returns (value, gradient, hessian); the Hessian is exactly symmetric.
    """
    moments = _as_moments(sample)
    return moments.value_grad_hess(theta)


def contrast_value(sample, theta) -> float:
    """S_n(theta) alone."""
    return _as_moments(sample).value(theta)


def _as_moments(sample) -> ContrastMoments:
    if isinstance(sample, ContrastMoments):
        return sample
    if isinstance(sample, Sample):
        return ContrastMoments(sample.angles)
    return ContrastMoments(np.asarray(sample, dtype=float))


def population_contrast(theta, theta0, f_coeffs) -> float:
    """Population contrast S(theta) = sum_l Im(g_l conj(M^l(theta)))^2.

    ``f_coeffs`` are the component coefficients f_1..f_4 (real, nonzero);
    the mixture coefficients are g_l = M^l(theta0) f_l.  By conjugate
    antisymmetry the sum over l = -4..4 equals twice the sum over l = 1..4.
    """
    f_coeffs = np.asarray(f_coeffs, dtype=float)
    if f_coeffs.shape != (4,):
        raise DomainError("f_coeffs must hold the four coefficients f_1..f_4")
    total = 0.0
    for l in range(1, L_MAX_CONTRAST + 1):
        g = mixture_weight(theta0, l) * f_coeffs[l - 1]
        total += (g * mixture_weight(theta, l).conjugate()).imag ** 2
    return 2.0 * total


@dataclass(frozen=True)
class FitOptions:
    """Settings for the multi-start constrained minimization of S_n."""

    n_starts: int = 10
    seed: int = 0
    p_min: float = 0.01
    p_max: float = 0.49
    angle_min: float = 0.0
    angle_max: float = math.pi - 1e-9
    xatol: float = 1e-8
    fatol: float = 1e-10
    maxiter: int = 2000
    polish: bool = False
    compute_covariance: bool = True

    def box(self) -> np.ndarray:
        return np.array([
            [self.p_min, self.p_max],
            [self.angle_min, self.angle_max],
            [self.angle_min, self.angle_max],
        ])


@dataclass
class LocalMinimum:
    theta: np.ndarray
    value: float
    converged: bool
    start_index: int


@dataclass
class FitResult:
    """Outcome of estimate_theta.

    ``covariance`` is the estimated covariance of theta_hat itself
    (Sigma_hat / n); ``sigma_hat`` is the asymptotic covariance of
    sqrt(n) (theta_hat - theta0).  Both are None when inference failed.
    """

    theta_hat: MixtureParams
    contrast_at_min: float
    n_starts: int
    all_local_minima: list
    n: int
    converged_starts: int
    near_degenerate: bool
    covariance: np.ndarray | None = None
    sigma_hat: np.ndarray | None = None
    std_errors: np.ndarray | None = None
    inference_warning: str | None = None
    meta: dict = field(default_factory=dict)

    def to_kv_record(self) -> str:
        lines = [
            f"n = {self.n}",
            f"p_hat = {self.theta_hat.p:.12g}",
            f"alpha_hat = {self.theta_hat.alpha:.12g}",
            f"beta_hat = {self.theta_hat.beta:.12g}",
            f"contrast_at_min = {self.contrast_at_min:.12g}",
            f"n_starts = {self.n_starts}",
            f"converged_starts = {self.converged_starts}",
            f"near_degenerate = {int(self.near_degenerate)}",
        ]
        if self.std_errors is not None:
            lines += [
                f"se_p = {self.std_errors[0]:.12g}",
                f"se_alpha = {self.std_errors[1]:.12g}",
                f"se_beta = {self.std_errors[2]:.12g}",
            ]
        if self.inference_warning:
            lines.append(f"inference_warning = {self.inference_warning}")
        return "\n".join(lines)

    CSV_HEADER = "n,p_hat,alpha_hat,beta_hat,contrast_at_min,converged_starts,near_degenerate,se_p,se_alpha,se_beta"

    def to_csv_row(self) -> str:
        se = ["", "", ""]
        if self.std_errors is not None:
            se = [f"{v:.5e}" for v in self.std_errors]
        fields = [
            str(self.n),
            f"{self.theta_hat.p:.5e}",
            f"{self.theta_hat.alpha:.5e}",
            f"{self.theta_hat.beta:.5e}",
            f"{self.contrast_at_min:.5e}",
            str(self.converged_starts),
            str(int(self.near_degenerate)),
            *se,
        ]
        return ",".join(fields)


def canonicalize(theta: MixtureParams) -> MixtureParams:
    """Resolve label switching by enforcing p < 1/2."""
    if theta.p > 0.5:
        return theta.switched()
    return theta


def degeneracy_gap(theta) -> float:
    """Distance of beta - alpha to the nearest multiple of 2*pi/3."""
    _, alpha, beta = _theta_array(theta)
    period = TWO_PI / 3.0
    d = math.fmod(beta - alpha, period)
    if d < 0:
        d += period
    return min(d, period - d)


def estimate_theta(sample, options: FitOptions | None = None) -> FitResult:
    """Minimize S_n over the box by multi-start Nelder-Mead.

    Starts are drawn uniformly on the box; the lowest local minimum wins,
    with ties (contrast difference below 1e-12) broken toward the earliest
    start.  Label switching is resolved by p < 1/2; fits with beta - alpha
    within DEGENERACY_WARN_RADIUS of a multiple of 2*pi/3 are flagged.
    """
    opts = options or FitOptions()
    moments = _as_moments(sample)
    box = opts.box()
    if not (0.0 < opts.p_min <= opts.p_max):
        raise DomainError("fit box requires 0 < p_min <= p_max")
    rng = np.random.default_rng(opts.seed)
    starts = rng.uniform(box[:, 0], box[:, 1], size=(opts.n_starts, 3))
    # One extra deterministic start at the argmin of a coarse grid scan;
    # the global basin can be narrow enough that ten uniform draws all miss
    # it, and grid evaluations are O(1) each after the power-sum precompute.
    starts = np.vstack([starts, _grid_start(moments, box)])
    bounds = Bounds(box[:, 0], box[:, 1])
    minima: list[LocalMinimum] = []
    for i, x0 in enumerate(starts):
        candidates = []
        res = minimize(
            moments.value, x0, method="Nelder-Mead", bounds=bounds,
            options={"xatol": opts.xatol, "fatol": opts.fatol,
                     "maxiter": opts.maxiter, "maxfev": 4 * opts.maxiter},
        )
        candidates.append(res)
        # The clipped simplex degenerates on the box faces and can miss the
        # global basin; a projected-gradient run from the same start and a
        # polish of the simplex endpoint recover it at negligible cost.
        for z0 in (x0, res.x):
            candidates.append(minimize(
                lambda t: moments.value_grad(t)[0], z0,
                jac=lambda t: moments.value_grad(t)[1],
                method="L-BFGS-B", bounds=bounds,
                options={"ftol": 1e-13, "gtol": 1e-9, "maxiter": 500},
            ))
        finite = [c for c in candidates if np.isfinite(c.fun)]
        if finite:
            local_best = min(finite, key=lambda c: c.fun)
            minima.append(LocalMinimum(theta=np.asarray(local_best.x, dtype=float),
                                       value=float(local_best.fun),
                                       converged=any(c.success for c in finite),
                                       start_index=i))
    converged = [m for m in minima if m.converged]
    if not converged:
        raise EstimationError(
            f"no start converged within {opts.maxiter} iterations "
            f"(best contrast {min((m.value for m in minima), default=float('nan'))!r})")
    # lowest converged minimum; ties under 1e-12 keep the earliest start
    best = converged[0]
    for m in converged[1:]:
        if m.value < best.value - 1e-12:
            best = m
    if opts.polish:
        res = minimize(lambda t: moments.value_grad(t)[0], best.theta,
                       jac=lambda t: moments.value_grad(t)[1],
                       method="L-BFGS-B", bounds=bounds)
        if res.fun <= best.value:
            best = LocalMinimum(np.asarray(res.x, dtype=float), float(res.fun),
                                True, best.start_index)
    theta_hat = canonicalize(MixtureParams(*best.theta))
    result = FitResult(
        theta_hat=theta_hat,
        contrast_at_min=best.value,
        n_starts=len(starts),
        all_local_minima=minima,
        n=moments.n,
        converged_starts=len(converged),
        near_degenerate=degeneracy_gap(theta_hat) < DEGENERACY_WARN_RADIUS,
    )
    if opts.compute_covariance:
        try:
            sigma, se = asymptotic_cov(moments, theta_hat)
            result.sigma_hat = sigma
            result.covariance = sigma / moments.n
            result.std_errors = se
        except InferenceError as exc:
            result.inference_warning = str(exc)
    return result


def _grid_start(moments: ContrastMoments, box: np.ndarray,
                shape=(9, 18, 18)) -> np.ndarray:
    ps = np.linspace(box[0, 0], box[0, 1], shape[0])
    alphas = np.linspace(box[1, 0], box[1, 1], shape[1])
    betas = np.linspace(box[2, 0], box[2, 1], shape[2])
    best_val, best = math.inf, None
    theta = np.empty(3)
    for p in ps:
        theta[0] = p
        for a in alphas:
            theta[1] = a
            for b in betas:
                theta[2] = b
                v = moments.value(theta)
                if v < best_val:
                    best_val, best = v, theta.copy()
    return best


def asymptotic_cov(sample, theta) -> tuple[np.ndarray, np.ndarray]:
    """Sandwich estimate of the asymptotic covariance of sqrt(n)(theta_hat - theta0).

    A_hat is the Hessian of S_n at theta_hat; V_hat is the triple sum
    (4/n^3) sum_{k,j,j'} sum_{l,l'} Z_k^l Z_k^l' dZ_j^l (dZ_j'^l')^T, which
    factorizes as (4/n^3) sum_k w_k w_k^T with w_k = sum_l Z_k^l D^l and
    D^l = sum_j dZ_j^l.  Returns (Sigma_hat, per-coordinate standard errors
    sqrt(diag(Sigma_hat)/n)).

    Raises
    ------
    InferenceError
        If A_hat has reciprocal condition number below RCOND_MIN.
    """
    moments = _as_moments(sample)
    angles = moments.angles
    theta_arr = _theta_array(theta)
    n = moments.n
    _, _, a_hat = moments.value_grad_hess(theta_arr)
    svals = np.linalg.svd(a_hat, compute_uv=False)
    rcond = svals[-1] / svals[0] if svals[0] > 0 else 0.0
    if not np.isfinite(rcond) or rcond < RCOND_MIN:
        raise InferenceError(
            f"curvature matrix is numerically singular (rcond {rcond:.2e} < {RCOND_MIN:.0e})")
    w = np.zeros((n, 3))
    for l in range(1, L_MAX_CONTRAST + 1):
        z = z_values(angles, l, theta_arr)
        d = z_grads(angles, l, theta_arr).sum(axis=0)
        w += 2.0 * z[:, None] * d[None, :]
    v_hat = 4.0 * (w.T @ w) / n ** 3
    v_hat = 0.5 * (v_hat + v_hat.T)
    a_inv = np.linalg.inv(a_hat)
    sigma = a_inv @ v_hat @ a_inv
    sigma = 0.5 * (sigma + sigma.T)
    diag = np.clip(np.diag(sigma), 0.0, None)
    return sigma, np.sqrt(diag / n)


def squared_error(theta_hat: MixtureParams, theta0: MixtureParams) -> np.ndarray:
    """Per-coordinate squared errors, angles measured modulo pi.

    The estimation domain identifies alpha and beta modulo pi, so angular
    errors take the shortest representative; otherwise estimates near the
    0/pi boundary would be spuriously penalized.
    """
    dp = theta_hat.p - theta0.p
    da = _angdist_mod_pi(theta_hat.alpha, theta0.alpha)
    db = _angdist_mod_pi(theta_hat.beta, theta0.beta)
    return np.array([dp * dp, da * da, db * db])


def _angdist_mod_pi(a, b) -> float:
    d = math.fmod(a - b, math.pi)
    if d < 0:
        d += math.pi
    return min(d, math.pi - d)
