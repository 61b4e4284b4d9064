"""Nonparametric estimation of the component density by Fourier projection.

Pipeline: plug-in coefficients f_hat_l = g_hat_l / M^l(theta_hat), a
projection estimator at resolution L, penalized selection of L, and
slope-heuristic calibration of the penalty constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circ import ComponentDensity, MixtureParams, Sample, TWO_PI
from .contrast import mixture_weight
from .errors import CalibrationError, DegeneracyError, DomainError

#: Default cap on the mixing weight; |M^l| is bounded below by 1 - 2*p_cap.
DEFAULT_P_CAP = 0.49


def default_l_max(n: int) -> int:
    """Default largest resolution level, max(10, floor(n^(1/3)))."""
    return max(10, int(math.floor(n ** (1.0 / 3.0))))


@dataclass
class EmpiricalCoeffs:
    """Empirical mixture and plug-in component coefficients for |l| <= l_max.

    Arrays are indexed by l + l_max and satisfy conjugate symmetry exactly;
    ``g_hat[0]`` (index l_max) equals 1/(2 pi).
    """

    g_hat: np.ndarray
    f_hat: np.ndarray
    n: int
    theta_used: MixtureParams
    l_max: int

    def g(self, l: int) -> complex:
        return complex(self.g_hat[l + self.l_max])

    def f(self, l: int) -> complex:
        return complex(self.f_hat[l + self.l_max])

    def coeff_mass(self, L: int) -> float:
        """sum_{|l| <= L} |f_hat_l|^2."""
        sel = slice(self.l_max - L, self.l_max + L + 1)
        return float(np.sum(np.abs(self.f_hat[sel]) ** 2))


def empirical_coeffs(sample, theta: MixtureParams, l_max: int,
                     p_cap: float = DEFAULT_P_CAP) -> EmpiricalCoeffs:
    """Compute g_hat_l = (1/2pi n) sum_k e^{-i l X_k} and f_hat_l = g_hat_l / M^l(theta).

    Raises
    ------
    DegeneracyError
        If some |M^l(theta)| falls below the floor 1 - 2*p_cap.
    """
    angles = sample.angles if isinstance(sample, Sample) else np.asarray(sample, dtype=float)
    if l_max < 0:
        raise DomainError("l_max must be nonnegative")
    n = len(angles)
    ls = np.arange(0, l_max + 1)
    # one FFT-style outer product; n x (l_max+1) is small at these sizes
    g_pos = np.exp(-1j * np.outer(ls, angles)).sum(axis=1) / (TWO_PI * n)
    g_pos[0] = 1.0 / TWO_PI
    g_hat = np.concatenate([np.conj(g_pos[:0:-1]), g_pos])
    floor = 1.0 - 2.0 * p_cap
    m_pos = np.array([mixture_weight(theta, int(l)) for l in ls])
    mods = np.abs(m_pos)
    bad = np.nonzero(mods < floor - 1e-12)[0]
    if len(bad):
        l_bad = int(ls[bad[0]])
        raise DegeneracyError(
            f"|M^l(theta)| = {mods[bad[0]]:.3e} below floor {floor:.3e} at l = {l_bad}",
            level=l_bad)
    f_pos = g_pos / m_pos
    f_hat = np.concatenate([np.conj(f_pos[:0:-1]), f_pos])
    theta_used = theta if isinstance(theta, MixtureParams) else MixtureParams(*np.asarray(theta, float))
    return EmpiricalCoeffs(g_hat=g_hat, f_hat=f_hat, n=n, theta_used=theta_used, l_max=l_max)


def select_level(coeffs: EmpiricalCoeffs, penalty: float, levels=None):
    """Penalized choice of the resolution level.

    Minimizes -sum_{|l|<=L} |f_hat_l|^2 + penalty*(2L+1)/n over ``levels``
    (default 0..l_max); ties go to the smallest L.  Returns (L_hat, path)
    where path lists (L, criterion value).
    """
    if penalty <= 0:
        raise DomainError("penalty must be positive")
    levels = _levels(coeffs, levels)
    crit = np.array([-coeffs.coeff_mass(L) + penalty * (2 * L + 1) / coeffs.n
                     for L in levels])
    best = int(np.argmin(crit))  # first occurrence, i.e. smallest L on ties
    path = list(zip(levels.tolist(), crit.tolist()))
    return int(levels[best]), path


def _levels(coeffs, levels):
    if levels is None:
        levels = np.arange(0, coeffs.l_max + 1)
    else:
        levels = np.asarray(sorted(set(int(L) for L in levels)))
    if len(levels) == 0:
        raise DomainError("the set of resolution levels is empty")
    if levels[0] < 0 or levels[-1] > coeffs.l_max:
        raise DomainError("levels must lie within [0, l_max]")
    return levels


@dataclass
class SlopeFit:
    """Slope-heuristic calibration output: lambda_hat = 2 * slope."""

    lambda_hat: float
    slope: float
    intercept: float
    couples: list            # (L, (2L+1)/n, sum_{|l|<=L} |f_hat_l|^2)
    window: list             # levels used in the regression
    theoretical_floor: float  # diagnostic lower bound on the penalty constant


def penalty_floor(p_cap: float = DEFAULT_P_CAP, eps: float = 1.0) -> float:
    """Theoretical penalty-constant lower bound (3/pi^2)(1+1/eps)(1-2P)^-2.

    Reported as a diagnostic only; the data-driven calibration is the
    operational choice.
    """
    return 3.0 / math.pi ** 2 * (1.0 + 1.0 / eps) * (1.0 - 2.0 * p_cap) ** -2


def slope_lambda(coeffs: EmpiricalCoeffs, levels=None) -> SlopeFit:
    """Calibrate the penalty constant from the contrast-versus-dimension plot.

    Fits a least-squares line to the couples ((2L+1)/n, sum_{|l|<=L}|f_hat_l|^2)
    over the last half of the level range (where the plot is linear) and
    returns lambda_hat = 2 * slope.

    Raises
    ------
    CalibrationError
        If fewer than 8 levels are available, fewer than 4 fall in the
        regression window, or the tail is flat.
    """
    levels = _levels(coeffs, levels)
    if len(levels) < 8:
        raise CalibrationError(f"slope calibration needs >= 8 levels, got {len(levels)}")
    l_top = int(levels[-1])
    window = [int(L) for L in levels if L >= math.ceil(l_top / 2)]
    if len(window) < 4:
        raise CalibrationError(f"regression window has {len(window)} < 4 points")
    xs = np.array([(2 * L + 1) / coeffs.n for L in levels])
    ys = np.array([coeffs.coeff_mass(L) for L in levels])
    in_window = np.isin(levels, window)
    slope, intercept = np.polyfit(xs[in_window], ys[in_window], 1)
    if slope <= 0:
        raise CalibrationError("contrast tail is flat; cannot calibrate the penalty")
    couples = list(zip(levels.tolist(), xs.tolist(), ys.tolist()))
    return SlopeFit(lambda_hat=2.0 * float(slope), slope=float(slope),
                    intercept=float(intercept), couples=couples, window=window,
                    theoretical_floor=penalty_floor())


@dataclass
class DensityEstimate:
    """Adaptive projection estimate of the component density."""

    coeffs: EmpiricalCoeffs
    level: int
    penalty: float
    contrast_path: list
    slope_fit: SlopeFit | None = None
    meta: dict = field(default_factory=dict)

    def evaluate(self, x):
        """f_hat(x) = sum_{|l| <= L_hat} f_hat_l e^{i l x}; real by conjugate symmetry."""
        x = np.asarray(x, dtype=float)
        ls = np.arange(-self.level, self.level + 1)
        sel = self.coeffs.f_hat[self.coeffs.l_max - self.level:
                                self.coeffs.l_max + self.level + 1]
        values = np.exp(1j * np.outer(x, ls)) @ sel
        out = values.real
        return out if out.ndim else float(out)

    def grid(self, num: int = 512):
        """(x, f_hat(x)) on a uniform grid over [0, 2*pi)."""
        x = np.linspace(0.0, TWO_PI, num, endpoint=False)
        return x, self.evaluate(x)

    def mixture_pdf(self, x):
        """Reconstructed mixture p_hat f_hat(x-alpha_hat) + (1-p_hat) f_hat(x-beta_hat)."""
        th = self.coeffs.theta_used
        x = np.asarray(x, dtype=float)
        return th.p * self.evaluate(x - th.alpha) + (1.0 - th.p) * self.evaluate(x - th.beta)

    def clipped_renormalized(self, num: int = 512):
        """Optional post-hoc nonnegative version on a grid (off the main path:
        the theory concerns the raw projection)."""
        x, y = self.grid(num)
        y = np.clip(y, 0.0, None)
        mass = np.mean(y) * TWO_PI
        if mass <= 0:
            raise DomainError("clipped estimate has no mass")
        return x, y / mass


def estimate_density(sample, fit_or_theta, l_max: int | None = None,
                     penalty: float | None = None, levels=None,
                     p_cap: float = DEFAULT_P_CAP) -> DensityEstimate:
    """Full adaptive pipeline: plug-in coefficients, penalty calibration,
    penalized level choice.

    ``penalty=None`` triggers the slope heuristic; an explicit positive
    value bypasses it.
    """
    theta = getattr(fit_or_theta, "theta_hat", fit_or_theta)
    angles = sample.angles if isinstance(sample, Sample) else np.asarray(sample, dtype=float)
    if l_max is None:
        l_max = default_l_max(len(angles))
    coeffs = empirical_coeffs(angles, theta, l_max, p_cap=p_cap)
    slope_fit = None
    if penalty is None:
        slope_fit = slope_lambda(coeffs, levels)
        penalty = slope_fit.lambda_hat
    level, path = select_level(coeffs, penalty, levels)
    return DensityEstimate(coeffs=coeffs, level=level, penalty=penalty,
                           contrast_path=path, slope_fit=slope_fit)


def l2_error(estimate: DensityEstimate, density: ComponentDensity,
             tail_tol: float = 1e-16, tail_cap: int = 100000) -> float:
    """Squared L2 distance (norm (1/2pi) integral phi^2) between the
    estimate and an exact density, via Parseval.

    Equals sum_{|l| <= L} |f_hat_l - f_l|^2 + sum_{|l| > L} |f_l|^2 with the
    tail truncated once terms drop below ``tail_tol``.
    """
    level = estimate.level
    total = 0.0
    for l in range(-level, level + 1):
        total += abs(estimate.coeffs.f(l) - density.fourier_coeff(l)) ** 2
    l = level + 1
    while l <= tail_cap:
        term = 2.0 * abs(density.fourier_coeff(l)) ** 2
        total += term
        if term < tail_tol:
            break
        l += 1
    return total


def oracle_risk(coeffs: EmpiricalCoeffs, density: ComponentDensity, levels=None,
                tail_tol: float = 1e-16) -> tuple[int, float]:
    """Best-in-hindsight level and its realized squared L2 risk.

    Scans ``levels`` computing ||f_hat_L - f||_2^2 with the true density's
    coefficients; used to benchmark the adaptive choice.
    """
    levels = _levels(coeffs, levels)
    top = int(levels[-1])
    f_true = np.array([density.fourier_coeff(int(l))
                       for l in range(-top, top + 1)])
    f_hat = coeffs.f_hat[coeffs.l_max - top: coeffs.l_max + top + 1]
    sq_err = np.abs(f_hat - f_true) ** 2
    # cumulative head error for each L plus the exact tail beyond L
    tail = 0.0
    l = top + 1
    while True:
        term = 2.0 * abs(density.fourier_coeff(l)) ** 2
        tail += term
        if term < tail_tol or l > 100000:
            break
        l += 1
    best_level, best_risk = None, math.inf
    for L in levels:
        head = float(np.sum(sq_err[top - L: top + L + 1]))
        tail_l = tail + float(np.sum(
            2.0 * np.abs(f_true[top + L + 1: 2 * top + 1]) ** 2))
        risk = head + tail_l
        if risk < best_risk:
            best_level, best_risk = int(L), risk
    return best_level, best_risk
