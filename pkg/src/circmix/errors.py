"""Exception hierarchy shared across the package."""


class CircmixError(Exception):
    """Base class for all circmix errors."""


class DomainError(CircmixError, ValueError):
    """Invalid value for a parameter, angle, or density."""


class DegeneracyError(DomainError):
    """A Fourier weight |M^l| fell below the configured floor."""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class EstimationError(CircmixError):
    """Parameter estimation failed (no usable local minimum)."""


class InferenceError(CircmixError):
    """Covariance estimation failed (singular curvature matrix)."""


class CalibrationError(CircmixError):
    """Slope-heuristic penalty calibration failed."""


class ExperimentError(CircmixError):
    """A Monte Carlo experiment exceeded its failure budget or is misconfigured."""
