"""Exception types raised by the library."""


class SHEError(Exception):
    """Base class for all library errors."""


class DivergentJ0(SHEError):
    """(|mu| * G_nu(t, .))(x) is infinite at the requested point."""


class DivergentMoment(SHEError):
    """A moment integral failed its tail bound or is infinite."""


class QuadratureError(SHEError):
    """Numerical integration did not reach the requested tolerance."""


class NoSignChange(SHEError):
    """The growth rate r(alpha) keeps one sign over the scanned bracket."""


class ConfigError(SHEError, ValueError):
    """Invalid simulation or run configuration."""


class NumericalBlowup(SHEError):
    """Simulated field exceeded the blow-up threshold."""

    def __init__(self, message, replicate=None, step=None):
        super().__init__(message)
        self.replicate = replicate
        self.step = step


class InsufficientReplicates(SHEError):
    """Fewer than two replicates were supplied to a Monte Carlo estimator."""


class WindowTooNarrow(SHEError):
    """Fewer than four dyadic lags fit inside the requested window."""
