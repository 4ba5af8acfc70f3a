"""Exception hierarchy shared by every module."""


class TdlError(Exception):
    """Base class for all errors raised by :mod:`tdl`."""


class ResourceBudgetExceeded(TdlError):
    """An enumeration would exceed the configured memory budget."""


class CombinatorialBudgetExceeded(TdlError):
    """A subset scan would exceed the configured combinatorial cap."""


class NoNonDegenerateSimplex(TdlError):
    """Every (d+1)-subset of the point set is affinely dependent."""


class EmptySweep(TdlError):
    """No sweep point produced a usable sample."""


class AliasError(TdlError):
    """A physical grid is too coarse for the requested exact quadrature."""


class ZeroFieldError(TdlError):
    """A ratio was requested for a field of zero norm."""


class InsufficientSamples(TdlError):
    """Fewer samples than a fit needs."""


class NonPositiveSample(TdlError):
    """A log-log fit received a non-positive coordinate."""


class NonFiniteDetected(TdlError):
    """A NaN or infinity appeared during time stepping."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConfigError(TdlError):
    """An experiment configuration failed validation."""
