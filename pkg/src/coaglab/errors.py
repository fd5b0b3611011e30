"""Exceptions raised by coaglab."""

from typing import Optional


class CoagLabError(Exception):
    """Base class for all errors raised by coaglab."""


class GridMismatchError(CoagLabError):
    """Two grid functions, or a grid function and a weight array, do not share a grid."""


class UnsupportedOrderError(CoagLabError):
    """A derivative or norm order outside the supported range was requested."""


class TruncationRuleError(CoagLabError):
    """An exponentially weighted integral would be dominated by the truncation at y_max."""

    def __init__(self, message: str, decay: float, mu: float, y_max: float):
        super().__init__(message)
        self.decay = decay
        self.mu = mu
        self.y_max = y_max


class BlowUpError(CoagLabError):
    """A closed-form exponential moment is evaluated at or past its blow-up time."""

    def __init__(self, message: str, blow_up_time: float):
        super().__init__(message)
        self.blow_up_time = blow_up_time


class SingularDenominatorError(CoagLabError):
    """A closed-form expression has a vanishing denominator."""


class SolverDivergedError(CoagLabError):
    """The time integration produced NaN or overflow."""

    def __init__(self, message: str, last_valid_time: float):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class ResolutionError(CoagLabError):
    """Too much mass had to be clipped to keep the density nonnegative."""

    def __init__(self, message: str, clipped_mass: float, time: float):
        super().__init__(message)
        self.clipped_mass = clipped_mass
        self.time = time


class NegativeDensityError(CoagLabError):
    """A density expected to be nonnegative has negative values beyond tolerance."""


class ZeroNormError(CoagLabError):
    """A quotient was requested for a function of zero norm."""


class RateFitError(CoagLabError):
    """A rate fit could not be performed on the given series."""


class ConfigError(CoagLabError):
    """An experiment configuration could not be read or validated."""


class CheckFailedError(CoagLabError):
    """An asserted numerical check failed."""

    def __init__(self, message: str, check_name: Optional[str] = None):
        super().__init__(message)
        self.check_name = check_name
