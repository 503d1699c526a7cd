"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function."""


class PoleError(DomainError):
    """The function has a pole at the requested argument."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature failed to reach the requested accuracy.

    Attributes
    ----------
    estimate : float
        Last value of the partial sum or integral.
    error : float
        Last error estimate (absolute), ``nan`` when unavailable.
    """

    def __init__(self, message, estimate=float("nan"), error=float("nan")):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class InfiniteMomentError(ArithmeticError):
    """The requested moment or covariance is infinite for these parameters."""


class RegimeError(ValueError):
    """Parameters fall outside the regime in which an asymptotic law holds."""


class RejectionError(RuntimeError):
    """A rejection sampler exceeded its consecutive-rejection guard."""


class AccuracyWarning(UserWarning):
    """A discretization is likely too coarse for the requested tolerance."""
