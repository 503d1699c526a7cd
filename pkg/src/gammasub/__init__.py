"""Gamma-type subordinators: exact simulation, special functions, fractional
operators, subordinated Brownian motion and time-changed fractional Brownian
motion, with Monte Carlo verification suites."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    AccuracyWarning,
    ConvergenceError,
    DomainError,
    InfiniteMomentError,
    PoleError,
    RegimeError,
    RejectionError,
)
from .streams import make_stream  # noqa: E402
from .subordinator import (  # noqa: E402
    DirectionMeasure2D,
    PathSample,
    SubordinatorSpec,
    laplace_exponent,
    levy_density,
    poisson_rate,
    sample_jumps,
    sample_path,
    sample_values,
)

__all__ = [
    "__version__",
    "AccuracyWarning",
    "ConvergenceError",
    "DomainError",
    "InfiniteMomentError",
    "PoleError",
    "RegimeError",
    "RejectionError",
    "make_stream",
    "DirectionMeasure2D",
    "PathSample",
    "SubordinatorSpec",
    "laplace_exponent",
    "levy_density",
    "poisson_rate",
    "sample_jumps",
    "sample_path",
    "sample_values",
]
