"""Time change of Lévy processes by β₀t + S(t).

Covers symbol and triplet composition, exact simulation of subordinated
Brownian motion on a time grid, the Lévy density of its jump part, its
autocovariance, and the ε-approximation of a fractional power of a semigroup
generator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import specfun
from .exceptions import DomainError, InfiniteMomentError
from .specfun import Accuracy, quad_adaptive
from .subordinator import (
    SubordinatorSpec,
    laplace_exponent,
    levy_density,
    poisson_rate,
    sample_on_grid,
    tempered_mean_var,
)

__all__ = [
    "LevyTriplet",
    "LevySymbolDescriptor",
    "TimeChangedPath",
    "brownian_motion",
    "subordinate_symbol",
    "subordinate_triplet",
    "bm_char_function",
    "bm_levy_density",
    "sample_subordinated_bm",
    "sample_subordinated_bm_values",
    "bm_autocovariance",
    "phillips_apply",
    "shift_semigroup",
]

_ACC = Accuracy(rel_tol=1e-11, max_subdivisions=1000)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
# the truncated-mean integrand is odd for symmetric X, so b′ needs an absolute floor
_DRIFT_ABS = 1e-13
# the alternating Mittag-Leffler series cannot reach 1e-12 once x^2/2 grows past ~10
_ML_ACC = Accuracy(rel_tol=1e-9)


@dataclass(frozen=True)
class LevyTriplet:
    """Lévy triplet (a, b, ν); ``nu`` is a density callback or ``None`` for no jumps."""

    a: float
    b: float
    nu: Optional[Callable[[float], float]] = None


@dataclass(frozen=True)
class LevySymbolDescriptor:
    """Characteristic exponent ψ (E e^{iuX(t)} = e^{tψ(u)}) plus triplet data.

    ``marginal_density(x, z)`` is the density of X(z), needed to compose the
    Lévy measure under a time change.
    """

    psi: Callable[[float], complex]
    triplet: LevyTriplet
    marginal_density: Optional[Callable[[float, float], float]] = None

    def __post_init__(self):
        if abs(self.psi(0.0)) > 1e-12:
            raise DomainError("a characteristic exponent must vanish at u = 0")
        if self.triplet.b < 0:
            raise DomainError("triplet coefficient b must be >= 0")


def _normal_density(x, z):
    return math.exp(-x * x / (2.0 * z)) / math.sqrt(2.0 * math.pi * z)


def brownian_motion() -> LevySymbolDescriptor:
    """Standard Brownian motion: ψ(u) = -u²/2, triplet (0, 1, 0)."""
    return LevySymbolDescriptor(lambda u: -0.5 * u * u + 0j, LevyTriplet(0.0, 1.0, None),
                                _normal_density)


def _require_floor_one(spec: SubordinatorSpec):
    if spec.family == "epsilon":
        raise DomainError("time change is defined here for the floor-1 (plain or tempered) families")


def subordinate_symbol(x_symbol: LevySymbolDescriptor,
                       spec: SubordinatorSpec) -> Callable[[float], complex]:
    """Symbol of Z(t) = X(β₀t + S(t)):

    ψ_Z(u) = α γ(α; θ) - α γ(α; θ - ψ_X(u)) + β₀ ψ_X(u).
    """
    _require_floor_one(spec)
    a, theta, beta0 = spec.alpha, spec.theta, spec.beta0
    jump_free = SubordinatorSpec(alpha=a, theta=theta)

    def psi_z(u):
        px = complex(x_symbol.psi(u))
        out = beta0 * px
        if math.isinf(theta):
            return out
        if px.imag == 0 and px.real <= 0:
            return out - laplace_exponent(jump_free, -px.real)
        lower_theta = specfun.lower_inc_gamma(a, theta)
        return out + a * lower_theta - a * specfun.lower_inc_gamma_complex(a, theta - px)

    return psi_z


def bm_char_function(spec: SubordinatorSpec, u: float, t: float) -> float:
    """E exp(iu Z(t)) for subordinated BM, from the displayed closed form

    exp{-u²β₀t/2 - tα ∫_θ^{θ+u²/2} e^{-w} w^{α-1} dw},

    with the integral done by quadrature (independent of :func:`subordinate_symbol`).
    """
    _require_floor_one(spec)
    a, theta = spec.alpha, spec.theta
    if math.isinf(theta):
        return math.exp(-0.5 * u * u * spec.beta0 * t)
    hi = theta + 0.5 * u * u
    f = lambda w: math.exp(-w) * w ** (a - 1.0)  # noqa: E731
    integral = quad_adaptive(f, theta, hi, _ACC, lo_exponent=(a - 1.0) if theta == 0 else None)
    return math.exp(-0.5 * u * u * spec.beta0 * t - t * a * integral)


def bm_levy_density(x: float, alpha: float, theta: float = 0.0, method: str = "auto") -> float:
    """Lévy density ν′(x) of the jump part of B(β₀t + S_{α,θ}(t)).

    Parameters
    ----------
    method : {"auto", "kummer", "mittag-leffler", "quad"}
        ``kummer`` and ``mittag-leffler`` are closed forms valid for θ = 0;
        ``quad`` integrates the Gaussian kernel against the subordinator's
        Lévy density and works for any θ. ``auto`` picks ``kummer`` when θ = 0.
    """
    if not (0 < alpha < 1):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not theta >= 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    if method == "auto":
        method = "kummer" if theta == 0 else "quad"
    x2 = x * x
    if method in ("kummer", "mittag-leffler"):
        if theta != 0:
            raise DomainError(f"the {method} form holds only for theta = 0")
        g = math.gamma(alpha + 0.5)
        if method == "kummer":
            return math.sqrt(2.0) * alpha * g / math.pi * specfun.kummer_1f1(alpha + 0.5, 1.5, -0.5 * x2)
        return alpha * g / _SQRT_2PI * specfun.mittag_leffler3(1.0, 1.5, alpha + 0.5, -0.5 * x2, _ML_ACC)
    if method != "quad":
        raise DomainError(f"unknown method {method!r}")
    c = alpha / math.gamma(1.0 - alpha) / _SQRT_2PI

    def f(r):  # z = 1 + r
        z = 1.0 + r
        return c * math.exp(-x2 / (2.0 * z) - theta * z) * r ** (-alpha) * z ** (-1.5)

    return quad_adaptive(f, 0.0, math.inf, _ACC, lo_exponent=-alpha, abs_tol=1e-300)


def subordinate_triplet(x_symbol: LevySymbolDescriptor, spec: SubordinatorSpec) -> LevyTriplet:
    """Triplet of Z(t) = X(β₀t + S(t)) for a one-dimensional X.

    a′ = β₀ a;  b′ = β₀ b + ∫ π_θ(dz) ∫_{|x|≤1} x μ_z(dx);
    ν′(x) = β₀ ν(x) + ∫ μ_z(x) π_θ(dz), with μ_z the density of X(z).
    """
    _require_floor_one(spec)
    a_x, b_x, nu_x = x_symbol.triplet.a, x_symbol.triplet.b, x_symbol.triplet.nu
    beta0 = spec.beta0
    if poisson_rate(spec) == 0.0:
        scaled = None if nu_x is None else (lambda x: beta0 * nu_x(x))
        return LevyTriplet(beta0 * a_x, beta0 * b_x, scaled)
    mu = x_symbol.marginal_density
    if mu is None:
        raise DomainError("composing the Levy measure needs the marginal density of X")

    alpha, theta = spec.alpha, spec.theta
    if alpha == 1.0:
        weight = math.exp(-theta)

        def drift_inner(z):
            return quad_adaptive(lambda x: x * mu(x, z), -1.0, 1.0, _ACC, abs_tol=_DRIFT_ABS)

        b_new = beta0 * b_x + weight * drift_inner(1.0)

        def nu_new(x):
            base = beta0 * nu_x(x) if nu_x is not None else 0.0
            return base + weight * mu(x, 1.0)

        return LevyTriplet(beta0 * a_x, b_new, nu_new)

    def pi(r):  # Lévy density at z = 1 + r
        return levy_density(spec, 1.0 + r) if r > 0 else math.inf

    def drift_integrand(r):
        z = 1.0 + r
        inner = quad_adaptive(lambda x: x * mu(x, z), -1.0, 1.0, _ACC, abs_tol=_DRIFT_ABS)
        return inner * pi(r)

    b_new = beta0 * b_x + quad_adaptive(drift_integrand, 0.0, math.inf, _ACC,
                                        lo_exponent=-alpha, abs_tol=_DRIFT_ABS)

    def nu_new(x):
        base = beta0 * nu_x(x) if nu_x is not None else 0.0
        jump = quad_adaptive(lambda r: mu(x, 1.0 + r) * pi(r), 0.0, math.inf, _ACC,
                             lo_exponent=-alpha, abs_tol=1e-300)
        return base + jump

    return LevyTriplet(beta0 * a_x, b_new, nu_new)


@dataclass(frozen=True)
class TimeChangedPath:
    """Values of Z(t) = X(clock(t)) on a time grid."""

    time_grid: np.ndarray
    inner_clock: np.ndarray
    outer_values: np.ndarray

    def __post_init__(self):
        t, c, v = (np.asarray(a, dtype=float) for a in (self.time_grid, self.inner_clock, self.outer_values))
        if not (t.shape == c.shape == v.shape) or t.ndim != 1:
            raise DomainError("time_grid, inner_clock and outer_values must have equal 1-D shapes")
        if np.any(np.diff(c) < 0):
            raise DomainError("inner clock must be nondecreasing")
        object.__setattr__(self, "time_grid", t)
        object.__setattr__(self, "inner_clock", c)
        object.__setattr__(self, "outer_values", v)

    def to_csv(self) -> str:
        lines = ["t,inner_clock,value"]
        lines += [f"{t!r},{c!r},{v!r}" for t, c, v in
                  zip(self.time_grid.tolist(), self.inner_clock.tolist(), self.outer_values.tolist())]
        return "\n".join(lines) + "\n"


def _check_time_grid(time_grid):
    t = np.asarray(time_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] < 0 or np.any(np.diff(t) <= 0):
        raise DomainError("time_grid must be strictly increasing and start at >= 0")
    return t


def sample_subordinated_bm_values(spec: SubordinatorSpec, time_grid: Sequence[float], n: int,
                                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Clock values and B(clock) for ``n`` independent paths, each of shape ``(n, K)``.

    Given the clock, Brownian increments are Gaussian with variance equal to
    the clock increments, so the law on the grid is exact.
    """
    t = _check_time_grid(time_grid)
    clock = sample_on_grid(spec, t, n, rng)
    dclock = np.diff(np.concatenate([np.zeros((n, 1)), clock], axis=1), axis=1)
    # adding 0.0 turns the -0.0 of a zero increment into 0.0
    values = np.cumsum(rng.standard_normal(clock.shape) * np.sqrt(dclock), axis=1) + 0.0
    return clock, values


def sample_subordinated_bm(spec: SubordinatorSpec, time_grid: Sequence[float],
                           rng: np.random.Generator) -> TimeChangedPath:
    """One path of B(β₀t + S(t)) on ``time_grid``."""
    t = _check_time_grid(time_grid)
    clock, values = sample_subordinated_bm_values(spec, t, 1, rng)
    return TimeChangedPath(t, clock[0], values[0])


def bm_autocovariance(spec: SubordinatorSpec, t: float, tau: float) -> float:
    """Cov(Z(t), Z(τ)) = β₀ (t∧τ) + (t∧τ) α θ^{α-1} e^{-θ}.

    Raises
    ------
    InfiniteMomentError
        For θ = 0 and α < 1, where the covariance is infinite.
    """
    _require_floor_one(spec)
    m = min(t, tau)
    if m < 0:
        raise DomainError("times must be >= 0")
    try:
        mean, _ = tempered_mean_var(spec, m)
    except InfiniteMomentError:
        raise InfiniteMomentError("autocovariance is infinite for theta = 0 and alpha < 1") from None
    return spec.beta0 * m + mean


def shift_semigroup(s: float, g: Callable[[float], float], x: float) -> float:
    """T_s g(x) = g(x - s)."""
    return g(x - s)


def phillips_apply(g: Callable[[float], float], alpha: float, epsilon: float, x: float,
                   semigroup: Callable = shift_semigroup, acc: Accuracy = _ACC) -> float:
    """ε-approximation of -(-A)^α g(x) for the generator A of ``semigroup``:

    ∫_ε^∞ (T_s g(x) - g(x)) α (s-ε)^{-α} s^{-1} / Γ(1-α) ds.

    ``semigroup(s, g, x)`` must return T_s g(x); the default is the shift
    g(x - s), for which this equals :func:`gammasub.operators.marchaud_approx`.
    """
    if not (0 < alpha < 1) or not epsilon > 0:
        raise DomainError("need alpha in (0, 1) and epsilon > 0")
    gx = g(x)
    c = alpha / math.gamma(1.0 - alpha)

    def f(s):
        return (semigroup(s, g, x) - gx) * c * (s - epsilon) ** (-alpha) / s

    return quad_adaptive(f, epsilon, math.inf, acc, lo_exponent=-alpha, abs_tol=1e-300)
