"""Scalar special functions and adaptive quadrature.

Everything here is a pure function of its arguments. Real-valued kernels
(complete gamma, the regularized incomplete gamma for positive shape and the
regularized incomplete beta) are delegated to :mod:`math` and
:mod:`scipy.special`; the upper incomplete gamma for non-positive shape, the
Kummer function, the three-parameter Mittag-Leffler function and the complex
lower incomplete gamma are evaluated here.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional

from scipy import integrate, special

from .exceptions import ConvergenceError, DomainError, PoleError

__all__ = [
    "Accuracy",
    "DEFAULT_ACCURACY",
    "QUAD_ACCURACY",
    "gamma_complete",
    "lower_inc_gamma",
    "lower_inc_gamma_complex",
    "upper_inc_gamma",
    "reg_inc_beta",
    "kummer_1f1",
    "mittag_leffler3",
    "quad_adaptive",
]


@dataclass(frozen=True)
class Accuracy:
    """Accuracy budget for series and quadrature.

    Parameters
    ----------
    rel_tol : float
        Target relative error.
    max_terms : int
        Maximum number of series terms before giving up.
    max_subdivisions : int
        Maximum number of adaptive subintervals per quadrature call.
    """

    rel_tol: float = 1e-12
    max_terms: int = 10_000
    max_subdivisions: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_ACCURACY = Accuracy()
QUAD_ACCURACY = Accuracy(rel_tol=1e-9)

# consecutive small terms required before a series is declared converged
_SMALL_RUN = 3
# largest |z| for which the complex incomplete-gamma series is trusted
_SERIES_RADIUS = 50.0
_KUMMER_ASYMPTOTIC = 40.0


def _is_nonpositive_integer(a: float) -> bool:
    return a <= 0 and float(a).is_integer()


def _check_finite(**kwargs):
    for name, value in kwargs.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value}")


def gamma_complete(a: float) -> float:
    """Euler gamma function Γ(a).

    Raises
    ------
    PoleError
        If ``a`` is zero or a negative integer.
    """
    _check_finite(a=a)
    if _is_nonpositive_integer(a):
        raise PoleError(f"gamma has a pole at a={a}")
    return math.gamma(a)


def lower_inc_gamma(a: float, x: float) -> float:
    """Lower incomplete gamma γ(a, x) = ∫₀ˣ e^{-w} w^{a-1} dw for a > 0, x ≥ 0.

    ``x = inf`` is accepted and returns Γ(a).
    """
    if not math.isfinite(a) or math.isnan(x):
        raise DomainError(f"invalid arguments a={a}, x={x}")
    if a <= 0:
        raise DomainError(f"lower_inc_gamma requires a > 0, got a={a}")
    if x < 0:
        raise DomainError(f"lower_inc_gamma requires x >= 0, got x={x}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return math.gamma(a)
    return float(special.gammainc(a, x)) * math.gamma(a)


def _upper_cf(a: float, x: float, acc: Accuracy) -> float:
    # modified Lentz evaluation of the continued fraction, valid for any a when x > 0
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, acc.max_terms + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= acc.rel_tol * 0.1:
            return math.exp(-x + a * math.log(x)) * h
    raise ConvergenceError(
        f"continued fraction for Gamma({a}, {x}) did not converge",
        estimate=math.exp(-x + a * math.log(x)) * h,
    )


def upper_inc_gamma(a: float, x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Upper incomplete gamma Γ(a, x) = ∫ₓ^∞ e^{-w} w^{a-1} dw.

    Any real ``a`` is accepted; ``x`` must be positive when ``a <= 0``.

    For ``a <= 0`` and moderate ``x`` the value comes from the downward
    recurrence Γ(b-1, x) = (Γ(b, x) - x^{b-1} e^{-x}) / (b-1) started at a
    positive shape; for larger ``x`` the continued fraction is used directly
    because the recurrence cancels there.
    """
    if not math.isfinite(a) or math.isnan(x):
        raise DomainError(f"invalid arguments a={a}, x={x}")
    if x < 0:
        raise DomainError(f"upper_inc_gamma requires x >= 0, got x={x}")
    if x == 0:
        if a <= 0:
            raise DomainError(f"Gamma({a}, 0) diverges for a <= 0")
        return math.gamma(a)
    if math.isinf(x):
        return 0.0
    if a > 0:
        return float(special.gammaincc(a, x)) * math.gamma(a)
    if x > 1.5:
        return _upper_cf(a, x, acc)

    if _is_nonpositive_integer(a):
        b = 0.0
        value = float(special.exp1(x))
    else:
        b = a + math.ceil(-a) + 1.0
        value = float(special.gammaincc(b, x)) * math.gamma(b)
    log_x = math.log(x)
    while b > a + 0.5:
        value = (value - math.exp((b - 1.0) * log_x - x)) / (b - 1.0)
        b -= 1.0
    return value


def lower_inc_gamma_complex(a: float, z: complex, acc: Accuracy = DEFAULT_ACCURACY) -> complex:
    """Lower incomplete gamma for real ``a > 0`` and complex ``z`` (principal branch).

    Uses γ(a, z) = z^a e^{-z} Σ_k z^k / (a)_{k+1} when |z| is moderate and the
    series does not cancel badly, otherwise a quadrature along the ray from 0
    to ``z``.
    """
    if a <= 0:
        raise DomainError(f"lower_inc_gamma_complex requires a > 0, got {a}")
    z = complex(z)
    if z.imag == 0 and z.real >= 0:
        return complex(lower_inc_gamma(a, z.real))
    if z == 0:
        return 0j
    cancellation = abs(z) - z.real
    if abs(z) <= _SERIES_RADIUS and cancellation < 20.0:
        term = 1.0 / a + 0j
        total = term
        small = 0
        for k in range(1, acc.max_terms + 1):
            term *= z / (a + k)
            total += term
            small = small + 1 if abs(term) <= acc.rel_tol * abs(total) else 0
            if small >= _SMALL_RUN:
                return cmath.exp(a * cmath.log(z) - z) * total
        raise ConvergenceError(f"series for gamma({a}, {z}) did not converge")

    # gamma(a, z) = (z^a / a) * int_0^1 exp(-z v^(1/a)) dv
    def re(v):
        return (cmath.exp(-z * v ** (1.0 / a))).real

    def im(v):
        return (cmath.exp(-z * v ** (1.0 / a))).imag

    tol = Accuracy(rel_tol=max(acc.rel_tol, 1e-11), max_subdivisions=2000)
    r = quad_adaptive(re, 0.0, 1.0, tol, abs_tol=1e-14)
    i = quad_adaptive(im, 0.0, 1.0, tol, abs_tol=1e-14)
    return cmath.exp(a * cmath.log(z)) / a * complex(r, i)


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b) for x in [0, 1], a, b > 0."""
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"reg_inc_beta requires 0 <= x <= 1, got {x}")
    if a <= 0 or b <= 0:
        raise DomainError(f"reg_inc_beta requires a, b > 0, got a={a}, b={b}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    return float(special.betainc(a, b, x))


def _hyp1f1_series(a: float, c: float, z: float, acc: Accuracy) -> float:
    term = 1.0
    terms = [1.0]
    partial = 1.0
    small = 0
    for k in range(acc.max_terms):
        term *= (a + k) / (c + k) * z / (k + 1)
        terms.append(term)
        partial += term
        small = small + 1 if abs(term) <= acc.rel_tol * abs(partial) else 0
        if small >= _SMALL_RUN:
            return math.fsum(terms)
    raise ConvergenceError(
        f"1F1({a}; {c}; {z}) series did not converge in {acc.max_terms} terms",
        estimate=math.fsum(terms),
    )


def kummer_1f1(a: float, c: float, z: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Confluent hypergeometric function ₁F₁(a; c; z).

    Negative ``z`` goes through Kummer's transformation
    ₁F₁(a; c; z) = e^z ₁F₁(c - a; c; -z) so the summed series has no
    alternating cancellation.
    """
    _check_finite(a=a, c=c, z=z)
    if _is_nonpositive_integer(c):
        raise PoleError(f"1F1 is undefined for c={c}")
    if z == 0:
        return 1.0
    if z < 0 and not _is_nonpositive_integer(a):
        if -z >= _KUMMER_ASYMPTOTIC and not _is_nonpositive_integer(c - a):
            return _hyp1f1_neg_asymptotic(a, c, -z, acc)
        return math.exp(z) * _hyp1f1_series(c - a, c, -z, acc)
    return _hyp1f1_series(a, c, z, acc)


def _hyp1f1_neg_asymptotic(a, c, x, acc):
    # 1F1(a; c; -x) ~ Γ(c)/Γ(c-a) x^{-a} Σ (a)_s (a-c+1)_s / (s! x^s); the
    # neglected part is O(e^{-x}), below double precision once x >= 40
    term = 1.0
    terms = [1.0]
    for s in range(acc.max_terms):
        nxt = term * (a + s) * (a - c + 1 + s) / ((s + 1) * x)
        if abs(nxt) >= abs(term) and s > 0:
            break
        terms.append(nxt)
        term = nxt
        if abs(term) <= acc.rel_tol * 1e-3 * abs(terms[0]):
            break
    pref = math.exp(math.lgamma(c) - math.lgamma(c - a) - a * math.log(x))
    pref *= special.gammasgn(c) * special.gammasgn(c - a)
    return pref * math.fsum(terms)


def mittag_leffler3(alpha: float, beta: float, gamma: float, z: float,
                    acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Three-parameter (Prabhakar) Mittag-Leffler function.

    E^γ_{α,β}(z) = Σ_k (γ)_k z^k / (k! Γ(αk + β)), with (γ)_k the rising
    factorial. The series is summed directly with compensated summation.
    """
    _check_finite(alpha=alpha, beta=beta, gamma=gamma, z=z)
    if alpha <= 0:
        raise DomainError(f"mittag_leffler3 requires alpha > 0, got {alpha}")
    coef = 1.0  # (gamma)_k z^k / k!
    terms = [coef * float(special.rgamma(beta))]
    partial = terms[0]
    small = 0
    for k in range(acc.max_terms):
        coef *= (gamma + k) * z / (k + 1)
        term = coef * float(special.rgamma(alpha * (k + 1) + beta))
        terms.append(term)
        partial += term
        if coef == 0.0:
            return math.fsum(terms)
        small = small + 1 if abs(term) <= acc.rel_tol * abs(partial) else 0
        if small >= _SMALL_RUN:
            total = math.fsum(terms)
            # alternating terms far larger than the sum lose digits to rounding
            if max(map(abs, terms)) * 1e-16 > acc.rel_tol * abs(total):
                raise ConvergenceError(
                    f"Mittag-Leffler series at z={z} loses too many digits to cancellation",
                    estimate=total,
                )
            return total
    raise ConvergenceError(
        f"Mittag-Leffler series did not converge in {acc.max_terms} terms",
        estimate=math.fsum(terms),
    )


def _stretch(f, lo, hi, exponent, at_lo):
    # w = lo + L v^(1/(1+p)) removes a (w - lo)^p edge; mirrored for the upper end
    length = hi - lo
    q = 1.0 / (1.0 + exponent)

    if at_lo:
        def g(v):
            return f(lo + length * v ** q) * length * q * v ** (q - 1.0)
    else:
        def g(v):
            return f(hi - length * v ** q) * length * q * v ** (q - 1.0)
    return g


def _quad(g, lo, hi, acc, abs_tol):
    res = integrate.quad(
        g, lo, hi, epsabs=abs_tol, epsrel=acc.rel_tol,
        limit=acc.max_subdivisions, full_output=1,
    )
    value, err = res[0], res[1]
    # a fourth element is the warning message; accept if the estimate is still in budget
    if len(res) > 3 and err > max(acc.rel_tol * abs(value), abs_tol):
        raise ConvergenceError(
            f"quadrature on [{lo}, {hi}] did not converge: {res[3].splitlines()[0]}",
            estimate=value, error=err,
        )
    return value, err


def quad_adaptive(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    acc: Accuracy = QUAD_ACCURACY,
    *,
    lo_exponent: Optional[float] = None,
    hi_exponent: Optional[float] = None,
    abs_tol: float = 0.0,
) -> float:
    """Integrate ``f`` over ``[lo, hi]`` with optional endpoint power hints.

    Parameters
    ----------
    f : callable
        Scalar integrand.
    lo, hi : float
        Integration limits; ``hi`` may be ``inf``.
    acc : Accuracy
        Relative tolerance and subdivision limit.
    lo_exponent, hi_exponent : float, optional
        Declare that ``f`` behaves like ``(w - lo)**p`` (resp. ``(hi - w)**p``)
        near the endpoint, with ``p > -1``. The edge is then removed by the
        substitution ``w = lo + L v**(1/(1+p))`` before integration.
    abs_tol : float
        Absolute tolerance, useful when the integral may vanish.

    Raises
    ------
    ConvergenceError
        If the adaptive rule cannot meet the tolerance.
    """
    if math.isnan(lo) or math.isnan(hi) or math.isinf(lo):
        raise DomainError(f"invalid limits [{lo}, {hi}]")
    for p in (lo_exponent, hi_exponent):
        if p is not None and not p > -1:
            raise DomainError(f"endpoint exponent must exceed -1, got {p}")
    if hi == lo:
        return 0.0
    if hi < lo:
        return -quad_adaptive(f, hi, lo, acc, lo_exponent=hi_exponent,
                              hi_exponent=lo_exponent, abs_tol=abs_tol)

    if math.isinf(hi):
        if hi_exponent is not None:
            raise DomainError("an exponent hint at an infinite endpoint is meaningless")
        if lo_exponent is None:
            return _quad(f, lo, hi, acc, abs_tol)[0]
        head = quad_adaptive(f, lo, lo + 1.0, acc, lo_exponent=lo_exponent, abs_tol=abs_tol)
        tail = _quad(f, lo + 1.0, hi, acc, abs_tol)[0]
        return head + tail

    if lo_exponent is None and hi_exponent is None:
        return _quad(f, lo, hi, acc, abs_tol)[0]
    if lo_exponent is not None and hi_exponent is not None:
        mid = 0.5 * (lo + hi)
        return (quad_adaptive(f, lo, mid, acc, lo_exponent=lo_exponent, abs_tol=abs_tol)
                + quad_adaptive(f, mid, hi, acc, hi_exponent=hi_exponent, abs_tol=abs_tol))
    if lo_exponent is not None:
        g = _stretch(f, lo, hi, lo_exponent, at_lo=True)
    else:
        g = _stretch(f, lo, hi, hi_exponent, at_lo=False)
    return _quad(g, 0.0, 1.0, acc, abs_tol)[0]
