"""Subordinators driven by the lower-incomplete gamma function.

Three univariate families share one parameter record, :class:`SubordinatorSpec`:

* plain, with Laplace exponent φ(η) = α γ(α; η) and jumps of size ≥ 1;
* tempered, φ_θ(η) = α γ(α; η + θ) - α γ(α; θ);
* ε-floored, φ_ε(η) = (α / ε^α) γ(α; ηε), with jumps of size ≥ ε.

All of them are compound Poisson processes, so paths are simulated exactly:
a Poisson number of jumps, uniform epochs and i.i.d. jump sizes. With
U ~ Beta(1-α, α) the plain jump 1/(1-U) equals 1 + G₁/G₂ for independent
G₁ ~ Gamma(1-α), G₂ ~ Gamma(α); the latter form is used since it keeps full
precision in the heavy tail.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import specfun
from .exceptions import DomainError, InfiniteMomentError, RejectionError

__all__ = [
    "SubordinatorSpec",
    "PathSample",
    "DirectionMeasure2D",
    "MvPathSample",
    "laplace_exponent",
    "poisson_rate",
    "jump_floor",
    "levy_density",
    "jump_cdf",
    "sample_jump",
    "sample_jumps",
    "sample_path",
    "sample_values",
    "sample_on_grid",
    "evaluate_at",
    "tempered_mean_var",
    "tail_asymptote",
    "frac_moment_asymptote",
    "frac_moment",
    "mv_laplace_exponent",
    "mv_poisson_rate",
    "sample_mv_path",
    "sample_mv_values",
]

MAX_CONSECUTIVE_REJECTIONS = 1_000_000


@dataclass(frozen=True)
class SubordinatorSpec:
    """Parameters of one subordinator family.

    Parameters
    ----------
    alpha : float
        Index in (0, 1].
    theta : float
        Tempering rate, ≥ 0. ``inf`` removes every jump, leaving the pure
        drift ``beta0 * t``.
    epsilon : float, optional
        Jump floor. ``None`` means the floor 1 of the plain and tempered families.
    beta0 : float
        Deterministic drift, only used when the subordinator serves as a clock.
    """

    alpha: float
    theta: float = 0.0
    epsilon: Optional[float] = None
    beta0: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.theta >= 0.0:
            raise DomainError(f"theta must be >= 0, got {self.theta}")
        if self.epsilon is not None:
            if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
                raise DomainError(f"epsilon must be positive, got {self.epsilon}")
            if self.theta != 0.0:
                raise DomainError("tempering and a jump floor epsilon are mutually exclusive")
        if not (self.beta0 >= 0.0 and math.isfinite(self.beta0)):
            raise DomainError(f"beta0 must be a finite number >= 0, got {self.beta0}")

    @classmethod
    def plain(cls, alpha, beta0=0.0):
        return cls(alpha=alpha, beta0=beta0)

    @classmethod
    def tempered(cls, alpha, theta, beta0=0.0):
        return cls(alpha=alpha, theta=theta, beta0=beta0)

    @classmethod
    def floored(cls, alpha, epsilon, beta0=0.0):
        return cls(alpha=alpha, epsilon=epsilon, beta0=beta0)

    @property
    def family(self) -> str:
        if self.epsilon is not None:
            return "epsilon"
        return "tempered" if self.theta > 0 else "plain"

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(self.theta):
            d["theta"] = "inf"
        return d


def jump_floor(spec: SubordinatorSpec) -> float:
    """Smallest possible jump: ε for the floored family, 1 otherwise."""
    return 1.0 if spec.epsilon is None else spec.epsilon


def laplace_exponent(spec: SubordinatorSpec, eta: float) -> float:
    """Laplace exponent φ(η), so that E exp(-η S(t)) = exp(-t φ(η))."""
    if not eta >= 0:
        raise DomainError(f"eta must be >= 0, got {eta}")
    a = spec.alpha
    if eta == 0:
        return 0.0
    if spec.family == "plain":
        return a * specfun.lower_inc_gamma(a, eta)
    if spec.family == "epsilon":
        eps = spec.epsilon
        return a / eps**a * specfun.lower_inc_gamma(a, eta * eps)
    theta = spec.theta
    if math.isinf(theta):
        return 0.0
    if theta < 1.0:
        return a * (specfun.lower_inc_gamma(a, eta + theta) - specfun.lower_inc_gamma(a, theta))
    # both lower values are close to Γ(α) here; difference the upper tails instead
    return a * (specfun.upper_inc_gamma(a, theta) - specfun.upper_inc_gamma(a, theta + eta))


def poisson_rate(spec: SubordinatorSpec) -> float:
    """Total mass of the Lévy measure, i.e. the jump intensity."""
    a = spec.alpha
    if spec.family == "plain":
        return a * math.gamma(a)
    if spec.family == "epsilon":
        return a * math.gamma(a) * spec.epsilon ** (-a)
    if math.isinf(spec.theta):
        return 0.0
    return a * specfun.upper_inc_gamma(a, spec.theta)


def levy_density(spec: SubordinatorSpec, z: float) -> float:
    """Density of the Lévy measure at ``z > 0``.

    Returns ``inf`` exactly at the floor, where the density has an integrable
    singularity. For α = 1 the measure is a point mass and has no density.
    """
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    a = spec.alpha
    if a == 1.0:
        raise DomainError("for alpha = 1 the Levy measure is a point mass at the floor")
    floor = jump_floor(spec)
    if z < floor:
        return 0.0
    if z == floor:
        return math.inf
    value = a * (z - floor) ** (-a) / z / math.gamma(1.0 - a)
    if spec.theta > 0:
        value *= math.exp(-spec.theta * z)
    return value


def jump_cdf(spec: SubordinatorSpec, z: float) -> float:
    """CDF of a single jump for the plain and floored families.

    Under u = 1 - floor/z the jump density maps onto Beta(1-α, α), so
    F(z) = I_{1 - floor/z}(1-α, α).
    """
    if spec.family == "tempered":
        raise DomainError("closed-form jump CDF is only available without tempering")
    floor = jump_floor(spec)
    if z <= floor:
        return 0.0
    if spec.alpha == 1.0:
        return 1.0
    return specfun.reg_inc_beta(1.0 - floor / z, 1.0 - spec.alpha, spec.alpha)


def _plain_jumps(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    g1 = rng.standard_gamma(1.0 - alpha, size)
    g2 = rng.standard_gamma(alpha, size)
    return 1.0 + g1 / g2


def sample_jumps(spec: SubordinatorSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` i.i.d. jump sizes.

    Tempered jumps are obtained by rejection from the plain law with
    acceptance probability exp(-θ (Z - 1)).

    Raises
    ------
    RejectionError
        After ``MAX_CONSECUTIVE_REJECTIONS`` rejections in a row.
    """
    if size < 0:
        raise DomainError(f"size must be >= 0, got {size}")
    if size == 0:
        return np.empty(0)
    floor = jump_floor(spec)
    if spec.alpha == 1.0:
        return np.full(size, floor)
    if spec.family != "tempered":
        return floor * _plain_jumps(spec.alpha, size, rng)

    theta = spec.theta
    if math.isinf(theta):
        raise DomainError("theta = inf has no jumps to sample")
    # e^θ Γ(α, θ) / Γ(α); the leading asymptote avoids overflow for huge θ
    if theta < 500.0:
        accept_rate = math.exp(theta) * specfun.upper_inc_gamma(spec.alpha, theta) / math.gamma(spec.alpha)
    else:
        accept_rate = theta ** (spec.alpha - 1.0) / math.gamma(spec.alpha)
    out = np.empty(size)
    filled = 0
    run = 0
    while filled < size:
        batch = int((size - filled) / max(accept_rate, 1e-6) * 1.1) + 16
        batch = min(batch, 10_000_000)
        z = _plain_jumps(spec.alpha, batch, rng)
        u = rng.random(batch)
        ok = u < np.exp(-theta * (z - 1.0))
        hits = np.flatnonzero(ok)
        if hits.size == 0:
            run += batch
        else:
            gaps = np.diff(np.concatenate(([-1], hits))) - 1
            run = max(run + int(gaps[0]), int(gaps.max()))
        if run >= MAX_CONSECUTIVE_REJECTIONS:
            raise RejectionError(
                f"{run} consecutive rejections for tempered jumps "
                f"(alpha={spec.alpha}, theta={theta}, expected acceptance {accept_rate:.3g})"
            )
        if hits.size:
            run = batch - 1 - int(hits[-1])
        take = min(hits.size, size - filled)
        out[filled:filled + take] = z[hits[:take]]
        filled += take
    return out


def sample_jump(spec: SubordinatorSpec, rng: np.random.Generator) -> float:
    """Draw a single jump size."""
    return float(sample_jumps(spec, 1, rng)[0])


@dataclass(frozen=True)
class PathSample:
    """One compound-Poisson trajectory on ``[0, horizon]``.

    The value at time t is ``drift * t`` plus the sum of all jumps whose
    epoch is ≤ t.
    """

    horizon: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    drift: float = 0.0
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        times = np.asarray(self.jump_times, dtype=float)
        sizes = np.asarray(self.jump_sizes, dtype=float)
        if times.shape != sizes.shape or times.ndim != 1:
            raise DomainError("jump_times and jump_sizes must be 1-D arrays of equal length")
        if times.size and (times[0] < 0 or times[-1] > self.horizon or np.any(np.diff(times) <= 0)):
            raise DomainError("jump_times must be strictly increasing within [0, horizon]")
        if np.any(sizes <= 0):
            raise DomainError("jump sizes must be positive")
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "jump_sizes", sizes)
        object.__setattr__(self, "_cumulative", np.cumsum(sizes))

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)

    @property
    def cumulative(self) -> np.ndarray:
        """Jump part of the path right after each jump."""
        return self._cumulative

    def evaluate_at(self, t):
        """Value of the path at time(s) ``t``; right-continuous."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.horizon):
            raise DomainError(f"t must lie in [0, {self.horizon}]")
        k = np.searchsorted(self.jump_times, t_arr, side="right")
        jumps = np.where(k > 0, self._cumulative[np.maximum(k - 1, 0)] if self.n_jumps else 0.0, 0.0)
        value = self.drift * t_arr + jumps
        return float(value) if value.ndim == 0 else value

    def to_csv(self) -> str:
        """CSV text with header ``jump_time,jump_size``; floats in round-trip form."""
        lines = ["jump_time,jump_size"]
        lines += [f"{t!r},{z!r}" for t, z in zip(self.jump_times.tolist(), self.jump_sizes.tolist())]
        return "\n".join(lines) + "\n"

    def to_record(self, spec: SubordinatorSpec = None, seed=None) -> dict:
        record = {
            "horizon": self.horizon,
            "drift": self.drift,
            "jump_times": self.jump_times.tolist(),
            "jump_sizes": self.jump_sizes.tolist(),
        }
        if spec is not None:
            record["spec"] = spec.to_dict()
        if seed is not None:
            record["seed"] = seed
        return record

    def to_json(self, spec: SubordinatorSpec = None, seed=None) -> str:
        return json.dumps(self.to_record(spec, seed), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_record(cls, record: dict) -> "PathSample":
        return cls(record["horizon"], np.array(record["jump_times"]),
                   np.array(record["jump_sizes"]), record.get("drift", 0.0))


def evaluate_at(path: PathSample, t):
    """Value of ``path`` at time(s) ``t``."""
    return path.evaluate_at(t)


def sample_path(spec: SubordinatorSpec, horizon: float, rng: np.random.Generator) -> PathSample:
    """Simulate one exact path of the subordinator on ``[0, horizon]``."""
    if not horizon >= 0:
        raise DomainError(f"horizon must be >= 0, got {horizon}")
    n = int(rng.poisson(poisson_rate(spec) * horizon)) if horizon > 0 else 0
    times = np.sort(rng.uniform(0.0, horizon, n))
    sizes = sample_jumps(spec, n, rng)
    return PathSample(horizon, times, sizes, spec.beta0)


def sample_values(spec: SubordinatorSpec, t: float, n: int, rng: np.random.Generator,
                  include_drift: bool = True) -> np.ndarray:
    """Values S(t) of ``n`` independent paths at a single time ``t``."""
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    counts = rng.poisson(poisson_rate(spec) * t, n)
    jumps = sample_jumps(spec, int(counts.sum()), rng)
    owner = np.repeat(np.arange(n), counts)
    values = np.bincount(owner, weights=jumps, minlength=n).astype(float)
    if include_drift and spec.beta0:
        values += spec.beta0 * t
    return values


def sample_on_grid(spec: SubordinatorSpec, times: Sequence[float], n: int,
                   rng: np.random.Generator, include_drift: bool = True) -> np.ndarray:
    """Values of ``n`` independent paths at every time of a nondecreasing grid.

    Returns an array of shape ``(n, len(times))``. Increments over disjoint
    intervals are independent compound Poisson sums, so the joint law on the
    grid is exact.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DomainError("times must be a non-empty 1-D sequence")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise DomainError("times must be nondecreasing and >= 0")
    dt = np.diff(np.concatenate(([0.0], times)))
    counts = rng.poisson(poisson_rate(spec) * dt, size=(n, times.size))
    jumps = sample_jumps(spec, int(counts.sum()), rng)
    owner = np.repeat(np.arange(counts.size), counts.ravel())
    incr = np.bincount(owner, weights=jumps, minlength=counts.size).reshape(counts.shape)
    values = np.cumsum(incr, axis=1, dtype=float)
    if include_drift and spec.beta0:
        values += spec.beta0 * times
    return values


def tempered_mean_var(spec: SubordinatorSpec, t: float) -> tuple[float, float]:
    """Mean and variance of the jump part S(t) for the tempered family.

    mean = t α θ^{α-1} e^{-θ};  var = mean + α (1-α) t θ^{α-2} e^{-θ}.
    """
    if spec.family == "epsilon":
        raise DomainError("tempered_mean_var applies to the floor-1 families")
    a, theta = spec.alpha, spec.theta
    if theta == 0 and a < 1:
        raise InfiniteMomentError("integer moments of the untempered subordinator are infinite")
    if math.isinf(theta):
        return 0.0, 0.0
    if theta == 0:  # alpha == 1: unit-rate Poisson process
        return float(t), float(t)
    mean = t * a * theta ** (a - 1.0) * math.exp(-theta)
    var = mean + a * (1.0 - a) * t * theta ** (a - 2.0) * math.exp(-theta)
    return mean, var


def tail_asymptote(alpha: float, t: float, x: float) -> float:
    """Large-x approximation t x^{-α} / Γ(1-α) of P(S(t) > x)."""
    if not (0 < alpha < 1):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    return t * x ** (-alpha) / math.gamma(1.0 - alpha)


def frac_moment_asymptote(alpha: float, p: float, t: float) -> float:
    """Large-t approximation Γ(1-p/α)/Γ(1-p) t^{p/α} of E S(t)^p, for 0 < p < α."""
    if not (0 < alpha <= 1):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not (0 < p < alpha):
        raise DomainError(f"need 0 < p < alpha, got p={p}, alpha={alpha}")
    return math.gamma(1.0 - p / alpha) / math.gamma(1.0 - p) * t ** (p / alpha)


def frac_moment(alpha: float, p: float, t: float) -> float:
    """Exact E S(t)^p for the plain family, by quadrature.

    Uses E S^p = α t / Γ(1-p) ∫₀^∞ exp(-η - t α γ(α; η)) η^{α-p-1} dη,
    valid for 0 < p < α (and any p in (0, 1) when α = 1).
    """
    if not (0 < p < 1) or not (0 < alpha <= 1) or (alpha < 1 and p >= alpha):
        raise DomainError(f"unsupported moment order p={p} for alpha={alpha}")
    if t == 0:
        return 0.0

    def f(eta):
        return math.exp(-eta - t * alpha * specfun.lower_inc_gamma(alpha, eta)) * eta ** (alpha - p - 1.0)

    acc = specfun.Accuracy(rel_tol=1e-10)
    val = specfun.quad_adaptive(f, 0.0, 1.0, acc, lo_exponent=alpha - p - 1.0)
    val += specfun.quad_adaptive(f, 1.0, math.inf, acc)
    return alpha * t / math.gamma(1.0 - p) * val


@dataclass(frozen=True)
class DirectionMeasure2D:
    """Discrete probability measure on angles in [0, π/2] plus a scale C.

    The bivariate Lévy measure is C · α/Γ(1-α) (ρ-ε)^{-α} ρ^{-1} dρ M(dβ), so
    that C = 1 reproduces the univariate normalization.
    """

    angles: tuple
    weights: tuple
    scale_C: float = 1.0

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        weights = tuple(float(w) for w in self.weights)
        if len(angles) != len(weights) or not angles:
            raise DomainError("angles and weights must be non-empty and of equal length")
        if any(not (0.0 <= a <= math.pi / 2) for a in angles):
            raise DomainError("angles must lie in [0, pi/2]")
        if any(w <= 0 for w in weights):
            raise DomainError("weights must be positive")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise DomainError(f"weights must sum to 1, got {math.fsum(weights)}")
        if not self.scale_C > 0:
            raise DomainError("scale_C must be positive")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "weights", weights)

    def directions(self) -> np.ndarray:
        a = np.asarray(self.angles)
        # exact zeros on the axes
        c = np.where(a == math.pi / 2, 0.0, np.cos(a))
        return np.column_stack([c, np.sin(a)])


@dataclass(frozen=True)
class MvPathSample:
    """Bivariate compound-Poisson path with jumps in the closed positive quadrant."""

    horizon: float
    jump_times: np.ndarray
    jump_vectors: np.ndarray

    def evaluate_at(self, t) -> np.ndarray:
        if not (0 <= t <= self.horizon):
            raise DomainError(f"t must lie in [0, {self.horizon}]")
        k = np.searchsorted(self.jump_times, t, side="right")
        return self.jump_vectors[:k].sum(axis=0)

    def marginals(self) -> np.ndarray:
        """Cumulative values of both coordinates after each jump, shape (N, 2)."""
        return np.cumsum(self.jump_vectors, axis=0)


def mv_poisson_rate(alpha: float, epsilon: float, M: DirectionMeasure2D) -> float:
    return M.scale_C * alpha * math.gamma(alpha) * epsilon ** (-alpha)


def mv_laplace_exponent(alpha: float, epsilon: float, M: DirectionMeasure2D,
                        eta: Sequence[float]) -> float:
    """Bivariate Bernstein function Φ_ε(η) = C Σ_i w_i (θ_i·η)^α O_ε(θ_i·η)."""
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (2,) or np.any(eta < 0):
        raise DomainError("eta must be a nonnegative 2-vector")
    total = []
    for w, d in zip(M.weights, M.directions()):
        proj = float(d @ eta)
        total.append(w * alpha / epsilon**alpha * specfun.lower_inc_gamma(alpha, proj * epsilon))
    return M.scale_C * math.fsum(total)


def _mv_jumps(alpha, epsilon, M, n, rng):
    radius = epsilon * (_plain_jumps(alpha, n, rng) if alpha < 1 else np.ones(n))
    idx = rng.choice(len(M.weights), size=n, p=np.asarray(M.weights))
    return radius[:, None] * M.directions()[idx]


def sample_mv_path(alpha: float, epsilon: float, M: DirectionMeasure2D, horizon: float,
                   rng: np.random.Generator) -> MvPathSample:
    """Simulate one path of the bivariate ε-floored subordinator."""
    if not (0 < alpha <= 1) or not epsilon > 0 or not horizon >= 0:
        raise DomainError("need alpha in (0, 1], epsilon > 0, horizon >= 0")
    n = int(rng.poisson(mv_poisson_rate(alpha, epsilon, M) * horizon)) if horizon > 0 else 0
    times = np.sort(rng.uniform(0.0, horizon, n))
    return MvPathSample(horizon, times, _mv_jumps(alpha, epsilon, M, n, rng))


def sample_mv_values(alpha: float, epsilon: float, M: DirectionMeasure2D, t: float, n: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Values (S₁(t), S₂(t)) for ``n`` independent paths, shape ``(n, 2)``."""
    counts = rng.poisson(mv_poisson_rate(alpha, epsilon, M) * t, n)
    jumps = _mv_jumps(alpha, epsilon, M, int(counts.sum()), rng)
    owner = np.repeat(np.arange(n), counts)
    return np.column_stack([np.bincount(owner, weights=jumps[:, j], minlength=n) for j in range(2)]).astype(float)
