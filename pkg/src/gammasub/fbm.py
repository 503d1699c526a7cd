"""Fractional Brownian motion, its time change by S_α, and exponent estimators.

fBm values are drawn exactly at arbitrary times by Cholesky factorization
of the covariance ½(s^{2H} + t^{2H} - |t-s|^{2H}). The time-changed process
Z_H(t) = B_H(S_α(t)) is sampled by drawing the clock first and then the fBm
at the (random, irregular) clock values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import DomainError, RegimeError
from .stats import FitResult, loglog_fit
from .subordinator import SubordinatorSpec, sample_on_grid, sample_path

__all__ = [
    "HurstParam",
    "FbmPath",
    "ExponentEstimate",
    "fbm_covariance",
    "sample_fbm_at",
    "fbm_abs_moment",
    "sample_time_changed_fbm",
    "sample_time_changed_fbm_values",
    "estimate_variance_exponent",
    "estimate_lrd_exponent",
]

# gaps within this many ulps of t are mostly rounding, so the times count as duplicates
_MIN_GAP_ULPS = 4


@dataclass(frozen=True)
class HurstParam:
    H: float

    def __post_init__(self):
        if not (0.0 < self.H < 1.0):
            raise DomainError(f"Hurst parameter must lie in (0, 1), got {self.H}")

    def require_lrd_regime(self, alpha: float) -> None:
        """Raise :class:`RegimeError` outside H < 1/2, α >= 2H."""
        if self.H >= 0.5:
            raise RegimeError(f"long-range dependence result needs H < 1/2, got H={self.H}")
        if alpha < 2.0 * self.H:
            raise RegimeError(f"long-range dependence result needs alpha >= 2H, got alpha={alpha}, H={self.H}")


@dataclass(frozen=True)
class FbmPath:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise DomainError("times and values must be 1-D arrays of equal length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def to_csv(self) -> str:
        rows = ["t,value"] + [f"{t!r},{v!r}" for t, v in zip(self.times.tolist(), self.values.tolist())]
        return "\n".join(rows) + "\n"


def fbm_covariance(H: float, times) -> np.ndarray:
    """Covariance matrix ½(s^{2H} + t^{2H} - |t-s|^{2H})."""
    HurstParam(H)
    t = np.asarray(times, dtype=float)
    p = t ** (2.0 * H)
    return 0.5 * (p[:, None] + p[None, :] - np.abs(t[:, None] - t[None, :]) ** (2.0 * H))


def _increment_covariance(H, t):
    # covariance of B_H(t_i) - B_H(t_{i-1}) with t_{-1} = 0, built from time differences
    lo = np.concatenate(([0.0], t[:-1]))
    h2 = 2.0 * H

    def p(d):
        return np.abs(d) ** h2

    return 0.5 * (p(t[:, None] - lo[None, :]) + p(lo[:, None] - t[None, :])
                  - p(t[:, None] - t[None, :]) - p(lo[:, None] - lo[None, :]))


def _cholesky(H, t):
    """Factor L with L @ L.T = Cov(B_H(t)), exact at widely spread times.

    The increments are factorized on the correlation scale and summed, so a
    gap that is tiny next to t keeps its own variance gap^{2H} instead of
    losing it to cancellation in ½(s^{2H} + t^{2H} - |t-s|^{2H}).
    """
    if t.size > 1:
        gaps = np.diff(t)
        if np.any(gaps <= _MIN_GAP_ULPS * np.spacing(t[1:])):
            raise DomainError(
                f"sampling times contain near-duplicates (smallest gap {gaps.min():.3g}); "
                "de-duplicate before factorizing"
            )
    cov = _increment_covariance(H, t)
    sd = np.sqrt(np.diag(cov))
    corr = cov / sd[:, None] / sd[None, :]
    np.fill_diagonal(corr, 1.0)
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        eig = np.linalg.eigvalsh(corr)
        raise DomainError(
            f"fBm increment correlation at {t.size} times is not numerically positive definite "
            f"(smallest eigenvalue {eig[0]:.3g}, condition {eig[-1] / max(abs(eig[0]), 1e-300):.3g})"
        ) from None
    return np.cumsum(sd[:, None] * chol, axis=0)


def sample_fbm_at(H: float, times: Sequence[float], rng: np.random.Generator) -> FbmPath:
    """Exact joint draw of B_H at strictly increasing, nonnegative ``times``."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("times must be a non-empty 1-D sequence")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise DomainError("times must be strictly increasing and >= 0")
    values = np.zeros_like(t)
    pos = t > 0  # B_H(0) = 0
    if pos.any():
        L = _cholesky(H, t[pos])
        values[pos] = L @ rng.standard_normal(int(pos.sum()))
    return FbmPath(t, values)


def fbm_abs_moment(H: float, q: float, t: float) -> float:
    """E|B_H(t)|^q = √(2^q/π) Γ((q+1)/2) t^{qH}, for q > -1."""
    HurstParam(H)
    if not q > -1:
        raise DomainError(f"absolute moment needs q > -1, got {q}")
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return math.sqrt(2.0**q / math.pi) * math.gamma(0.5 * (q + 1.0)) * t ** (q * H)


def _fbm_at_clock(H, clock_row, rng):
    # equal clock values share one fBm value; zero clock maps to B_H(0) = 0
    levels, inverse = np.unique(clock_row, return_inverse=True)
    vals = np.zeros_like(levels)
    pos = levels > 0
    if pos.any():
        L = _cholesky(H, levels[pos])
        vals[pos] = L @ rng.standard_normal(int(pos.sum()))
    return vals[inverse]


def sample_time_changed_fbm(H: float, alpha: float, horizon: float, eval_times: Sequence[float],
                            rng: np.random.Generator) -> FbmPath:
    """One path of Z_H(t) = B_H(S_α(t)) at ``eval_times`` within ``[0, horizon]``.

    The clock and the fBm use two independent child streams of ``rng``.
    """
    HurstParam(H)
    t = np.asarray(eval_times, dtype=float)
    if t.size and (t.min() < 0 or t.max() > horizon):
        raise DomainError("eval_times must lie in [0, horizon]")
    clock_rng, noise_rng = rng.spawn(2)
    clock = sample_path(SubordinatorSpec.plain(alpha), horizon, clock_rng).evaluate_at(t)
    return FbmPath(t, _fbm_at_clock(H, np.asarray(clock, dtype=float), noise_rng))


def sample_time_changed_fbm_values(H: float, alpha: float, eval_times: Sequence[float], n: int,
                                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Clock values and Z_H for ``n`` paths at a nondecreasing grid, each of shape ``(n, K)``."""
    HurstParam(H)
    clock_rng, noise_rng = rng.spawn(2)
    clock = sample_on_grid(SubordinatorSpec.plain(alpha), eval_times, n, clock_rng)
    values = np.empty_like(clock)
    for i in range(n):
        values[i] = _fbm_at_clock(H, clock[i], noise_rng)
    return clock, values


@dataclass(frozen=True)
class ExponentEstimate:
    """Power-law exponent fitted to a Monte Carlo table.

    ``table`` holds ``(t, value, stderr)`` rows; the fit uses the rows with
    ``t`` in ``fit_window``. ``stderr`` is a delete-one-group jackknife
    over ``n_batches`` groups of paths.
    """

    kind: str
    H: float
    alpha: float
    slope: float
    stderr: float
    expected: float
    prefactor: float
    n_paths: int
    fit_window: tuple
    inconclusive: bool
    table: list = field(default_factory=list)
    fit: Optional[FitResult] = None

    def to_record(self, seed: Optional[int] = None) -> dict:
        rec = {
            "kind": self.kind,
            "H": self.H,
            "alpha": self.alpha,
            "slope": self.slope,
            "stderr": self.stderr,
            "expected": self.expected,
            "prefactor": self.prefactor,
            "n_paths": self.n_paths,
            "fit_window": list(self.fit_window),
            "inconclusive": self.inconclusive,
        }
        if seed is not None:
            rec["seed"] = seed
        return rec

    def to_json(self, seed: Optional[int] = None) -> str:
        return json.dumps(self.to_record(seed), sort_keys=True, indent=2) + "\n"

    def table_csv(self) -> str:
        rows = ["t,value,stderr"] + [f"{t!r},{v!r},{e!r}" for t, v, e in self.table]
        return "\n".join(rows) + "\n"


def _check_t_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 3 or t[0] <= 0 or np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must hold at least 3 strictly increasing positive times")
    if t[-1] < 50 or math.log10(t[-1] / t[0]) < 1.5:
        raise DomainError("t_grid must span at least 1.5 decades and reach t >= 50")
    window = t >= t[-1] / 10.0
    if window.sum() < 3:
        raise DomainError("need at least 3 grid points within the largest decade")
    return t, window


def _jackknife_slopes(t, window, z, n_batches, statistic):
    # delete-one-group replicates keep each refit on (1 - 1/B) of the paths
    groups = np.array_split(np.arange(z.shape[0]), n_batches)
    slopes = []
    for g in groups:
        keep = np.ones(z.shape[0], dtype=bool)
        keep[g] = False
        row = statistic(z[keep])
        slopes.append(loglog_fit(t[window], row[window]).slope if np.all(row[window] > 0) else math.nan)
    return np.asarray(slopes)


def _finish(kind, H, alpha, t, window, value, value_se, z, statistic, n_batches, expected, n_paths,
            max_stderr, slope_sign):
    table = [(float(a), float(b), float(c)) for a, b, c in zip(t, value, value_se)]
    span = (float(t[window][0]), float(t[-1]))
    if np.any(value[window] <= 0):
        return ExponentEstimate(kind, H, alpha, math.nan, math.nan, expected, math.nan, n_paths,
                                span, True, table)
    floor_hit = bool(np.any(value[window] <= 4.0 * value_se[window]))
    fit = loglog_fit(t[window], value[window])
    reps = _jackknife_slopes(t, window, z, n_batches, statistic)
    if np.all(np.isfinite(reps)):
        b = reps.size
        se = float(math.sqrt((b - 1) / b * np.sum((reps - reps.mean()) ** 2)))
    else:
        se = math.inf
    inconclusive = floor_hit or not se <= max_stderr
    return ExponentEstimate(kind, H, alpha, slope_sign * fit.slope, se, expected,
                            math.exp(fit.intercept), n_paths, span, inconclusive, table, fit)


def estimate_variance_exponent(H: float, alpha: float, t_grid: Sequence[float], n_paths: int,
                               rng: np.random.Generator, n_batches: int = 20,
                               max_stderr: float = 0.05) -> ExponentEstimate:
    """Log-log slope of the Monte Carlo variance of Z_H(t) against t.

    The fit uses the largest decade of ``t_grid``; the expected slope is 2H/α.
    """
    HurstParam(H)
    t, window = _check_t_grid(t_grid)
    if n_paths < 2 * n_batches:
        raise DomainError(f"need at least {2 * n_batches} paths")
    _, z = sample_time_changed_fbm_values(H, alpha, t, n_paths, rng)
    var = z.var(axis=0, ddof=1)
    sq = (z - z.mean(axis=0)) ** 2
    var_se = sq.std(axis=0, ddof=1) / math.sqrt(n_paths)
    return _finish("variance", H, alpha, t, window, var, var_se, z,
                   lambda zz: zz.var(axis=0, ddof=1), n_batches, 2.0 * H / alpha, n_paths,
                   max_stderr, 1.0)


def _corr_with_first(z):
    # Pearson correlation of column 0 with every later column
    c = z - z.mean(axis=0)
    num = c[:, :1].T @ c[:, 1:]
    den = np.sqrt(np.sum(c[:, :1] ** 2) * np.sum(c[:, 1:] ** 2, axis=0))
    return (num[0] / den).astype(float)


def estimate_lrd_exponent(H: float, alpha: float, s: float, t_grid: Sequence[float], n_paths: int,
                          rng: np.random.Generator, n_batches: int = 20,
                          max_stderr: float = 0.1) -> ExponentEstimate:
    """Fit Corr(Z_H(t), Z_H(s)) ≈ c t^{-d} over the largest decade of ``t_grid``.

    Returns d as ``slope`` (expected 1 - H/α) and c as ``prefactor``.

    Raises
    ------
    RegimeError
        If H >= 1/2 or α < 2H.
    """
    HurstParam(H).require_lrd_regime(alpha)
    t, window = _check_t_grid(t_grid)
    if not (0 < s < t[0]):
        raise DomainError("need 0 < s < min(t_grid)")
    if n_paths < 2 * n_batches:
        raise DomainError(f"need at least {2 * n_batches} paths")
    grid = np.concatenate(([s], t))
    _, z = sample_time_changed_fbm_values(H, alpha, grid, n_paths, rng)
    corr = _corr_with_first(z)
    corr_se = (1.0 - corr**2) / math.sqrt(n_paths)
    return _finish("lrd", H, alpha, t, window, corr, corr_se, z, _corr_with_first, n_batches,
                   1.0 - H / alpha, n_paths, max_stderr, -1.0)
