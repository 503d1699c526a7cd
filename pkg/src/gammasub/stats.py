"""Monte Carlo estimates, a KS test, and power-law regression."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import DomainError
from .streams import Key, make_stream

__all__ = [
    "MonteCarloEstimate",
    "FitResult",
    "KS_C_01",
    "mc_mean",
    "ks_statistic",
    "loglog_fit",
    "within_sigmas",
    "chunked_samples",
]

# asymptotic Kolmogorov critical value at the 1% level
KS_C_01 = 1.6276


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    n: int
    master_seed: Optional[int] = None
    stream_count: Optional[int] = None

    def z_score(self, target: float) -> float:
        """Signed distance to ``target`` in units of the standard error."""
        diff = self.mean - target
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.stderr


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float


def mc_mean(samples, master_seed: Optional[int] = None,
            stream_count: Optional[int] = None) -> MonteCarloEstimate:
    """Sample mean and standard error (sample std / √n), compensated summation."""
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise DomainError(f"need at least 2 samples, got {n}")
    mean = math.fsum(x) / n
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return MonteCarloEstimate(mean, math.sqrt(var / n), n, master_seed, stream_count)


def within_sigmas(est: MonteCarloEstimate, target: float, sigmas: float = 4.0) -> bool:
    return abs(est.mean - target) <= sigmas * est.stderr


def ks_statistic(samples, cdf: Callable, vectorized: bool = False) -> tuple[float, bool]:
    """Kolmogorov-Smirnov distance to ``cdf`` and the 1%-level verdict.

    The test passes when D_n < 1.6276 / √n. Unsorted input is sorted first.
    With ``vectorized=True`` the cdf is called once on the sorted array.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise DomainError("no samples")
    if vectorized:
        f = np.asarray(cdf(x), dtype=float)
        if f.shape != x.shape:
            raise DomainError("vectorized cdf must return one value per sample")
    else:
        f = np.fromiter((cdf(v) for v in x), dtype=float, count=n)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    return d, d < KS_C_01 / math.sqrt(n)


def loglog_fit(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    """Least-squares line through (log x, log y)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise DomainError("need at least 3 matching points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    if sxx == 0:
        raise DomainError("xs must not all be equal")
    slope = float(np.sum((lx - mx) * (ly - my)) / sxx)
    intercept = float(my - slope * mx)
    resid = ly - (intercept + slope * lx)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - my) ** 2))
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    dof = x.size - 2
    se = math.sqrt(ss_res / dof / sxx) if dof > 0 else math.nan
    return FitResult(slope, intercept, se, r2)


def chunked_samples(
    sampler: Callable[[int, np.random.Generator], np.ndarray],
    n: int,
    master_seed: int,
    key: Key = 0,
    chunk: int = 20_000,
    threads: int = 1,
) -> np.ndarray:
    """Draw ``n`` samples in fixed-size chunks, one random stream per chunk.

    Chunk ``i`` always uses stream ``(master_seed, key, i)`` and results are
    concatenated in chunk order, so the output does not depend on ``threads``.
    """
    sizes = [min(chunk, n - start) for start in range(0, n, chunk)]

    def run(i):
        return sampler(sizes[i], make_stream(master_seed, key, i))

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return np.concatenate(parts, axis=0)
