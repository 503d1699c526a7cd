import math

import numpy as np
import pytest
from scipy import stats as sps

from gammasub.exceptions import DomainError
from gammasub.stats import KS_C_01, chunked_samples, ks_statistic, loglog_fit, mc_mean, within_sigmas
from gammasub.streams import make_stream


class TestMcMean:
    def test_constant(self):
        est = mc_mean(np.full(10, 3.0))
        assert est.mean == 3.0 and est.stderr == 0.0
        assert est.z_score(3.0) == 0.0
        assert est.z_score(2.0) == math.inf

    def test_known_values(self):
        est = mc_mean([1.0, 2.0, 3.0, 4.0])
        assert est.mean == 2.5
        assert est.stderr == pytest.approx(math.sqrt(5 / 3 / 4), rel=1e-15)

    def test_compensated_sum(self):
        # naive float summation loses the small terms here
        x = np.array([1e16, 1.0, -1e16, 1.0])
        assert mc_mean(x).mean == 0.5

    def test_too_few(self):
        with pytest.raises(DomainError):
            mc_mean([1.0])

    def test_within_sigmas(self):
        est = mc_mean(make_stream(1729, "mc").standard_normal(10_000))
        assert within_sigmas(est, 0.0)
        assert not within_sigmas(est, 1.0)


class TestKs:
    def test_critical_value(self):
        # Kolmogorov distribution: P(√n D > 1.6276) ≈ 0.01
        assert sps.kstwobign.sf(KS_C_01) == pytest.approx(0.01, abs=1e-4)

    def test_matches_scipy(self):
        x = make_stream(1729, "ks-scipy").random(300)
        d, _ = ks_statistic(x, lambda v: v)
        assert d == pytest.approx(sps.kstest(x, "uniform").statistic, rel=1e-12)

    def test_vectorized_same_as_scalar(self):
        x = make_stream(1729, "ks-vec").standard_normal(500)
        assert ks_statistic(x, sps.norm.cdf, vectorized=True) == ks_statistic(x, lambda v: float(sps.norm.cdf(v)))

    def test_vectorized_shape_check(self):
        with pytest.raises(DomainError):
            ks_statistic([0.1, 0.2], lambda v: 0.5, vectorized=True)

    def test_calibration(self):
        # about 1% of correct-law samples should be rejected
        fails = 0
        for i in range(300):
            x = make_stream(1729, "ks-cal", i).random(400)
            fails += not ks_statistic(x, lambda v: v, vectorized=True)[1]
        assert fails <= 10

    def test_detects_shift(self):
        x = make_stream(1729, "ks-shift").standard_normal(5000) + 0.1
        assert not ks_statistic(x, sps.norm.cdf, vectorized=True)[1]

    def test_empty(self):
        with pytest.raises(DomainError):
            ks_statistic([], lambda v: v)


class TestLoglogFit:
    def test_exact_power(self):
        x = np.geomspace(1, 100, 9)
        fit = loglog_fit(x, 3.0 * x**-0.6)
        assert fit.slope == pytest.approx(-0.6, abs=1e-12)
        assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-12)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.slope_stderr == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("xs, ys", [([1, 2], [1, 2]), ([1, 2, 3], [1, -2, 3]), ([0, 1, 2], [1, 2, 3]),
                                        ([2, 2, 2], [1, 2, 3])])
    def test_invalid(self, xs, ys):
        with pytest.raises(DomainError):
            loglog_fit(xs, ys)


class TestChunkedSamples:
    @staticmethod
    def sampler(n, rng):
        return rng.standard_normal(n)

    def test_thread_count_invariance(self):
        a = chunked_samples(self.sampler, 50_000, 1729, "c", chunk=7000, threads=1)
        b = chunked_samples(self.sampler, 50_000, 1729, "c", chunk=7000, threads=4)
        assert np.array_equal(a, b)

    def test_chunk_addressing(self):
        out = chunked_samples(self.sampler, 25, 1729, "c", chunk=10)
        assert np.array_equal(out[10:20], make_stream(1729, "c", 1).standard_normal(10))
        assert np.array_equal(out[20:], make_stream(1729, "c", 2).standard_normal(5))

    def test_streams_independent(self):
        a = make_stream(1729, "x", 0).standard_normal(20_000)
        b = make_stream(1729, "x", 1).standard_normal(20_000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(20_000)

    def test_stream_reproducible(self):
        assert np.array_equal(make_stream(7, "k", 3).random(5), make_stream(7, "k", 3).random(5))
        assert not np.array_equal(make_stream(7, "k", 3).random(5), make_stream(8, "k", 3).random(5))
