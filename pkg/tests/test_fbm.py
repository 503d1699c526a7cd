import json

import numpy as np
import pytest

from gammasub import subordinator as sub
from gammasub.exceptions import DomainError, RegimeError
from gammasub.fbm import (
    FbmPath,
    HurstParam,
    estimate_lrd_exponent,
    estimate_variance_exponent,
    fbm_abs_moment,
    fbm_covariance,
    sample_fbm_at,
    sample_time_changed_fbm,
    sample_time_changed_fbm_values,
)
from gammasub.fbm import _cholesky
from gammasub.stats import mc_mean, within_sigmas
from gammasub.streams import make_stream
from gammasub.subordinator import SubordinatorSpec


def rng(*key):
    return make_stream(1729, "test-fbm", *key)


def draws(H, times, n, key):
    g = rng(key)
    return np.array([sample_fbm_at(H, times, g).values for _ in range(n)])


class TestHurst:
    @pytest.mark.parametrize("H", [0.0, 1.0, -0.2])
    def test_range(self, H):
        with pytest.raises(DomainError):
            HurstParam(H)

    @pytest.mark.parametrize("H, alpha", [(0.5, 0.9), (0.6, 0.9), (0.3, 0.5)])
    def test_regime(self, H, alpha):
        with pytest.raises(RegimeError):
            HurstParam(H).require_lrd_regime(alpha)

    def test_boundary_allowed(self):
        HurstParam(0.25).require_lrd_regime(0.5)


class TestMoments:
    def test_second_moment(self):
        assert fbm_abs_moment(0.3, 2.0, 4.0) == pytest.approx(4.0**0.6, rel=1e-14)

    def test_first_moment(self):
        assert fbm_abs_moment(0.7, 1.0, 1.0) == pytest.approx(0.7978845608, abs=1e-10)

    def test_scaling(self):
        assert fbm_abs_moment(0.2, 1.5, 9.0) == pytest.approx(9.0 ** (1.5 * 0.2) * fbm_abs_moment(0.2, 1.5, 1.0))

    def test_domain(self):
        with pytest.raises(DomainError):
            fbm_abs_moment(0.3, -1.0, 1.0)


class TestSampling:
    def test_factor_matches_covariance(self):
        t = np.array([0.01, 0.3, 1.0, 2.5, 7.0, 1e6])
        L = _cholesky(0.3, t)
        cov = fbm_covariance(0.3, t)
        assert np.allclose(L @ L.T, cov, rtol=1e-12, atol=1e-12 * cov.max())

    def test_close_levels_far_from_origin(self):
        # the level covariance cannot resolve this gap; the increment form keeps gap^{2H}
        t = np.array([1e13, 1e13 + 4.0])
        L = _cholesky(0.2, t)
        inc_var = (L[1] - L[0]) @ (L[1] - L[0])
        assert inc_var == pytest.approx(4.0**0.4, rel=1e-6)

    def test_duplicate_guard(self):
        with pytest.raises(DomainError):
            _cholesky(0.3, np.array([1.0, 1.0 + 1e-16, 2.0]))
        with pytest.raises(DomainError):
            sample_fbm_at(0.3, [1.0, 1.0], rng("dup"))

    def test_zero_time(self):
        path = sample_fbm_at(0.3, [0.0, 1.0], rng("zero"))
        assert path.values[0] == 0.0

    def test_covariance_matrix(self):
        # eight fixed times, elementwise 4-sigma bands
        H, times = 0.3, np.array([0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0])
        x = draws(H, times, 20_000, "cov8")
        cov = fbm_covariance(H, times)
        for i in range(times.size):
            for j in range(i, times.size):
                assert within_sigmas(mc_mean(x[:, i] * x[:, j]), cov[i, j])

    def test_unit_variance_and_abs_moment(self):
        x = draws(0.7, [1.0], 20_000, "unit")[:, 0]
        assert within_sigmas(mc_mean(x**2), 1.0)
        assert within_sigmas(mc_mean(np.abs(x)), 0.7978845608)

    def test_brownian_increments_uncorrelated(self):
        x = draws(0.5, [1.0, 2.0, 3.5], 20_000, "bm")
        assert within_sigmas(mc_mean((x[:, 1] - x[:, 0]) * (x[:, 2] - x[:, 1])), 0.0)

    def test_path_csv(self):
        p = FbmPath([0.0, 1.0], [0.0, 0.5])
        assert p.to_csv() == "t,value\n0.0,0.0\n1.0,0.5\n"


class TestTimeChanged:
    grid = np.array([0.5, 1.0, 2.0, 4.0])

    def test_equal_clocks_equal_values(self):
        clock, z = sample_time_changed_fbm_values(0.3, 0.7, np.linspace(0.1, 3.0, 30), 300, rng("eq"))
        for c, v in zip(clock, z):
            for level in np.unique(c):
                assert np.ptp(v[c == level]) == 0.0

    def test_zero_mean(self):
        _, z = sample_time_changed_fbm_values(0.3, 0.7, self.grid, 20_000, rng("mean"))
        assert within_sigmas(mc_mean(z[:, -1]), 0.0)

    def test_second_moment_transfer(self):
        # E Z² = E S^{2H}
        clock, z = sample_time_changed_fbm_values(0.2, 0.8, self.grid, 20_000, rng("m2"))
        diff = z[:, 2] ** 2 - clock[:, 2] ** 0.4
        assert within_sigmas(mc_mean(diff), 0.0)

    def test_first_moment_transfer(self):
        H, alpha = 0.3, 0.7
        clock, z = sample_time_changed_fbm_values(H, alpha, self.grid, 20_000, rng("m1"))
        # E|Z| = E|B_H(1)| E S^H, so the paired difference has mean 0
        diff = np.abs(z[:, -1]) - fbm_abs_moment(H, 1.0, 1.0) * clock[:, -1] ** H
        assert within_sigmas(mc_mean(diff), 0.0)

    def test_poisson_clock_plateaus(self):
        t = np.linspace(0.0, 5.0, 51)
        path = sample_time_changed_fbm(0.3, 1.0, 5.0, t, rng("poisson"))
        clock = sub.sample_path(SubordinatorSpec.plain(1.0), 5.0, rng("poisson").spawn(2)[0]).evaluate_at(t)
        assert np.all(np.asarray(clock) == np.round(clock))
        for level in np.unique(clock):
            assert np.ptp(path.values[np.asarray(clock) == level]) == 0.0

    def test_horizon(self):
        with pytest.raises(DomainError):
            sample_time_changed_fbm(0.3, 0.5, 1.0, [0.5, 2.0], rng("h"))


class TestEstimators:
    grid = np.geomspace(1, 100, 21)

    def test_poisson_clock_slope(self):
        est = estimate_variance_exponent(0.25, 1.0, self.grid, 4000, rng("est-poisson"))
        assert est.expected == 0.5
        assert abs(est.slope - 0.5) < 0.1 and not est.inconclusive

    def test_boundary_is_inconclusive(self):
        # at α = 2H the variance E S^α is infinite
        est = estimate_variance_exponent(0.2, 0.4, self.grid, 4000, rng("est-boundary"))
        assert est.inconclusive

    def test_report(self):
        est = estimate_variance_exponent(0.25, 1.0, self.grid, 400, rng("est-report"))
        rec = json.loads(est.to_json(seed=1729))
        assert rec["seed"] == 1729 and rec["n_paths"] == 400 and rec["fit_window"] == [10.0, 100.0]
        assert est.table_csv().splitlines()[0] == "t,value,stderr"
        assert len(est.table) == 21

    def test_grid_rules(self):
        with pytest.raises(DomainError):
            estimate_variance_exponent(0.25, 1.0, np.geomspace(1, 20, 10), 400, rng("g"))
        with pytest.raises(DomainError):
            estimate_variance_exponent(0.25, 1.0, np.geomspace(10, 100, 10), 400, rng("g"))

    def test_lrd_regime_refused(self):
        with pytest.raises(RegimeError):
            estimate_lrd_exponent(0.6, 0.9, 1.0, self.grid, 400, rng("lrd"))
        with pytest.raises(RegimeError):
            estimate_lrd_exponent(0.3, 0.5, 1.0, self.grid, 400, rng("lrd"))

    def test_lrd_needs_s_below_grid(self):
        with pytest.raises(DomainError):
            estimate_lrd_exponent(0.2, 0.5, 1.0, self.grid, 400, rng("lrd"))

    def test_lrd_deterministic(self):
        g = np.geomspace(2, 100, 11)
        a = estimate_lrd_exponent(0.1, 0.8, 1.0, g, 400, rng("lrd-det"))
        b = estimate_lrd_exponent(0.1, 0.8, 1.0, g, 400, rng("lrd-det"))
        assert a.to_json() == b.to_json()
        assert a.expected == pytest.approx(0.875)

    @pytest.mark.xfail(strict=True, reason="correlation decays like t^{-H/α}, not t^{-(1-H/α)}; see README")
    def test_lrd_stated_exponent_small_h(self):
        est = estimate_lrd_exponent(0.1, 0.8, 1.0, np.geomspace(2, 100, 21), 10_000, rng("lrd-0.1"))
        assert abs(est.slope - 0.875) <= 0.15

    def test_lrd_decay_matches_conditioning(self):
        # Cov(Z(t), Z(s)) → ½ E S(s)^{2H} while Var Z(t) ~ t^{2H/α}, so d → H/α
        est = estimate_lrd_exponent(0.1, 0.8, 1.0, np.geomspace(2, 100, 21), 10_000, rng("lrd-0.1"))
        assert abs(est.slope - 0.125) <= 4 * est.stderr + 0.05
