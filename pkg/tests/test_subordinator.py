import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gammasub.exceptions import DomainError, InfiniteMomentError, RejectionError
from gammasub.operators import o_epsilon_transfer
from gammasub.specfun import quad_adaptive, Accuracy
from gammasub.stats import mc_mean, within_sigmas
from gammasub.streams import make_stream
from gammasub import subordinator as sub
from gammasub.subordinator import DirectionMeasure2D, PathSample, SubordinatorSpec

SEED = 1729


def rng(*keys):
    return make_stream(SEED, "test-subordinator", *keys)


class TestSpec:
    def test_families(self):
        assert SubordinatorSpec.plain(0.5).family == "plain"
        assert SubordinatorSpec.tempered(0.5, 1.0).family == "tempered"
        assert SubordinatorSpec.floored(0.5, 0.1).family == "epsilon"

    @pytest.mark.parametrize("kw", [{"alpha": 0.0}, {"alpha": 1.2}, {"alpha": 0.5, "theta": -1.0},
                                    {"alpha": 0.5, "epsilon": 0.0}, {"alpha": 0.5, "beta0": -1.0},
                                    {"alpha": 0.5, "theta": 1.0, "epsilon": 0.5}])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            SubordinatorSpec(**kw)

    def test_to_dict(self):
        d = SubordinatorSpec(0.5, theta=math.inf, beta0=1.0).to_dict()
        assert d["theta"] == "inf" and d["beta0"] == 1.0


class TestLaplaceExponent:
    @pytest.mark.parametrize("eta", [0.1, 1.0, 2.0, 10.0])
    def test_plain_alpha_one(self, eta):
        assert sub.laplace_exponent(SubordinatorSpec.plain(1.0), eta) == pytest.approx(-math.expm1(-eta), rel=1e-14)

    @pytest.mark.parametrize("spec", [SubordinatorSpec.plain(0.4), SubordinatorSpec.tempered(0.4, 2.0),
                                      SubordinatorSpec.floored(0.4, 0.2)])
    def test_zero(self, spec):
        assert sub.laplace_exponent(spec, 0.0) == 0.0

    @pytest.mark.parametrize("theta", [0.3, 1.0, 3.0])
    def test_tempered_alpha_one(self, theta):
        got = sub.laplace_exponent(SubordinatorSpec.tempered(1.0, theta), 1.5)
        assert got == pytest.approx(math.exp(-theta) * -math.expm1(-1.5), rel=1e-13)

    @pytest.mark.parametrize("eps", [0.01, 0.5, 2.0])
    def test_eps_family_factorization(self, eps):
        for eta in np.linspace(0.05, 5.0, 20):
            phi = sub.laplace_exponent(SubordinatorSpec.floored(0.6, eps), eta)
            assert phi == pytest.approx(eta**0.6 * o_epsilon_transfer(eta, eps, 0.6), rel=1e-10)

    @pytest.mark.parametrize("spec", [SubordinatorSpec.plain(0.3), SubordinatorSpec.tempered(0.7, 0.5),
                                      SubordinatorSpec.tempered(0.5, 4.0), SubordinatorSpec.floored(0.5, 0.1)])
    @pytest.mark.parametrize("eta", [0.5, 2.0])
    def test_levy_khintchine(self, spec, eta):
        # φ(η) = ∫ (1 - e^{-ηz}) π(z) dz, integrated independently with mpmath.
        # Head: u = (z - floor)^{1-a} removes the edge. Tail: w = (z - floor)^{-a} removes the slow decay.
        a, floor = spec.alpha, sub.jump_floor(spec)
        body = lambda z: (1 - mp.e ** (-eta * z)) * mp.e ** (-spec.theta * z) / mp.gamma(1 - a)  # noqa: E731

        def head(u):
            z = floor + u ** (1 / (1 - a))
            return body(z) * a / z / (1 - a)

        def tail(w):
            z = floor + w ** (-1 / a)
            return body(z) * (1 - floor / z)

        ref = mp.quad(head, [0, 1]) + mp.quad(tail, [0, 1])
        assert sub.laplace_exponent(spec, eta) == pytest.approx(float(ref), rel=1e-9)

    @pytest.mark.parametrize("spec", [SubordinatorSpec.plain(0.5), SubordinatorSpec.tempered(0.3, 1.0),
                                      SubordinatorSpec.floored(0.8, 0.5)])
    def test_bernstein(self, spec):
        eta = np.linspace(0.01, 20.0, 400)
        phi = np.array([sub.laplace_exponent(spec, e) for e in eta])
        assert np.all(np.diff(phi) >= -1e-10)
        assert np.all(np.diff(phi, 2) <= 1e-10)

    def test_not_self_similar(self):
        spec = SubordinatorSpec.plain(0.5)
        gap = sub.laplace_exponent(spec, 2.0) - 2**0.5 * sub.laplace_exponent(spec, 1.0)
        assert abs(gap) > 1e-3

    def test_negative_eta(self):
        with pytest.raises(DomainError):
            sub.laplace_exponent(SubordinatorSpec.plain(0.5), -1.0)


class TestRatesAndDensity:
    def test_rates(self):
        assert sub.poisson_rate(SubordinatorSpec.plain(1.0)) == 1.0
        assert sub.poisson_rate(SubordinatorSpec.plain(0.5)) == pytest.approx(0.8862269255, abs=1e-10)
        assert sub.poisson_rate(SubordinatorSpec.tempered(1.0, 0.7)) == pytest.approx(math.exp(-0.7), rel=1e-14)
        assert sub.poisson_rate(SubordinatorSpec.floored(0.5, 0.25)) == pytest.approx(2 * 0.8862269255, abs=1e-9)

    def test_density_values(self):
        plain = SubordinatorSpec.plain(0.5)
        assert sub.levy_density(plain, 0.5) == 0.0
        assert sub.levy_density(plain, 2.0) == pytest.approx(0.1410473959, abs=1e-10)
        assert sub.levy_density(plain, 1.0) == math.inf

    @pytest.mark.parametrize("spec", [SubordinatorSpec.plain(0.3), SubordinatorSpec.tempered(0.6, 1.0),
                                      SubordinatorSpec.floored(0.5, 0.3)])
    def test_mass_equals_rate(self, spec):
        floor = sub.jump_floor(spec)
        r = lambda u: sub.levy_density(spec, floor + u) if u > 0 else 0.0  # noqa: E731
        mass = quad_adaptive(r, 0.0, math.inf, Accuracy(rel_tol=1e-10), lo_exponent=-spec.alpha)
        assert mass == pytest.approx(sub.poisson_rate(spec), rel=1e-8)

    def test_jump_cdf(self):
        spec = SubordinatorSpec.plain(0.4)
        assert sub.jump_cdf(spec, 1.0) == 0.0
        z = 3.0
        # Z = 1 + G1/G2 means (Z-1)/Z ~ Beta(1-a, a)
        ref = float(mp.betainc(0.6, 0.4, 0, (z - 1) / z, regularized=True))
        assert sub.jump_cdf(spec, z) == pytest.approx(ref, rel=1e-10)


class TestSampling:
    @pytest.mark.parametrize("spec", [SubordinatorSpec.plain(0.3), SubordinatorSpec.floored(0.5, 0.1),
                                      SubordinatorSpec.tempered(0.5, 3.0)])
    def test_jump_floor_exact(self, spec):
        z = sub.sample_jumps(spec, 20000, rng("floor", spec.family))
        assert z.min() >= sub.jump_floor(spec)

    def test_alpha_one_jumps_are_unit(self):
        assert np.all(sub.sample_jumps(SubordinatorSpec.plain(1.0), 100, rng("unit")) == 1.0)

    def test_tempered_acceptance_rate(self):
        # E e^{-θ(Z-1)} under the plain law
        a, theta = 0.5, 1.0
        z = sub.sample_jumps(SubordinatorSpec.plain(a), 200000, rng("acc"))
        est = mc_mean(np.exp(-theta * (z - 1.0)))
        target = math.exp(theta) * float(mp.gammainc(a, theta)) / math.gamma(a)
        assert within_sigmas(est, target)

    def test_rejection_guard(self, monkeypatch):
        # acceptance is about 1/sqrt(πθ) here, so a short cap trips at once
        monkeypatch.setattr(sub, "MAX_CONSECUTIVE_REJECTIONS", 5)
        with pytest.raises(RejectionError):
            sub.sample_jumps(SubordinatorSpec.tempered(0.5, 1e4), 1, rng("guard"))

    def test_deterministic(self):
        spec = SubordinatorSpec.tempered(0.5, 1.0)
        a = sub.sample_path(spec, 10.0, make_stream(7, 1))
        b = sub.sample_path(spec, 10.0, make_stream(7, 1))
        assert a.to_csv() == b.to_csv()

    def test_empty_horizon(self):
        path = sub.sample_path(SubordinatorSpec.plain(0.5), 0.0, rng("empty"))
        assert path.n_jumps == 0 and path.evaluate_at(0.0) == 0.0

    def test_poisson_limit(self):
        path = sub.sample_path(SubordinatorSpec.plain(1.0), 50.0, rng("poisson"))
        vals = path.evaluate_at(np.linspace(0, 50, 200))
        assert np.all(vals == np.round(vals))

    def test_mean_at_alpha_one(self):
        vals = sub.sample_values(SubordinatorSpec.tempered(1.0, 0.5), 4.0, 100000, rng("mean1"))
        assert within_sigmas(mc_mean(vals), 4.0 * math.exp(-0.5))

    def test_mean_tempered(self):
        spec = SubordinatorSpec.tempered(0.5, 1.0)
        vals = np.array([sub.sample_path(spec, 3.0, r).evaluate_at(3.0)
                         for r in (make_stream(SEED, "mean-path", i) for i in range(20000))])
        assert within_sigmas(mc_mean(vals), sub.tempered_mean_var(spec, 3.0)[0])

    def test_grid_sampler_consistent_with_values(self):
        spec = SubordinatorSpec.floored(0.5, 0.5)
        grid = sub.sample_on_grid(spec, [0.5, 1.0], 100000, rng("grid"))
        assert np.all(np.diff(grid, axis=1) >= 0)
        target = math.exp(-sub.laplace_exponent(spec, 1.0))
        assert within_sigmas(mc_mean(np.exp(-grid[:, 1])), target)

    def test_mc_mean_example(self):
        vals = sub.sample_values(SubordinatorSpec.plain(0.5), 1.0, 100000, rng("example"))
        assert within_sigmas(mc_mean(np.exp(-vals)), math.exp(-0.5 * 1.4936482656248544))


class TestPathSample:
    def make(self):
        return PathSample(5.0, np.array([0.5, 1.5, 4.0]), np.array([1.0, 2.5, 1.25]), drift=0.5)

    def test_evaluate(self):
        p = self.make()
        assert p.evaluate_at(0.0) == 0.0
        assert p.evaluate_at(0.5) == pytest.approx(0.25 + 1.0)
        assert p.evaluate_at(5.0) == pytest.approx(2.5 + 4.75)
        assert sub.evaluate_at(p, 1.0) == p.evaluate_at(1.0)

    def test_staircase(self):
        p = PathSample(5.0, np.array([1.0, 2.0]), np.array([1.0, 1.0]))
        assert p.evaluate_at(1.2) == p.evaluate_at(1.9)

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            self.make().evaluate_at(6.0)

    @pytest.mark.parametrize("times, sizes", [([1.0, 0.5], [1.0, 1.0]), ([0.5], [-1.0]), ([6.0], [1.0])])
    def test_invalid(self, times, sizes):
        with pytest.raises(DomainError):
            PathSample(5.0, np.array(times), np.array(sizes))

    def test_csv(self):
        text = self.make().to_csv()
        lines = text.splitlines()
        assert lines[0] == "jump_time,jump_size" and lines[2] == "1.5,2.5" and text.endswith("\n")

    def test_json_round_trip(self):
        p = self.make()
        rec = json.loads(p.to_json(SubordinatorSpec.plain(0.5), seed=3))
        assert rec["seed"] == 3 and rec["spec"]["alpha"] == 0.5
        q = PathSample.from_record(rec)
        assert q.to_csv() == p.to_csv() and q.drift == p.drift

    @given(st.lists(st.floats(0.0, 5.0), min_size=2, max_size=20))
    @settings(max_examples=30, deadline=None)
    def test_nondecreasing(self, ts):
        path = sub.sample_path(SubordinatorSpec.floored(0.6, 0.3), 5.0, make_stream(SEED, "prop"))
        vals = path.evaluate_at(np.sort(ts))
        assert np.all(np.diff(vals) >= 0)


class TestMoments:
    def test_tempered_values(self):
        mean, var = sub.tempered_mean_var(SubordinatorSpec.tempered(0.5, 1.0), 1.0)
        assert mean == pytest.approx(0.1839397206, abs=1e-10)
        assert var == pytest.approx(0.2759095809, abs=1e-10)

    def test_tempered_alpha_one(self):
        mean, var = sub.tempered_mean_var(SubordinatorSpec.tempered(1.0, 2.0), 3.0)
        assert mean == pytest.approx(3 * math.exp(-2)) and var == pytest.approx(3 * math.exp(-2))

    def test_infinite(self):
        with pytest.raises(InfiniteMomentError):
            sub.tempered_mean_var(SubordinatorSpec.plain(0.5), 1.0)

    def test_tail(self):
        assert sub.tail_asymptote(0.5, 1.0, 100.0) == pytest.approx(0.0564189584, abs=1e-10)
        assert sub.tail_asymptote(0.5, 3.0, 7.0) == pytest.approx(3 * sub.tail_asymptote(0.5, 1.0, 7.0))
        assert sub.tail_asymptote(0.3, 1.0, 14.0) == pytest.approx(2**-0.3 * sub.tail_asymptote(0.3, 1.0, 7.0))

    def test_frac_moment_asymptote(self):
        assert sub.frac_moment_asymptote(0.5, 0.25, 100.0) == pytest.approx(14.464090846, abs=1e-8)
        assert sub.frac_moment_asymptote(0.5, 1e-9, 1.0) == pytest.approx(1.0, abs=1e-6)
        with pytest.raises(DomainError):
            sub.frac_moment_asymptote(0.5, 0.5, 1.0)

    def test_frac_moment_exact_against_mpmath(self):
        a, p, t = 0.5, 0.25, 3.0
        f = lambda e: mp.e ** (-e - t * a * mp.gammainc(a, 0, e)) * e ** (a - p - 1)  # noqa: E731
        # e = v^k with k = 1/(a-p) makes the integrand smooth at 0
        k = 1 / (a - p)
        g = lambda v: f(v**k) * k * v ** (k - 1)  # noqa: E731
        ref = a * t / mp.gamma(1 - p) * mp.quad(g, [0, 1, 2, mp.inf])
        assert sub.frac_moment(a, p, t) == pytest.approx(float(ref), rel=1e-9)


class TestMultivariate:
    def test_direction_measure_validation(self):
        with pytest.raises(DomainError):
            DirectionMeasure2D([0.0, 0.5], [0.5, 0.6])
        with pytest.raises(DomainError):
            DirectionMeasure2D([2.0], [1.0])

    def test_degenerate_direction(self):
        M = DirectionMeasure2D([0.0], [1.0])
        path = sub.sample_mv_path(0.5, 0.5, M, 10.0, rng("mv-degenerate"))
        assert np.all(path.jump_vectors[:, 1] == 0.0)
        vals = sub.sample_mv_values(0.5, 0.5, M, 1.0, 100000, rng("mv-deg-values"))
        target = math.exp(-sub.laplace_exponent(SubordinatorSpec.floored(0.5, 0.5), 1.0))
        assert np.all(vals[:, 1] == 0.0)
        assert within_sigmas(mc_mean(np.exp(-vals[:, 0])), target)

    def test_rate_and_exponent(self):
        M = DirectionMeasure2D([0.0, math.pi / 2], [0.5, 0.5], scale_C=2.0)
        assert sub.mv_poisson_rate(0.5, 0.5, M) == pytest.approx(2 * 0.5 * math.gamma(0.5) / math.sqrt(0.5))
        phi = sub.mv_laplace_exponent(0.5, 0.5, M, [1.0, 0.0])
        single = sub.laplace_exponent(SubordinatorSpec.floored(0.5, 0.5), 1.0)
        assert phi == pytest.approx(2.0 * 0.5 * single, rel=1e-13)

    def test_monotone_marginals(self):
        M = DirectionMeasure2D([0.2, 1.0, 1.5], [0.2, 0.5, 0.3])
        path = sub.sample_mv_path(0.7, 0.2, M, 5.0, rng("mv-mono"))
        assert np.all(np.diff(path.marginals(), axis=0) >= 0)
        assert np.all(np.linalg.norm(path.jump_vectors, axis=1) >= 0.2 * (1 - 1e-15))
