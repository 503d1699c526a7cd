"""Verification suites: each runs one family of identities and returns checks.

A suite is a function of a :class:`RunContext` returning a list of
:class:`Check`. Default parameters live in ``SUITE_DEFAULTS`` and may be
overridden from a config file; the resolved values are echoed in reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
from scipy import special

from . import fbm, operators, subordination, subordinator
from .exceptions import ConvergenceError
from .operators import GridFunction, OperatorParams
from .specfun import Accuracy, quad_adaptive, upper_inc_gamma
from .stats import chunked_samples, ks_statistic, mc_mean
from .streams import Key, make_stream
from .subordinator import SubordinatorSpec

__all__ = ["Check", "RunContext", "SUITES", "SUITE_DEFAULTS", "run_suite"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: Any
    target: Any
    tolerance: Any
    detail: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": self.measured,
            "target": self.target,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class RunContext:
    seed: int = 1729
    threads: int = 1
    paths: Optional[int] = None
    tolerance_scale: float = 1.0
    params: dict = field(default_factory=dict)

    def stream(self, *keys: Key) -> np.random.Generator:
        return make_stream(self.seed, *keys)

    def n(self) -> int:
        return int(self.paths if self.paths is not None else self.params["n_paths"])

    @property
    def sigmas(self) -> float:
        return 4.0 * self.tolerance_scale

    def draw(self, sampler: Callable, key: str, n: Optional[int] = None) -> np.ndarray:
        return chunked_samples(sampler, self.n() if n is None else n, self.seed, key=key,
                               threads=self.threads)


def _mc_check(name, samples, target, ctx, **detail):
    est = mc_mean(samples, master_seed=ctx.seed)
    ok = abs(est.mean - target) <= ctx.sigmas * est.stderr
    detail.update(stderr=est.stderr, n=est.n, z=est.z_score(target))
    return Check(name, ok, est.mean, target, f"{ctx.sigmas:g} stderr", detail)


def _spec_label(spec: SubordinatorSpec) -> str:
    if spec.family == "plain":
        return f"plain a={spec.alpha!r}"
    if spec.family == "tempered":
        return f"tempered a={spec.alpha!r} theta={spec.theta!r}"
    return f"epsilon a={spec.alpha!r} eps={spec.epsilon!r}"


def _laplace(ctx: RunContext) -> list[Check]:
    p = ctx.params
    specs = [SubordinatorSpec.plain(a) for a in p["alphas"]]
    specs += [SubordinatorSpec.tempered(a, th) for a in p["alphas"] for th in p["thetas"]]
    specs += [SubordinatorSpec.floored(a, e) for a in p["alphas"] for e in p["epsilons"]]
    t = p["t"]
    checks = []
    for spec in specs:
        label = _spec_label(spec)
        s = ctx.draw(lambda n, rng, spec=spec: subordinator.sample_values(spec, t, n, rng),
                     f"laplace/{label}")
        for eta in p["etas"]:
            target = math.exp(-t * subordinator.laplace_exponent(spec, eta))
            checks.append(_mc_check(f"{label} eta={eta!r}", np.exp(-eta * s), target, ctx))
    return checks


def _jumps(ctx: RunContext) -> list[Check]:
    p = ctx.params
    checks = []
    cases = [SubordinatorSpec.plain(a) for a in p["alphas"]]
    cases += [SubordinatorSpec.floored(a, e) for a in p["alphas"] for e in p["epsilons"]]
    for spec in cases:
        label = _spec_label(spec)
        z = ctx.draw(lambda n, rng, spec=spec: subordinator.sample_jumps(spec, n, rng), f"jumps/{label}")
        floor = subordinator.jump_floor(spec)
        checks.append(Check(f"{label} floor", bool(z.min() >= floor), float(z.min()), floor, "exact"))
        a = spec.alpha
        # change of variables u = 1 - floor/z maps the jump law onto Beta(1-a, a)
        d, ok = ks_statistic(z / floor, lambda x: special.betainc(1.0 - a, a, 1.0 - 1.0 / x),
                             vectorized=True)
        crit = 1.6276 / math.sqrt(z.size)
        checks.append(Check(f"{label} KS", ok, d, crit, "D < 1.6276/sqrt(n)", {"n": int(z.size)}))
    return checks


def _tempered_moments(ctx: RunContext) -> list[Check]:
    p = ctx.params
    spec = SubordinatorSpec.tempered(p["alpha"], p["theta"])
    t = p["t"]
    mean, var = subordinator.tempered_mean_var(spec, t)
    s = ctx.draw(lambda n, rng: subordinator.sample_values(spec, t, n, rng), "tempered-moments")
    centred = (s - math.fsum(s) / s.size) ** 2
    checks = [
        _mc_check("mean", s, mean, ctx),
        _mc_check("variance", centred * s.size / (s.size - 1), var, ctx),
    ]
    for name, got, ref in (("mean formula", mean, p["reference_mean"]),
                           ("variance formula", var, p["reference_variance"])):
        checks.append(Check(name, abs(got - ref) <= 5e-5, got, ref, "5e-5 (reference given to 4 decimals)"))
    return checks


def _tail(ctx: RunContext) -> list[Check]:
    p = ctx.params
    a, t, q = p["alpha"], p["t"], p["exceedance"]
    spec = SubordinatorSpec.plain(a)
    s = np.sort(ctx.draw(lambda n, rng: subordinator.sample_values(spec, t, n, rng), "tail"))
    x = float(np.quantile(s, 1.0 - q))
    p_hat = float(np.count_nonzero(s > x)) / s.size
    ratio = p_hat / subordinator.tail_asymptote(a, t, x)
    half = p["ratio_halfwidth"] * ctx.tolerance_scale
    return [Check("exceedance ratio at empirical quantile", abs(ratio - 1.0) <= half, ratio, 1.0,
                  f"[{1 - half:g}, {1 + half:g}]", {"x": x, "p_hat": p_hat, "n": int(s.size)})]


def _fracmoment(ctx: RunContext) -> list[Check]:
    pr = ctx.params
    a, p, t = pr["alpha"], pr["p"], pr["t"]
    spec = SubordinatorSpec.plain(a)
    s = ctx.draw(lambda n, rng: subordinator.sample_values(spec, t, n, rng), "fracmoment")
    est = mc_mean(s**p)
    asym = subordinator.frac_moment_asymptote(a, p, t)
    exact = subordinator.frac_moment(a, p, t)
    rel = pr["rel_tol"] * ctx.tolerance_scale
    return [
        Check("MC mean of S^p vs asymptote", abs(est.mean / asym - 1.0) <= rel, est.mean, asym,
              f"{rel:g} relative", {"stderr": est.stderr, "n": est.n}),
        Check("exact moment vs asymptote", abs(exact / asym - 1.0) <= rel, exact, asym,
              f"{rel:g} relative"),
    ]


def _eps_convergence(ctx: RunContext) -> list[Check]:
    p = ctx.params
    etas = np.linspace(p["eta_min"], p["eta_max"], int(p["eta_points"]))
    checks = []
    for a in p["alphas"]:
        sups, o_min, o_max = [], math.inf, -math.inf
        for e in p["epsilons"]:
            spec = SubordinatorSpec.floored(a, e)
            sups.append(max(abs(subordinator.laplace_exponent(spec, x) - x**a) for x in etas))
            o = [operators.o_epsilon_transfer(x, e, a) for x in etas]
            o_min, o_max = min(o_min, min(o)), max(o_max, max(o))
        decreasing = all(u > v for u, v in zip(sups, sups[1:]))
        checks.append(Check(f"a={a!r} sup|phi_eps - eta^a| strictly decreasing", decreasing, sups,
                            "strictly decreasing", "exact", {"epsilons": list(p["epsilons"])}))
        checks.append(Check(f"a={a!r} O_eps in (0, 1]", 0 < o_min and o_max <= 1.0,
                            [o_min, o_max], "(0, 1]", "exact"))
    a = p["governing_alpha"]
    for e in p["governing_epsilons"]:
        rows = operators.governing_check_eps(a, e, p["t"], p["etas"], ctx.n(),
                                             ctx.stream("governing", repr(a), repr(e)), ctx.sigmas)
        for r in rows:
            checks.append(Check(f"governing a={a!r} eps={e!r} eta={r.eta!r}", r.passed, r.mc_mean,
                                r.target, f"{ctx.sigmas:g} stderr", {"stderr": r.stderr}))
    return checks


def _operators(ctx: RunContext) -> list[Check]:
    p = ctx.params
    checks = []
    worst = 0.0
    for rho in p["rhos"]:
        for lam in p["lambdas"]:
            u = lambda s, rho=rho, lam=lam: upper_inc_gamma(rho, lam * s)  # noqa: E731
            du = lambda s, rho=rho, lam=lam: -lam**rho * math.exp(-lam * s) * s ** (rho - 1.0)  # noqa: E731
            for t in p["times"]:
                val = operators.tempered_caputo(u, OperatorParams(rho=rho, lambda_rate=lam), t,
                                                du=du, du_exponent=rho - 1.0)
                ref = -lam**rho * u(t)
                worst = max(worst, abs(val - ref) / abs(ref))
    tol = p["eigen_tol"] * ctx.tolerance_scale
    checks.append(Check("eigenfunction relative residual", worst <= tol, worst, 0.0, tol,
                        {"grid": [len(p["rhos"]), len(p["lambdas"]), len(p["times"])]}))

    rho, lam = p["laplace_rho"], p["laplace_lambda"]
    prm = OperatorParams(rho=rho, lambda_rate=lam)
    u = lambda s: math.exp(-s)  # noqa: E731
    tol = p["laplace_tol"] * ctx.tolerance_scale
    for theta in p["laplace_thetas"]:
        got = operators.tempered_caputo_laplace(u, prm, theta, du=lambda s: -math.exp(-s))
        ref = operators.caputo_laplace_closed_form(1.0 / (1.0 + theta), 1.0, rho, lam, theta)
        checks.append(Check(f"Laplace domain theta={theta!r}", abs(got - ref) <= tol, got, ref, tol))

    const = operators.tempered_caputo(lambda s: 3.0, prm, 1.0, du=lambda s: 0.0)
    checks.append(Check("constant is annihilated", const == 0.0, const, 0.0, "exact"))

    a, e = p["marchaud_alpha"], p["marchaud_epsilon"]
    x = 0.3
    m = operators.marchaud_approx(math.exp, a, e, x)
    ref = -math.exp(x) * subordinator.laplace_exponent(SubordinatorSpec.floored(a, e), 1.0)
    checks.append(Check("Marchaud form on e^x", abs(m - ref) <= 1e-8 * abs(ref), m, ref, "1e-8 relative"))
    ph = subordination.phillips_apply(math.exp, a, e, x)
    checks.append(Check("shift-semigroup form equals Marchaud form", abs(ph - m) <= 1e-10 * abs(m),
                        ph, m, "1e-10 relative"))
    return checks


def _relaxation(ctx: RunContext) -> list[Check]:
    p = ctx.params
    grid = np.linspace(p["x_min"], p["x_max"], int(p["x_points"]))
    rep = operators.relaxation_report(p["alpha"], grid)
    tol = p["tol"] * ctx.tolerance_scale
    checks = [Check(f"max residual a={p['alpha']!r}", rep.max_residual < tol, rep.max_residual, 0.0, tol,
                    {"grid": rep.grid})]
    one = operators.relaxation_report(1.0, grid)
    checks.append(Check("max residual a=1", one.max_residual < tol, one.max_residual, 0.0, tol))
    return checks


def _bm_specs(p):
    return [SubordinatorSpec.tempered(a, th, beta0=p.get("beta0", 0.0)) for a, th in p["cases"]]


def _bm_symbol(ctx: RunContext) -> list[Check]:
    p = ctx.params
    t = p["t"]
    bm = subordination.brownian_motion()
    checks = []
    for spec in _bm_specs(p):
        label = _spec_label(spec)
        z = ctx.draw(lambda n, rng, spec=spec:
                     subordination.sample_subordinated_bm_values(spec, [t], n, rng)[1][:, 0],
                     f"bm-symbol/{label}")
        checks.append(_mc_check(f"{label} E Z(t)", z, 0.0, ctx))
        psi = subordination.subordinate_symbol(bm, spec)
        for u in p["us"]:
            cf = complex(np.exp(t * psi(u)))
            closed = subordination.bm_char_function(spec, u, t)
            checks.append(Check(f"{label} u={u!r} symbol vs closed form", abs(cf.real - closed) <= 1e-10,
                                cf.real, closed, 1e-10))
            checks.append(_mc_check(f"{label} u={u!r} E cos(uZ)", np.cos(u * z), closed, ctx))
            checks.append(_mc_check(f"{label} u={u!r} E sin(uZ)", np.sin(u * z), 0.0, ctx))
    return checks


def _bm_density(ctx: RunContext) -> list[Check]:
    p = ctx.params
    checks = []
    for a in p["alphas"]:
        for x in p["xs"]:
            k = subordination.bm_levy_density(x, a, 0.0, "kummer")
            q = subordination.bm_levy_density(x, a, 0.0, "quad")
            m = subordination.bm_levy_density(x, a, 0.0, "mittag-leffler")
            checks.append(Check(f"a={a!r} x={x!r} closed vs quadrature", abs(k - q) <= 1e-8 * k, q, k,
                                "1e-8 relative"))
            checks.append(Check(f"a={a!r} x={x!r} closed vs Mittag-Leffler", abs(k - m) <= 1e-9 * k, m, k,
                                "1e-9 relative"))
    acc = Accuracy(rel_tol=1e-10, max_subdivisions=2000)
    for a, th in p["mass_cases"]:
        f = lambda x, a=a, th=th: subordination.bm_levy_density(x, a, th)  # noqa: E731
        mass = 2.0 * quad_adaptive(f, 0.0, math.inf, acc, abs_tol=1e-300)
        rate = subordinator.poisson_rate(SubordinatorSpec.tempered(a, th))
        checks.append(Check(f"a={a!r} theta={th!r} total mass", abs(mass - rate) <= 1e-6, mass, rate, 1e-6))
        gap = max(abs(f(x) - f(-x)) for x in p["xs"] + [3.0, 7.5])
        checks.append(Check(f"a={a!r} theta={th!r} symmetry", gap <= 1e-12, gap, 0.0, 1e-12))
        if th > 0:
            for k in (1, 2, 3):
                try:
                    mom = quad_adaptive(lambda x, k=k: x**k * f(x), 1.0, math.inf, acc, abs_tol=1e-300)
                    ok = math.isfinite(mom)
                except ConvergenceError:
                    mom, ok = math.nan, False
                checks.append(Check(f"a={a!r} theta={th!r} tail moment k={k}", ok, 2.0 * mom, "finite",
                                    "quadrature converges"))
    return checks


def _bm_autocov(ctx: RunContext) -> list[Check]:
    p = ctx.params
    t, tau = p["t"], p["tau"]
    checks = []
    for spec in _bm_specs(p):
        label = _spec_label(spec) + f" beta0={spec.beta0!r}"
        z = ctx.draw(lambda n, rng, spec=spec:
                     subordination.sample_subordinated_bm_values(spec, [t, tau], n, rng)[1],
                     f"bm-autocov/{label}")
        target = subordination.bm_autocovariance(spec, t, tau)
        # E Z = 0 exactly, so the mean product is an unbiased covariance estimate
        checks.append(_mc_check(f"{label} Cov(Z({t!r}), Z({tau!r}))", z[:, 0] * z[:, 1], target, ctx))
    spec = SubordinatorSpec.tempered(0.5, 1.0)
    v = subordination.bm_autocovariance(spec, 1.0, 1.0)
    checks.append(Check("a=0.5 theta=1 t=tau=1", abs(v - 0.1839397206) <= 1e-10, v, 0.1839397206, 1e-10))
    return checks


def _fbm_subdiffusion(ctx: RunContext) -> list[Check]:
    p = ctx.params
    t_grid = np.geomspace(p["t_min"], p["t_max"], int(p["t_points"]))
    tol = p["tol"] * ctx.tolerance_scale
    checks = []
    for H, a in p["cases"]:
        est = fbm.estimate_variance_exponent(H, a, t_grid, ctx.n(),
                                             ctx.stream("fbm-subdiffusion", repr(H), repr(a)))
        ok = abs(est.slope - est.expected) <= tol
        checks.append(Check(f"H={H!r} a={a!r} variance exponent", ok, est.slope, est.expected, tol,
                            {"stderr": est.stderr, "inconclusive": est.inconclusive,
                             "fit_window": list(est.fit_window), "n_paths": est.n_paths,
                             "table": [list(r) for r in est.table]}))
    return checks


def _fbm_lrd(ctx: RunContext) -> list[Check]:
    p = ctx.params
    H, a, s = p["H"], p["alpha"], p["s"]
    t_grid = np.geomspace(p["t_min"], p["t_max"], int(p["t_points"]))
    est = fbm.estimate_lrd_exponent(H, a, s, t_grid, ctx.n(), ctx.stream("fbm-lrd", repr(H), repr(a)))
    tol = p["tol"] * ctx.tolerance_scale
    detail = {"stderr": est.stderr, "inconclusive": est.inconclusive, "fit_window": list(est.fit_window),
              "n_paths": est.n_paths, "table": [list(r) for r in est.table]}
    ref_c = s ** (1.0 - H / a)
    return [
        Check(f"H={H!r} a={a!r} LRD exponent", abs(est.slope - est.expected) <= tol, est.slope,
              est.expected, tol, detail),
        Check("prefactor within factor 2 of s^(1-H/a)", 0.5 <= est.prefactor / ref_c <= 2.0,
              est.prefactor, ref_c, "factor 2"),
    ]


def _multivariate(ctx: RunContext) -> list[Check]:
    p = ctx.params
    a, e, t = p["alpha"], p["epsilon"], p["t"]
    M = subordinator.DirectionMeasure2D(p["angles"], p["weights"], p["scale_C"])
    s = ctx.draw(lambda n, rng: subordinator.sample_mv_values(a, e, M, t, n, rng), "multivariate")
    checks = []
    for eta in p["etas"]:
        target = math.exp(-t * subordinator.mv_laplace_exponent(a, e, M, eta))
        checks.append(_mc_check(f"eta={list(eta)!r} joint transform", np.exp(-(s @ np.asarray(eta))),
                                target, ctx))
    rng = ctx.stream("multivariate", "paths")
    monotone = True
    for _ in range(int(p["monotone_paths"])):
        path = subordinator.sample_mv_path(a, e, M, p["horizon"], rng)
        m = path.marginals()
        if m.size and (np.any(np.diff(m, axis=0) < 0) or np.any(m[0] < 0)):
            monotone = False
            break
    checks.append(Check("marginals nondecreasing on every path", monotone, monotone, True, "exact",
                        {"paths": int(p["monotone_paths"])}))
    return checks


SUITE_DEFAULTS: dict[str, dict] = {
    "laplace": {"alphas": [0.3, 0.5, 0.7, 0.9], "thetas": [0.5, 1.0, 2.0], "epsilons": [0.1, 0.5, 2.0],
                "etas": [0.5, 1.0, 2.0], "t": 1.0, "n_paths": 100000},
    "jumps": {"alphas": [0.3, 0.5, 0.7], "epsilons": [0.5, 2.0], "n_paths": 100000},
    "tempered-moments": {"alpha": 0.5, "theta": 1.0, "t": 10.0, "n_paths": 100000,
                         "reference_mean": 1.8394, "reference_variance": 2.7591},
    "tail": {"alpha": 0.5, "t": 1.0, "exceedance": 1e-3, "ratio_halfwidth": 0.2, "n_paths": 1000000},
    "fracmoment": {"alpha": 0.5, "p": 0.25, "t": 100.0, "rel_tol": 0.1, "n_paths": 100000},
    "eps-convergence": {"alphas": [0.3, 0.5, 0.7], "epsilons": [1.0, 0.1, 0.01, 0.001],
                        "eta_min": 0.1, "eta_max": 5.0, "eta_points": 491,
                        "governing_alpha": 0.5, "governing_epsilons": [0.5, 0.1, 0.01],
                        "etas": [0.5, 1.0, 2.0], "t": 1.0, "n_paths": 100000},
    "operators": {"rhos": [0.3, 0.5, 0.8], "lambdas": [0.5, 1.0, 2.0], "times": [0.5, 1.0, 5.0],
                  "eigen_tol": 1e-6, "laplace_rho": 0.5, "laplace_lambda": 1.0,
                  "laplace_thetas": [1.0, 2.0], "laplace_tol": 1e-5,
                  "marchaud_alpha": 0.5, "marchaud_epsilon": 0.1},
    "relaxation": {"alpha": 0.5, "x_min": 0.1, "x_max": 10.0, "x_points": 100, "tol": 1e-6},
    "bm-symbol": {"cases": [[0.5, 0.5], [0.7, 1.0]], "us": [0.5, 1.0, 2.0], "t": 1.0, "beta0": 0.0,
                  "n_paths": 100000},
    "bm-density": {"alphas": [0.3, 0.5, 0.7], "xs": [0.0, 0.5, 1.0, 2.0],
                   "mass_cases": [[0.3, 0.0], [0.5, 0.0], [0.5, 0.5], [0.7, 1.0]]},
    "bm-autocov": {"cases": [[0.5, 1.0], [0.7, 0.5]], "t": 1.0, "tau": 3.0, "beta0": 0.5,
                   "n_paths": 100000},
    "fbm-subdiffusion": {"cases": [[0.2, 0.5], [0.2, 0.8]], "t_min": 1.0, "t_max": 100.0, "t_points": 21,
                         "tol": 0.1, "n_paths": 10000},
    "fbm-lrd": {"H": 0.2, "alpha": 0.5, "s": 1.0, "t_min": 2.0, "t_max": 100.0, "t_points": 21,
                "tol": 0.15, "n_paths": 10000},
    "multivariate": {"alpha": 0.5, "epsilon": 0.5, "t": 1.0, "angles": [0.0, 0.7853981633974483, 1.5707963267948966],
                     "weights": [0.3, 0.4, 0.3], "scale_C": 1.0, "etas": [[0.5, 1.0], [2.0, 0.7]],
                     "horizon": 5.0, "monotone_paths": 1000, "n_paths": 100000},
}

SUITES: dict[str, Callable[[RunContext], list[Check]]] = {
    "laplace": _laplace,
    "jumps": _jumps,
    "tempered-moments": _tempered_moments,
    "tail": _tail,
    "fracmoment": _fracmoment,
    "eps-convergence": _eps_convergence,
    "operators": _operators,
    "relaxation": _relaxation,
    "bm-symbol": _bm_symbol,
    "bm-density": _bm_density,
    "bm-autocov": _bm_autocov,
    "fbm-subdiffusion": _fbm_subdiffusion,
    "fbm-lrd": _fbm_lrd,
    "multivariate": _multivariate,
}


def run_suite(name: str, ctx: RunContext) -> list[Check]:
    return SUITES[name](ctx)
