"""Command line runner: ``simulate``, ``verify <suite>`` and ``eval <fn> <args>``.

Settings come from an optional INI file and from flags; flags win. The INI
file may hold a ``[run]`` section (seed, threads, paths, tolerance_scale,
out), a ``[simulate]`` section, and one section per suite whose keys
override that suite's defaults. Values are parsed as JSON when possible
(numbers, ``[0.3, 0.5]`` lists), else as comma-separated numbers.

Reports are JSON with sorted keys and no timestamps, so a rerun with the
same seed and config reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, fbm, operators, specfun, subordination, subordinator
from .exceptions import DomainError, RegimeError
from .streams import make_stream
from .subordinator import SubordinatorSpec
from .suites import SUITE_DEFAULTS, SUITES, RunContext

DEFAULT_SEED = 1729
RUN_KEYS = {"seed", "threads", "paths", "tolerance_scale", "out"}
SIMULATE_DEFAULTS = {
    "process": "subordinator",
    "family": "plain",
    "alpha": 0.5,
    "theta": 0.0,
    "epsilon": 1.0,
    "beta0": 0.0,
    "H": 0.25,
    "horizon": 10.0,
    "grid_points": 101,
    "n_paths": 10,
}
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_REFUSED = 3


class ConfigError(ValueError):
    pass


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    parts = [p.strip() for p in raw.split(",")]
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        return raw.strip()
    return vals if len(vals) > 1 else vals[0]


def load_config(path: Optional[str]) -> dict[str, dict]:
    """Read an INI file into ``{section: {key: value}}``, validating section and key names."""
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep "H" distinct from "h"
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    known = {"run": RUN_KEYS, "simulate": set(SIMULATE_DEFAULTS)}
    known.update({name: set(d) for name, d in SUITE_DEFAULTS.items()})
    out = {}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"{path}: unknown section [{section}]")
        values = {}
        for key, raw in parser.items(section):
            if key not in known[section]:
                raise ConfigError(f"{path}: [{section}] unknown key {key!r}; "
                                  f"expected one of {sorted(known[section])}")
            values[key] = _parse_value(raw)
        out[section] = values
    return out


def _run_settings(args, cfg) -> dict:
    run = dict(cfg.get("run", {}))
    for key in ("seed", "threads", "paths", "tolerance_scale", "out"):
        flag = getattr(args, key, None)
        if flag is not None:
            run[key] = flag
    run.setdefault("seed", DEFAULT_SEED)
    run.setdefault("threads", 1)
    run.setdefault("paths", None)
    run.setdefault("tolerance_scale", 1.0)
    run.setdefault("out", ".")
    seed = run["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    if not isinstance(run["threads"], int) or run["threads"] < 1:
        raise ConfigError(f"threads must be a positive integer, got {run['threads']!r}")
    if run["paths"] is not None and (not isinstance(run["paths"], int) or run["paths"] < 1):
        raise ConfigError(f"paths must be a positive integer, got {run['paths']!r}")
    if not run["tolerance_scale"] > 0:
        raise ConfigError("tolerance_scale must be positive")
    return run


def _clean(obj):
    # JSON has no NaN/inf; spell them out so reports stay standard JSON
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _clean(obj.item())
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    return obj


def _dump(record) -> str:
    return json.dumps(_clean(record), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    return out


def cmd_verify(args, cfg) -> int:
    run = _run_settings(args, cfg)
    params = dict(SUITE_DEFAULTS[args.suite])
    params.update(cfg.get(args.suite, {}))
    ctx = RunContext(seed=run["seed"], threads=run["threads"], paths=run["paths"],
                     tolerance_scale=float(run["tolerance_scale"]), params=params)
    report = {
        "suite": args.suite,
        "version": __version__,
        "seed": run["seed"],
        "config": {"run": {k: run[k] for k in ("seed", "threads", "paths", "tolerance_scale")},
                   args.suite: params},
    }
    out = _out_dir(run["out"])
    path = out / f"verify_{args.suite}.json"
    try:
        checks = SUITES[args.suite](ctx)
    except RegimeError as exc:
        report.update(passed=False, refused={"error": type(exc).__name__, "message": str(exc)})
        path.write_text(_dump(report), encoding="utf-8")
        print(f"refused: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    passed = all(c.passed for c in checks)
    report.update(
        checks=[c.to_record() for c in checks],
        n_checks=len(checks),
        n_failed=sum(not c.passed for c in checks),
        passed=passed,
    )
    path.write_text(_dump(report), encoding="utf-8")
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {args.suite}: {c.name}  measured={c.measured!r}  "
              f"target={c.target!r}")
    print(f"{args.suite}: {len(checks) - report['n_failed']}/{len(checks)} checks passed -> {path}")
    return 0 if passed else EXIT_FAIL


def _sim_spec(p) -> SubordinatorSpec:
    family = p["family"]
    if family == "plain":
        return SubordinatorSpec.plain(p["alpha"], p["beta0"])
    if family == "tempered":
        return SubordinatorSpec.tempered(p["alpha"], p["theta"], p["beta0"])
    if family == "epsilon":
        return SubordinatorSpec.floored(p["alpha"], p["epsilon"], p["beta0"])
    raise ConfigError(f"[simulate] family must be plain, tempered or epsilon, got {family!r}")


def cmd_simulate(args, cfg) -> int:
    run = _run_settings(args, cfg)
    p = dict(SIMULATE_DEFAULTS)
    p.update(cfg.get("simulate", {}))
    if run["paths"] is not None:
        p["n_paths"] = run["paths"]
    n = int(p["n_paths"])
    out = _out_dir(run["out"])
    grid = np.linspace(0.0, float(p["horizon"]), int(p["grid_points"]))
    files = []
    for i in range(n):
        rng = make_stream(run["seed"], "simulate", i)
        if p["process"] == "subordinator":
            text = subordinator.sample_path(_sim_spec(p), float(p["horizon"]), rng).to_csv()
        elif p["process"] == "subordinated-bm":
            text = subordination.sample_subordinated_bm(_sim_spec(p), grid, rng).to_csv()
        elif p["process"] == "time-changed-fbm":
            text = fbm.sample_time_changed_fbm(p["H"], p["alpha"], float(p["horizon"]), grid, rng).to_csv()
        else:
            raise ConfigError("[simulate] process must be subordinator, subordinated-bm or time-changed-fbm")
        name = f"path_{i:04d}.csv"
        (out / name).write_text(text, encoding="utf-8", newline="\n")
        files.append(name)
    manifest = {"command": "simulate", "version": __version__, "seed": run["seed"],
                "config": {"simulate": p, "run": {"seed": run["seed"], "paths": n}},
                "files": files}
    (out / "manifest.json").write_text(_dump(manifest), encoding="utf-8")
    print(f"wrote {n} paths and manifest.json to {out}")
    return 0


_ALIASES = {"α": "alpha", "θ": "theta", "ε": "epsilon", "β₀": "beta0", "β0": "beta0", "η": "eta",
            "τ": "tau", "ρ": "rho", "λ": "lam"}


def _spec_from(kw, family):
    kw = dict(kw)
    alpha = kw.pop("alpha")
    if family == "plain":
        return SubordinatorSpec.plain(alpha, kw.pop("beta0", 0.0)), kw
    if family == "tempered":
        return SubordinatorSpec.tempered(alpha, kw.pop("theta"), kw.pop("beta0", 0.0)), kw
    if family == "epsilon":
        return SubordinatorSpec.floored(alpha, kw.pop("epsilon"), kw.pop("beta0", 0.0)), kw
    raise DomainError(f"family must be plain, tempered or epsilon, got {family!r}")


def _spec_fn(fn, *arg_names):
    def call(family, **kw):
        spec, rest = _spec_from(kw, family)
        extra = set(rest) - set(arg_names)
        if extra:
            raise TypeError(f"unexpected arguments for the {family} family: {sorted(extra)}")
        return fn(spec, *(rest[a] for a in arg_names))
    return call


# name -> (callable, positional parameter names, whether the first positional is a family)
EVAL_FUNCTIONS = {
    "gamma": (specfun.gamma_complete, ["a"], False),
    "lower_inc_gamma": (specfun.lower_inc_gamma, ["a", "x"], False),
    "upper_inc_gamma": (specfun.upper_inc_gamma, ["a", "x"], False),
    "reg_inc_beta": (specfun.reg_inc_beta, ["x", "a", "b"], False),
    "kummer_1f1": (specfun.kummer_1f1, ["a", "c", "z"], False),
    "mittag_leffler3": (specfun.mittag_leffler3, ["alpha", "beta", "gamma", "z"], False),
    "laplace_exponent": (_spec_fn(subordinator.laplace_exponent, "eta"), ["alpha", "eta"], True),
    "poisson_rate": (_spec_fn(subordinator.poisson_rate), ["alpha"], True),
    "levy_density": (_spec_fn(subordinator.levy_density, "z"), ["alpha", "z"], True),
    "jump_cdf": (_spec_fn(subordinator.jump_cdf, "z"), ["alpha", "z"], True),
    "tail_asymptote": (subordinator.tail_asymptote, ["alpha", "t", "x"], False),
    "frac_moment_asymptote": (subordinator.frac_moment_asymptote, ["alpha", "p", "t"], False),
    "frac_moment": (subordinator.frac_moment, ["alpha", "p", "t"], False),
    "tempered_mean_var": (lambda alpha, theta, t: subordinator.tempered_mean_var(
        SubordinatorSpec.tempered(alpha, theta), t), ["alpha", "theta", "t"], False),
    "bm_levy_density": (subordination.bm_levy_density, ["x", "alpha", "theta"], False),
    "bm_autocovariance": (lambda alpha, theta, t, tau, beta0=0.0: subordination.bm_autocovariance(
        SubordinatorSpec.tempered(alpha, theta, beta0), t, tau), ["alpha", "theta", "t", "tau"], False),
    "o_epsilon_transfer": (operators.o_epsilon_transfer, ["eta", "epsilon", "alpha"], False),
    "fbm_abs_moment": (fbm.fbm_abs_moment, ["H", "q", "t"], False),
}


def _parse_eval_args(name, tokens):
    fn, names, takes_family = EVAL_FUNCTIONS[name]
    family = None
    positional, keywords = [], {}
    for tok in tokens:
        if "=" in tok:
            key, raw = tok.split("=", 1)
            key = _ALIASES.get(key, key)
            keywords[key] = float(raw)
        elif takes_family and family is None and tok in ("plain", "tempered", "epsilon"):
            family = tok
        else:
            positional.append(float(tok))
    if len(positional) > len(names):
        raise DomainError(f"{name} takes at most {len(names)} positional values ({', '.join(names)})")
    for key, val in zip(names, positional):
        if key in keywords:
            raise DomainError(f"{key} given twice")
        keywords[key] = val
    if takes_family:
        return (lambda: fn(family or "plain", **keywords)), names
    return (lambda: fn(**keywords)), names


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return repr(float(value))


def cmd_eval(args) -> int:
    if args.function not in EVAL_FUNCTIONS:
        print(f"unknown function {args.function!r}; available: {', '.join(sorted(EVAL_FUNCTIONS))}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        call, names = _parse_eval_args(args.function, args.args)
        value = call()
    except (TypeError, KeyError, ValueError) as exc:
        _, names, fam = EVAL_FUNCTIONS[args.function]
        usage = f"usage: eval {args.function} {'[plain|tempered|epsilon] ' if fam else ''}" + " ".join(names)
        if fam:
            usage += " [theta=..] [epsilon=..] [beta0=..]"
        print(f"error: {exc}\n{usage}", file=sys.stderr)
        return EXIT_USAGE
    print(_format(value))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [run], [simulate] and per-suite sections")
    common.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
    common.add_argument("--threads", type=int, help="worker threads for Monte Carlo chunks")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--paths", type=int, help="override the number of Monte Carlo paths")
    common.add_argument("--tolerance-scale", dest="tolerance_scale", type=float,
                        help="multiply every tolerance by this factor")

    parser = argparse.ArgumentParser(prog="gammasub", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write sample paths as CSV plus a manifest")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=sorted(SUITES))
    e = sub.add_parser("eval", help="evaluate an analytic function")
    e.add_argument("function")
    e.add_argument("args", nargs="*", help="positional values or name=value pairs")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "eval":
            return cmd_eval(args)
        cfg = load_config(args.config)
        if args.command == "verify":
            return cmd_verify(args, cfg)
        return cmd_simulate(args, cfg)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
