"""Command-line front end.

Exit codes: 0 all selected suites pass, 1 a check found a violation, 2 the
configuration is invalid, 3 the runtime budget ran out.
"""
from __future__ import annotations

import argparse
import sys
import time

from .errors import ConfigError, InvalidParams
from .kernels import BACKEND
from .periodic_orbits import census
from .report import (SUITES, RunConfig, emit_plot_data, load_config,
                     summary_table, with_overrides, run)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tangency-horseshoe",
                                 description="Verify the hyperbolicity estimates of the tangency horseshoe.")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run verification suites and write a certificate")
    v.add_argument("--config", help="flat TOML file with parameters and run settings")
    v.add_argument("--suite", action="append", choices=SUITES,
                   help="suite to run (repeatable; default: all)")
    v.add_argument("--seed", type=int)
    v.add_argument("--out", help="output directory")
    v.add_argument("--allow-invalid-params", action="store_true", default=None,
                   help="run even if the parameters violate the standing assumptions")

    c = sub.add_parser("census", help="list the realised periodic orbits")
    c.add_argument("--max-period", type=int, required=True)
    c.add_argument("--config")

    p = sub.add_parser("plot-data", help="write plot-ready CSV datasets")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--allow-invalid-params", action="store_true", default=None)
    return ap


def _config(path) -> RunConfig:
    return load_config(path) if path else RunConfig()


def _verify(args) -> int:
    cfg = with_overrides(_config(args.config),
                         suites=tuple(args.suite) if args.suite else None,
                         seed=args.seed, out=args.out,
                         allow_invalid_params=args.allow_invalid_params)
    print(f"backend: {BACKEND}; output: {cfg.out}")
    cert = run(cfg, echo=print)
    print(summary_table(cert))
    return EXIT_OK if cert.passed else EXIT_FAIL


def _census(args) -> int:
    if args.max_period < 1:
        raise ConfigError("--max-period must be >= 1")
    cfg = _config(args.config)
    if cfg.params.violations():
        raise InvalidParams(cfg.params.violations())
    t0 = time.perf_counter()
    res = census(args.max_period, cfg.params)
    print("word,period,x,y,mu_s,mu_u,residual")
    for o in res.orbits:
        ms, mu = o.multipliers
        print(f"{o.name},{o.period},{o.points[0][0]!r},{o.points[0][1]!r},{ms!r},{mu!r},{o.residual!r}")
    print(f"# {len(res.orbits)} orbits from {res.words} words "
          f"({time.perf_counter() - t0:.1f}s)", file=sys.stderr)
    return EXIT_OK


def _plot_data(args) -> int:
    cfg = with_overrides(_config(args.config), out=args.out,
                         allow_invalid_params=args.allow_invalid_params)
    for path in emit_plot_data(cfg):
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"verify": _verify, "census": _census, "plot-data": _plot_data}[args.command]
    try:
        return handler(args)
    except (ConfigError, InvalidParams) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TimeoutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
