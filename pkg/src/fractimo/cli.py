"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .config import load_config
from .fraccalc import ML_MAX_TERMS, ConvergenceError, mittag_leffler2
from .solver import ConfigError, NumericalFailure

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

logger = logging.getLogger("fractimo")


def _print_checks(checks):
    for c in checks:
        print(f"{c.name:24s} {'PASS' if c.passed else 'FAIL'}  lhs={c.lhs!r} rhs={c.rhs!r}")


def _cmd_run(args):
    status, checks = harness.run(load_config(args.config))
    _print_checks(checks)
    return status


def _cmd_verify(args):
    status, checks = harness.run_energy(load_config(args.config))
    _print_checks(checks)
    return status


def _cmd_perturb(args):
    cfg = load_config(args.config)
    if cfg.scenario != "perturb_pair":
        logger.info("scenario %s: perturbing its data with perturb_pair defaults",
                    cfg.scenario)
    status, checks = harness.run_perturb(cfg)
    _print_checks(checks)
    return status


def _cmd_converge(args):
    cfg = load_config(args.config)
    try:
        status, rows = harness.converge(cfg, args.levels)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print("level          dx          dt   err_theta     err_phi  order_x  order_t")
    for r in rows:
        ox = "" if r.order_x is None else f"{r.order_x:.3f}"
        ot = "" if r.order_t is None else f"{r.order_t:.3f}"
        print(f"{r.level:5d} {r.dx:11.4e} {r.dt:11.4e} {r.err_theta:11.4e} "
              f"{r.err_phi:11.4e} {ox:>8s} {ot:>8s}")
    return status


def _cmd_mlf(args):
    mu = 1.0 if args.mu is None else args.mu
    try:
        value = mittag_leffler2(args.beta, mu, args.x)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(repr(value))
    return EXIT_OK


def _cmd_selftest(args):
    status, results = harness.selftest(
        ml_max_terms=args.ml_max_terms, project=not args.no_project,
        out_dir=Path(args.out) if args.out else None)
    for r in results:
        print(f"{r.name:24s} {'PASS' if r.passed else 'FAIL'}  value={r.lhs!r} tol={r.rhs!r}")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fractimo",
                                description="Fractional Timoshenko beam simulator "
                                            "and energy-estimate checker")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn, help_ in (("run", _cmd_run, "solve a scenario and write all traces"),
                            ("verify-energy", _cmd_verify, "check the a priori estimates"),
                            ("perturb", _cmd_perturb, "continuous-dependence ratios")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config")
        s.set_defaults(func=fn)

    s = sub.add_parser("converge", help="manufactured-solution convergence table")
    s.add_argument("config")
    s.add_argument("--levels", type=int, default=3)
    s.set_defaults(func=_cmd_converge)

    s = sub.add_parser("mlf", help="evaluate the Mittag-Leffler function")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--mu", type=float, default=None)
    s.add_argument("--x", type=float, required=True)
    s.set_defaults(func=_cmd_mlf)

    s = sub.add_parser("selftest", help="run the built-in oracle checks")
    s.add_argument("--ml-max-terms", type=int, default=ML_MAX_TERMS)
    s.add_argument("--no-project", action="store_true",
                   help="disable the constraint rows (negative control)")
    s.add_argument("--out", default=None, help="directory for selftest.csv")
    s.set_defaults(func=_cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, ConvergenceError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
