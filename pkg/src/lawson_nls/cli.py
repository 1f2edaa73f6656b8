"""Command-line entry point.

Exit status is 0 on success, 2 for configuration errors and 3 when the
integration fails numerically.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import CASES, run_convergence, run_evolve, run_turbulence, write_convergence_csv
from .lawson import SCHEMES, StepFailure

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _number_list(text: str, kind=float) -> list:
    try:
        return [kind(Fraction(item.strip())) for item in text.split(",") if item.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad list {text!r}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lawson-nls", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("converge", help="temporal convergence table against an exact solution")
    conv.add_argument("--case", required=True, choices=sorted(CASES))
    conv.add_argument("--scheme", required=True, choices=sorted(SCHEMES))
    conv.add_argument("--tau", required=True, type=_number_list, help="comma list, fractions allowed (1/100,1/200)")
    conv.add_argument("--nodes", required=True, type=lambda s: _number_list(s, int), help="one count or one per dim")
    conv.add_argument("--t-end", required=True, type=lambda s: float(Fraction(s)))
    conv.add_argument("--c0", type=float, default=None, help="override the case's SAV offset")
    conv.add_argument("--jobs", type=int, default=1, help="worker processes for the tau sweep")
    conv.add_argument("--out", default="out")

    evo = sub.add_parser("evolve", help="track mass and energies along a run")
    evo.add_argument("--config", required=True)

    turb = sub.add_parser("turbulence", help="random-phase superfluid run with density snapshots")
    turb.add_argument("--config", required=True)
    turb.add_argument("--seed", type=int, default=None)
    return parser


def _converge(args) -> None:
    nodes = args.nodes[0] if len(args.nodes) == 1 else args.nodes
    report = run_convergence(args.case, args.scheme, args.tau, nodes, args.t_end, c0=args.c0, jobs=args.jobs)
    path = write_convergence_csv(report, Path(args.out) / f"converge_{args.case}_{args.scheme}.csv")
    print(f"{'tau':>12} {'L2 error':>12} {'order':>6} {'Linf error':>12} {'order':>6}")
    for tau, l2, l2o, li, lio in report.rows():
        print(f"{tau:12.6g} {l2:12.4e} {l2o:6.2f} {li:12.4e} {lio:6.2f}")
    print(f"wrote {path}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "converge":
            _converge(args)
        elif args.command == "evolve":
            cfg = load_config(args.config)
            records = run_evolve(cfg)
            print(f"{len(records)} records written to {Path(cfg.output_dir) / 'invariants.csv'}")
        else:
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
            records = run_turbulence(cfg)
            print(f"{len(records)} records written to {Path(cfg.output_dir) / 'invariants.csv'}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
