"""Command-line entry point: ``dirstab <subcommand> [--config PATH | --scenario NAME]``.

Exit codes: 0 nothing violated, 1 some row violated, 2 configuration or
geometry error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .errors import ConfigError
from .scenario import (SWEEP_PARAMS, RunResult, bundled_names, bundled_scenario,
                       load_scenario, run_scenario, sweep, validate)

SUBCOMMANDS = {
    "spectra": ("spectra",),
    "verify-global": ("spectra", "global"),
    "verify-convex": ("convex",),
    "verify-corollary": ("corollary",),
    "proximity": ("proximity",),
    "geometry": ("geometry",),
    "lemmas": ("lemmas",),
    "run": None,
}


def _common(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH", action="append",
                     help="scenario INI file (repeatable for batches)")
    src.add_argument("--scenario", metavar="NAME", action="append",
                     help="bundled scenario name (repeatable)")
    p.add_argument("--out", metavar="DIR", default="out", help="output directory")
    p.add_argument("--h", type=_fraction, help="override the grid spacing (e.g. 1/256)")
    p.add_argument("--kmax", type=int, help="override k_max")
    p.add_argument("--alpha", type=float, action="append", help="override alpha (repeatable)")
    p.add_argument("--seed", type=int, help="override the random seed")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--refine-on-near-violation", action=argparse.BooleanOptionalAction,
                   default=True, help="re-run at h/2 when a margin is below twice the slack")
    p.add_argument("--dump-masks", action="store_true", help="write PGM images of the masks")


def _fraction(text):
    from fractions import Fraction

    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dirstab",
                                     description="Dirichlet eigenvalue stability checks on grids")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        _common(sub.add_parser(name))
    sw = sub.add_parser("sweep", help="long-form parameter sweep")
    _common(sw)
    sw.add_argument("--param", choices=SWEEP_PARAMS)
    sw.add_argument("--values", help="comma-separated values (defaults to the [sweep] section)")
    sub.add_parser("list", help="list bundled scenarios")
    return parser


def _scenarios(args):
    if args.config:
        scs = [load_scenario(p) for p in args.config]
    elif args.scenario:
        scs = [bundled_scenario(n) for n in args.scenario]
    else:
        raise ConfigError("give --config PATH or --scenario NAME")
    out = []
    for sc in scs:
        upd = {}
        if args.h is not None:
            upd["h"] = args.h
        if args.kmax is not None:
            upd["k_max"] = args.kmax
        if args.alpha:
            upd["alphas"] = tuple(args.alpha)
        if args.seed is not None:
            upd["seed"] = args.seed
        sc = dataclasses.replace(sc, **upd)
        validate(sc)
        out.append(sc)
    return out


def _report(res: RunResult):
    print(f"{res.scenario}: {res.status} (exit {res.exit_code}) -> {res.outdir}")
    if res.exit_code in (2, 3):
        print(f"  {res.summary.get('message', '')}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for n in bundled_names():
            print(n)
        return 0
    try:
        scenarios = _scenarios(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    codes = []
    index = []
    for sc in scenarios:
        if args.command == "sweep":
            param = args.param or sc.sweep_param
            if param is None:
                print("configuration error: no sweep parameter given", file=sys.stderr)
                return 2
            try:
                values = ([_fraction(v) for v in args.values.split(",")] if args.values
                          else list(sc.sweep_values))
                rows = sweep(sc, param, values, Path(args.out) / sc.name,
                             refine=args.refine_on_near_violation)
            except (ConfigError, argparse.ArgumentTypeError) as exc:
                print(f"configuration error: {exc}", file=sys.stderr)
                codes.append(2)
                continue
            bad = any(r.get("verdict") == "violated" for r in rows)
            print(f"{sc.name}: sweep over {param} with {len(values)} values, "
                  f"{len(rows)} rows{' (violations)' if bad else ''}")
            codes.append(1 if bad else 0)
            index.append({"scenario": sc.name, "sweep": param, "exit_code": codes[-1]})
            continue
        checks = SUBCOMMANDS[args.command]
        res = run_scenario(sc, args.out, fmt=args.format,
                           refine=args.refine_on_near_violation,
                           dump_masks=args.dump_masks, checks=checks)
        _report(res)
        codes.append(res.exit_code)
        index.append({"scenario": sc.name, "status": res.status, "exit_code": res.exit_code,
                      "outdir": res.outdir})
    Path(args.out).mkdir(parents=True, exist_ok=True)
    with open(Path(args.out) / "index.json", "w") as fh:
        json.dump(index, fh, indent=2)
    # configuration and solver failures dominate violations
    for code in (3, 2, 1):
        if code in codes:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
