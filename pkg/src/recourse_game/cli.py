"""Command-line entry point.

Subcommands: generate, compare, leakage, transport, matroid, check. Options
come from a JSON config file (--config) with individual fields overridable by
flags; the RECOURSE_GAME_OUTDIR environment variable overrides the config's
output directory and is itself overridden by --outdir.

Exit codes: 0 ok, 1 check failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .datagen import SynthConfig
from .harness import (
    ExperimentConfig,
    run_compare,
    run_check,
    run_generate,
    run_leakage,
    run_matroid,
    run_transport,
)

OUTDIR_ENV = "RECOURSE_GAME_OUTDIR"

_RUNNERS = {
    "generate": run_generate,
    "compare": run_compare,
    "leakage": run_leakage,
    "transport": run_transport,
    "matroid": run_matroid,
}


def _comma_list(cast):
    def parse(text):
        return tuple(cast(tok) for tok in text.split(",") if tok != "")

    return parse


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--outdir", help="output directory")
    sub.add_argument("--m", type=int, help="number of feature values (synthetic)")
    sub.add_argument("--gamma", type=float, help="decision cost constant")
    sub.add_argument("--seed", type=int, help="base seed")
    sub.add_argument(
        "--k", type=_comma_list(int), help="explanation budget(s), comma separated"
    )
    sub.add_argument(
        "--alpha", type=_comma_list(float), help="cost scale(s), comma separated"
    )
    sub.add_argument(
        "--pl", type=_comma_list(float), help="leakage probabilities, comma separated"
    )
    sub.add_argument("--repetitions", type=int, help="repetitions per sweep point")
    sub.add_argument("--bins", type=int, help="outcome bins for transport matrices")
    sub.add_argument("--values", help="instance values CSV (file-based runs)")
    sub.add_argument("--costs", help="instance cost CSV (file-based runs)")


def _build_config(args, experiment: str) -> ExperimentConfig:
    raw = {}
    if args.config:
        with open(args.config) as f:
            raw = json.load(f)

    if args.values or args.costs:
        raw["instance"] = {
            "values": args.values,
            "costs": args.costs,
            "gamma": args.gamma
            if args.gamma is not None
            else raw.get("instance", {}).get("gamma"),
        }
    elif args.m is not None or "instance" not in raw:
        inst = dict(raw.get("instance", {}))
        if "values" not in inst:
            if args.m is not None:
                inst["m"] = args.m
            if args.gamma is not None:
                inst["gamma"] = args.gamma
            inst.setdefault("m", 50)
            raw["instance"] = inst
    elif args.gamma is not None and "values" not in raw.get("instance", {}):
        raw["instance"] = {**raw["instance"], "gamma": args.gamma}

    if args.k is not None:
        raw["k"] = args.k[0]
        raw["k_sweep"] = list(args.k)
    if args.alpha is not None:
        raw["alpha_sweep"] = list(args.alpha)
    if args.pl is not None:
        raw["pl_sweep"] = list(args.pl)
    if args.repetitions is not None:
        raw["repetitions"] = args.repetitions
    if args.seed is not None:
        raw["base_seed"] = args.seed
    if args.bins is not None:
        raw["bins"] = args.bins

    env_outdir = os.environ.get(OUTDIR_ENV)
    if env_outdir:
        raw["outdir"] = env_outdir
    if args.outdir:
        raw["outdir"] = args.outdir
    raw.setdefault("outdir", "results")

    return ExperimentConfig.from_dict(raw, experiment=experiment)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="recourse-game",
        description=(
            "Strategic counterfactual explanations: best-response simulation, "
            "submodular optimizers, and seeded experiment sweeps."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("generate", "write a synthetic instance to CSV files"),
        ("compare", "utility of all regimes across sweeps"),
        ("leakage", "jointly optimized utility under explanation leakage"),
        ("transport", "moved-mass matrices between outcome bins"),
        ("matroid", "group balance under a partition-matroid constraint"),
    ):
        _add_common(sub.add_parser(name, help=desc))
    check = sub.add_parser("check", help="run the acceptance criteria battery")
    check.add_argument("--seed", type=int, default=0, help="base seed")

    args = parser.parse_args(argv)

    if args.command == "check":
        return 0 if run_check(base_seed=args.seed) else 1

    try:
        config = _build_config(args, args.command)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        parser.error(str(exc))

    try:
        paths = _RUNNERS[args.command](config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    paths = paths if isinstance(paths, list) else [paths]
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
