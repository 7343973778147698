"""Command-line entry point.

Subcommands mirror the experiment runners::

    cutoffsim tv-curve CONFIG [--seed S] [--out DIR]
    cutoffsim hitting CONFIG [--seed S] [--out DIR]
    cutoffsim coupling CONFIG [--seed S] [--out DIR]
    cutoffsim hypotheses CONFIG [--seed S] [--out DIR]
    cutoffsim cutoff-fit CONFIG [--seed S] [--out DIR]
    cutoffsim reproduce-figure1 [CONFIG] [--seed S] [--out DIR]

Exit status: 0 on success, 2 on budget or capacity errors, 1 otherwise.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .errors import CapacityError, SimulationTimeout
from .experiments import RUNNERS, ExperimentConfig, parse_config, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutoffsim",
        description="mixing curves, hitting moments, and coupling experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        if name == "reproduce-figure1":
            p.add_argument("config", nargs="?", default=None,
                           help="optional INI config")
        else:
            p.add_argument("config", help="INI config path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="override the output dir")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = parse_config(args.config)
        else:
            cfg = ExperimentConfig()
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out"] = args.out
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
        manifest = run_experiment(args.command, cfg)
    except (CapacityError, SimulationTimeout) as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
