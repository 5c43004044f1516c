"""Command-line entry points for the experiment scenarios.

Exit codes: 0 success, 2 configuration error, 3 runtime failure,
4 ablation ordering check failed.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_config
from .exceptions import ConfigError, ExtractLabError
from .harness import (
    AblationCheckFailure,
    METHODS,
    ablation_scenario,
    attack_scenario,
    calibrate_scenario,
    defend_scenario,
    report_scenario,
    train_victim_scenario,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_CHECK = 4


def _add_common(sub, default_out: str):
    sub.add_argument("--config", help="path to a key = value override file")
    sub.add_argument("--seed", type=int, default=0, help="scenario seed")
    sub.add_argument("--out", default=default_out, help="output directory")
    sub.add_argument("--quiet", action="store_true", help="suppress summary output")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extractlab",
        description="Model-extraction attack and stateful-defense laboratory.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("train-victim", help="train and save the victim model")
    _add_common(sub, "runs/train-victim")

    sub = commands.add_parser("attack", help="run extraction attacks, undefended")
    _add_common(sub, "runs/attack")
    sub.add_argument(
        "--methods", default=",".join(METHODS),
        help=f"comma-separated subset of: {', '.join(METHODS)}",
    )

    sub = commands.add_parser("defend", help="attack the configured defense mode")
    _add_common(sub, "runs/defend")

    sub = commands.add_parser("calibrate", help="fit defense thresholds on benign traffic")
    _add_common(sub, "runs/calibrate")

    sub = commands.add_parser("ablation", help="defense ablation over several seeds")
    _add_common(sub, "runs/ablation")
    sub.add_argument("--n-seeds", type=int, default=5, help="consecutive seeds to run")
    sub.add_argument(
        "--check", action="store_true",
        help="fail (exit 4) if the defense orderings do not hold",
    )

    sub = commands.add_parser("report", help="aggregate metrics.jsonl files")
    sub.add_argument("--metrics-dir", required=True, help="directory to scan")
    sub.add_argument("--out", default="runs/report", help="output directory")
    sub.add_argument("--quiet", action="store_true")
    return parser


def _emit(result: dict, quiet: bool) -> None:
    if not quiet:
        print(json.dumps(result, sort_keys=True, indent=2, default=str))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        overrides = load_config(args.config) if getattr(args, "config", None) else {}
        if args.command == "train-victim":
            result = train_victim_scenario(overrides, args.seed, args.out)
        elif args.command == "attack":
            methods = tuple(
                m.strip() for m in args.methods.split(",") if m.strip()
            )
            if not methods:
                raise ConfigError("--methods selected nothing")
            result = attack_scenario(overrides, args.seed, args.out, methods)
            result = result["summary"]
        elif args.command == "defend":
            result = defend_scenario(overrides, args.seed, args.out)["summary"]
        elif args.command == "calibrate":
            result = calibrate_scenario(overrides, args.seed, args.out)
        elif args.command == "ablation":
            result = ablation_scenario(
                overrides, args.seed, args.out,
                n_seeds=args.n_seeds, check=args.check,
            )
        else:
            result = report_scenario(args.metrics_dir, args.out)
    except AblationCheckFailure as exc:
        print(f"ablation check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExtractLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _emit(result, args.quiet)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
