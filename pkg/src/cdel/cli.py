"""Command-line entry point: cdel sweep|cluster|train|predict|evaluate|crossval.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DataError, NumericError
from .pipeline import (
    load_run_config,
    run_cluster,
    run_crossval,
    run_evaluate,
    run_predict,
    run_sweep,
    run_train,
)

_COMMANDS = {
    "sweep": run_sweep,
    "cluster": run_cluster,
    "train": run_train,
    "predict": run_predict,
    "evaluate": run_evaluate,
    "crossval": run_crossval,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdel",
        description="Cluster-based deep ensemble learning workflow",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--force-t", type=float, default=None,
                       help="skip threshold selection and use this t")
        p.add_argument("--out", default=None, help="override output_dir")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_run_config(
            args.config, seed=args.seed, out=args.out, force_t=args.force_t
        )
        artifacts = _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"cdel: config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"cdel: data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"cdel: numeric error: {exc}", file=sys.stderr)
        return 4
    for key, value in artifacts.items():
        if isinstance(value, str):
            print(f"{key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
