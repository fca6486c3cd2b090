#!/usr/bin/env python3
"""End-to-end demo: build a fixture, run the full pipeline, print metrics.

Equivalent to::

    cdel sweep    --config run.json
    cdel cluster  --config run.json
    cdel train    --config run.json
    cdel predict  --config run.json
    cdel evaluate --config run.json
    cdel crossval --config run.json
"""

import argparse
import json
import sys
import tempfile

from cdel.cli import main as cdel_main

from make_synthetic_fixture import main as make_fixture


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--flavor", choices=["cluster-signal", "imbalanced"],
                        default="cluster-signal")
    parser.add_argument("--n", type=int, default=240)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workdir", default=None,
                        help="reuse a directory instead of a temp one")
    args = parser.parse_args(argv)

    workdir = args.workdir or tempfile.mkdtemp(prefix="cdel_demo_")
    make_fixture([workdir, "--flavor", args.flavor,
                  "--n", str(args.n), "--seed", str(args.seed)])
    config = f"{workdir}/run.json"

    commands = ["train", "predict", "evaluate", "crossval"]
    if args.flavor == "cluster-signal":  # no faces to cluster otherwise
        commands = ["sweep", "cluster"] + commands
    for cmd in commands:
        print(f"--- cdel {cmd}")
        rc = cdel_main([cmd, "--config", config])
        if rc != 0:
            return rc

    with open(f"{workdir}/out/metrics.json", encoding="utf-8") as fh:
        metrics = json.load(fh)
    with open(f"{workdir}/out/crossval.json", encoding="utf-8") as fh:
        crossval = json.load(fh)
    print("--- results")
    print(f"macro_f1  : {metrics['macro_f1']:.4f}")
    print(f"accuracy  : {metrics['accuracy']:.4f}")
    folds = ", ".join(f"{s:.4f}" for s in crossval["fold_macro_f1"])
    print(f"crossval  : [{folds}] mean={crossval['mean_macro_f1']:.4f}")
    print(f"artifacts : {workdir}/out")
    return 0


if __name__ == "__main__":
    sys.exit(main())
