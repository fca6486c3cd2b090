#!/usr/bin/env python3
"""Materialize a synthetic fixture (manifest + embedding CSVs + run config).

Two flavors:

* ``cluster-signal`` — labels follow a latent face-cluster variable that the
  text/image embeddings cannot see; exercises the clustering-fusion path.
* ``imbalanced`` — 60/31/9 class skew with overlapping informative text
  features; exercises the logit-adjusted loss.
"""

import argparse
import json
import os
import sys

from cdel.data import write_embeddings, write_manifest
from cdel.synthetic import make_cluster_signal_dataset, make_imbalanced_dataset


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", help="directory to write the fixture into")
    parser.add_argument("--flavor", choices=["cluster-signal", "imbalanced"],
                        default="cluster-signal")
    parser.add_argument("--n", type=int, default=240)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    os.makedirs(args.out_dir, exist_ok=True)
    if args.flavor == "cluster-signal":
        bundle = make_cluster_signal_dataset(n=args.n, seed=args.seed)
    else:
        bundle = make_imbalanced_dataset(n=args.n, seed=args.seed)

    write_manifest(bundle.table, os.path.join(args.out_dir, "manifest.csv"))
    write_embeddings(bundle.text_embeddings,
                     os.path.join(args.out_dir, "text.csv"))
    write_embeddings(bundle.image_embeddings,
                     os.path.join(args.out_dir, "image.csv"))

    config = {
        "manifest": "manifest.csv",
        "text_embeddings": "text.csv",
        "image_embeddings": "image.csv",
        "output_dir": "out",
        "seed": args.seed,
        "train": {"epochs": 20, "learning_rate": 0.01, "dropout_rate": 0.0,
                  "batch_size": 32},
    }
    if bundle.face_encodings is not None:
        write_embeddings(bundle.face_encodings,
                         os.path.join(args.out_dir, "faces.csv"))
        config["face_encodings"] = "faces.csv"
    else:
        config["train"]["use_cluster"] = False
        config["train"]["image_mode"] = "none"
    with open(os.path.join(args.out_dir, "run.json"), "w",
              encoding="utf-8") as fh:
        json.dump(config, fh, indent=1)
        fh.write("\n")
    print(f"wrote {args.flavor} fixture ({args.n} samples) to {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
