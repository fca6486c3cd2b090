import json
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))  # make `oracles` importable

from cdel.data import write_embeddings, write_manifest
from cdel.synthetic import make_cluster_signal_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cluster_bundle():
    return make_cluster_signal_dataset(n=120, seed=7)


def write_bundle(bundle, directory) -> dict:
    """Materialize a SyntheticBundle as the standard CSV files."""
    os.makedirs(directory, exist_ok=True)
    paths = {
        "manifest": os.path.join(directory, "manifest.csv"),
        "text_embeddings": os.path.join(directory, "text.csv"),
        "image_embeddings": os.path.join(directory, "image.csv"),
    }
    write_manifest(bundle.table, paths["manifest"])
    write_embeddings(bundle.text_embeddings, paths["text_embeddings"])
    write_embeddings(bundle.image_embeddings, paths["image_embeddings"])
    if bundle.face_encodings is not None:
        paths["face_encodings"] = os.path.join(directory, "faces.csv")
        write_embeddings(bundle.face_encodings, paths["face_encodings"])
    return paths


def write_config(path, **overrides) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(overrides, fh, indent=1)
    return str(path)
