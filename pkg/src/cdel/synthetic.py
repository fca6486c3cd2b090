"""Deterministic synthetic datasets for experiments and tests.

Two generators:

* a cluster-signal dataset where the label is a function of a latent
  face-cluster variable that text/image embeddings cannot see, and
* a class-skewed dataset (roughly 60/31/9) with overlapping informative
  features, for studying the effect of logit adjustment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CLASSES, EmbeddingMatrix, SampleRecord, SampleTable


@dataclass(frozen=True)
class SyntheticBundle:
    table: SampleTable
    face_encodings: EmbeddingMatrix | None  # face-bearing samples only
    text_embeddings: EmbeddingMatrix
    image_embeddings: EmbeddingMatrix


def make_cluster_signal_dataset(
    n: int = 240,
    seed: int = 0,
    n_clusters: int = 3,
    faceless_frac: float = 0.1,
    face_dim: int = 8,
    text_dim: int = 8,
    image_dim: int = 8,
    blob_scale: float = 2.0,
    blob_noise: float = 0.05,
) -> SyntheticBundle:
    """Labels follow the latent face blob (faceless samples get their own
    deterministic class); text/image embeddings are pure noise."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(n_clusters, face_dim))
    centers = blob_scale * centers / np.linalg.norm(centers, axis=1, keepdims=True)
    n_faceless = int(round(n * faceless_frac))
    records = []
    face_ids, face_rows = [], []
    text_rows, image_rows = [], []
    ids = [f"s{i:04d}" for i in range(n)]
    for i, sid in enumerate(ids):
        if i < n_faceless:
            latent = n_clusters  # the faceless group
        else:
            latent = int(rng.integers(n_clusters))
            face_rows.append(centers[latent] + blob_noise * rng.normal(size=face_dim))
            face_ids.append(sid)
        label = CLASSES[latent % len(CLASSES)]
        records.append(SampleRecord(sid, f"meme text {i}", f"img/{sid}.png", label))
        text_rows.append(rng.normal(size=text_dim))
        image_rows.append(rng.normal(size=image_dim))
    return SyntheticBundle(
        table=SampleTable(tuple(records)),
        face_encodings=EmbeddingMatrix(tuple(face_ids), np.array(face_rows)),
        text_embeddings=EmbeddingMatrix(tuple(ids), np.array(text_rows)),
        image_embeddings=EmbeddingMatrix(tuple(ids), np.array(image_rows)),
    )


def make_imbalanced_dataset(
    n: int = 600,
    seed: int = 0,
    dim: int = 4,
    separation: float = 1.6,
    skew: tuple[float, float, float] = (0.09, 0.31, 0.60),
) -> SyntheticBundle:
    """Class-skewed dataset (negative is the minority) with overlapping
    Gaussian class blobs carried in the text embeddings."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(3, dim))
    centers = separation * centers / np.linalg.norm(centers, axis=1, keepdims=True)
    counts = [int(round(n * f)) for f in skew]
    counts[-1] = n - sum(counts[:-1])
    records, text_rows, image_rows, ids = [], [], [], []
    i = 0
    for cls_idx, count in enumerate(counts):
        for _ in range(count):
            sid = f"i{i:04d}"
            ids.append(sid)
            records.append(
                SampleRecord(sid, f"text {i}", None, CLASSES[cls_idx])
            )
            text_rows.append(centers[cls_idx] + rng.normal(size=dim))
            image_rows.append(rng.normal(size=dim))
            i += 1
    order = rng.permutation(n)
    records = [records[j] for j in order]
    ids_o = [ids[j] for j in order]
    text_rows = [text_rows[j] for j in order]
    image_rows = [image_rows[j] for j in order]
    return SyntheticBundle(
        table=SampleTable(tuple(records)),
        face_encodings=None,
        text_embeddings=EmbeddingMatrix(tuple(ids_o), np.array(text_rows)),
        image_embeddings=EmbeddingMatrix(tuple(ids_o), np.array(image_rows)),
    )
