"""Clustering over face encodings: hierarchical flat cuts, k-means,
spectral clustering, the faceless-cluster rule, and inference-time
assignment of unseen samples.

All operations are pure and deterministic for fixed inputs and seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage as scipy_linkage
from scipy.spatial.distance import squareform

from .data import ClusterAssignment, EmbeddingMatrix, FaceEncodingSet
from .errors import (
    DataError,
    DegenerateInputError,
    DimensionError,
    NumericError,
    ParameterError,
)

LINKAGES = ("single", "complete", "average")

KMEANS_MAX_ITER = 300


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise distance matrix aligned with `ids`."""

    ids: tuple[str, ...]
    d: np.ndarray  # (n, n) float64

    def __post_init__(self):
        m = np.asarray(self.d, dtype=np.float64)
        n = len(self.ids)
        if m.shape != (n, n):
            raise DimensionError(f"distance matrix shape {m.shape}, expected ({n},{n})")
        if not np.all(np.isfinite(m)):
            raise DataError("non-finite distance")
        if np.any(m < 0):
            raise DataError("negative distance")
        if np.max(np.abs(np.diagonal(m))) > 0:
            raise DataError("nonzero diagonal in distance matrix")
        if np.max(np.abs(m - m.T)) > 1e-12:
            raise DataError("distance matrix not symmetric within 1e-12")
        m = (m + m.T) / 2.0
        m.setflags(write=False)
        object.__setattr__(self, "d", m)

    @property
    def n(self) -> int:
        return len(self.ids)

    def offdiag_range(self) -> tuple[float, float]:
        mask = ~np.eye(self.n, dtype=bool)
        off = self.d[mask]
        return float(off.min()), float(off.max())


@dataclass(frozen=True)
class LinkageTree:
    """Agglomerative merge sequence in scipy layout:
    rows of (left, right, merge height, merged size)."""

    ids: tuple[str, ...]
    merges: np.ndarray  # (n-1, 4)


@dataclass(frozen=True)
class ClusteringSummary:
    """What inference needs from a fitted clustering: per-cluster centroids
    of training face encodings plus the faceless cluster id, if any.

    Centroid row j belongs to cluster j; the faceless cluster has no row.
    """

    centroids: np.ndarray  # (c_face, d)
    faceless_cluster_id: int | None

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def pairwise_distances(enc: FaceEncodingSet, metric: str = "euclidean") -> DistanceMatrix:
    """Euclidean pairwise distances between the face-bearing encodings."""
    if metric != "euclidean":
        raise ParameterError(f"unsupported metric {metric!r}")
    if len(enc.matrix) < 2:
        raise DegenerateInputError(
            f"need at least 2 face-bearing samples, got {len(enc.matrix)}"
        )
    x = enc.matrix.values
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    d = (d + d.T) / 2.0
    return DistanceMatrix(enc.matrix.ids, d)


def build_linkage_tree(dm: DistanceMatrix, linkage: str) -> LinkageTree:
    if linkage not in LINKAGES:
        raise ParameterError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    z = scipy_linkage(squareform(dm.d, checks=False), method=linkage)
    return LinkageTree(dm.ids, z)


def _relabel_first_appearance(ids, raw_labels) -> ClusterAssignment:
    remap: dict[int, int] = {}
    mapping: dict[str, int] = {}
    for sid, lab in zip(ids, raw_labels):
        lab = int(lab)
        if lab not in remap:
            remap[lab] = len(remap)
        mapping[sid] = remap[lab]
    return ClusterAssignment(mapping, len(remap)), remap


def hierarchical_flat_clusters(
    dm: DistanceMatrix, linkage: str, t: float
) -> ClusterAssignment:
    """Cut the agglomerative tree so every intra-cluster merge height <= t."""
    if t <= 0:
        raise ParameterError(f"threshold must be positive, got {t}")
    tree = build_linkage_tree(dm, linkage)
    raw = fcluster(tree.merges, t=t, criterion="distance")
    assign, _ = _relabel_first_appearance(dm.ids, raw)
    return assign


def _farthest_point_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    mind = np.linalg.norm(x - x[chosen[0]], axis=1)
    while len(chosen) < k:
        d = mind.copy()
        d[chosen] = -1.0  # never re-pick a seed point
        nxt = int(np.argmax(d))
        chosen.append(nxt)
        mind = np.minimum(mind, np.linalg.norm(x - x[nxt], axis=1))
    return x[chosen].astype(np.float64).copy()


def _lloyd(x: np.ndarray, k: int, seed: int):
    rng = np.random.default_rng(seed)
    centroids = _farthest_point_init(x, k, rng)
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    for _ in range(KMEANS_MAX_ITER):
        for j in range(k):
            mask = labels == j
            if mask.any():
                centroids[j] = x[mask].mean(axis=0)
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)  # argmin ties break toward lower id
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centroids


def kmeans_cluster(emb: EmbeddingMatrix, k: int, seed: int) -> ClusterAssignment:
    """Lloyd iterations with farthest-point seeding from a fixed seed."""
    n = len(emb)
    if not (1 <= k <= n):
        raise ParameterError(f"k={k} outside [1, n={n}]")
    labels, _ = _lloyd(emb.values, k, seed)
    assign, _ = _relabel_first_appearance(emb.ids, labels)
    return assign


def spectral_cluster(
    emb: EmbeddingMatrix, k: int, gamma: float, seed: int
) -> ClusterAssignment:
    """RBF affinity -> symmetric normalized Laplacian -> row-normalized
    bottom-k eigenvectors -> k-means."""
    n = len(emb)
    if not (2 <= k <= n):
        raise ParameterError(f"k={k} outside [2, n={n}]")
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    x = emb.values
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    w = np.exp(-gamma * d2)
    np.fill_diagonal(w, 0.0)
    deg = w.sum(axis=1)
    if np.any(deg <= 0):
        raise NumericError("isolated node in affinity graph (all weights zero)")
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(n) - inv_sqrt[:, None] * w * inv_sqrt[None, :]
    lap = (lap + lap.T) / 2.0
    try:
        _, vecs = np.linalg.eigh(lap)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    u = vecs[:, :k]
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    u = u / norms
    labels, _ = _lloyd(u, k, seed)
    assign, _ = _relabel_first_appearance(emb.ids, labels)
    return assign


def attach_faceless_cluster(
    assign: ClusterAssignment, faceless_ids
) -> ClusterAssignment:
    """Map all faceless ids to one new cluster with id = old c."""
    faceless_ids = frozenset(faceless_ids)
    if not faceless_ids:
        return assign
    overlap = faceless_ids & assign.ids
    if overlap:
        raise DataError(f"faceless ids already clustered: {sorted(overlap)}")
    mapping = dict(assign.mapping)
    for sid in faceless_ids:
        mapping[sid] = assign.c
    return ClusterAssignment(mapping, assign.c + 1, faceless_cluster_id=assign.c)


def empty_assignment_for_faceless(faceless_ids) -> ClusterAssignment:
    """Degenerate dataset with no face-bearing samples: one faceless cluster."""
    faceless_ids = frozenset(faceless_ids)
    if not faceless_ids:
        raise DegenerateInputError("no samples at all")
    return ClusterAssignment(
        {sid: 0 for sid in faceless_ids}, 1, faceless_cluster_id=0
    )


def build_clustering_summary(
    assign: ClusterAssignment, enc: EmbeddingMatrix
) -> ClusteringSummary:
    """Per-cluster centroids of the training face encodings."""
    idx = enc.index()
    c_face = assign.c - (1 if assign.faceless_cluster_id is not None else 0)
    if c_face == 0:
        centroids = np.zeros((0, enc.dim))
        return ClusteringSummary(centroids, assign.faceless_cluster_id)
    sums = np.zeros((c_face, enc.dim))
    counts = np.zeros(c_face, dtype=np.int64)
    for sid, cid in assign.mapping.items():
        if cid == assign.faceless_cluster_id:
            continue
        if sid not in idx:
            raise DataError(f"clustered id {sid!r} has no face encoding")
        sums[cid] += enc.values[idx[sid]]
        counts[cid] += 1
    if np.any(counts == 0):
        raise DataError("face cluster with no encoded members")
    return ClusteringSummary(sums / counts[:, None], assign.faceless_cluster_id)


def assign_unseen(encoding, summary: ClusteringSummary) -> int:
    """Cluster id for a test-time sample: faceless rule or nearest centroid."""
    if encoding is None:
        if summary.faceless_cluster_id is None:
            raise DataError("faceless sample but the model has no faceless cluster")
        return summary.faceless_cluster_id
    vec = np.asarray(encoding, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != summary.dim:
        raise DimensionError(
            f"encoding width {vec.shape}, expected ({summary.dim},)"
        )
    if summary.centroids.shape[0] == 0:
        raise DataError("model has no face clusters to assign to")
    d2 = ((summary.centroids - vec[None, :]) ** 2).sum(axis=1)
    return int(np.argmin(d2))  # ties break toward lower cluster id
