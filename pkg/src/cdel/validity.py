"""Internal cluster validity indices, the comprehensive indicator, the
threshold sweep with elbow selection, and algorithm selection.

The comprehensive indicator combines min-max-normalized silhouette,
Calinski-Harabasz and Davies-Bouldin columns as SC_N + CHS_N - DBI_N;
normalization always runs over the candidate set under comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import DistanceMatrix, hierarchical_flat_clusters
from .data import ClusterAssignment, EmbeddingMatrix
from .errors import DataError, DegenerateInputError, SelectionError, UndefinedIndexError

ALGORITHM_ORDER = ("hierarchical", "kmeans", "spectral")

GRID_STEP = 0.1


@dataclass(frozen=True)
class ValidityScores:
    sc: float
    chs: float
    dbi: float
    c: int
    t: float | None = None


@dataclass(frozen=True)
class SweepResult:
    candidates: tuple[ValidityScores, ...]
    excluded: tuple[tuple[float, str], ...]
    t_min: float
    t_max: float


@dataclass(frozen=True)
class SelectionReport:
    t1: float
    t2: float
    t3: float
    ci: dict[float, float]  # chosen threshold -> CI value
    t_op: float
    c_op: int
    forced: bool = False

    def to_dict(self) -> dict:
        return {
            "t1": self.t1,
            "t2": self.t2,
            "t3": self.t3,
            "ci": {repr(t): v for t, v in sorted(self.ci.items())},
            "t_op": self.t_op,
            "c_op": self.c_op,
            "forced": self.forced,
        }


def _aligned_labels(ids, assign: ClusterAssignment) -> np.ndarray:
    if set(ids) != assign.ids:
        raise DataError("assignment ids do not match the index input ids")
    return np.array([assign.mapping[sid] for sid in ids], dtype=np.int64)


def _check_index_domain(c: int, n: int):
    if not (2 <= c <= n - 1):
        raise UndefinedIndexError(f"index undefined for c={c} with n={n}")


def silhouette_coefficient(dm: DistanceMatrix, assign: ClusterAssignment) -> float:
    """Mean silhouette s(i) = (b - a) / max(a, b); singletons score 0."""
    labels = _aligned_labels(dm.ids, assign)
    n = dm.n
    _check_index_domain(assign.c, n)
    d = dm.d
    total = 0.0
    sizes = np.bincount(labels, minlength=assign.c)
    # per-sample mean distance to every cluster, computed cluster-wise
    sums = np.zeros((n, assign.c))
    for k in range(assign.c):
        sums[:, k] = d[:, labels == k].sum(axis=1)
    for i in range(n):
        own = labels[i]
        if sizes[own] == 1:
            continue  # s(i) = 0 for singleton clusters
        a = sums[i, own] / (sizes[own] - 1)
        b = math.inf
        for k in range(assign.c):
            if k != own and sizes[k] > 0:
                b = min(b, sums[i, k] / sizes[k])
        denom = max(a, b)
        total += 0.0 if denom == 0 else (b - a) / denom
    return total / n


def calinski_harabasz_score(emb: EmbeddingMatrix, assign: ClusterAssignment) -> float:
    """Between/within variance ratio; +inf when clusters are perfectly tight."""
    labels = _aligned_labels(emb.ids, assign)
    n = len(emb)
    c = assign.c
    _check_index_domain(c, n)
    x = emb.values
    mu = x.mean(axis=0)
    between = 0.0
    within = 0.0
    for k in range(c):
        members = x[labels == k]
        mk = members.mean(axis=0)
        between += members.shape[0] * float(((mk - mu) ** 2).sum())
        within += float(((members - mk) ** 2).sum())
    if within == 0.0:
        return math.inf
    return (between / (c - 1)) / (within / (n - c))


def davies_bouldin_index(emb: EmbeddingMatrix, assign: ClusterAssignment) -> float:
    """Mean over clusters of the worst (S_i + S_j) / M_ij similarity ratio."""
    labels = _aligned_labels(emb.ids, assign)
    n = len(emb)
    c = assign.c
    _check_index_domain(c, n)
    x = emb.values
    centroids = np.stack([x[labels == k].mean(axis=0) for k in range(c)])
    scatter = np.array(
        [
            float(np.linalg.norm(x[labels == k] - centroids[k], axis=1).mean())
            for k in range(c)
        ]
    )
    total = 0.0
    for i in range(c):
        worst = 0.0
        for j in range(c):
            if j == i:
                continue
            m = float(np.linalg.norm(centroids[i] - centroids[j]))
            if m == 0.0:
                return math.inf  # coincident centroids
            worst = max(worst, (scatter[i] + scatter[j]) / m)
        total += worst
    return total / c


def minmax_normalize(values) -> list[float]:
    """(x - min) / (max - min); a constant column maps to all zeros."""
    vals = [float(v) for v in values]
    if not vals:
        raise DataError("cannot normalize an empty list")
    lo, hi = min(vals), max(vals)
    if hi == lo:
        return [0.0 for _ in vals]
    return [(v - lo) / (hi - lo) for v in vals]


def comprehensive_indicator(candidates) -> list[float]:
    """CI = SC_N + CHS_N - DBI_N, normalized across the candidate set."""
    candidates = list(candidates)
    if not candidates:
        raise DataError("need at least one candidate")
    sc_n = minmax_normalize([v.sc for v in candidates])
    chs_n = minmax_normalize([v.chs for v in candidates])
    dbi_n = minmax_normalize([v.dbi for v in candidates])
    return [s + h - d for s, h, d in zip(sc_n, chs_n, dbi_n)]


def elbow_select(curve, orientation: str) -> float:
    """Knee of a (t, value) curve: the point farthest from the endpoint chord.

    Values are sign-oriented so that better is up; a straight curve falls
    back to the better endpoint. Ties break toward smaller t.
    """
    if orientation not in ("maximize", "minimize"):
        raise DataError(f"bad orientation {orientation!r}")
    pts = sorted((float(t), float(v)) for t, v in curve)
    if len(pts) < 2:
        if len(pts) == 1:
            return pts[0][0]
        raise DataError("elbow selection needs at least 2 points")
    sign = 1.0 if orientation == "maximize" else -1.0
    ts = np.array([p[0] for p in pts])
    vs = sign * np.array([p[1] for p in pts])
    x0, y0 = ts[0], vs[0]
    x1, y1 = ts[-1], vs[-1]
    dx, dy = x1 - x0, y1 - y0
    norm = math.hypot(dx, dy)
    if norm == 0:
        return float(ts[0])
    dist = np.abs(dy * (ts - x0) - dx * (vs - y0)) / norm
    dist[0] = dist[-1] = 0.0
    best = int(np.argmax(dist))  # argmax ties -> smaller t (sorted order)
    if dist[best] > 1e-12:
        return float(ts[best])
    # straight line: better endpoint, smaller t on a flat curve
    if vs[-1] > vs[0]:
        return float(ts[-1])
    return float(ts[0])


def threshold_grid(t_min: float, t_max: float) -> list[float]:
    """Positive multiples of 0.1 inside [t_min, t_max], inclusive."""
    start = max(1, math.ceil(t_min / GRID_STEP - 1e-9))
    stop = math.floor(t_max / GRID_STEP + 1e-9)
    return [round(k * GRID_STEP, 10) for k in range(start, stop + 1)]


def sweep_thresholds(
    dm: DistanceMatrix, emb: EmbeddingMatrix, linkage: str
) -> SweepResult:
    """Score every grid threshold with all three indices."""
    n = dm.n
    if n < 3:
        raise DegenerateInputError(f"sweep needs at least 3 samples, got {n}")
    t_min, t_max = dm.offdiag_range()
    grid = threshold_grid(t_min, t_max)
    if not grid:
        raise DegenerateInputError(
            f"empty threshold grid for range [{t_min}, {t_max}]"
        )
    candidates: list[ValidityScores] = []
    excluded: list[tuple[float, str]] = []
    for t in grid:
        assign = hierarchical_flat_clusters(dm, linkage, t)
        c = assign.c
        if c < 2 or c > n - 1:
            excluded.append((t, f"degenerate cut: c={c} outside [2, {n - 1}]"))
            continue
        sc = silhouette_coefficient(dm, assign)
        chs = calinski_harabasz_score(emb, assign)
        dbi = davies_bouldin_index(emb, assign)
        if not all(map(math.isfinite, (sc, chs, dbi))):
            excluded.append((t, "non-finite validity index"))
            continue
        candidates.append(ValidityScores(sc, chs, dbi, c, t))
    return SweepResult(tuple(candidates), tuple(excluded), t_min, t_max)


def _select_from_picks(picks, t1, t2, t3) -> SelectionReport:
    ci_vals = comprehensive_indicator(picks)
    ci = {}
    for vs, v in zip(picks, ci_vals):
        ci[vs.t] = v
    best = max(ci.items(), key=lambda kv: (kv[1], -kv[0]))  # ties -> smaller t
    t_op = best[0]
    c_op = next(vs.c for vs in picks if vs.t == t_op)
    return SelectionReport(t1, t2, t3, ci, t_op, c_op)


def select_optimal_threshold(sweep) -> SelectionReport:
    """Pick per-indicator elbows, then the CI-maximal threshold among them.

    Accepts either a full SweepResult or the already-chosen candidate
    ValidityScores list (the final CI stage alone).
    """
    if isinstance(sweep, SweepResult):
        cands = list(sweep.candidates)
        if not cands:
            reasons = "; ".join(f"t={t}: {r}" for t, r in sweep.excluded)
            raise SelectionError(f"all sweep candidates excluded ({reasons})")
        t1 = elbow_select([(v.t, v.sc) for v in cands], "maximize")
        t2 = elbow_select([(v.t, v.chs) for v in cands], "maximize")
        t3 = elbow_select([(v.t, v.dbi) for v in cands], "minimize")
        by_t = {v.t: v for v in cands}
        picks = [by_t[t] for t in sorted({t1, t2, t3})]
    else:
        given = list(sweep)
        if not given:
            raise SelectionError("no candidates supplied")
        ts = [v.t for v in given]
        t1 = ts[0]
        t2 = ts[min(1, len(ts) - 1)]
        t3 = ts[min(2, len(ts) - 1)]
        picks = sorted({v.t: v for v in given}.values(), key=lambda v: v.t)
    return _select_from_picks(picks, t1, t2, t3)


def select_algorithm(runs) -> str:
    """CI-argmax over (algorithm name, ValidityScores) runs.

    Ties break by the fixed order hierarchical, kmeans, spectral.
    """
    runs = list(runs)
    if not runs:
        raise SelectionError("no algorithm runs supplied")
    ci = comprehensive_indicator([vs for _, vs in runs])

    def rank(name):
        return ALGORITHM_ORDER.index(name) if name in ALGORITHM_ORDER else len(
            ALGORITHM_ORDER
        )

    best_i = 0
    for i in range(1, len(runs)):
        if ci[i] > ci[best_i] or (
            ci[i] == ci[best_i] and rank(runs[i][0]) < rank(runs[best_i][0])
        ):
            best_i = i
    return runs[best_i][0]
