"""Classification metrics, stratified splitting, and k-fold cross-validation.

Confusion matrices use rows = actual class, columns = predicted class, in
the fixed negative/neutral/positive order. Any 0/0 metric is defined as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import CLASSES, CLASS_INDEX, SampleTable
from .errors import DataError, ParameterError


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (3, 3) int64, [actual][predicted]

    def __post_init__(self):
        m = np.asarray(self.counts, dtype=np.int64)
        if m.shape != (3, 3):
            raise DataError(f"confusion matrix shape {m.shape}, expected (3, 3)")
        if np.any(m < 0):
            raise DataError("negative count in confusion matrix")
        m.setflags(write=False)
        object.__setattr__(self, "counts", m)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    precision: tuple[float, float, float]
    recall: tuple[float, float, float]
    f1: tuple[float, float, float]
    macro_f1: float
    accuracy: float
    matrix: ConfusionMatrix

    def to_dict(self) -> dict:
        return {
            "classes": list(CLASSES),
            "confusion_matrix": self.matrix.counts.tolist(),
            "precision": list(self.precision),
            "recall": list(self.recall),
            "f1": list(self.f1),
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "n_samples": self.matrix.total,
        }

    def to_csv_row(self) -> str:
        cells = [f"{self.macro_f1:.6f}", f"{self.accuracy:.6f}"]
        for vals in (self.precision, self.recall, self.f1):
            cells.extend(f"{v:.6f}" for v in vals)
        cells.append(str(self.matrix.total))
        return ",".join(cells)

    @staticmethod
    def csv_header() -> str:
        cols = ["macro_f1", "accuracy"]
        for metric in ("precision", "recall", "f1"):
            cols.extend(f"{metric}_{c}" for c in CLASSES)
        cols.append("n_samples")
        return ",".join(cols)


def confusion_matrix(pred, gold) -> ConfusionMatrix:
    pred, gold = list(pred), list(gold)
    if len(pred) != len(gold):
        raise DataError(f"{len(pred)} predictions but {len(gold)} gold labels")
    m = np.zeros((3, 3), dtype=np.int64)
    for p, g in zip(pred, gold):
        if p not in CLASS_INDEX or g not in CLASS_INDEX:
            raise DataError(f"label outside {CLASSES}: pred={p!r} gold={g!r}")
        m[CLASS_INDEX[g], CLASS_INDEX[p]] += 1
    return ConfusionMatrix(m)


def _safe_div(num: float, den: float) -> float:
    return 0.0 if den == 0 else num / den


def class_prf(cm: ConfusionMatrix, cls: str) -> tuple[float, float, float]:
    """Precision, recall and F1 = 2TP / (2TP + FP + FN) for one class."""
    i = CLASS_INDEX[cls]
    tp = float(cm.counts[i, i])
    fp = float(cm.counts[:, i].sum()) - tp
    fn = float(cm.counts[i, :].sum()) - tp
    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, tp + fn)
    f1 = _safe_div(2.0 * tp, 2.0 * tp + fp + fn)
    return precision, recall, f1


def macro_f1(cm: ConfusionMatrix) -> float:
    return math.fsum(class_prf(cm, c)[2] for c in CLASSES) / len(CLASSES)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise DataError("accuracy undefined on an empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


def metrics_report(pred, gold) -> MetricsReport:
    cm = confusion_matrix(pred, gold)
    prf = [class_prf(cm, c) for c in CLASSES]
    return MetricsReport(
        precision=tuple(p for p, _, _ in prf),
        recall=tuple(r for _, r, _ in prf),
        f1=tuple(f for _, _, f in prf),
        macro_f1=macro_f1(cm),
        accuracy=accuracy(cm),
        matrix=cm,
    )


def stratified_split(data: SampleTable, fraction: float, seed: int):
    """Per class, round-half-up(fraction * count) samples go to part B via a
    seeded shuffle; both parts keep the original record order."""
    if not (0.0 <= fraction <= 1.0):
        raise ParameterError(f"fraction {fraction} outside [0, 1]")
    for rec in data.records:
        if rec.label is None:
            raise DataError(f"unlabeled sample {rec.id!r} in stratified split")
    rng = np.random.default_rng(seed)
    b_ids: set[str] = set()
    for cls in CLASSES:
        members = [rec.id for rec in data.records if rec.label == cls]
        take = math.floor(fraction * len(members) + 0.5)  # round half up
        order = rng.permutation(len(members))
        b_ids.update(members[i] for i in order[:take])
    part_a = SampleTable(tuple(r for r in data.records if r.id not in b_ids))
    part_b = SampleTable(tuple(r for r in data.records if r.id in b_ids))
    return part_a, part_b


def stratified_folds(data: SampleTable, k: int, seed: int) -> list[SampleTable]:
    """Stratified k-way partition; per-class fold sizes differ by at most 1."""
    if k < 2:
        raise ParameterError(f"k must be >= 2, got {k}")
    for rec in data.records:
        if rec.label is None:
            raise DataError(f"unlabeled sample {rec.id!r} in k-fold split")
    class_counts = {
        cls: sum(1 for r in data.records if r.label == cls) for cls in CLASSES
    }
    present = {c: n for c, n in class_counts.items() if n > 0}
    if min(present.values()) < k:
        raise ParameterError(
            f"k={k} exceeds the smallest class count {min(present.values())}"
        )
    rng = np.random.default_rng(seed)
    fold_ids: list[set[str]] = [set() for _ in range(k)]
    for cls in CLASSES:
        members = [rec.id for rec in data.records if rec.label == cls]
        order = rng.permutation(len(members))
        for pos, i in enumerate(order):
            fold_ids[pos % k].add(members[i])
    return [
        SampleTable(tuple(r for r in data.records if r.id in ids))
        for ids in fold_ids
    ]


def kfold_crossval(data: SampleTable, k: int, seed: int, evaluate_fold):
    """Run `evaluate_fold(train_table, test_table, fold_index) -> MacroF1` on
    every stratified fold; returns (per-fold scores, arithmetic mean)."""
    folds = stratified_folds(data, k, seed)
    scores = []
    for i, held_out in enumerate(folds):
        train_ids = [r.id for j, f in enumerate(folds) if j != i for r in f.records]
        train_table = data.subset(train_ids)
        scores.append(float(evaluate_fold(train_table, held_out, i)))
    return scores, math.fsum(scores) / len(scores)
