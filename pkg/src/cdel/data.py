"""Core domain types and the CSV file formats that bound the system.

All types are immutable after construction; loaders are pure functions of
file contents. Files are UTF-8 with LF line endings. Lines starting with
``#`` are treated as artifact headers and skipped on load.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionError, FormatError, SchemaError

CLASSES = ("negative", "neutral", "positive")
CLASS_INDEX = {name: i for i, name in enumerate(CLASSES)}

MANIFEST_COLUMNS = ("id", "text", "image_path", "label")

FLOAT_FMT = "%.9g"  # embedding files carry 9 significant digits


@dataclass(frozen=True)
class SampleRecord:
    id: str
    text: str
    image_ref: str | None
    label: str | None


@dataclass(frozen=True)
class SampleTable:
    """Ordered sample records loaded from a manifest."""

    records: tuple[SampleRecord, ...]
    _by_id: dict[str, SampleRecord] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id: dict[str, SampleRecord] = {}
        for rec in self.records:
            if not rec.id:
                raise SchemaError("empty sample id")
            if rec.id in by_id:
                raise SchemaError(f"duplicate sample id {rec.id!r}")
            if rec.label is not None and rec.label not in CLASSES:
                raise SchemaError(
                    f"sample {rec.id!r}: label {rec.label!r} not in {CLASSES}"
                )
            by_id[rec.id] = rec
        object.__setattr__(self, "_by_id", by_id)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, sample_id: str) -> SampleRecord:
        return self._by_id[sample_id]

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._by_id

    def labeled(self) -> "SampleTable":
        return SampleTable(tuple(r for r in self.records if r.label is not None))

    def subset(self, ids) -> "SampleTable":
        keep = set(ids)
        return SampleTable(tuple(r for r in self.records if r.id in keep))


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Per-sample fixed-width real vectors, rows aligned with `ids`."""

    ids: tuple[str, ...]
    values: np.ndarray  # (n, d) float64

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise DimensionError(f"embedding matrix must be 2-D, got {vals.ndim}-D")
        if len(self.ids) != vals.shape[0]:
            raise DimensionError(
                f"{len(self.ids)} ids but {vals.shape[0]} embedding rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise FormatError("duplicate ids in embedding matrix")
        if vals.shape[1] < 1:
            raise DimensionError("embedding width must be >= 1")
        if not np.all(np.isfinite(vals)):
            raise FormatError("non-finite value in embedding matrix")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return len(self.ids)

    def row(self, sample_id: str) -> np.ndarray:
        try:
            return self.values[self.ids.index(sample_id)]
        except ValueError:
            raise DataError(f"id {sample_id!r} not in embedding matrix") from None

    def index(self) -> dict[str, int]:
        return {sid: i for i, sid in enumerate(self.ids)}


@dataclass(frozen=True)
class FaceEncodingSet:
    """Face encodings for face-bearing samples plus the faceless id set."""

    matrix: EmbeddingMatrix
    faceless_ids: frozenset[str]

    def __post_init__(self):
        overlap = self.faceless_ids & set(self.matrix.ids)
        if overlap:
            raise DataError(f"ids both faceless and face-bearing: {sorted(overlap)}")

    @property
    def all_ids(self) -> frozenset[str]:
        return frozenset(self.matrix.ids) | self.faceless_ids


@dataclass(frozen=True)
class ClusterAssignment:
    """Sample -> cluster map with contiguous cluster ids in [0, c)."""

    mapping: dict[str, int]
    c: int
    faceless_cluster_id: int | None = None

    def __post_init__(self):
        if self.c < 1:
            raise DataError("cluster count must be >= 1")
        distinct = set(self.mapping.values())
        if distinct != set(range(self.c)):
            raise DataError(
                f"cluster ids not contiguous in [0, {self.c}): {sorted(distinct)}"
            )
        if self.faceless_cluster_id is not None and not (
            0 <= self.faceless_cluster_id < self.c
        ):
            raise DataError("faceless_cluster_id outside [0, c)")

    @property
    def ids(self) -> frozenset[str]:
        return frozenset(self.mapping)

    def __getitem__(self, sample_id: str) -> int:
        return self.mapping[sample_id]

    def cluster_members(self) -> list[list[str]]:
        members: list[list[str]] = [[] for _ in range(self.c)]
        for sid, cid in self.mapping.items():
            members[cid].append(sid)
        return members


@dataclass(frozen=True)
class ClassPriors:
    """Per-class prior probabilities in CLASSES order."""

    values: tuple[float, float, float]

    def __post_init__(self):
        for v in self.values:
            if not (0.0 < v <= 1.0):
                raise DataError(f"prior {v} outside (0, 1]")
        if abs(sum(self.values) - 1.0) > 1e-9:
            raise DataError(f"priors sum to {sum(self.values)}, expected 1")

    @classmethod
    def from_counts(cls, counts) -> "ClassPriors":
        total = sum(counts)
        if total == 0 or any(c == 0 for c in counts):
            raise DataError(f"every class needs at least one sample, got {counts}")
        return cls(tuple(c / total for c in counts))

    @classmethod
    def from_labels(cls, labels) -> "ClassPriors":
        counts = [0, 0, 0]
        for lab in labels:
            counts[CLASS_INDEX[lab]] += 1
        return cls.from_counts(counts)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)


def _open_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def load_manifest(path) -> SampleTable:
    """Load a `id,text,image_path,label` manifest CSV."""
    if not os.path.exists(path):
        raise DataError(f"manifest not found: {path}")
    rows = _open_rows(path)
    if not rows:
        raise SchemaError(f"{path}: empty manifest")
    header = tuple(rows[0])
    if header != MANIFEST_COLUMNS:
        raise SchemaError(
            f"{path}: header {header} does not match {MANIFEST_COLUMNS}"
        )
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(MANIFEST_COLUMNS):
            raise SchemaError(f"{path} row {lineno}: expected 4 cells, got {len(row)}")
        sid, text, image_path, label = row
        if label == "":
            label_val = None
        elif label in CLASSES:
            label_val = label
        else:
            raise SchemaError(f"{path} row {lineno}: label {label!r} not in {CLASSES}")
        records.append(
            SampleRecord(sid, text, image_path or None, label_val)
        )
    try:
        return SampleTable(tuple(records))
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def write_manifest(table: SampleTable, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_COLUMNS)
    for rec in table.records:
        w.writerow([rec.id, rec.text, rec.image_ref or "", rec.label or ""])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def load_embeddings(path, expected_dim: int | None = None) -> EmbeddingMatrix:
    """Load an `id,v0,...,v{d-1}` embedding CSV (no header row)."""
    if not os.path.exists(path):
        raise DataError(f"embedding file not found: {path}")
    rows = _open_rows(path)
    ids: list[str] = []
    vectors: list[list[float]] = []
    width = None
    for lineno, row in enumerate(rows, start=1):
        if not row:
            continue
        if len(row) < 2:
            raise FormatError(f"{path} row {lineno}: need id plus >= 1 value")
        sid = row[0]
        try:
            vec = [float(x) for x in row[1:]]
        except ValueError as exc:
            raise FormatError(f"{path} row {lineno}: {exc}") from None
        if any(not math.isfinite(v) for v in vec):
            raise FormatError(f"{path} row {lineno}: non-finite value")
        if width is None:
            width = len(vec)
        elif len(vec) != width:
            raise FormatError(
                f"{path} row {lineno}: ragged row (width {len(vec)}, expected {width})"
            )
        if sid in set(ids):
            raise FormatError(f"{path} row {lineno}: duplicate id {sid!r}")
        ids.append(sid)
        vectors.append(vec)
    if not ids:
        raise FormatError(f"{path}: no embedding rows")
    if expected_dim is not None and width != expected_dim:
        raise FormatError(f"{path}: width {width}, expected {expected_dim}")
    return EmbeddingMatrix(tuple(ids), np.array(vectors, dtype=np.float64))


def write_embeddings(emb: EmbeddingMatrix, path, header_lines=()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for sid, row in zip(emb.ids, emb.values):
            fh.write(sid + "," + ",".join(FLOAT_FMT % v for v in row) + "\n")


def build_face_encoding_set(table: SampleTable, enc: EmbeddingMatrix) -> FaceEncodingSet:
    """Derive faceless ids as manifest ids absent from the encoding file."""
    table_ids = set(table.ids)
    extra = set(enc.ids) - table_ids
    if extra:
        raise DataError(f"face encodings for unknown ids: {sorted(extra)}")
    return FaceEncodingSet(enc, frozenset(table_ids - set(enc.ids)))


def load_assignment(path) -> ClusterAssignment:
    """Load an `id,cluster_id` assignment CSV."""
    if not os.path.exists(path):
        raise DataError(f"assignment file not found: {path}")
    rows = _open_rows(path)
    if not rows or tuple(rows[0][:2]) != ("id", "cluster_id"):
        raise FormatError(f"{path}: missing id,cluster_id header")
    faceless = None
    mapping: dict[str, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) < 2:
            raise FormatError(f"{path} row {lineno}: expected id,cluster_id")
        sid, cid = row[0], row[1]
        if sid in mapping:
            raise FormatError(f"{path} row {lineno}: duplicate id {sid!r}")
        try:
            mapping[sid] = int(cid)
        except ValueError:
            raise FormatError(f"{path} row {lineno}: bad cluster id {cid!r}") from None
        if len(row) > 2 and row[2] != "":
            faceless = int(row[2])
    if not mapping:
        raise FormatError(f"{path}: no assignment rows")
    c = max(mapping.values()) + 1
    return ClusterAssignment(mapping, c, faceless)


def assignment_csv_content(assign: ClusterAssignment) -> str:
    # faceless_cluster_id travels in a third column on the first data row only
    lines = ["id,cluster_id,faceless_cluster_id"]
    first = True
    for sid in sorted(assign.mapping):
        extra = ""
        if first:
            if assign.faceless_cluster_id is not None:
                extra = str(assign.faceless_cluster_id)
            first = False
        lines.append(f"{sid},{assign.mapping[sid]},{extra}")
    return "\n".join(lines) + "\n"


def write_assignment(assign: ClusterAssignment, path, header_lines=()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(assignment_csv_content(assign))
