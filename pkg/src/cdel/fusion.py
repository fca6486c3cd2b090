"""One-hot cluster fusion into a trainable classifier head.

Text/image features arrive either as precomputed embedding files or from
desk-scale toy encoders (hash-embedded recurrent text cell, linear image
projection). Features are concatenated as text | image | cluster-one-hot
and fed to a dense head trained with logit-adjusted cross-entropy under
an adaptive-moment optimizer. Everything is float64 numpy with analytic
gradients, checked against finite differences in the test suite.
"""

from __future__ import annotations

import json
import os
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import ClusteringSummary, assign_unseen, build_clustering_summary
from .data import (
    CLASSES,
    CLASS_INDEX,
    ClassPriors,
    ClusterAssignment,
    EmbeddingMatrix,
    FaceEncodingSet,
    SampleTable,
)
from .errors import DataError, DimensionError, NumericError, ParameterError

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class FeatureLayout:
    """Segment widths of the fused vector, in fixed text|image|cluster order."""

    text_dim: int
    image_dim: int
    cluster_dim: int

    @property
    def total(self) -> int:
        return self.text_dim + self.image_dim + self.cluster_dim


@dataclass(frozen=True)
class FusedFeature:
    vector: np.ndarray
    layout: FeatureLayout


@dataclass(frozen=True)
class TextEncoderConfig:
    hash_width: int = 128
    emb_dim: int = 16
    state_dim: int = 64


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    learning_rate: float = 2e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    dropout_rate: float = 0.3
    epochs: int = 10
    seed: int = 0
    tau: float = 1.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ParameterError("learning_rate must be positive")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ParameterError(f"dropout_rate {self.dropout_rate} outside [0, 1)")
        if self.epochs < 0:
            raise ParameterError("epochs must be >= 0")


@dataclass(frozen=True)
class ModelSpec:
    """Which feature sources feed the fused vector."""

    text_mode: str = "embeddings"  # embeddings | toy | none
    image_mode: str = "embeddings"  # embeddings | projection | none
    use_cluster: bool = True
    activation: str = "softmax"  # softmax | sigmoid
    text_encoder: TextEncoderConfig = field(default_factory=TextEncoderConfig)
    image_proj_dim: int = 16

    def __post_init__(self):
        if self.text_mode not in ("embeddings", "toy", "none"):
            raise ParameterError(f"bad text_mode {self.text_mode!r}")
        if self.image_mode not in ("embeddings", "projection", "none"):
            raise ParameterError(f"bad image_mode {self.image_mode!r}")
        if self.activation not in ("softmax", "sigmoid"):
            raise ParameterError(f"bad activation {self.activation!r}")


@dataclass(frozen=True)
class ClassifierHead:
    w: np.ndarray  # (fused_dim, M)
    b: np.ndarray  # (M,)
    activation: str = "softmax"

    def __post_init__(self):
        if not (np.all(np.isfinite(self.w)) and np.all(np.isfinite(self.b))):
            raise NumericError("non-finite head parameters")
        m = self.b.shape[0]
        if self.activation == "softmax" and m < 2:
            raise ParameterError("softmax head needs M >= 2")


@dataclass(frozen=True)
class FusionModel:
    spec: ModelSpec
    layout: FeatureLayout
    head: ClassifierHead
    priors: ClassPriors
    tau: float
    summary: ClusteringSummary | None
    c_total: int
    text_params: dict | None = None
    image_params: dict | None = None
    train_loss: tuple[float, ...] = ()


# ---------------------------------------------------------------------------
# parameter initialization

def _glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_text_encoder(cfg: TextEncoderConfig, rng: np.random.Generator) -> dict:
    return {
        "emb": _glorot_uniform(rng, cfg.hash_width, cfg.emb_dim,
                               (cfg.hash_width, cfg.emb_dim)),
        "wx": _glorot_uniform(rng, cfg.emb_dim, cfg.state_dim,
                              (cfg.emb_dim, cfg.state_dim)),
        "wh": _glorot_uniform(rng, cfg.state_dim, cfg.state_dim,
                              (cfg.state_dim, cfg.state_dim)),
        "b": np.zeros(cfg.state_dim),
    }


def init_image_projection(rng: np.random.Generator, in_dim: int, out_dim: int) -> dict:
    return {
        "w": _glorot_uniform(rng, in_dim, out_dim, (in_dim, out_dim)),
        "b": np.zeros(out_dim),
    }


def init_head(rng: np.random.Generator, fused_dim: int, n_classes: int,
              activation: str = "softmax") -> ClassifierHead:
    return ClassifierHead(
        _glorot_uniform(rng, fused_dim, n_classes, (fused_dim, n_classes)),
        np.zeros(n_classes),
        activation,
    )


# ---------------------------------------------------------------------------
# toy text encoder (hash embedding + tanh recurrent cell)

def hash_tokens(text: str, hash_width: int) -> list[int]:
    return [zlib.crc32(tok.encode("utf-8")) % hash_width for tok in text.split()]


def text_encoder_forward(params: dict, token_idx) -> tuple[np.ndarray, dict]:
    state_dim = params["b"].shape[0]
    h = np.zeros(state_dim)
    states = [h]
    for idx in token_idx:
        pre = params["emb"][idx] @ params["wx"] + h @ params["wh"] + params["b"]
        h = np.tanh(pre)
        states.append(h)
    return h, {"token_idx": list(token_idx), "states": states}


def text_encoder_backward(params: dict, cache: dict, dh: np.ndarray) -> dict:
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    dh = dh.copy()
    token_idx = cache["token_idx"]
    states = cache["states"]
    for step in range(len(token_idx) - 1, -1, -1):
        h, h_prev = states[step + 1], states[step]
        dpre = dh * (1.0 - h * h)
        idx = token_idx[step]
        emb_row = params["emb"][idx]
        grads["wx"] += np.outer(emb_row, dpre)
        grads["wh"] += np.outer(h_prev, dpre)
        grads["b"] += dpre
        grads["emb"][idx] += params["wx"] @ dpre
        dh = params["wh"] @ dpre
    return grads


def encode_text_toy(text: str, params: dict, cfg: TextEncoderConfig) -> np.ndarray:
    """Final recurrent state over hash-embedded tokens; empty text -> zeros."""
    h, _ = text_encoder_forward(params, hash_tokens(text, cfg.hash_width))
    return h


# ---------------------------------------------------------------------------
# toy image encoder

def image_projection_forward(params: dict, x: np.ndarray):
    pre = x @ params["w"] + params["b"]
    y = np.tanh(pre)
    return y, {"x": x, "y": y}


def image_projection_backward(params: dict, cache: dict, dy: np.ndarray):
    dpre = dy * (1.0 - cache["y"] * cache["y"])
    grads = {
        "w": np.outer(cache["x"], dpre),
        "b": dpre,
    }
    dx = params["w"] @ dpre
    return grads, dx


def encode_image_toy(sample_id: str, emb: EmbeddingMatrix | None, *,
                     projection: dict | None = None,
                     fallback_zero: bool = True,
                     dim: int | None = None) -> np.ndarray:
    """Pass-through of a stored embedding, optionally projected; zero fallback."""
    stored = None
    if emb is not None:
        idx = emb.index().get(sample_id)
        if idx is not None:
            stored = emb.values[idx]
    if stored is None:
        if not fallback_zero:
            raise DataError(f"no image embedding for sample {sample_id!r}")
        width = dim if dim is not None else (emb.dim if emb is not None else 0)
        stored = np.zeros(width)
    if projection is None:
        return np.asarray(stored, dtype=np.float64)
    y, _ = image_projection_forward(projection, stored)
    return y


# ---------------------------------------------------------------------------
# fusion and head

def one_hot_encode(cluster_id: int, c_total: int) -> np.ndarray:
    if not (0 <= cluster_id < c_total):
        raise ParameterError(f"cluster id {cluster_id} outside [0, {c_total})")
    vec = np.zeros(c_total)
    vec[cluster_id] = 1.0
    return vec


def fuse_features(text_vec, image_vec, onehot,
                  layout: FeatureLayout | None = None) -> FusedFeature:
    text_vec = np.asarray(text_vec, dtype=np.float64)
    image_vec = np.asarray(image_vec, dtype=np.float64)
    onehot = np.asarray(onehot, dtype=np.float64)
    got = FeatureLayout(text_vec.shape[0], image_vec.shape[0], onehot.shape[0])
    if layout is not None and got != layout:
        raise DimensionError(f"segment dims {got} do not match layout {layout}")
    return FusedFeature(np.concatenate([text_vec, image_vec, onehot]), got)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def head_forward(fused, head: ClassifierHead) -> np.ndarray:
    """Probabilities from the dense head: softmax or elementwise sigmoid."""
    x = fused.vector if isinstance(fused, FusedFeature) else np.asarray(fused)
    if x.shape[-1] != head.w.shape[0]:
        raise DimensionError(
            f"fused dim {x.shape[-1]} does not match head input {head.w.shape[0]}"
        )
    z = x @ head.w + head.b
    if not np.all(np.isfinite(z)):
        raise NumericError("non-finite logits in head forward pass")
    if head.activation == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return _softmax(z)


def logit_adjusted_loss(logits, label_index: int, priors, tau: float):
    """Cross-entropy on logits shifted by tau * log(prior); returns (loss, dz)."""
    z = np.asarray(logits, dtype=np.float64)
    p = priors.as_array() if isinstance(priors, ClassPriors) else np.asarray(priors)
    if np.any(p <= 0):
        raise ParameterError("priors must be strictly positive")
    if z.shape[0] != p.shape[0]:
        raise DimensionError(f"{z.shape[0]} logits but {p.shape[0]} priors")
    adjusted = z + tau * np.log(p)
    shifted = adjusted - adjusted.max()
    logsum = np.log(np.exp(shifted).sum())
    loss = logsum - shifted[label_index]
    soft = np.exp(shifted - logsum)
    grad = soft.copy()
    grad[label_index] -= 1.0
    return float(loss), grad


# ---------------------------------------------------------------------------
# optimizer

class Adam:
    """Adaptive-moment gradient descent over a dict of parameter arrays."""

    def __init__(self, params: dict, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[k] / b1t
            v_hat = self.v[k] / b2t
            self.params[k] = self.params[k] - self.lr * m_hat / (
                np.sqrt(v_hat) + self.eps
            )


# ---------------------------------------------------------------------------
# feature assembly

def _resolve_layout(spec: ModelSpec, text_emb, image_emb, c_total: int) -> FeatureLayout:
    if spec.text_mode == "embeddings":
        if text_emb is None:
            raise DataError("text_mode=embeddings but no text embeddings supplied")
        text_dim = text_emb.dim
    elif spec.text_mode == "toy":
        text_dim = spec.text_encoder.state_dim
    else:
        text_dim = 0
    if spec.image_mode == "embeddings":
        if image_emb is None:
            raise DataError("image_mode=embeddings but no image embeddings supplied")
        image_dim = image_emb.dim
    elif spec.image_mode == "projection":
        if image_emb is None:
            raise DataError("image_mode=projection but no image embeddings supplied")
        image_dim = spec.image_proj_dim
    else:
        image_dim = 0
    cluster_dim = c_total if spec.use_cluster else 0
    layout = FeatureLayout(text_dim, image_dim, cluster_dim)
    if layout.total == 0:
        raise DataError("empty feature layout: every segment has width 0")
    return layout


def _static_segments(records, spec, layout, text_emb, image_emb, cluster_ids):
    """Per-sample text/image/cluster segments that do not depend on trainable
    encoder parameters (toy/projection segments are filled by the caller)."""
    n = len(records)
    text = np.zeros((n, layout.text_dim))
    image = np.zeros((n, layout.image_dim))
    cluster = np.zeros((n, layout.cluster_dim))
    text_idx = text_emb.index() if text_emb is not None else {}
    image_idx = image_emb.index() if image_emb is not None else {}
    for i, rec in enumerate(records):
        if spec.text_mode == "embeddings" and rec.id in text_idx:
            text[i] = text_emb.values[text_idx[rec.id]]
        if spec.image_mode == "embeddings" and rec.id in image_idx:
            image[i] = image_emb.values[image_idx[rec.id]]
        if spec.use_cluster:
            cluster[i] = one_hot_encode(cluster_ids[i], layout.cluster_dim)
    return text, image, cluster


def _raw_image_rows(records, image_emb):
    idx = image_emb.index()
    rows = np.zeros((len(records), image_emb.dim))
    for i, rec in enumerate(records):
        j = idx.get(rec.id)
        if j is not None:
            rows[i] = image_emb.values[j]
    return rows


# ---------------------------------------------------------------------------
# training

def train_model(table: SampleTable, assignment: ClusterAssignment | None,
                cfg: TrainConfig, spec: ModelSpec, *,
                text_emb: EmbeddingMatrix | None = None,
                image_emb: EmbeddingMatrix | None = None,
                face_enc: EmbeddingMatrix | None = None) -> FusionModel:
    """Mini-batch training of the fused head (and any toy encoders) with
    logit-adjusted cross-entropy; fully deterministic for a fixed seed."""
    records = table.records
    if not records:
        raise DataError("empty training set")
    for rec in records:
        if rec.label is None:
            raise DataError(f"unlabeled training sample {rec.id!r}")
    labels = np.array([CLASS_INDEX[rec.label] for rec in records], dtype=np.int64)
    priors = ClassPriors.from_labels([rec.label for rec in records])

    cluster_ids = None
    summary = None
    c_total = 0
    if spec.use_cluster:
        if assignment is None:
            raise DataError("use_cluster=True but no cluster assignment supplied")
        missing = [rec.id for rec in records if rec.id not in assignment.mapping]
        if missing:
            raise DataError(f"samples without a cluster id: {missing[:5]}")
        cluster_ids = [assignment.mapping[rec.id] for rec in records]
        c_total = assignment.c
        if face_enc is not None:
            summary = build_clustering_summary(assignment, face_enc)
        else:
            summary = ClusteringSummary(
                np.zeros((0, 1)), assignment.faceless_cluster_id
            )

    layout = _resolve_layout(spec, text_emb, image_emb, c_total)
    n = len(records)
    rng = np.random.default_rng(cfg.seed)

    params: dict[str, np.ndarray] = {}
    text_cfg = spec.text_encoder
    if spec.text_mode == "toy":
        for k, v in init_text_encoder(text_cfg, rng).items():
            params[f"text.{k}"] = v
    if spec.image_mode == "projection":
        for k, v in init_image_projection(rng, image_emb.dim, spec.image_proj_dim).items():
            params[f"image.{k}"] = v
    head0 = init_head(rng, layout.total, len(CLASSES), spec.activation)
    params["head.w"] = head0.w.copy()
    params["head.b"] = head0.b.copy()

    text_static, image_static, cluster_static = _static_segments(
        records, spec, layout, text_emb, image_emb, cluster_ids
    )
    token_cache = None
    image_rows = None
    if spec.text_mode == "toy":
        token_cache = [hash_tokens(rec.text, text_cfg.hash_width) for rec in records]
    if spec.image_mode == "projection":
        image_rows = _raw_image_rows(records, image_emb)

    trainable_encoders = spec.text_mode == "toy" or spec.image_mode == "projection"
    prior_arr = priors.as_array()
    opt = Adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    history: list[float] = []
    keep = 1.0 - cfg.dropout_rate

    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = perm[start:start + cfg.batch_size]
            bsz = len(batch)
            if cfg.dropout_rate > 0:
                mask = (rng.random((bsz, layout.total)) < keep) / keep
            else:
                mask = np.ones((bsz, layout.total))
            if not trainable_encoders:
                fused = np.concatenate(
                    [text_static[batch], image_static[batch], cluster_static[batch]],
                    axis=1,
                ) * mask
                z = fused @ params["head.w"] + params["head.b"]
                adjusted = z + cfg.tau * np.log(prior_arr)[None, :]
                shifted = adjusted - adjusted.max(axis=1, keepdims=True)
                logsum = np.log(np.exp(shifted).sum(axis=1))
                losses = logsum - shifted[np.arange(bsz), labels[batch]]
                epoch_loss += float(losses.sum())
                soft = np.exp(shifted - logsum[:, None])
                dz = soft
                dz[np.arange(bsz), labels[batch]] -= 1.0
                dz /= bsz
                grads = {
                    "head.w": fused.T @ dz,
                    "head.b": dz.sum(axis=0),
                }
            else:
                grads = {k: np.zeros_like(v) for k, v in params.items()}
                for row, i in enumerate(batch):
                    segs = []
                    caches = {}
                    if spec.text_mode == "toy":
                        tparams = {k: params[f"text.{k}"] for k in
                                   ("emb", "wx", "wh", "b")}
                        h, caches["text"] = text_encoder_forward(
                            tparams, token_cache[i]
                        )
                        segs.append(h)
                    else:
                        segs.append(text_static[i])
                    if spec.image_mode == "projection":
                        iparams = {k: params[f"image.{k}"] for k in ("w", "b")}
                        y, caches["image"] = image_projection_forward(
                            iparams, image_rows[i]
                        )
                        segs.append(y)
                    else:
                        segs.append(image_static[i])
                    segs.append(cluster_static[i])
                    fused = np.concatenate(segs) * mask[row]
                    z = fused @ params["head.w"] + params["head.b"]
                    loss, dz = logit_adjusted_loss(
                        z, int(labels[i]), prior_arr, cfg.tau
                    )
                    epoch_loss += loss
                    dz = dz / bsz
                    grads["head.w"] += np.outer(fused, dz)
                    grads["head.b"] += dz
                    dfused = (params["head.w"] @ dz) * mask[row]
                    dtext = dfused[: layout.text_dim]
                    dimage = dfused[layout.text_dim: layout.text_dim + layout.image_dim]
                    if spec.text_mode == "toy":
                        tg = text_encoder_backward(tparams, caches["text"], dtext)
                        for k, g in tg.items():
                            grads[f"text.{k}"] += g
                    if spec.image_mode == "projection":
                        ig, _ = image_projection_backward(
                            iparams, caches["image"], dimage
                        )
                        for k, g in ig.items():
                            grads[f"image.{k}"] += g
            opt.step(grads)
        history.append(epoch_loss / n)

    head = ClassifierHead(params["head.w"], params["head.b"], spec.activation)
    text_params = None
    if spec.text_mode == "toy":
        text_params = {k: params[f"text.{k}"] for k in ("emb", "wx", "wh", "b")}
    image_params = None
    if spec.image_mode == "projection":
        image_params = {k: params[f"image.{k}"] for k in ("w", "b")}
    return FusionModel(
        spec=spec,
        layout=layout,
        head=head,
        priors=priors,
        tau=cfg.tau,
        summary=summary,
        c_total=c_total,
        text_params=text_params,
        image_params=image_params,
        train_loss=tuple(history),
    )


# ---------------------------------------------------------------------------
# prediction

@dataclass(frozen=True)
class Prediction:
    id: str
    label: str
    probs: tuple[float, float, float]


def _feature_vector(model: FusionModel, rec, text_emb, image_emb, cluster_id,
                    text_idx, image_idx):
    spec, layout = model.spec, model.layout
    if spec.text_mode == "embeddings":
        tvec = np.zeros(layout.text_dim)
        j = text_idx.get(rec.id)
        if j is not None:
            tvec = text_emb.values[j]
    elif spec.text_mode == "toy":
        tvec = encode_text_toy(rec.text, model.text_params, spec.text_encoder)
    else:
        tvec = np.zeros(0)
    if spec.image_mode == "none":
        ivec = np.zeros(0)
    else:
        j = image_idx.get(rec.id)
        raw = image_emb.values[j] if j is not None else np.zeros(
            image_emb.dim if image_emb is not None else layout.image_dim
        )
        if spec.image_mode == "projection":
            ivec, _ = image_projection_forward(model.image_params, raw)
        else:
            ivec = raw
        if spec.image_mode == "embeddings" and ivec.shape[0] != layout.image_dim:
            raise DimensionError(
                f"image embedding width {ivec.shape[0]} != layout {layout.image_dim}"
            )
    if spec.use_cluster:
        ovec = one_hot_encode(cluster_id, layout.cluster_dim)
    else:
        ovec = np.zeros(0)
    return fuse_features(tvec, ivec, ovec, layout)


def predict(model: FusionModel, table: SampleTable, *,
            text_emb: EmbeddingMatrix | None = None,
            image_emb: EmbeddingMatrix | None = None,
            faces: FaceEncodingSet | None = None,
            assignment: ClusterAssignment | None = None) -> list[Prediction]:
    """Per-sample label + probability vector; dropout disabled.

    Cluster ids come from `assignment` when the sample is present there,
    otherwise from nearest-centroid assignment of the face encoding
    (faceless samples fall into the reserved faceless cluster).
    """
    out = []
    face_idx = faces.matrix.index() if faces is not None else {}
    text_idx = text_emb.index() if text_emb is not None else {}
    image_idx = image_emb.index() if image_emb is not None else {}
    for rec in table.records:
        cluster_id = 0
        if model.spec.use_cluster:
            if assignment is not None and rec.id in assignment.mapping:
                cluster_id = assignment.mapping[rec.id]
            else:
                enc = None
                if faces is not None and rec.id in face_idx:
                    enc = faces.matrix.values[face_idx[rec.id]]
                cluster_id = assign_unseen(enc, model.summary)
        fused = _feature_vector(model, rec, text_emb, image_emb, cluster_id,
                                text_idx, image_idx)
        probs = head_forward(fused, model.head)
        label = CLASSES[int(np.argmax(probs))]  # argmax ties -> class order
        out.append(Prediction(rec.id, label, tuple(float(p) for p in probs)))
    return out


# ---------------------------------------------------------------------------
# persistence

def _summary_to_dict(summary: ClusteringSummary | None):
    if summary is None:
        return None
    return {
        "centroids": summary.centroids.tolist(),
        "faceless_cluster_id": summary.faceless_cluster_id,
    }


def model_to_dict(model: FusionModel, config_hash: str = "") -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "config_hash": config_hash,
        "classes": list(CLASSES),
        "spec": {
            "text_mode": model.spec.text_mode,
            "image_mode": model.spec.image_mode,
            "use_cluster": model.spec.use_cluster,
            "activation": model.spec.activation,
            "text_encoder": {
                "hash_width": model.spec.text_encoder.hash_width,
                "emb_dim": model.spec.text_encoder.emb_dim,
                "state_dim": model.spec.text_encoder.state_dim,
            },
            "image_proj_dim": model.spec.image_proj_dim,
        },
        "layout": {
            "text_dim": model.layout.text_dim,
            "image_dim": model.layout.image_dim,
            "cluster_dim": model.layout.cluster_dim,
        },
        "priors": list(model.priors.values),
        "tau": model.tau,
        "c_total": model.c_total,
        "head": {
            "w": model.head.w.tolist(),
            "b": model.head.b.tolist(),
        },
        "text_params": None if model.text_params is None else {
            k: v.tolist() for k, v in model.text_params.items()
        },
        "image_params": None if model.image_params is None else {
            k: v.tolist() for k, v in model.image_params.items()
        },
        "clustering_summary": _summary_to_dict(model.summary),
    }


def model_from_dict(doc: dict) -> FusionModel:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(
            f"unsupported model format version {doc.get('format_version')}"
        )
    if tuple(doc["classes"]) != CLASSES:
        raise DataError(f"unexpected class order {doc['classes']}")
    s = doc["spec"]
    spec = ModelSpec(
        text_mode=s["text_mode"],
        image_mode=s["image_mode"],
        use_cluster=s["use_cluster"],
        activation=s["activation"],
        text_encoder=TextEncoderConfig(**s["text_encoder"]),
        image_proj_dim=s["image_proj_dim"],
    )
    layout = FeatureLayout(**doc["layout"])
    head = ClassifierHead(
        np.array(doc["head"]["w"], dtype=np.float64),
        np.array(doc["head"]["b"], dtype=np.float64),
        spec.activation,
    )
    summary = None
    if doc["clustering_summary"] is not None:
        cs = doc["clustering_summary"]
        centroids = np.array(cs["centroids"], dtype=np.float64)
        if centroids.ndim != 2:
            centroids = centroids.reshape(0, 1)
        summary = ClusteringSummary(centroids, cs["faceless_cluster_id"])
    text_params = None
    if doc["text_params"] is not None:
        text_params = {k: np.array(v, dtype=np.float64)
                       for k, v in doc["text_params"].items()}
    image_params = None
    if doc["image_params"] is not None:
        image_params = {k: np.array(v, dtype=np.float64)
                        for k, v in doc["image_params"].items()}
    return FusionModel(
        spec=spec,
        layout=layout,
        head=head,
        priors=ClassPriors(tuple(doc["priors"])),
        tau=doc["tau"],
        summary=summary,
        c_total=doc["c_total"],
        text_params=text_params,
        image_params=image_params,
    )


def save_model(model: FusionModel, path, config_hash: str = "") -> None:
    doc = model_to_dict(model, config_hash)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_model(path) -> FusionModel:
    if not os.path.exists(path):
        raise DataError(f"model file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
