"""Run-config handling and the command implementations behind the CLI.

Every command writes its artifacts atomically (temp file + rename) and
embeds the config hash and a format version in each file, so reruns with
identical inputs and seeds are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass

import numpy as np

from . import clustering as cl
from . import validity as vl
from .data import (
    CLASSES,
    ClusterAssignment,
    EmbeddingMatrix,
    FaceEncodingSet,
    SampleTable,
    build_face_encoding_set,
    load_assignment,
    load_embeddings,
    load_manifest,
    assignment_csv_content,
)
from .errors import ConfigError, DataError
from .evaluation import kfold_crossval, metrics_report, MetricsReport
from .fusion import (
    FusionModel,
    ModelSpec,
    TextEncoderConfig,
    TrainConfig,
    load_model,
    model_to_dict,
    predict,
    train_model,
)

ARTIFACT_FORMAT_VERSION = 1

_CLUSTER_DEFAULTS = {
    "algorithm": "hierarchical",
    "linkage": "single",
    "metric": "euclidean",
    "t": None,
    "k": None,
    "gamma": 1.0,
}

_TRAIN_DEFAULTS = {
    "batch_size": 128,
    "learning_rate": 2e-5,
    "beta1": 0.9,
    "beta2": 0.999,
    "epsilon": 1e-8,
    "dropout_rate": 0.3,
    "epochs": 10,
    "tau": 1.0,
    "text_mode": "embeddings",
    "image_mode": "embeddings",
    "use_cluster": True,
    "activation": "softmax",
    "text_encoder": {"hash_width": 128, "emb_dim": 16, "state_dim": 64},
    "image_proj_dim": 16,
}

_EVAL_DEFAULTS = {"split_fraction": 0.25, "folds": 5}

_TOP_KEYS = {
    "manifest", "face_encodings", "text_embeddings", "image_embeddings",
    "assignment", "model", "predictions", "output_dir", "seed",
    "clustering", "train", "evaluation", "force_t",
}


@dataclass(frozen=True)
class RunConfig:
    raw: dict  # fully resolved (defaults + overrides applied)
    base_dir: str

    def path(self, key: str, required: bool = False) -> str | None:
        val = self.raw.get(key)
        if val is None:
            if required:
                raise ConfigError(f"config key {key!r} is required for this command")
            return None
        return val if os.path.isabs(val) else os.path.join(self.base_dir, val)

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def out_dir(self) -> str:
        d = self.path("output_dir", required=True)
        os.makedirs(d, exist_ok=True)
        return d

    @property
    def hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    def clustering(self) -> dict:
        return self.raw["clustering"]

    def train_config(self) -> TrainConfig:
        t = self.raw["train"]
        return TrainConfig(
            batch_size=t["batch_size"],
            learning_rate=t["learning_rate"],
            beta1=t["beta1"],
            beta2=t["beta2"],
            epsilon=t["epsilon"],
            dropout_rate=t["dropout_rate"],
            epochs=t["epochs"],
            seed=self.seed,
            tau=t["tau"],
        )

    def model_spec(self) -> ModelSpec:
        t = self.raw["train"]
        return ModelSpec(
            text_mode=t["text_mode"],
            image_mode=t["image_mode"],
            use_cluster=t["use_cluster"],
            activation=t["activation"],
            text_encoder=TextEncoderConfig(**t["text_encoder"]),
            image_proj_dim=t["image_proj_dim"],
        )


def _merged(defaults: dict, given: dict, where: str) -> dict:
    extra = set(given) - set(defaults)
    if extra:
        raise ConfigError(f"unknown {where} config keys: {sorted(extra)}")
    out = dict(defaults)
    for k, v in given.items():
        if isinstance(defaults.get(k), dict) and isinstance(v, dict):
            out[k] = _merged(defaults[k], v, f"{where}.{k}")
        else:
            out[k] = v
    return out


def load_run_config(path, *, seed=None, out=None, force_t=None) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise ConfigError(f"{path}: unknown config keys {sorted(extra)}")
    if "manifest" not in doc:
        raise ConfigError(f"{path}: config key 'manifest' is required")
    raw = {k: doc.get(k) for k in (
        "manifest", "face_encodings", "text_embeddings", "image_embeddings",
        "assignment", "model", "predictions",
    )}
    raw["output_dir"] = doc.get("output_dir", "out")
    raw["seed"] = int(doc.get("seed", 0))
    raw["force_t"] = doc.get("force_t")
    raw["clustering"] = _merged(_CLUSTER_DEFAULTS, doc.get("clustering", {}),
                                "clustering")
    raw["train"] = _merged(_TRAIN_DEFAULTS, doc.get("train", {}), "train")
    raw["evaluation"] = _merged(_EVAL_DEFAULTS, doc.get("evaluation", {}),
                                "evaluation")
    if seed is not None:
        raw["seed"] = int(seed)
    if out is not None:
        raw["output_dir"] = out
    if force_t is not None:
        raw["force_t"] = float(force_t)
    return RunConfig(raw, os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# artifact writing

def _write_atomic(path: str, content: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(content)
    os.replace(tmp, path)


def _csv_header_line(cfg: RunConfig) -> str:
    return f"# cdel format_version={ARTIFACT_FORMAT_VERSION} config_hash={cfg.hash}\n"


def _write_json_artifact(cfg: RunConfig, path: str, payload: dict) -> None:
    doc = {
        "format_version": ARTIFACT_FORMAT_VERSION,
        "config_hash": cfg.hash,
        **payload,
    }
    _write_atomic(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# input loading

def _load_inputs(cfg: RunConfig, *, need_faces=False):
    table = load_manifest(cfg.path("manifest", required=True))
    faces = None
    path = cfg.path("face_encodings", required=need_faces)
    if path is not None:
        faces = build_face_encoding_set(table, load_embeddings(path))
    text_emb = None
    if cfg.path("text_embeddings") is not None:
        text_emb = load_embeddings(cfg.path("text_embeddings"))
    image_emb = None
    if cfg.path("image_embeddings") is not None:
        image_emb = load_embeddings(cfg.path("image_embeddings"))
    return table, faces, text_emb, image_emb


def _subset_faces(faces: FaceEncodingSet, ids) -> FaceEncodingSet:
    keep = set(ids)
    rows = [i for i, sid in enumerate(faces.matrix.ids) if sid in keep]
    matrix = EmbeddingMatrix(
        tuple(faces.matrix.ids[i] for i in rows), faces.matrix.values[rows]
    )
    return FaceEncodingSet(matrix, frozenset(faces.faceless_ids & keep))


# ---------------------------------------------------------------------------
# commands

def run_sweep(cfg: RunConfig) -> dict:
    _, faces, _, _ = _load_inputs(cfg, need_faces=True)
    dm = cl.pairwise_distances(faces)
    linkage = cfg.clustering()["linkage"]
    sweep = vl.sweep_thresholds(dm, faces.matrix, linkage)
    force_t = cfg.raw.get("force_t")
    if force_t is not None:
        assign = cl.hierarchical_flat_clusters(dm, linkage, force_t)
        report = vl.SelectionReport(
            t1=force_t, t2=force_t, t3=force_t, ci={force_t: 0.0},
            t_op=force_t, c_op=assign.c, forced=True,
        )
    else:
        report = vl.select_optimal_threshold(sweep)
    out = cfg.out_dir
    curves = io.StringIO()
    curves.write(_csv_header_line(cfg))
    curves.write("t,num_clusters,sc,chs,dbi\n")
    for v in sweep.candidates:
        curves.write(f"{v.t!r},{v.c},{v.sc!r},{v.chs!r},{v.dbi!r}\n")
    _write_atomic(os.path.join(out, "sweep_curves.csv"), curves.getvalue())
    excl = io.StringIO()
    excl.write(_csv_header_line(cfg))
    excl.write("t,reason\n")
    for t, reason in sweep.excluded:
        excl.write(f"{t!r},{reason}\n")
    _write_atomic(os.path.join(out, "sweep_excluded.csv"), excl.getvalue())
    _write_json_artifact(cfg, os.path.join(out, "selection.json"), report.to_dict())
    return {
        "curves": os.path.join(out, "sweep_curves.csv"),
        "excluded": os.path.join(out, "sweep_excluded.csv"),
        "selection": os.path.join(out, "selection.json"),
        "report": report,
    }


def _fit_clustering(cfg: RunConfig, faces: FaceEncodingSet) -> ClusterAssignment:
    block = cfg.clustering()
    algo = block["algorithm"]
    if algo == "hierarchical":
        dm = cl.pairwise_distances(faces, block["metric"])
        t = cfg.raw.get("force_t") or block["t"]
        if t is None:
            sweep = vl.sweep_thresholds(dm, faces.matrix, block["linkage"])
            t = vl.select_optimal_threshold(sweep).t_op
        assign = cl.hierarchical_flat_clusters(dm, block["linkage"], float(t))
    elif algo == "kmeans":
        if block["k"] is None:
            raise ConfigError("clustering.k is required for kmeans")
        assign = cl.kmeans_cluster(faces.matrix, int(block["k"]), cfg.seed)
    elif algo == "spectral":
        if block["k"] is None:
            raise ConfigError("clustering.k is required for spectral")
        assign = cl.spectral_cluster(
            faces.matrix, int(block["k"]), float(block["gamma"]), cfg.seed
        )
    else:
        raise ConfigError(f"unknown clustering algorithm {algo!r}")
    return cl.attach_faceless_cluster(assign, faces.faceless_ids)


def run_cluster(cfg: RunConfig) -> dict:
    _, faces, _, _ = _load_inputs(cfg, need_faces=True)
    assign = _fit_clustering(cfg, faces)
    out = os.path.join(cfg.out_dir, "assignment.csv")
    _write_atomic(out, _csv_header_line(cfg) + assignment_csv_content(assign))
    return {"assignment": out, "result": assign}


def run_train(cfg: RunConfig) -> dict:
    table, faces, text_emb, image_emb = _load_inputs(cfg)
    spec = cfg.model_spec()
    assign = None
    if spec.use_cluster:
        if faces is None:
            raise ConfigError("train with use_cluster=True needs face_encodings")
        apath = cfg.path("assignment")
        if apath is not None:
            assign = load_assignment(apath)
        else:
            assign = _fit_clustering(cfg, faces)
    model = train_model(
        table, assign, cfg.train_config(), spec,
        text_emb=text_emb, image_emb=image_emb,
        face_enc=faces.matrix if faces is not None else None,
    )
    out = cfg.out_dir
    model_path = os.path.join(out, "model.json")
    doc = model_to_dict(model, cfg.hash)
    _write_atomic(model_path, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    log = io.StringIO()
    log.write(_csv_header_line(cfg))
    log.write("epoch,mean_loss\n")
    for i, loss in enumerate(model.train_loss):
        log.write(f"{i},{loss!r}\n")
    _write_atomic(os.path.join(out, "training_log.csv"), log.getvalue())
    return {"model": model_path, "log": os.path.join(out, "training_log.csv"),
            "result": model}


def run_predict(cfg: RunConfig) -> dict:
    table, faces, text_emb, image_emb = _load_inputs(cfg)
    model_path = cfg.path("model") or os.path.join(cfg.out_dir, "model.json")
    model = load_model(model_path)
    preds = predict(model, table, text_emb=text_emb, image_emb=image_emb,
                    faces=faces)
    out = os.path.join(cfg.out_dir, "predictions.csv")
    buf = io.StringIO()
    buf.write(_csv_header_line(cfg))
    buf.write("id,predicted_label,p_neg,p_neu,p_pos\n")
    for p in preds:
        buf.write(f"{p.id},{p.label},{p.probs[0]!r},{p.probs[1]!r},{p.probs[2]!r}\n")
    _write_atomic(out, buf.getvalue())
    return {"predictions": out, "result": preds}


def load_predictions(path) -> list[tuple[str, str]]:
    if not os.path.exists(path):
        raise DataError(f"predictions file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    if not rows or rows[0][:2] != ["id", "predicted_label"]:
        raise DataError(f"{path}: missing id,predicted_label header")
    return [(r[0], r[1]) for r in rows[1:] if r]


def run_evaluate(cfg: RunConfig) -> dict:
    table = load_manifest(cfg.path("manifest", required=True))
    pred_path = cfg.path("predictions") or os.path.join(
        cfg.out_dir, "predictions.csv"
    )
    pairs = load_predictions(pred_path)
    pred, gold = [], []
    for sid, label in pairs:
        if sid not in table:
            raise DataError(f"prediction for unknown id {sid!r}")
        rec = table[sid]
        if rec.label is None:
            raise DataError(f"no gold label for predicted id {sid!r}")
        pred.append(label)
        gold.append(rec.label)
    report = metrics_report(pred, gold)
    out = cfg.out_dir
    _write_json_artifact(cfg, os.path.join(out, "metrics.json"), report.to_dict())
    row = (_csv_header_line(cfg) + MetricsReport.csv_header() + "\n"
           + report.to_csv_row() + "\n")
    _write_atomic(os.path.join(out, "metrics.csv"), row)
    return {"metrics": os.path.join(out, "metrics.json"), "result": report}


def run_crossval(cfg: RunConfig) -> dict:
    table, faces, text_emb, image_emb = _load_inputs(cfg)
    labeled = table.labeled()
    if len(labeled) != len(table):
        raise DataError("cross-validation requires every sample to be labeled")
    spec = cfg.model_spec()
    k = int(cfg.raw["evaluation"]["folds"])

    def evaluate_fold(train_table: SampleTable, test_table: SampleTable, _i):
        assign = None
        fold_faces = None
        if spec.use_cluster:
            if faces is None:
                raise ConfigError("crossval with use_cluster=True needs face_encodings")
            fold_faces = _subset_faces(faces, train_table.ids)
            fold_cfg = RunConfig(cfg.raw, cfg.base_dir)
            assign = _fit_clustering(fold_cfg, fold_faces)
        model = train_model(
            train_table, assign, cfg.train_config(), spec,
            text_emb=text_emb, image_emb=image_emb,
            face_enc=fold_faces.matrix if fold_faces is not None else None,
        )
        test_faces = _subset_faces(faces, test_table.ids) if faces is not None else None
        preds = predict(model, test_table, text_emb=text_emb,
                        image_emb=image_emb, faces=test_faces)
        gold = [test_table[p.id].label for p in preds]
        return metrics_report([p.label for p in preds], gold).macro_f1

    scores, mean = kfold_crossval(labeled, k, cfg.seed, evaluate_fold)
    out = os.path.join(cfg.out_dir, "crossval.json")
    _write_json_artifact(cfg, out, {"fold_macro_f1": scores, "mean_macro_f1": mean})
    return {"crossval": out, "scores": scores, "mean": mean}
