import json
import os

import numpy as np
import pytest

from cdel.cli import main
from cdel.data import CLASSES, load_assignment
from cdel.synthetic import make_cluster_signal_dataset

from conftest import write_bundle, write_config

TRAIN_FAST = {
    "epochs": 2,
    "batch_size": 32,
    "learning_rate": 0.01,
    "dropout_rate": 0.0,
}


@pytest.fixture
def workspace(tmp_path):
    bundle = make_cluster_signal_dataset(n=90, seed=7)
    paths = write_bundle(bundle, tmp_path)
    cfg = write_config(
        tmp_path / "run.json",
        manifest="manifest.csv",
        face_encodings="faces.csv",
        text_embeddings="text.csv",
        image_embeddings="image.csv",
        output_dir="out",
        seed=3,
        train=TRAIN_FAST,
    )
    return tmp_path, cfg, bundle, paths


def read_artifact(tmp_path, name):
    return (tmp_path / "out" / name).read_text()


class TestSweepCommand:
    def test_writes_all_artifacts(self, workspace, capsys):
        tmp_path, cfg, bundle, _ = workspace
        assert main(["sweep", "--config", cfg]) == 0
        out = capsys.readouterr().out
        for name in ("sweep_curves.csv", "sweep_excluded.csv", "selection.json"):
            assert (tmp_path / "out" / name).exists()
            assert name in out

    def test_selects_constructed_knee(self, workspace):
        tmp_path, cfg, bundle, _ = workspace
        main(["sweep", "--config", cfg])
        doc = json.loads(read_artifact(tmp_path, "selection.json"))
        # the fixture has three tight, well-separated face blobs
        assert doc["c_op"] == 3
        assert doc["forced"] is False
        assert doc["t_op"] in doc["ci"] or str(doc["t_op"]) in doc["ci"]

    def test_force_t_marks_report(self, workspace):
        tmp_path, cfg, _, _ = workspace
        assert main(["sweep", "--config", cfg, "--force-t", "0.3"]) == 0
        doc = json.loads(read_artifact(tmp_path, "selection.json"))
        assert doc["forced"] is True
        assert doc["t_op"] == 0.3

    def test_curves_header(self, workspace):
        tmp_path, cfg, _, _ = workspace
        main(["sweep", "--config", cfg])
        lines = read_artifact(tmp_path, "sweep_curves.csv").splitlines()
        assert lines[0].startswith("# cdel format_version=1 config_hash=")
        assert lines[1] == "t,num_clusters,sc,chs,dbi"


class TestClusterCommand:
    def test_assignment_includes_faceless_cluster(self, workspace):
        tmp_path, cfg, bundle, _ = workspace
        assert main(["cluster", "--config", cfg]) == 0
        assign = load_assignment(tmp_path / "out" / "assignment.csv")
        assert assign.c == 4  # 3 face blobs + reserved faceless cluster
        assert assign.faceless_cluster_id == 3
        assert set(assign.mapping) == set(bundle.table.ids)
        faceless = {
            sid for sid in bundle.table.ids
            if sid not in set(bundle.face_encodings.ids)
        }
        assert {s for s, c in assign.mapping.items() if c == 3} == faceless

    def test_labels_track_face_blobs(self, workspace):
        tmp_path, cfg, bundle, _ = workspace
        main(["cluster", "--config", cfg])
        assign = load_assignment(tmp_path / "out" / "assignment.csv")
        # every face cluster is label-pure by construction of the fixture
        for k in range(3):
            labels = {
                bundle.table[s].label
                for s, c in assign.mapping.items() if c == k
            }
            assert len(labels) == 1


class TestTrainPredictEvaluate:
    def test_full_chain(self, workspace):
        tmp_path, cfg, bundle, _ = workspace
        assert main(["cluster", "--config", cfg]) == 0
        assert main(["train", "--config", cfg]) == 0
        assert (tmp_path / "out" / "model.json").exists()
        log = read_artifact(tmp_path, "training_log.csv").splitlines()
        assert log[1] == "epoch,mean_loss"
        assert len(log) == 2 + TRAIN_FAST["epochs"]
        assert main(["predict", "--config", cfg]) == 0
        lines = read_artifact(tmp_path, "predictions.csv").splitlines()
        assert lines[1] == "id,predicted_label,p_neg,p_neu,p_pos"
        rows = [ln.split(",") for ln in lines[2:]]
        assert [r[0] for r in rows] == list(bundle.table.ids)
        assert all(r[1] in CLASSES for r in rows)
        probs = np.array([[float(v) for v in r[2:]] for r in rows])
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert main(["evaluate", "--config", cfg]) == 0
        doc = json.loads(read_artifact(tmp_path, "metrics.json"))
        assert doc["n_samples"] == 90
        assert 0.0 <= doc["macro_f1"] <= 1.0

    def test_train_reads_assignment_file(self, workspace):
        tmp_path, cfg, _, _ = workspace
        main(["cluster", "--config", cfg])
        cfg2 = write_config(
            tmp_path / "run2.json",
            manifest="manifest.csv",
            face_encodings="faces.csv",
            text_embeddings="text.csv",
            image_embeddings="image.csv",
            assignment="out/assignment.csv",
            output_dir="out2",
            seed=3,
            train=TRAIN_FAST,
        )
        assert main(["train", "--config", cfg2]) == 0
        assert (tmp_path / "out2" / "model.json").exists()


class TestEvaluateOracle:
    BENCH_CM = [
        [27, 49, 97],
        [82, 225, 287],
        [164, 310, 637],
    ]

    def test_benchmark_confusion_matrix(self, tmp_path):
        manifest_lines = ["id,text,image_path,label"]
        pred_lines = ["id,predicted_label"]
        i = 0
        for g, gold in enumerate(CLASSES):
            for p, pred in enumerate(CLASSES):
                for _ in range(self.BENCH_CM[g][p]):
                    manifest_lines.append(f"e{i:05d},,,{gold}")
                    pred_lines.append(f"e{i:05d},{pred}")
                    i += 1
        (tmp_path / "manifest.csv").write_text("\n".join(manifest_lines) + "\n")
        (tmp_path / "preds.csv").write_text("\n".join(pred_lines) + "\n")
        cfg = write_config(
            tmp_path / "run.json",
            manifest="manifest.csv",
            predictions="preds.csv",
            output_dir="out",
        )
        assert main(["evaluate", "--config", cfg]) == 0
        doc = json.loads((tmp_path / "out" / "metrics.json").read_text())
        assert doc["macro_f1"] == pytest.approx(0.3669, abs=5e-5)
        assert doc["accuracy"] == pytest.approx(0.4734, abs=5e-5)
        assert doc["confusion_matrix"] == self.BENCH_CM
        assert doc["n_samples"] == 1878


class TestCrossvalCommand:
    def test_writes_fold_scores(self, workspace):
        tmp_path, cfg, _, _ = workspace
        cfg = write_config(
            tmp_path / "cv.json",
            manifest="manifest.csv",
            face_encodings="faces.csv",
            text_embeddings="text.csv",
            image_embeddings="image.csv",
            output_dir="outcv",
            seed=3,
            train=TRAIN_FAST,
            evaluation={"folds": 3},
        )
        assert main(["crossval", "--config", cfg]) == 0
        doc = json.loads((tmp_path / "outcv" / "crossval.json").read_text())
        assert len(doc["fold_macro_f1"]) == 3
        expected = sum(doc["fold_macro_f1"]) / 3
        assert doc["mean_macro_f1"] == pytest.approx(expected, abs=1e-12)


class TestExitCodes:
    def test_unknown_config_key_is_2(self, workspace):
        tmp_path, _, _, _ = workspace
        bad = write_config(tmp_path / "bad.json",
                           manifest="manifest.csv", bogus_key=1)
        assert main(["cluster", "--config", bad]) == 2

    def test_missing_config_file_is_2(self, tmp_path):
        assert main(["cluster", "--config", str(tmp_path / "nope.json")]) == 2

    def test_unknown_algorithm_is_2(self, workspace):
        tmp_path, _, _, _ = workspace
        bad = write_config(
            tmp_path / "bad.json",
            manifest="manifest.csv",
            face_encodings="faces.csv",
            output_dir="out",
            clustering={"algorithm": "dbscan"},
        )
        assert main(["cluster", "--config", bad]) == 2

    def test_kmeans_without_k_is_2(self, workspace):
        tmp_path, _, _, _ = workspace
        bad = write_config(
            tmp_path / "bad.json",
            manifest="manifest.csv",
            face_encodings="faces.csv",
            output_dir="out",
            clustering={"algorithm": "kmeans"},
        )
        assert main(["cluster", "--config", bad]) == 2

    def test_bad_manifest_label_is_3(self, tmp_path):
        (tmp_path / "m.csv").write_text(
            "id,text,image_path,label\na,x,,angry\n"
        )
        cfg = write_config(tmp_path / "run.json", manifest="m.csv",
                           output_dir="out")
        assert main(["evaluate", "--config", cfg]) == 3

    def test_prediction_for_unknown_id_is_3(self, tmp_path):
        (tmp_path / "m.csv").write_text(
            "id,text,image_path,label\na,x,,positive\n"
        )
        (tmp_path / "p.csv").write_text(
            "id,predicted_label\nzz,positive\n"
        )
        cfg = write_config(tmp_path / "run.json", manifest="m.csv",
                           predictions="p.csv", output_dir="out")
        assert main(["evaluate", "--config", cfg]) == 3

    def test_nonfinite_model_is_4(self, workspace):
        tmp_path, cfg, _, _ = workspace
        main(["cluster", "--config", cfg])
        zero = write_config(
            tmp_path / "zero.json",
            manifest="manifest.csv",
            face_encodings="faces.csv",
            text_embeddings="text.csv",
            image_embeddings="image.csv",
            output_dir="out",
            seed=3,
            train={**TRAIN_FAST, "epochs": 0},
        )
        assert main(["train", "--config", zero]) == 0
        model_path = tmp_path / "out" / "model.json"
        doc = json.loads(model_path.read_text())
        doc["head"]["w"][0][0] = float("inf")
        model_path.write_text(json.dumps(doc))
        assert main(["predict", "--config", zero]) == 4


class TestDeterminism:
    def chain(self, cfg):
        for cmd in ("cluster", "train", "predict"):
            assert main([cmd, "--config", cfg]) == 0

    def test_rerun_is_byte_identical(self, workspace):
        tmp_path, cfg, _, _ = workspace
        self.chain(cfg)
        names = ("assignment.csv", "model.json", "training_log.csv",
                 "predictions.csv")
        first = {n: (tmp_path / "out" / n).read_bytes() for n in names}
        self.chain(cfg)
        for n in names:
            assert (tmp_path / "out" / n).read_bytes() == first[n], n

    def test_zero_epoch_train_is_reproducible(self, workspace):
        tmp_path, _, _, _ = workspace
        cfg = write_config(
            tmp_path / "z.json",
            manifest="manifest.csv",
            face_encodings="faces.csv",
            text_embeddings="text.csv",
            image_embeddings="image.csv",
            output_dir="outz",
            seed=5,
            train={**TRAIN_FAST, "epochs": 0},
        )
        for cmd in ("cluster", "train", "predict"):
            assert main([cmd, "--config", cfg]) == 0
        first = (tmp_path / "outz" / "predictions.csv").read_bytes()
        for cmd in ("train", "predict"):
            assert main([cmd, "--config", cfg]) == 0
        assert (tmp_path / "outz" / "predictions.csv").read_bytes() == first

    def test_seed_override_changes_hash_header(self, workspace):
        tmp_path, cfg, _, _ = workspace
        main(["cluster", "--config", cfg])
        h1 = read_artifact(tmp_path, "assignment.csv").splitlines()[0]
        main(["cluster", "--config", cfg, "--seed", "99"])
        h2 = read_artifact(tmp_path, "assignment.csv").splitlines()[0]
        assert h1 != h2
