import json

import pytest
import yaml

from main import dispatch
from models.dataset import Split
from repositories.manifest_store import load_manifest


def run_json(capsys, *argv):
    capsys.readouterr()
    code = dispatch([*argv, "--json"])
    out = capsys.readouterr().out
    assert code == 0, out
    return json.loads(out.strip().splitlines()[-1])


@pytest.fixture
def corpus(tmp_path, capsys):
    def build(per_class=6, size="160x120"):
        root = tmp_path / "corpus"
        summary = run_json(capsys, "demo", "--out", str(root), "--per-class", str(per_class), "--size", size)
        assert summary["counts"] == {"COVID": per_class, "Normal": per_class}
        return root
    return build


def test_help_and_usage_errors(capsys):
    assert dispatch(["--help"]) == 0
    assert dispatch(["gridsearch", "--help"]) == 0
    assert dispatch(["no-such-command"]) == 2
    assert dispatch(["preprocess", "--target", "wide"]) == 2


def test_pipeline_errors_are_one_json_line(tmp_path, capsys):
    code = dispatch(["ingest", "--root", str(tmp_path / "missing"), "--out", str(tmp_path / "m.jsonl")])
    assert code == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "MissingRoot"

    code = dispatch(["ingest", "--root", str(tmp_path), "--out", str(tmp_path / "m.jsonl"),
                     "--ratios", "0.5,0.2,0.1"])
    assert code == 1
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "RatioInvalid"


def test_demo_writes_run_config(corpus):
    root = corpus(per_class=3, size="120x84")
    cfg = yaml.safe_load((root / "run.yaml").read_text())
    assert cfg["preprocess"]["crop_rect"] == [10, 12, 100, 66]
    assert cfg["model"]["backbone"] == "VGG16"
    assert len(list((root / "COVID").glob("*.png"))) == 3


def test_ingest_preprocess_augment_flow(tmp_path, capsys, corpus):
    root = corpus()
    config = str(root / "run.yaml")
    manifest_path = str(tmp_path / "manifest.jsonl")

    ingested = run_json(capsys, "ingest", "--config", config, "--out", manifest_path, "--k", "2")
    assert ingested["records"] == 12
    assert ingested["class_counts"] == {"COVID": 6, "NON_COVID": 6}

    cleaned = run_json(capsys, "preprocess", "--config", config, "--manifest", manifest_path,
                       "--out-dir", str(tmp_path / "clean"), "--target", "64x48")
    manifest = load_manifest(cleaned["manifest"])
    assert all((r.width, r.height) == (64, 48) for r in manifest.records)

    augmented = run_json(capsys, "augment", "--config", config, "--manifest", cleaned["manifest"],
                         "--copies", "2", "--out-dir", str(tmp_path / "aug"))
    manifest = load_manifest(augmented["manifest"])
    originals = [r for r in manifest.split_records(Split.TRAIN) if not r.is_augmented]
    assert augmented["added"] == 2 * len(originals)
    assert not any(r.is_augmented for r in manifest.split_records(Split.TEST) + manifest.split_records(Split.VAL))


def test_gridsearch_with_stub_trainer(tmp_path, capsys, corpus):
    root = corpus()
    manifest_path = str(tmp_path / "manifest.jsonl")
    store = str(tmp_path / "trials.jsonl")
    run_json(capsys, "ingest", "--config", str(root / "run.yaml"), "--out", manifest_path)

    summary = run_json(capsys, "gridsearch", "--manifest", manifest_path, "--k", "2", "--store", store,
                       "--trainer", "tests.stub_trainers:table_trainer",
                       "--epochs", "25", "--batch", "32,64", "--dropout", "0.1", "--neurons", "16,32,64")
    assert summary["trials"] == 6 and summary["failed"] == 0
    assert summary["best"]["batch_size"] == 32 and summary["best"]["neurons"] == 32
    stamp = json.loads((tmp_path / "trials.jsonl").read_text().splitlines()[0])["provenance"]
    assert stamp["command"] == "gridsearch"
    assert len(stamp["manifest_hash"]) == 64 and len(stamp["config_hash"]) == 64

    shown = run_json(capsys, "report", "--store", store)
    assert len(shown["rows"]) == 6
    assert shown["best"] == summary["best"]
    assert run_json(capsys, "gridsearch", "report", "--store", store)["rows"] == shown["rows"]


@pytest.mark.slow
def test_smoke_train_and_evaluate(tmp_path, capsys, corpus):
    pytest.importorskip("tensorflow")
    root = corpus(per_class=20, size="320x240")
    config = str(root / "run.yaml")
    manifest_path = str(tmp_path / "manifest.jsonl")

    run_json(capsys, "ingest", "--config", config, "--out", manifest_path)
    cleaned = run_json(capsys, "preprocess", "--config", config, "--manifest", manifest_path,
                       "--out-dir", str(tmp_path / "clean"))
    augmented = run_json(capsys, "augment", "--config", config, "--manifest", cleaned["manifest"],
                         "--copies", "1", "--out-dir", str(tmp_path / "aug"))

    checkpoint = str(tmp_path / "ckpt")
    trained = run_json(capsys, "train", "--config", config, "--manifest", augmented["manifest"],
                       "--no-pretrained", "--epochs", "3", "--batch", "8", "--checkpoint", checkpoint)
    assert trained["epochs_run"] == 3
    assert trained["mode"] == "FEATURE_EXTRACT"

    report_path = tmp_path / "reports" / "vgg16.json"
    report = run_json(capsys, "evaluate", "--config", config, "--manifest", augmented["manifest"],
                      "--checkpoint", checkpoint, "--report", str(report_path), "--plot")
    assert report["n_test"] == 8
    assert report["accuracy"] >= 0.9
    assert (tmp_path / "reports" / "vgg16_confusion.png").exists()
    saved = json.loads(report_path.read_text())
    assert saved["provenance"]["training"]["hyperparams"]["epochs"] == 3

    compared = run_json(capsys, "compare", "--reports", str(report_path), "--out", str(tmp_path / "cmp.csv"))
    assert compared["selected"] == "vgg16-feature_extract"
