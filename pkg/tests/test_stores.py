import json

import pytest

from config import SERVICE_VERSION, config_hash, provenance
from errors import ConfigInvalid
from models.backbone import Mode
from models.config import RunConfig
from models.report import Confusion, EvalReport
from models.search import HyperParams, TrialResult, TrialStatus
from repositories.report_store import load_report, save_report
from repositories.trial_store import TrialStore


def _trial(order, accuracy=0.75, status=TrialStatus.OK):
    if status == TrialStatus.FAILED:
        return TrialResult(key=f"key{order}", order=order, params=HyperParams(), backbone="VGG16", k=2,
                           seed=0, status=status, error="boom")
    return TrialResult(key=f"key{order}", order=order, params=HyperParams(), backbone="VGG16", k=2, seed=0,
                       fold_accuracies=[accuracy, accuracy], fold_errors=[0.5, 0.5],
                       mean_accuracy=accuracy, mean_error=0.5)


def test_missing_store_is_empty(tmp_path):
    store = TrialStore(str(tmp_path / "nested" / "trials.jsonl"))
    assert store.load() == {}
    store.append(_trial(0))
    assert list(store.load()) == ["key0"]


def test_newest_line_wins(tmp_path):
    store = TrialStore(str(tmp_path / "trials.jsonl"))
    store.append(_trial(0, status=TrialStatus.FAILED))
    store.append(_trial(1))
    store.append(_trial(0, accuracy=0.9))
    loaded = store.load()
    assert loaded["key0"].ok and loaded["key0"].mean_accuracy == 0.9
    assert [r.order for r in store.all()] == [0, 1]


def test_torn_and_invalid_lines_are_skipped(tmp_path):
    path = tmp_path / "trials.jsonl"
    store = TrialStore(str(path))
    store.append(_trial(0))
    with open(path, "a") as f:
        f.write(json.dumps({"key": "x", "order": -1}) + "\n")
        f.write('{"key": "key1", "ord')
    assert list(store.load()) == ["key0"]

    store.append(_trial(2))
    assert sorted(store.load()) == ["key0", "key2"]
    assert path.read_text().endswith("\n")


def test_lines_carry_provenance(tmp_path):
    cfg = RunConfig()
    path = tmp_path / "trials.jsonl"
    store = TrialStore(str(path), provenance(cfg, include_config=False, manifest_hash="ab12"))
    store.append(_trial(0))

    line = json.loads(path.read_text().splitlines()[0])
    assert line["provenance"]["tool_version"] == SERVICE_VERSION
    assert line["provenance"]["config_hash"] == config_hash(cfg)
    assert line["provenance"]["manifest_hash"] == "ab12"
    assert TrialStore(str(path)).load()["key0"].provenance == line["provenance"]

    # results that already carry provenance keep it
    stamped = _trial(1).model_copy(update={"provenance": {"tool_version": "0.9"}})
    store.append(stamped)
    assert store.load()["key1"].provenance == {"tool_version": "0.9"}

def test_report_round_trip(tmp_path):
    report = EvalReport(
        model_id="VGG16", mode=Mode.FEATURE_EXTRACT, accuracy=0.86, loss=0.31,
        confusion=Confusion(tp=40, fp=8, fn=6, tn=46), precision=40 / 48, recall=40 / 46,
        f1=0.851, n_test=100, provenance={"seed": 42},
    )
    path = save_report(report, str(tmp_path / "reports" / "vgg16.json"))
    assert load_report(path) == report

    (tmp_path / "broken.json").write_text("{}")
    with pytest.raises(ConfigInvalid):
        load_report(str(tmp_path / "broken.json"))
