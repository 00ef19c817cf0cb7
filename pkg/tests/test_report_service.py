import json

import numpy as np
import pandas as pd
import pytest

from errors import EmptyReports, EmptyResults
from models.backbone import Mode
from models.report import Confusion, EvalReport, TrainHistory
from models.search import HyperGrid, HyperParams, TrialResult, TrialStatus
from services.report_service import (
    COMPARISON_COLUMNS, TRIAL_COLUMNS, compare_models, format_table, plot_confusion, plot_history,
    records_for_json, summarize_reports, trial_table, write_comparison,
)
from services.search_service import enumerate_grid
from tests.stub_trainers import CHANCE, TABLE


def _report(model_id, tp, fp, fn, tn, loss, mode=Mode.FEATURE_EXTRACT):
    n = tp + fp + fn + tn
    return EvalReport(
        model_id=model_id, mode=mode, accuracy=(tp + tn) / n, loss=loss,
        confusion=Confusion(tp=tp, fp=fp, fn=fn, tn=tn),
        precision=tp / (tp + fp), recall=tp / (tp + fn), f1=0.5, n_test=n,
    )


def _trial(order, params, accuracy=None, error=None):
    if accuracy is None:
        return TrialResult(key=f"k{order}", order=order, params=params, backbone="VGG16", k=2, seed=0,
                           status=TrialStatus.FAILED, error="boom")
    return TrialResult(key=f"k{order}", order=order, params=params, backbone="VGG16", k=2, seed=0,
                       fold_accuracies=[accuracy, accuracy], fold_errors=[error, error],
                       mean_accuracy=accuracy, mean_error=error)


@pytest.fixture
def sweep():
    results = []
    for order, params in enumerate(enumerate_grid(HyperGrid())):
        accuracy, error = TABLE.get((params.epochs, params.batch_size, params.dropout, params.neurons), CHANCE)
        results.append(_trial(order, params, accuracy, error))
    return results


def test_trial_table_has_one_row_per_grid_point(sweep):
    table = trial_table(list(reversed(sweep)))
    assert list(table.columns) == TRIAL_COLUMNS
    assert len(table) == 54
    assert table.iloc[0].tolist() == [25, 16, 0.1, 16, 0.5, 0.6934]
    best = table.loc[table["Accuracy"].idxmax()]
    assert (best["Epoch"], best["Batch Size"], best["Dropout"], best["Layer Neurons"]) == (25, 32, 0.1, 32)
    assert best["Error"] == 0.4263


def test_trial_table_marks_failures_and_learning_rates():
    table = trial_table([
        _trial(0, HyperParams(learning_rate=0.001), 0.7, 0.5),
        _trial(1, HyperParams(learning_rate=0.01)),
    ])
    assert list(table.columns) == TRIAL_COLUMNS[:4] + ["Learning Rate"] + TRIAL_COLUMNS[4:] + ["Status"]
    assert np.isnan(table.iloc[1]["Accuracy"])
    assert table.iloc[1]["Status"] == "FAILED"
    assert "-" in format_table(table).splitlines()[2]
    assert records_for_json(table)[1]["Accuracy"] is None

    with pytest.raises(EmptyResults):
        trial_table([])


def test_compare_models_orders_by_accuracy_then_loss():
    reports = [
        _report("ResNet50", 30, 10, 10, 30, 0.61),
        _report("VGG16", 40, 5, 5, 40, 0.42),
        _report("DenseNet201", 30, 10, 10, 30, 0.55),
    ]
    comparison = compare_models(reports)
    assert [row["model"] for row in comparison["table"]] == ["VGG16", "DenseNet201", "ResNet50"]
    assert comparison["selected"] == "VGG16"
    assert comparison["chart"]["models"] == ["VGG16", "DenseNet201", "ResNet50"]
    assert comparison["chart"]["series"]["loss"] == [0.42, 0.55, 0.61]

    single = compare_models([reports[0]])
    assert len(single["table"]) == 1 and single["selected"] == "ResNet50"

    with pytest.raises(EmptyReports):
        compare_models([])


def test_write_comparison_files(tmp_path):
    comparison = compare_models([
        _report("VGG16", 40, 5, 5, 40, 0.42),
        _report("VGG19", 38, 7, 7, 38, 0.48, Mode.FINE_TUNE),
    ])
    paths = write_comparison(comparison, str(tmp_path / "comparison.csv"))
    with open(paths["csv"]) as f:
        assert f.readline().strip() == ",".join(COMPARISON_COLUMNS)
    frame = pd.read_csv(paths["csv"])
    assert frame["mode"].tolist() == ["FEATURE_EXTRACT", "FINE_TUNE"]
    with open(paths["json"]) as f:
        assert json.load(f) == comparison["chart"]
    assert (tmp_path / "comparison.png").stat().st_size > 0

    no_plot = write_comparison(comparison, str(tmp_path / "plain.csv"), plot=False)
    assert "png" not in no_plot
    assert not (tmp_path / "plain.png").exists()


def test_summary_and_figures(tmp_path):
    report = _report("VGG16", 40, 8, 6, 46, 0.3)
    summary = summarize_reports([report])
    assert summary.iloc[0]["accuracy"] == pytest.approx(0.86)
    with pytest.raises(EmptyReports):
        summarize_reports([])

    assert plot_confusion(report, str(tmp_path / "confusion.png")) == str(tmp_path / "confusion.png")
    history = TrainHistory(train_loss=[0.7, 0.5], train_accuracy=[0.5, 0.8], val_loss=[0.69, 0.6],
                           val_accuracy=[0.5, 0.7], epochs_run=2)
    assert plot_history(history, str(tmp_path / "history.png"), "VGG16") is not None
    assert (tmp_path / "history.png").exists()
    assert plot_history(TrainHistory(), str(tmp_path / "empty.png")) is None
