"""
Tables and figures: grid-search trial tables, model comparison, confusion
matrices and training curves.

Data files (CSV/JSON) are the artifacts of record; PNGs are rendered from the
same data with matplotlib's Agg backend.
"""

import json
import logging
import os
from typing import Any, Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from errors import EmptyReports, EmptyResults  # noqa: E402
from models.report import EvalReport, TrainHistory  # noqa: E402
from models.search import TrialResult  # noqa: E402
from repositories.report_store import write_csv, write_json  # noqa: E402

logger = logging.getLogger(__name__)

TRIAL_COLUMNS = ["Epoch", "Batch Size", "Dropout", "Layer Neurons", "Accuracy", "Error"]
COMPARISON_COLUMNS = ["model", "mode", "accuracy", "loss"]
SUMMARY_COLUMNS = ["model", "mode", "accuracy", "loss", "precision", "recall", "f1", "n_test"]


def trial_table(results: Sequence[TrialResult]) -> pd.DataFrame:
    """One row per trial in grid order; failed trials keep their row with empty scores."""
    if not results:
        raise EmptyResults("no trial results to tabulate")
    ordered = sorted(results, key=lambda r: r.order)
    rows = [{
        "Epoch": r.params.epochs,
        "Batch Size": r.params.batch_size,
        "Dropout": r.params.dropout,
        "Layer Neurons": r.params.neurons,
        "Learning Rate": r.params.learning_rate,
        "Accuracy": r.mean_accuracy if r.ok else np.nan,
        "Error": r.mean_error if r.ok else np.nan,
        "Status": r.status.value,
    } for r in ordered]
    frame = pd.DataFrame(rows)
    columns = list(TRIAL_COLUMNS)
    if frame["Learning Rate"].nunique() > 1:
        columns.insert(4, "Learning Rate")
    if (frame["Status"] != "OK").any():
        columns.append("Status")
    return frame[columns]


def format_table(frame: pd.DataFrame) -> str:
    return frame.to_string(index=False, float_format=lambda v: f"{v:.4f}", na_rep="-")


def compare_models(reports: Sequence[EvalReport]) -> Dict[str, Any]:
    """Comparison table sorted by accuracy (ties: lower loss first) plus grouped bar-chart data."""
    if not reports:
        raise EmptyReports("no evaluation reports to compare")
    indexed = sorted(enumerate(reports), key=lambda item: (-item[1].accuracy, item[1].loss, item[0]))
    rows = [{
        "model": report.model_id,
        "mode": report.mode.value,
        "accuracy": report.accuracy,
        "loss": report.loss,
    } for _, report in indexed]
    chart = {
        "models": [row["model"] for row in rows],
        "series": {
            "accuracy": [row["accuracy"] for row in rows],
            "loss": [row["loss"] for row in rows],
        },
    }
    logger.info(f"Compared {len(rows)} models; selected {rows[0]['model']} at accuracy {rows[0]['accuracy']:.4f}")
    return {"table": rows, "chart": chart, "selected": rows[0]["model"]}


def summarize_reports(reports: Sequence[EvalReport]) -> pd.DataFrame:
    if not reports:
        raise EmptyReports("no evaluation reports to summarize")
    return pd.DataFrame([{
        "model": r.model_id,
        "mode": r.mode.value,
        "accuracy": r.accuracy,
        "loss": r.loss,
        "precision": r.precision,
        "recall": r.recall,
        "f1": r.f1,
        "n_test": r.n_test,
    } for r in reports], columns=SUMMARY_COLUMNS)


def _sibling(path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + suffix


def plot_comparison(chart: Dict[str, Any], path: str) -> str:
    models = chart["models"]
    x = np.arange(len(models))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6, 1.4 * len(models)), 4.5))
    ax.bar(x - width / 2, chart["series"]["accuracy"], width, label="Accuracy")
    ax.bar(x + width / 2, chart["series"]["loss"], width, label="Loss")
    ax.set_xticks(x)
    ax.set_xticklabels(models, rotation=30, ha="right")
    ax.set_ylabel("Value")
    ax.set_title("Accuracy and loss by model")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_comparison(comparison: Dict[str, Any], out_csv: str, plot: bool = True) -> Dict[str, str]:
    """Write `<out>.csv`, the bar-chart data as `<out>.json` and, optionally, `<out>.png`."""
    paths = {
        "csv": write_csv(comparison["table"], COMPARISON_COLUMNS, out_csv),
        "json": write_json(comparison["chart"], _sibling(out_csv, ".json")),
    }
    if plot:
        paths["png"] = plot_comparison(comparison["chart"], _sibling(out_csv, ".png"))
    logger.info(f"Comparison written to {paths['csv']}")
    return paths


def plot_confusion(report: EvalReport, path: str) -> str:
    c = report.confusion
    matrix = np.array([[c.tp, c.fn], [c.fp, c.tn]])
    classes = ["COVID", "NON_COVID"]
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.imshow(matrix, cmap="Blues")
    for i in range(2):
        for j in range(2):
            colour = "white" if matrix[i, j] > matrix.max() / 2 else "black"
            ax.text(j, i, str(matrix[i, j]), ha="center", va="center", color=colour, fontsize=14)
    ax.set_xticks([0, 1])
    ax.set_xticklabels(classes)
    ax.set_yticks([0, 1])
    ax.set_yticklabels(classes)
    ax.set_xlabel("Predicted label")
    ax.set_ylabel("True label")
    ax.set_title(f"{report.model_id} (accuracy {report.accuracy:.2%})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_history(history: TrainHistory, path: str, title: Optional[str] = None) -> Optional[str]:
    """Accuracy and loss curves per epoch; nothing is drawn for an empty history."""
    if history.epochs_run == 0:
        return None
    epochs = np.arange(1, history.epochs_run + 1)
    fig, (acc_ax, loss_ax) = plt.subplots(1, 2, figsize=(10, 4))
    acc_ax.plot(epochs, history.train_accuracy, label="train")
    acc_ax.plot(epochs, history.val_accuracy, label="validation")
    acc_ax.set_xlabel("Epoch")
    acc_ax.set_ylabel("Accuracy")
    acc_ax.legend()
    loss_ax.plot(epochs, history.train_loss, label="train")
    loss_ax.plot(epochs, history.val_loss, label="validation")
    loss_ax.set_xlabel("Epoch")
    loss_ax.set_ylabel("Loss")
    loss_ax.legend()
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def records_for_json(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    """DataFrame rows as plain dicts with NaN mapped to None."""
    return json.loads(frame.to_json(orient="records"))
