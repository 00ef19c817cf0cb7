"""
Custom pipeline metrics using Prometheus client library.

Tracks images flowing through ingest/preprocess/augment, grid-search trials,
training epochs and evaluation accuracy.
"""

import logging
from prometheus_client import Counter, Histogram, Gauge, REGISTRY, write_to_textfile

from config import OTEL_ENABLED, METRICS_TEXTFILE

logger = logging.getLogger(__name__)

if OTEL_ENABLED:
    images_ingested_total = Counter(
        "ecg_images_ingested_total",
        "Total number of labelled ECG images added to a manifest",
        ["label"]
    )

    images_unreadable_total = Counter(
        "ecg_images_unreadable_total",
        "Number of image files that could not be decoded during ingest",
    )

    images_preprocessed_total = Counter(
        "ecg_images_preprocessed_total",
        "Total number of images run through the preprocessing pipeline",
    )

    images_augmented_total = Counter(
        "ecg_images_augmented_total",
        "Total number of augmented training images written",
    )

    trials_total = Counter(
        "ecg_trials_total",
        "Grid-search trials by outcome",
        ["status"]  # ok, failed, skipped
    )

    trial_duration_seconds = Histogram(
        "ecg_trial_duration_seconds",
        "Wall time of one cross-validated grid-search trial (seconds)",
        buckets=(0.01, 0.1, 1, 10, 60, 300, 900, 3600, 14400)
    )

    active_trials = Gauge(
        "ecg_active_trials",
        "Number of grid-search trials currently running",
        multiprocess_mode="livesum"
    )

    training_epochs_total = Counter(
        "ecg_training_epochs_total",
        "Total training epochs run",
        ["mode"]  # feature_extract, fine_tune
    )

    eval_accuracy = Gauge(
        "ecg_eval_accuracy",
        "Test-split accuracy of the last evaluated model",
        ["model_id"]
    )

    logger.info("Prometheus metrics initialized")
else:
    logger.info("Metrics disabled (OTEL_ENABLED=false)")

    class _NoOpMetric:
        def labels(self, **kwargs):
            return self

        def inc(self, amount=1):
            pass

        dec = inc

        def set(self, value):
            pass

        observe = set

    images_ingested_total = images_unreadable_total = _NoOpMetric()
    images_preprocessed_total = images_augmented_total = _NoOpMetric()
    trials_total = trial_duration_seconds = active_trials = _NoOpMetric()
    training_epochs_total = eval_accuracy = _NoOpMetric()


def dump_metrics(path: str = METRICS_TEXTFILE) -> None:
    """Write the registry in textfile-collector format, if a path is configured."""
    if not OTEL_ENABLED or not path:
        return
    try:
        write_to_textfile(path, REGISTRY)
        logger.info(f"Metrics written to {path}")
    except OSError as e:
        logger.error(f"Failed to write metrics to {path}: {e}")
