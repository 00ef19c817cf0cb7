import logging
import math
import threading
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import tensorflow as tf
from sklearn.metrics import confusion_matrix, f1_score, log_loss, precision_score, recall_score

from errors import DataLeakage, EmptyTestSplit, EmptyTrainSplit, EmptyValSplit
from metrics import eval_accuracy, training_epochs_total
from models.backbone import BackboneSpec, HeadConfig, Mode
from models.dataset import ImageRecord, Label, Manifest, Split
from models.report import Confusion, EvalReport, TrainHistory
from models.search import HyperParams
from repositories.image_store import load_image
from repositories.manifest_store import manifest_hash
from services.model_zoo import TrainableModel, build_model, predict, to_model_input

logger = logging.getLogger(__name__)

POSITIVE = Label.COVID
PROBABILITY_EPS = 1e-7

# Keras seeding and clear_session act on process-global state: one fold fit at a time per process
_keras_lock = threading.Lock()


def label_vector(records: Sequence[ImageRecord]) -> np.ndarray:
    return np.array([1.0 if r.label == POSITIVE else 0.0 for r in records], dtype=np.float32)


class RecordSequence(tf.keras.utils.Sequence):
    """Lazily loads batches of manifest images at the backbone's native size."""

    def __init__(self, records: Sequence[ImageRecord], spec: BackboneSpec, batch_size: int,
                 shuffle_seed: Optional[int] = None):
        super().__init__()
        self.records = list(records)
        self.spec = spec
        self.batch_size = batch_size
        self.labels = label_vector(self.records)
        self.order = np.arange(len(self.records))
        self._rng = np.random.default_rng(shuffle_seed) if shuffle_seed is not None else None
        if self._rng is not None:
            self._rng.shuffle(self.order)

    def __len__(self):
        return math.ceil(len(self.records) / self.batch_size)

    def __getitem__(self, index):
        chunk = self.order[index * self.batch_size:(index + 1) * self.batch_size]
        images = [load_image(self.records[i].path) for i in chunk]
        return to_model_input(images, self.spec), self.labels[chunk]

    def on_epoch_end(self):
        if self._rng is not None:
            self._rng.shuffle(self.order)


class EpochLogger(tf.keras.callbacks.Callback):
    def __init__(self, model_id: str, epochs: int):
        super().__init__()
        self.model_id = model_id
        self.epochs = epochs

    def on_epoch_end(self, epoch, logs=None):
        logs = logs or {}
        logger.info(
            f"[{self.model_id}] Epoch {epoch + 1}/{self.epochs} "
            f"loss={logs.get('loss', float('nan')):.4f} acc={logs.get('accuracy', float('nan')):.4f} "
            f"val_loss={logs.get('val_loss', float('nan')):.4f} val_acc={logs.get('val_accuracy', float('nan')):.4f}"
        )


def fit_records(model: TrainableModel, train_records: Sequence[ImageRecord], val_records: Sequence[ImageRecord],
                params: HyperParams, seed: int) -> TrainHistory:
    """Optimise the trainable weights with Adam and binary cross-entropy."""
    if params.epochs == 0:
        return TrainHistory()
    if not train_records:
        raise EmptyTrainSplit("no TRAIN records to fit")
    if not val_records:
        raise EmptyValSplit("no validation records to monitor")

    tf.keras.utils.set_random_seed(seed)
    model.keras_model.compile(
        optimizer=tf.keras.optimizers.Adam(learning_rate=params.learning_rate),
        loss=tf.keras.losses.BinaryCrossentropy(),
        metrics=[tf.keras.metrics.BinaryAccuracy(name="accuracy")],
    )
    fitted = model.keras_model.fit(
        RecordSequence(train_records, model.backbone, params.batch_size, shuffle_seed=seed),
        validation_data=RecordSequence(val_records, model.backbone, params.batch_size),
        epochs=params.epochs,
        verbose=0,
        callbacks=[EpochLogger(model.model_id, params.epochs)],
    )
    training_epochs_total.labels(mode=model.mode.value.lower()).inc(params.epochs)
    model.seen_record_ids.update(r.id for r in train_records)
    model.seen_record_ids.update(r.parent_id for r in train_records if r.parent_id)
    model.seen_record_ids.update(r.id for r in val_records)

    h = fitted.history
    return TrainHistory(
        train_loss=[float(v) for v in h["loss"]],
        train_accuracy=[float(v) for v in h["accuracy"]],
        val_loss=[float(v) for v in h["val_loss"]],
        val_accuracy=[float(v) for v in h["val_accuracy"]],
        epochs_run=len(h["loss"]),
    )


def train(model: TrainableModel, manifest: Manifest, params: HyperParams, seed: int) -> Tuple[TrainableModel, TrainHistory]:
    """Train on TRAIN (augmented copies included), validate on VAL; TEST is never read."""
    if (model.head.neurons, model.head.dropout) != (params.neurons, params.dropout):
        logger.warning(f"[{model.model_id}] Head was built with neurons={model.head.neurons}, "
                       f"dropout={model.head.dropout}; hyperparameters ask for "
                       f"neurons={params.neurons}, dropout={params.dropout}")
    train_records = manifest.split_records(Split.TRAIN)
    val_records = manifest.split_records(Split.VAL)
    logger.info(f"[{model.model_id}] Training on {len(train_records)} records, "
                f"validating on {len(val_records)}, {params.model_dump()}")
    history = fit_records(model, train_records, val_records, params, seed)
    if history.epochs_run:
        model.provenance.update({
            "manifest_hash": manifest_hash(manifest),
            "hyperparams": params.model_dump(),
            "seed": seed,
            # kernels may still differ across hardware and library builds
            "nondeterministic_backend": True,
        })
    return model, history


def predict_records(model: TrainableModel, records: Sequence[ImageRecord], batch_size: int = 32) -> np.ndarray:
    chunks = []
    for start in range(0, len(records), batch_size):
        images = [load_image(r.path) for r in records[start:start + batch_size]]
        chunks.append(predict(model, images, batch_size=batch_size))
    return np.concatenate(chunks) if chunks else np.zeros((0,), dtype=np.float32)


def evaluate_predictions(model_id: str, mode: Mode, y_true: Iterable[float], probabilities: Iterable[float],
                         threshold: float = 0.5, manifest_digest: str = "", seed: int = 0) -> EvalReport:
    y_true = np.asarray(list(y_true), dtype=np.int64)
    probabilities = np.asarray(list(probabilities), dtype=np.float64)
    if len(y_true) == 0:
        raise EmptyTestSplit("no test predictions to evaluate")
    y_pred = (probabilities >= threshold).astype(np.int64)

    tn, fp, fn, tp = (int(v) for v in confusion_matrix(y_true, y_pred, labels=[0, 1]).ravel())
    n = len(y_true)
    clipped = np.clip(probabilities, PROBABILITY_EPS, 1.0 - PROBABILITY_EPS)
    return EvalReport(
        model_id=model_id,
        mode=mode,
        accuracy=(tp + tn) / n,
        loss=float(log_loss(y_true, clipped, labels=[0, 1])),
        confusion=Confusion(tp=tp, fp=fp, fn=fn, tn=tn),
        precision=float(precision_score(y_true, y_pred, labels=[0, 1], zero_division=0)),
        recall=float(recall_score(y_true, y_pred, labels=[0, 1], zero_division=0)),
        f1=float(f1_score(y_true, y_pred, labels=[0, 1], zero_division=0)),
        n_test=n,
        threshold=threshold,
        manifest_hash=manifest_digest,
        seed=seed,
    )


def evaluate(model: TrainableModel, manifest: Manifest, threshold: float = 0.5, seed: int = 0) -> EvalReport:
    test_records = manifest.split_records(Split.TEST)
    if not test_records:
        raise EmptyTestSplit("manifest has no TEST records")
    leaked = model.seen_record_ids.intersection(r.id for r in test_records)
    if leaked:
        raise DataLeakage(f"{len(leaked)} TEST records were seen during training, e.g. {sorted(leaked)[0]}")

    probabilities = predict_records(model, test_records)
    report = evaluate_predictions(
        model.model_id, model.mode, label_vector(test_records), probabilities,
        threshold=threshold, manifest_digest=manifest_hash(manifest), seed=seed,
    )
    eval_accuracy.labels(model_id=model.model_id).set(report.accuracy)
    logger.info(f"[{model.model_id}] Test accuracy {report.accuracy:.4f}, loss {report.loss:.4f} "
                f"on {report.n_test} records")
    return report


def keras_fold_trainer(params: HyperParams, train_records: List[ImageRecord], val_records: List[ImageRecord],
                       backbone: BackboneSpec, seed: int) -> Tuple[float, float]:
    """Grid-search trainer: fit a fresh feature-extraction model on one fold, score the held-out fold.

    Calls are serialised within a process; run trials in separate processes
    (prefork Celery workers) to train in parallel.
    """
    with _keras_lock:
        tf.keras.backend.clear_session()
        try:
            model = build_model(backbone, HeadConfig(neurons=params.neurons, dropout=params.dropout), seed=seed)
            fit_records(model, train_records, val_records, params, seed)
            probabilities = predict_records(model, val_records)
            y_true = label_vector(val_records)
            accuracy = float(np.mean((probabilities >= 0.5) == (y_true == 1.0)))
            error = float(log_loss(y_true, np.clip(probabilities, PROBABILITY_EPS, 1.0 - PROBABILITY_EPS),
                                   labels=[0, 1]))
            return accuracy, error
        finally:
            tf.keras.backend.clear_session()
