import math
from types import SimpleNamespace

import numpy as np
import pytest

pytest.importorskip("tensorflow")

from errors import DataLeakage, EmptyTestSplit, EmptyTrainSplit, EmptyValSplit  # noqa: E402
from models.backbone import HeadConfig, Mode  # noqa: E402
from models.dataset import Split, SplitRatios  # noqa: E402
from models.search import HyperGrid, HyperParams  # noqa: E402
from services.dataset_service import assign_splits, ingest_dataset  # noqa: E402
from services.model_zoo import backbone_spec, build_model  # noqa: E402
from services.search_service import run_grid_search  # noqa: E402
from services.train_service import (  # noqa: E402
    evaluate, evaluate_predictions, fit_records, keras_fold_trainer, label_vector, train,
)


def _confusion_predictions(tp, fp, fn, tn):
    y_true = [1] * tp + [0] * fp + [1] * fn + [0] * tn
    probabilities = [0.9] * tp + [0.8] * fp + [0.2] * fn + [0.1] * tn
    return y_true, probabilities


def test_evaluate_predictions_from_confusion():
    y_true, probabilities = _confusion_predictions(40, 8, 6, 46)
    report = evaluate_predictions("vgg16-feature_extract", Mode.FEATURE_EXTRACT, y_true, probabilities)
    assert (report.confusion.tp, report.confusion.fp, report.confusion.fn, report.confusion.tn) == (40, 8, 6, 46)
    assert report.accuracy == pytest.approx(0.86)
    assert report.precision == pytest.approx(40 / 48)
    assert report.recall == pytest.approx(40 / 46)
    assert report.f1 == pytest.approx(2 * 40 / (2 * 40 + 8 + 6))
    assert report.n_test == 100


def test_evaluate_predictions_extremes():
    perfect = evaluate_predictions("m", Mode.FEATURE_EXTRACT, [1, 0, 1, 0], [1.0, 0.0, 1.0, 0.0])
    assert perfect.accuracy == 1.0
    assert perfect.loss < 1e-6

    coin = evaluate_predictions("m", Mode.FEATURE_EXTRACT, [1, 0, 1, 0], [0.5] * 4)
    assert coin.loss == pytest.approx(math.log(2))
    assert coin.confusion.fp == 2 and coin.recall == 1.0

    strict = evaluate_predictions("m", Mode.FEATURE_EXTRACT, [1, 0, 1, 0], [0.5] * 4, threshold=0.6)
    assert strict.confusion.tp == 0 and strict.precision == 0.0

    with pytest.raises(EmptyTestSplit):
        evaluate_predictions("m", Mode.FEATURE_EXTRACT, [], [])


def test_zero_epochs_is_a_no_op():
    history = fit_records(None, [], [], HyperParams(epochs=0), seed=0)
    assert history.epochs_run == 0 and history.train_loss == []


def test_fit_requires_train_and_val(manifest_factory):
    records = assign_splits(manifest_factory(5, 5), SplitRatios(), 0).split_records(Split.TRAIN)
    with pytest.raises(EmptyTrainSplit):
        fit_records(None, [], records, HyperParams(epochs=1), seed=0)
    with pytest.raises(EmptyValSplit):
        fit_records(None, records, [], HyperParams(epochs=1), seed=0)


def test_evaluate_refuses_leaked_test_records(manifest_factory):
    manifest = assign_splits(manifest_factory(5, 5), SplitRatios(), 0)
    leaked = manifest.split_records(Split.TEST)[0].id
    model = SimpleNamespace(seen_record_ids={leaked}, model_id="m", mode=Mode.FEATURE_EXTRACT)
    with pytest.raises(DataLeakage):
        evaluate(model, manifest)


def test_label_vector(manifest_factory):
    records = manifest_factory(2, 3).records
    assert label_vector(records).tolist() == [1.0, 1.0, 0.0, 0.0, 0.0]


@pytest.fixture
def small_manifest(image_tree):
    root = image_tree(n_covid=5, n_normal=5)
    return assign_splits(ingest_dataset(str(root)), SplitRatios(), 3)


@pytest.mark.slow
def test_feature_extraction_keeps_backbone_frozen(small_manifest):
    params = HyperParams(epochs=1, batch_size=4, dropout=0.1, neurons=8)
    model = build_model(backbone_spec("VGG16", pretrained=False), HeadConfig(neurons=8, dropout=0.1), seed=0)
    backbone_before = model.backbone_weights()
    head_before = model.head_weights()

    model, history = train(model, small_manifest, params, seed=0)
    assert history.epochs_run == 1
    assert all(np.array_equal(a, b) for a, b in zip(backbone_before, model.backbone_weights()))
    assert any(not np.array_equal(a, b) for a, b in zip(head_before, model.head_weights()))

    test_ids = {r.id for r in small_manifest.split_records(Split.TEST)}
    assert not model.seen_record_ids & test_ids
    assert model.provenance["seed"] == 0

    report = evaluate(model, small_manifest, seed=0)
    assert report.n_test == len(test_ids)
    assert report.model_id == "vgg16-feature_extract"


@pytest.mark.slow
def test_zero_epoch_training_leaves_weights(small_manifest):
    model = build_model(backbone_spec("VGG16", pretrained=False), HeadConfig(neurons=8), seed=0)
    before = [w.copy() for w in model.keras_model.get_weights()]
    model, history = train(model, small_manifest, HyperParams(epochs=0, neurons=8), seed=0)
    assert history.epochs_run == 0
    assert all(np.array_equal(a, b) for a, b in zip(before, model.keras_model.get_weights()))


@pytest.mark.slow
def test_fold_trainer_scores_held_out_records(small_manifest):
    records = small_manifest.split_records(Split.TRAIN)
    params = HyperParams(epochs=1, batch_size=4, neurons=8)
    accuracy, error = keras_fold_trainer(params, records[:5], records[5:], backbone_spec("VGG16", pretrained=False), 0)
    assert 0.0 <= accuracy <= 1.0
    assert error >= 0.0


@pytest.mark.slow
def test_parallel_keras_trials_match_sequential_run(image_tree):
    manifest = assign_splits(ingest_dataset(str(image_tree(n_covid=6, n_normal=6))), SplitRatios(), 3)
    grid = HyperGrid(epochs_set=[1], batch_set=[4], dropout_set=[0.1, 0.2], neurons_set=[4, 8])
    spec = backbone_spec("RESNET50", pretrained=False)

    sequential, _ = run_grid_search(grid, spec, manifest, k=2, seed=0, trainer=keras_fold_trainer)
    parallel, _ = run_grid_search(grid, spec, manifest, k=2, seed=0, trainer=keras_fold_trainer, workers=4)

    assert all(r.ok for r in sequential + parallel), [r.error for r in sequential + parallel]
    for one, many in zip(sequential, parallel):
        assert many.key == one.key
        assert many.fold_accuracies == one.fold_accuracies
        assert many.fold_errors == pytest.approx(one.fold_errors, rel=1e-3)
