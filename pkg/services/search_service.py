"""
Exhaustive grid search with k-fold cross-validation.

Every grid point is one trial; a trial trains and scores the model once per
fold and records the fold scores plus their means. Trials are persisted to an
append-only store as they finish, so a killed search resumes where it stopped.
"""

import hashlib
import importlib
import itertools
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Dict, List, Optional, Tuple

from pydantic import ValidationError

from errors import ConfigInvalid, DataLeakage, EmptyGrid, EmptyResults
from metrics import active_trials, trial_duration_seconds, trials_total
from models.backbone import BackboneSpec
from models.dataset import FoldAssignment, ImageRecord, Manifest
from models.search import HyperGrid, HyperParams, TrialResult, TrialStatus
from repositories.manifest_store import manifest_hash
from repositories.trial_store import TrialStore
from services.dataset_service import assignment_from_manifest, fold_records, kfold_partition

logger = logging.getLogger(__name__)

# (params, fold training records, fold held-out records, backbone, seed) -> (accuracy, error)
Trainer = Callable[[HyperParams, List[ImageRecord], List[ImageRecord], BackboneSpec, int], Tuple[float, float]]


def enumerate_grid(grid: HyperGrid) -> List[HyperParams]:
    """All combinations, epochs varying slowest and learning rate fastest."""
    axes = (grid.epochs_set, grid.batch_set, grid.dropout_set, grid.neurons_set, grid.lr_set)
    if any(len(axis) == 0 for axis in axes):
        raise EmptyGrid("every hyperparameter axis needs at least one value")
    combos: List[HyperParams] = []
    seen = set()
    for epochs, batch_size, dropout, neurons, lr in itertools.product(*axes):
        try:
            params = HyperParams(epochs=epochs, batch_size=batch_size, dropout=dropout,
                                 neurons=neurons, learning_rate=lr)
        except ValidationError as e:
            raise ConfigInvalid(f"invalid grid point {(epochs, batch_size, dropout, neurons, lr)}: {e}") from e
        if params not in seen:
            seen.add(params)
            combos.append(params)
    return combos


def _canonical(payload: Dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def trial_key(params: HyperParams, backbone: str, k: int, seed: int, manifest_digest: str = "") -> str:
    """Identity of a trial: the same grid point on another manifest is another trial."""
    payload = {"params": params.model_dump(), "backbone": backbone, "k": k, "seed": seed,
               "manifest": manifest_digest}
    return hashlib.sha256(_canonical(payload)).hexdigest()[:16]


def trial_seed(seed: int, params: HyperParams) -> int:
    """Seed that depends only on the search seed and the grid point, not on execution order."""
    digest = hashlib.sha256(_canonical({"seed": seed, "params": params.model_dump()})).digest()
    return int.from_bytes(digest[:4], "big") & 0x7FFFFFFF


def resolve_trainer(ref: str) -> Trainer:
    """Import a trainer from a `package.module:function` reference."""
    module_name, sep, attr = ref.partition(":")
    if not sep:
        raise ConfigInvalid(f"trainer reference {ref!r} must look like module:function")
    try:
        return getattr(importlib.import_module(module_name), attr)
    except (ImportError, AttributeError) as e:
        raise ConfigInvalid(f"cannot import trainer {ref!r}: {e}") from e


def execute_trial(params: HyperParams, order: int, manifest: Manifest, assignment: FoldAssignment,
                  backbone: BackboneSpec, seed: int, trainer: Trainer) -> TrialResult:
    """Cross-validate one grid point. Trainer failures produce a FAILED result, never an exception."""
    k = assignment.k
    key = trial_key(params, backbone.name.value, k, seed, manifest_hash(manifest))
    fold_seed = trial_seed(seed, params)
    accuracies: List[float] = []
    errors: List[float] = []
    start_time = time.time()
    active_trials.inc()
    logger.info(f"[{key}] Trial {order} started: {params.model_dump()}")
    try:
        for fold in range(k):
            train_records, held_out = fold_records(manifest, assignment, fold)
            seen = {r.id for r in train_records} | {r.parent_id for r in train_records if r.parent_id}
            if seen.intersection(r.id for r in held_out):
                raise DataLeakage(f"fold {fold} held-out records appear in its training set")
            accuracy, error = trainer(params, train_records, held_out, backbone, fold_seed)
            accuracies.append(float(accuracy))
            errors.append(float(error))
            logger.info(f"[{key}] Fold {fold + 1}/{k}: accuracy={accuracy:.4f} error={error:.4f}")
        result = TrialResult(
            key=key, order=order, params=params, backbone=backbone.name.value, k=k, seed=seed,
            fold_accuracies=accuracies, fold_errors=errors,
            mean_accuracy=sum(accuracies) / k, mean_error=sum(errors) / k,
            wall_time=time.time() - start_time,
        )
        trials_total.labels(status="ok").inc()
        logger.info(f"[{key}] Trial done: mean accuracy {result.mean_accuracy:.4f}, mean error {result.mean_error:.4f}")
        return result
    except Exception as exc:
        logger.exception(f"[{key}] Trial failed: {exc}")
        trials_total.labels(status="failed").inc()
        return TrialResult(
            key=key, order=order, params=params, backbone=backbone.name.value, k=k, seed=seed,
            status=TrialStatus.FAILED, fold_accuracies=accuracies, fold_errors=errors,
            wall_time=time.time() - start_time, error=f"{type(exc).__name__}: {exc}",
        )
    finally:
        active_trials.dec()
        trial_duration_seconds.observe(time.time() - start_time)


def select_best(results: List[TrialResult]) -> Optional[HyperParams]:
    """Highest mean accuracy; ties go to the earliest grid point."""
    best: Optional[TrialResult] = None
    for result in sorted(results, key=lambda r: r.order):
        if result.ok and (best is None or result.mean_accuracy > best.mean_accuracy):
            best = result
    return best.params if best else None


def rank_trials(results: List[TrialResult]) -> List[TrialResult]:
    """Accuracy descending, then error ascending, then grid order; failed trials last."""
    if not results:
        raise EmptyResults("no trial results to rank")
    return sorted(results, key=lambda r: (
        0 if r.ok else 1,
        -(r.mean_accuracy if r.ok else 0.0),
        r.mean_error if r.ok else 0.0,
        r.order,
    ))


def _run_local(pending, manifest, assignment, backbone, seed, trainer, workers, record) -> None:
    if workers <= 1:
        for order, params in pending:
            record(execute_trial(params, order, manifest, assignment, backbone, seed, trainer))
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(execute_trial, params, order, manifest, assignment, backbone, seed, trainer)
            for order, params in pending
        ]
        for future in as_completed(futures):
            record(future.result())


def _run_celery(pending, manifest_path, trainer_ref, backbone, assignment, seed, record) -> None:
    from celery_app import run_trial_task

    if not manifest_path or not trainer_ref:
        raise ConfigInvalid("the celery executor needs a manifest path and a trainer reference")
    submitted = [
        run_trial_task.delay(
            trainer_ref, manifest_path, backbone.model_dump(mode="json"), params.model_dump(),
            order, assignment.model_dump(), seed,
        )
        for order, params in pending
    ]
    logger.info(f"Dispatched {len(submitted)} trials to Celery workers")
    for async_result in submitted:
        record(TrialResult.model_validate(async_result.get()))


def run_grid_search(grid: HyperGrid, backbone: BackboneSpec, manifest: Manifest, k: int, seed: int,
                    trainer: Optional[Trainer] = None, store: Optional[TrialStore] = None,
                    workers: int = 1, executor: str = "local", retry_failed: bool = False,
                    manifest_path: Optional[str] = None, trainer_ref: Optional[str] = None,
                    ) -> Tuple[List[TrialResult], Optional[HyperParams]]:
    """Run every grid point not already in the store; returns all results in grid order and the best params."""
    grid_points = enumerate_grid(grid)
    if trainer is None:
        if not trainer_ref:
            raise ConfigInvalid("a trainer or trainer reference is required")
        trainer = resolve_trainer(trainer_ref)

    assignment = assignment_from_manifest(manifest)
    if assignment is None or assignment.k != k:
        assignment = kfold_partition(manifest, k, seed)

    digest = manifest_hash(manifest)
    done: Dict[str, TrialResult] = store.load() if store else {}
    results: Dict[int, TrialResult] = {}
    pending: List[Tuple[int, HyperParams]] = []
    for order, params in enumerate(grid_points):
        previous = done.get(trial_key(params, backbone.name.value, k, seed, digest))
        if previous is not None and (previous.ok or not retry_failed):
            results[order] = previous.model_copy(update={"order": order})
            trials_total.labels(status="skipped").inc()
        else:
            pending.append((order, params))
    logger.info(f"Grid search over {len(grid_points)} points for {backbone.name.value}: "
                f"{len(results)} already in store, {len(pending)} to run with k={k}")

    def record(result: TrialResult) -> None:
        results[result.order] = result
        if store:
            store.append(result)

    if executor == "celery":
        _run_celery(pending, manifest_path, trainer_ref, backbone, assignment, seed, record)
    elif executor == "local":
        _run_local(pending, manifest, assignment, backbone, seed, trainer, workers, record)
    else:
        raise ConfigInvalid(f"unknown executor {executor!r}")

    ordered = [results[order] for order in sorted(results)]
    best = select_best(ordered)
    if best is None:
        logger.error("Every trial failed; no best configuration")
    else:
        logger.info(f"Best configuration: {best.model_dump()}")
    return ordered, best
