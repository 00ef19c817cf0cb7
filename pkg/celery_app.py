import logging

from celery import Celery

from config import CELERY_ALWAYS_EAGER, REDIS_URL

logger = logging.getLogger(__name__)

celery = Celery(
    "ecg_pipeline",
    broker=REDIS_URL,
    backend=REDIS_URL,
)

# Eager mode runs tasks in the calling process, so the celery executor works
# without a broker. Workers take one trial at a time: a trial owns a model.
celery.conf.update(
    task_serializer="json",
    accept_content=["json"],
    result_serializer="json",
    timezone="UTC",
    enable_utc=True,
    task_always_eager=CELERY_ALWAYS_EAGER,
    task_eager_propagates=True,
    worker_prefetch_multiplier=1,
    task_acks_late=True,
)


@celery.task(bind=True, name="ecg_pipeline.run_trial")
def run_trial_task(self, trainer_ref: str, manifest_path: str, backbone: dict, params: dict,
                   order: int, assignment: dict, seed: int) -> dict:
    """Cross-validate one grid point on a worker; returns the TrialResult as JSON."""
    from models.backbone import BackboneSpec
    from models.dataset import FoldAssignment
    from models.search import HyperParams
    from repositories.manifest_store import load_manifest
    from services.search_service import execute_trial, resolve_trainer

    logger.info(f"[{self.request.id}] Trial {order} received")
    result = execute_trial(
        HyperParams.model_validate(params),
        order,
        load_manifest(manifest_path),
        FoldAssignment.model_validate(assignment),
        BackboneSpec.model_validate(backbone),
        seed,
        resolve_trainer(trainer_ref),
    )
    return result.model_dump(mode="json")
