"""
Settings for the pipeline.

Process-level settings come from environment variables (single source of
truth for broker and telemetry switches). Run-level settings live in a YAML
file that maps onto `models.config.RunConfig`; explicitly given CLI flags
override file values.
"""

import hashlib
import json
import logging
import os
from typing import Any, Dict, Optional

import yaml
from pydantic import ValidationError

from errors import ConfigInvalid, PipelineError, RatioInvalid, SpecInvalid
from models.config import RunConfig

logger = logging.getLogger(__name__)

REDIS_URL = os.getenv("REDIS_URL", "redis://localhost:6379/0")
CELERY_ALWAYS_EAGER = os.getenv("CELERY_ALWAYS_EAGER", "true").lower() == "true"
OTEL_ENABLED = os.getenv("OTEL_ENABLED", "true").lower() == "true"
PROMETHEUS_PORT = int(os.getenv("PROMETHEUS_PORT", "8001"))
METRICS_TEXTFILE = os.getenv("METRICS_TEXTFILE", "")
PROMETHEUS_MULTIPROC_DIR = os.getenv("PROMETHEUS_MULTIPROC_DIR", "")
DATA_ROOT = os.getenv("ECG_DATA_ROOT", "")
SERVICE_NAME = os.getenv("SERVICE_NAME", "ecg-covid-pipeline")
SERVICE_VERSION = os.getenv("SERVICE_VERSION", "1.0.0")
ENVIRONMENT = os.getenv("ENVIRONMENT", "development")


def load_run_config(path: Optional[str] = None) -> RunConfig:
    """Read a YAML run config; a missing path yields the defaults."""
    if not path:
        return RunConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigInvalid(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigInvalid(f"config {path} is not valid YAML: {e}") from e
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise _as_pipeline_error(e, f"config {path}: ") from e


def apply_overrides(cfg: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
    """Return a new config with dotted-path overrides applied; None values are ignored."""
    data = cfg.model_dump(mode="json")
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = data
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise _as_pipeline_error(e) from e


def config_hash(cfg) -> str:
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def provenance(cfg, include_config: bool = True, **extra) -> Dict[str, Any]:
    """Metadata block stamped into every output file; per-line stamps leave out the config body."""
    block = {
        "tool_version": SERVICE_VERSION,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
    }
    if include_config:
        block["config"] = cfg.model_dump(mode="json")
    block.update(extra)
    return block


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    where = ".".join(str(p) for p in err.get("loc", ()))
    return f"{where}: {err.get('msg')}" if where else str(err.get("msg"))


# validation failures under these config paths map to the stage's own error
_ERRORS_BY_PATH = (
    ("dataset.ratios", RatioInvalid),
    ("augment.spec", SpecInvalid),
)


def _as_pipeline_error(e: ValidationError, prefix: str = "") -> PipelineError:
    where = ".".join(str(p) for p in e.errors()[0].get("loc", ()))
    for path, error_class in _ERRORS_BY_PATH:
        if where.startswith(path):
            return error_class(prefix + _first_error(e))
    return ConfigInvalid(prefix + _first_error(e))
