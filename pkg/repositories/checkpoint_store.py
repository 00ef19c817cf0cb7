"""Checkpoint directory layout: weights file, metadata JSON and training history."""

import json
import os
from typing import Any, Dict

from errors import ConfigInvalid
from models.report import TrainHistory

WEIGHTS_FILE = "model.weights.h5"
METADATA_FILE = "metadata.json"
HISTORY_FILE = "history.json"


def weights_path(directory: str) -> str:
    return os.path.join(directory, WEIGHTS_FILE)


def write_metadata(directory: str, metadata: Dict[str, Any]) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, METADATA_FILE)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(metadata, f, indent=2, sort_keys=True)
    return path


def read_metadata(directory: str) -> Dict[str, Any]:
    path = os.path.join(directory, METADATA_FILE)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigInvalid(f"cannot read checkpoint metadata {path}: {e}") from e


def write_history(directory: str, history: TrainHistory) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, HISTORY_FILE)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(history.model_dump(), f, indent=2)
    return path
