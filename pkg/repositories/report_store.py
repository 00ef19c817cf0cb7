import json
import os
from typing import Any, Dict, List

import pandas as pd
from pydantic import ValidationError

from errors import ConfigInvalid
from models.report import EvalReport


def _ensure_parent(path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def save_report(report: EvalReport, path: str) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.model_dump(mode="json"), f, indent=2, sort_keys=True)
    return path


def load_report(path: str) -> EvalReport:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return EvalReport.model_validate(json.load(f))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise ConfigInvalid(f"cannot read report {path}: {e}") from e


def write_json(data: Any, path: str) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
    return path


def write_csv(rows: List[Dict[str, Any]], columns: List[str], path: str) -> str:
    _ensure_parent(path)
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False)
    return path
