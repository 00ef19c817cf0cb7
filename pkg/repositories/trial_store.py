"""Append-only JSON Lines store of grid-search trials, keyed by a canonical params hash."""

import json
import logging
import os
import threading
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from models.search import TrialResult

logger = logging.getLogger(__name__)


class TrialStore:
    """Single-writer store; the newest line for a key wins when reading back.

    Every appended line is stamped with the store's provenance (tool version,
    config hash, manifest hash) unless the result already carries one.
    """

    def __init__(self, path: str, provenance: Optional[Dict[str, Any]] = None):
        self.path = path
        self.provenance = dict(provenance or {})
        self._lock = threading.Lock()

    def load(self) -> Dict[str, TrialResult]:
        results: Dict[str, TrialResult] = {}
        if not os.path.exists(self.path):
            return results
        with open(self.path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    result = TrialResult.model_validate(json.loads(line))
                except (json.JSONDecodeError, ValidationError) as e:
                    # a search killed mid-write leaves a torn last line
                    logger.warning(f"Skipping unreadable line {lineno} in {self.path}: {e}")
                    continue
                results[result.key] = result
        return results

    def all(self) -> List[TrialResult]:
        return sorted(self.load().values(), key=lambda r: r.order)

    def _ends_torn(self) -> bool:
        if not os.path.exists(self.path) or os.path.getsize(self.path) == 0:
            return False
        with open(self.path, "rb") as f:
            f.seek(-1, os.SEEK_END)
            return f.read(1) != b"\n"

    def append(self, result: TrialResult) -> None:
        if self.provenance and not result.provenance:
            result = result.model_copy(update={"provenance": self.provenance})
        line = json.dumps(result.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        with self._lock:
            os.makedirs(os.path.dirname(os.path.abspath(self.path)), exist_ok=True)
            if self._ends_torn():
                line = "\n" + line
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()
                os.fsync(f.fileno())
