"""JSON Lines persistence for manifests: one header line, then one line per record."""

import hashlib
import json
import logging
import os
from typing import Any, Dict, Optional

from pydantic import ValidationError

from errors import ConfigInvalid
from models.dataset import ImageRecord, Manifest, SplitRatios

logger = logging.getLogger(__name__)

RECORD_FIELDS = ("id", "path", "label", "width", "height", "split", "fold", "parent_id")


def _dumps(obj: Dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _header(manifest: Manifest) -> Dict[str, Any]:
    return {
        "kind": "header",
        "seed": manifest.seed,
        "ratios": manifest.ratios.model_dump() if manifest.ratios else None,
        "k": manifest.k,
        "source_root": manifest.source_root,
        "tool_version": manifest.tool_version,
        "class_counts": {label.value: n for label, n in manifest.class_counts.items()},
        "warnings": list(manifest.warnings),
    }


def _record_line(record: ImageRecord) -> str:
    data = record.model_dump(mode="json")
    return _dumps({name: data[name] for name in RECORD_FIELDS})


def serialize_manifest(manifest: Manifest, provenance: Optional[Dict[str, Any]] = None) -> str:
    header = _header(manifest)
    if provenance is not None:
        header["provenance"] = provenance
    lines = [_dumps(header)] + [_record_line(r) for r in manifest.records]
    return "\n".join(lines) + "\n"


def manifest_hash(manifest: Manifest) -> str:
    """Content hash; independent of provenance so identical data hashes identically."""
    return hashlib.sha256(serialize_manifest(manifest).encode("utf-8")).hexdigest()


def save_manifest(manifest: Manifest, path: str, provenance: Optional[Dict[str, Any]] = None) -> str:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize_manifest(manifest, provenance))
    logger.info(f"Manifest with {len(manifest.records)} records written to {path}")
    return manifest_hash(manifest)


def load_manifest(path: str) -> Manifest:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in (raw.strip() for raw in f) if line]
    except OSError as e:
        raise ConfigInvalid(f"cannot read manifest {path}: {e}") from e
    if not lines:
        raise ConfigInvalid(f"manifest {path} is empty")

    try:
        header = json.loads(lines[0])
        if header.get("kind") != "header":
            raise ConfigInvalid(f"manifest {path} has no header line")
        records = [ImageRecord.model_validate(json.loads(line)) for line in lines[1:]]
        return Manifest(
            records=tuple(records),
            source_root=header.get("source_root", ""),
            seed=header.get("seed", 0),
            ratios=SplitRatios(**header["ratios"]) if header.get("ratios") else None,
            k=header.get("k"),
            warnings=tuple(header.get("warnings", ())),
            tool_version=header.get("tool_version", ""),
        )
    except (json.JSONDecodeError, ValidationError) as e:
        raise ConfigInvalid(f"manifest {path} is corrupt: {e}") from e
