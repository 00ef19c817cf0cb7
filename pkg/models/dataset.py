from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Label(str, Enum):
    COVID = "COVID"
    NON_COVID = "NON_COVID"


class Split(str, Enum):
    TRAIN = "TRAIN"
    TEST = "TEST"
    VAL = "VAL"
    UNASSIGNED = "UNASSIGNED"


# label_rule value for directories that are not part of the binary task
SKIP = "SKIP"

DEFAULT_LABEL_RULE: Dict[str, str] = {"COVID": Label.COVID.value, "Normal": Label.NON_COVID.value}


class ImageRecord(BaseModel):
    """One labelled ECG scan on disk."""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1)
    path: str
    label: Label
    width: int = Field(..., gt=0)
    height: int = Field(..., gt=0)
    split: Split = Split.UNASSIGNED
    fold: Optional[int] = Field(default=None, ge=0)
    parent_id: Optional[str] = None

    @property
    def is_augmented(self) -> bool:
        return self.parent_id is not None


class SplitRatios(BaseModel):
    model_config = ConfigDict(frozen=True)

    train: float = Field(default=0.7, ge=0)
    test: float = Field(default=0.2, ge=0)
    val: float = Field(default=0.1, ge=0)

    @model_validator(mode="after")
    def _sums_to_one(self):
        total = self.train + self.test + self.val
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1.0, got {total}")
        return self

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.train, self.test, self.val)


class FoldAssignment(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=2)
    fold_of: Dict[str, int]

    @model_validator(mode="after")
    def _folds_in_range(self):
        bad = [rid for rid, f in self.fold_of.items() if not 0 <= f < self.k]
        if bad:
            raise ValueError(f"fold index out of range for {bad[:3]}")
        return self

    def fold_sizes(self) -> List[int]:
        sizes = [0] * self.k
        for f in self.fold_of.values():
            sizes[f] += 1
        return sizes

    def members(self, fold: int) -> List[str]:
        return sorted(rid for rid, f in self.fold_of.items() if f == fold)


class Manifest(BaseModel):
    """Ordered, immutable collection of image records plus the settings that produced it."""
    model_config = ConfigDict(frozen=True)

    records: Tuple[ImageRecord, ...]
    source_root: str
    seed: int = 0
    ratios: Optional[SplitRatios] = None
    k: Optional[int] = None
    warnings: Tuple[str, ...] = ()
    tool_version: str = ""

    @model_validator(mode="after")
    def _unique_ids(self):
        seen = set()
        for record in self.records:
            if record.id in seen:
                raise ValueError(f"duplicate record id {record.id}")
            seen.add(record.id)
        return self

    @property
    def class_counts(self) -> Dict[Label, int]:
        counts = {label: 0 for label in Label}
        for record in self.records:
            counts[record.label] += 1
        return counts

    @property
    def is_split(self) -> bool:
        return bool(self.records) and all(r.split != Split.UNASSIGNED for r in self.records)

    def by_id(self) -> Dict[str, ImageRecord]:
        return {r.id: r for r in self.records}

    def split_records(self, split: Split, include_augmented: bool = True) -> List[ImageRecord]:
        return [
            r for r in self.records
            if r.split == split and (include_augmented or not r.is_augmented)
        ]

    def replace_records(self, records, **changes) -> "Manifest":
        return type(self)(**{**dict(self), "records": tuple(records), **changes})
