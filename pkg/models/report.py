from typing import Any, Dict, List

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.backbone import Mode


class TrainHistory(BaseModel):
    model_config = ConfigDict(frozen=True)

    train_loss: List[float] = []
    train_accuracy: List[float] = []
    val_loss: List[float] = []
    val_accuracy: List[float] = []
    epochs_run: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _aligned(self):
        for name in ("train_loss", "train_accuracy", "val_loss", "val_accuracy"):
            values = getattr(self, name)
            if len(values) != self.epochs_run:
                raise ValueError(f"{name} has {len(values)} entries, expected {self.epochs_run}")
            if name.endswith("accuracy") and any(not 0.0 <= v <= 1.0 for v in values):
                raise ValueError(f"{name} outside [0, 1]")
            if name.endswith("loss") and any(v < 0.0 for v in values):
                raise ValueError(f"{name} is negative")
        return self


class Confusion(BaseModel):
    model_config = ConfigDict(frozen=True)

    tp: int = Field(..., ge=0)
    fp: int = Field(..., ge=0)
    fn: int = Field(..., ge=0)
    tn: int = Field(..., ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


class EvalReport(BaseModel):
    model_config = ConfigDict(frozen=True, protected_namespaces=())

    model_id: str
    mode: Mode
    accuracy: float = Field(..., ge=0.0, le=1.0)
    loss: float = Field(..., ge=0.0)
    confusion: Confusion
    precision: float = Field(..., ge=0.0, le=1.0)
    recall: float = Field(..., ge=0.0, le=1.0)
    f1: float = Field(..., ge=0.0, le=1.0)
    n_test: int = Field(..., gt=0)
    threshold: float = 0.5
    manifest_hash: str = ""
    seed: int = 0
    provenance: Dict[str, Any] = {}

    @model_validator(mode="after")
    def _matches_confusion(self):
        if self.confusion.total != self.n_test:
            raise ValueError(f"confusion counts sum to {self.confusion.total}, n_test is {self.n_test}")
        expected = (self.confusion.tp + self.confusion.tn) / self.n_test
        if abs(self.accuracy - expected) > 1e-12:
            raise ValueError("accuracy does not match the confusion matrix")
        return self
