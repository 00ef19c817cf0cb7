from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class HyperParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(default=25, ge=0)
    batch_size: int = Field(default=32, gt=0)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    neurons: int = Field(default=32, gt=0)
    learning_rate: float = Field(default=0.001, gt=0.0)


class HyperGrid(BaseModel):
    """Cartesian space swept by the grid search; defaults reproduce the VGG16 sweep."""
    model_config = ConfigDict(frozen=True)

    epochs_set: List[int] = [25, 50]
    batch_set: List[int] = [16, 32, 64]
    dropout_set: List[float] = [0.1, 0.2, 0.5]
    neurons_set: List[int] = [16, 32, 64]
    lr_set: List[float] = [0.001]

    @property
    def size(self) -> int:
        return (len(self.epochs_set) * len(self.batch_set) * len(self.dropout_set)
                * len(self.neurons_set) * len(self.lr_set))


class TrialStatus(str, Enum):
    OK = "OK"
    FAILED = "FAILED"


class TrialResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    key: str
    order: int = Field(..., ge=0)
    params: HyperParams
    backbone: str
    k: int = Field(..., ge=2)
    seed: int
    status: TrialStatus = TrialStatus.OK
    fold_accuracies: List[float] = []
    fold_errors: List[float] = []
    mean_accuracy: Optional[float] = None
    mean_error: Optional[float] = None
    wall_time: float = Field(default=0.0, ge=0.0)
    error: Optional[str] = None
    provenance: Dict[str, Any] = {}

    @model_validator(mode="after")
    def _consistent(self):
        if self.status == TrialStatus.OK:
            if len(self.fold_accuracies) != self.k or len(self.fold_errors) != self.k:
                raise ValueError(f"expected {self.k} fold scores, got {len(self.fold_accuracies)}")
            if self.mean_accuracy is None or self.mean_error is None:
                raise ValueError("completed trial needs mean accuracy and error")
            if abs(self.mean_accuracy - sum(self.fold_accuracies) / self.k) > 1e-12:
                raise ValueError("mean_accuracy is not the mean of fold accuracies")
            if self.mean_error < 0:
                raise ValueError("mean_error must be non-negative")
        return self

    @property
    def ok(self) -> bool:
        return self.status == TrialStatus.OK
