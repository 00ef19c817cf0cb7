"""Run configuration: one serializable document covering every pipeline stage."""

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from models.augment import AugmentationSpec
from models.backbone import BackboneName, Mode, PolicyKind
from models.dataset import DEFAULT_LABEL_RULE, SplitRatios
from models.image import DensityMode, Interpolation, Normalize
from models.search import HyperGrid


class DatasetBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    root: Optional[str] = None
    labels: Dict[str, str] = dict(DEFAULT_LABEL_RULE)
    ratios: SplitRatios = SplitRatios()
    k: int = Field(default=5, ge=2)


class PreprocessBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    crop_rect: Optional[Tuple[int, int, int, int]] = None
    threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    density_mode: DensityMode = DensityMode.LUMINANCE
    target: Tuple[int, int] = (987, 987)
    interpolation: Interpolation = Interpolation.BILINEAR
    normalize: Normalize = Normalize.NONE
    out_dir: Optional[str] = None


class AugmentBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spec: AugmentationSpec = AugmentationSpec()
    out_dir: Optional[str] = None


class ModelBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    backbone: BackboneName = BackboneName.VGG16
    pretrained: bool = True
    mode: Mode = Mode.FEATURE_EXTRACT
    policy: PolicyKind = PolicyKind.LAST_BLOCK
    n_layers: int = Field(default=0, ge=0)


class SearchBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grid: HyperGrid = HyperGrid()
    k: int = Field(default=5, ge=2)
    workers: int = Field(default=1, ge=1)
    executor: str = Field(default="local", pattern="^(local|celery)$")
    store: Optional[str] = None
    trainer: str = "services.train_service:keras_fold_trainer"
    retry_failed: bool = False


class TrainBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=25, ge=0)
    batch_size: int = Field(default=32, gt=0)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    neurons: int = Field(default=32, gt=0)
    learning_rate: float = Field(default=0.001, gt=0.0)
    checkpoint: Optional[str] = None
    threshold: float = Field(default=0.5, ge=0.0, le=1.0)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 42
    log_level: str = "INFO"
    manifest: Optional[str] = None
    dataset: DatasetBlock = DatasetBlock()
    preprocess: PreprocessBlock = PreprocessBlock()
    augment: AugmentBlock = AugmentBlock()
    model: ModelBlock = ModelBlock()
    search: SearchBlock = SearchBlock()
    train: TrainBlock = TrainBlock()
    reports: List[str] = []
