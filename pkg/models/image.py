from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Interpolation(str, Enum):
    NEAREST = "NEAREST"
    BILINEAR = "BILINEAR"


class Normalize(str, Enum):
    NONE = "NONE"
    UNIT_RANGE = "UNIT_RANGE"


class DensityMode(str, Enum):
    LUMINANCE = "LUMINANCE"
    RED_SUPPRESS = "RED_SUPPRESS"


class PixelImage(BaseModel):
    """Row-major image with intensities in [0, 1], stored as (height, width, channels) float32."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def _as_float_array(cls, value):
        arr = np.array(value, dtype=np.float32, copy=True)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected HxW, HxWx1 or HxWx3 data, got shape {arr.shape}")
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("image must have positive width and height")
        if not np.isfinite(arr).all() or arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        arr.setflags(write=False)
        return arr

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    def same_pixels(self, other: "PixelImage") -> bool:
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)


class PreprocessConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    crop_rect: Optional[Tuple[int, int, int, int]] = None  # x, y, w, h
    density_threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    density_mode: DensityMode = DensityMode.LUMINANCE
    target_size: Tuple[int, int] = (987, 987)  # width, height
    interpolation: Interpolation = Interpolation.BILINEAR
    normalize: Normalize = Normalize.NONE

    @model_validator(mode="after")
    def _check_geometry(self):
        if min(self.target_size) <= 0:
            raise ValueError(f"target_size components must be positive, got {self.target_size}")
        if self.crop_rect is not None:
            x, y, w, h = self.crop_rect
            if x < 0 or y < 0 or w <= 0 or h <= 0:
                raise ValueError(f"invalid crop rectangle {self.crop_rect}")
        return self
