from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class AugmentationSpec(BaseModel):
    """Label-preserving transform families: brightness shift, zoom, mirroring."""
    model_config = ConfigDict(frozen=True)

    brightness_delta: Tuple[float, float] = (-0.1, 0.1)
    zoom: Tuple[float, float] = (0.9, 1.1)
    mirror_horizontal: bool = True
    mirror_vertical: bool = True
    copies_per_image: int = Field(default=3, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_ranges(self):
        lo, hi = self.brightness_delta
        if lo > hi or lo < -1.0 or hi > 1.0:
            raise ValueError(f"brightness range must be ordered within [-1, 1], got {self.brightness_delta}")
        lo, hi = self.zoom
        if lo > hi or lo <= 0.0:
            raise ValueError(f"zoom range must be ordered and strictly positive, got {self.zoom}")
        return self
