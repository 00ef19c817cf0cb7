from enum import Enum
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class BackboneName(str, Enum):
    VGG16 = "VGG16"
    VGG19 = "VGG19"
    RESNET50 = "RESNET50"
    DENSENET201 = "DENSENET201"
    INCEPTIONV3 = "INCEPTIONV3"
    INCEPTIONRESNETV2 = "INCEPTIONRESNETV2"


# width, height, channels expected by the published architectures
NATIVE_INPUT = {
    BackboneName.VGG16: (224, 224, 3),
    BackboneName.VGG19: (224, 224, 3),
    BackboneName.RESNET50: (224, 224, 3),
    BackboneName.DENSENET201: (224, 224, 3),
    BackboneName.INCEPTIONV3: (299, 299, 3),
    BackboneName.INCEPTIONRESNETV2: (299, 299, 3),
}


class Mode(str, Enum):
    FEATURE_EXTRACT = "FEATURE_EXTRACT"
    FINE_TUNE = "FINE_TUNE"


class PolicyKind(str, Enum):
    NONE = "none"
    LAST_BLOCK = "last_block"
    LAST_N_LAYERS = "last_n_layers"
    ALL = "all"


class BackboneSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: BackboneName
    pretrained: bool = True
    native_input: Tuple[int, int, int] = (0, 0, 0)

    @model_validator(mode="before")
    @classmethod
    def _fill_native_input(cls, data):
        if isinstance(data, dict) and data.get("native_input") is None and "name" in data:
            try:
                data = {**data, "native_input": NATIVE_INPUT[BackboneName(data["name"])]}
            except ValueError:
                pass  # the field validator reports the bad name
        return data

    @model_validator(mode="after")
    def _native_input_matches(self):
        if tuple(self.native_input) != NATIVE_INPUT[self.name]:
            raise ValueError(f"{self.name.value} expects input {NATIVE_INPUT[self.name]}, got {self.native_input}")
        return self


class HeadConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    neurons: int = Field(default=32, gt=0)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)


class FineTunePolicy(BaseModel):
    """Which trailing part of the backbone becomes trainable."""
    model_config = ConfigDict(frozen=True)

    kind: PolicyKind = PolicyKind.LAST_BLOCK
    n_layers: int = Field(default=0, ge=0)
