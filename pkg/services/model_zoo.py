"""
Pretrained convolutional backbones with a small dense head.

Each backbone is wrapped as: per-family input scaling -> backbone (inference
mode) -> flatten / global average pooling -> dense(relu) -> dropout ->
dense(1, sigmoid). In feature-extraction mode only the head trains; a
fine-tune policy unfreezes a trailing part of the backbone.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Set, Union

import numpy as np
import tensorflow as tf
from pydantic import ValidationError

from errors import PolicyInvalid, ShapeMismatch, UnknownBackbone, WeightsUnavailable
from models.backbone import (
    BackboneName, BackboneSpec, FineTunePolicy, HeadConfig, Mode, PolicyKind,
)
from models.image import Interpolation, PixelImage
from repositories import checkpoint_store
from services.preprocess_service import resize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BackboneEntry:
    factory: Callable[..., tf.keras.Model]
    pooling: str           # "flatten" for the VGG family, "avg" otherwise
    input_style: str       # caffe | torch | tf, the family's expected input scaling
    last_block_after: str  # layers after this one form the last convolutional block
    reference_params: int  # full architecture with the ImageNet classifier top


BACKBONES: Dict[BackboneName, BackboneEntry] = {
    BackboneName.VGG16: BackboneEntry(tf.keras.applications.VGG16, "flatten", "caffe", "block4_pool", 138_357_544),
    BackboneName.VGG19: BackboneEntry(tf.keras.applications.VGG19, "flatten", "caffe", "block4_pool", 143_667_240),
    BackboneName.RESNET50: BackboneEntry(tf.keras.applications.ResNet50, "avg", "caffe", "conv5_block2_out", 25_636_712),
    BackboneName.DENSENET201: BackboneEntry(tf.keras.applications.DenseNet201, "avg", "torch", "conv5_block31_concat", 20_242_984),
    BackboneName.INCEPTIONV3: BackboneEntry(tf.keras.applications.InceptionV3, "avg", "tf", "mixed9", 23_851_784),
    BackboneName.INCEPTIONRESNETV2: BackboneEntry(tf.keras.applications.InceptionResNetV2, "avg", "tf", "block8_9_ac", 55_873_736),
}

CAFFE_MEAN_BGR = (103.939, 116.779, 123.68)
TORCH_MEAN = (0.485, 0.456, 0.406)
TORCH_STD = (0.229, 0.224, 0.225)


class BackboneInput(tf.keras.layers.Layer):
    """Maps [0, 1] RGB input to the scaling the backbone was pretrained with."""

    def __init__(self, style: str = "caffe", **kwargs):
        super().__init__(**kwargs)
        self.style = style

    def call(self, inputs):
        if self.style == "caffe":
            bgr = tf.reverse(inputs, axis=[-1]) * 255.0
            return bgr - tf.constant(CAFFE_MEAN_BGR, dtype=inputs.dtype)
        if self.style == "torch":
            return (inputs - tf.constant(TORCH_MEAN, dtype=inputs.dtype)) / tf.constant(TORCH_STD, dtype=inputs.dtype)
        return inputs * 2.0 - 1.0

    def get_config(self):
        return {**super().get_config(), "style": self.style}


def backbone_spec(name: Union[str, BackboneName], pretrained: bool = True) -> BackboneSpec:
    try:
        if not isinstance(name, BackboneName):
            name = BackboneName(str(name).upper())
        return BackboneSpec(name=name, pretrained=pretrained)
    except (ValueError, ValidationError):
        raise UnknownBackbone(f"unknown backbone {name!r}; expected one of {[b.value for b in BackboneName]}")


def _count(weights) -> int:
    return int(sum(np.prod(w.shape) for w in weights))


@dataclass
class TrainableModel:
    backbone: BackboneSpec
    head: HeadConfig
    mode: Mode
    keras_model: tf.keras.Model
    base: tf.keras.Model
    head_param_count: int
    total_param_count: int
    policy: FineTunePolicy = field(default_factory=lambda: FineTunePolicy(kind=PolicyKind.NONE))
    seen_record_ids: Set[str] = field(default_factory=set)
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def trainable_param_count(self) -> int:
        return _count(self.keras_model.trainable_weights)

    @property
    def model_id(self) -> str:
        return f"{self.backbone.name.value.lower()}-{self.mode.value.lower()}"

    def backbone_weights(self) -> List[np.ndarray]:
        return [w.numpy().copy() for w in self.base.weights]

    def head_weights(self) -> List[np.ndarray]:
        base_ids = {id(w) for w in self.base.weights}
        return [w.numpy().copy() for w in self.keras_model.weights if id(w) not in base_ids]


def build_model(backbone: Union[BackboneSpec, str], head: Optional[HeadConfig] = None,
                mode: Mode = Mode.FEATURE_EXTRACT, policy: Optional[FineTunePolicy] = None,
                seed: int = 0) -> TrainableModel:
    if not isinstance(backbone, BackboneSpec):
        backbone = backbone_spec(backbone)
    head = head or HeadConfig()
    entry = BACKBONES[backbone.name]
    width, height, channels = backbone.native_input

    tf.keras.utils.set_random_seed(seed)
    try:
        base = entry.factory(
            include_top=False,
            weights="imagenet" if backbone.pretrained else None,
            input_shape=(height, width, channels),
        )
    except (OSError, ValueError) as e:
        # download, cache and weight-file errors; URLError and HTTPError are OSErrors
        if not backbone.pretrained:
            raise
        raise WeightsUnavailable(f"cannot load {backbone.name.value} weights: {e}") from e

    inputs = tf.keras.Input(shape=(height, width, channels), name="image")
    x = BackboneInput(entry.input_style, name="backbone_input")(inputs)
    x = base(x, training=False)
    if entry.pooling == "flatten":
        x = tf.keras.layers.Flatten(name="head_flatten")(x)
    else:
        x = tf.keras.layers.GlobalAveragePooling2D(name="head_pool")(x)
    x = tf.keras.layers.Dense(head.neurons, activation="relu", name="head_dense")(x)
    x = tf.keras.layers.Dropout(head.dropout, name="head_dropout")(x)
    outputs = tf.keras.layers.Dense(1, activation="sigmoid", name="head_output")(x)
    keras_model = tf.keras.Model(inputs, outputs, name=f"{backbone.name.value.lower()}_covid")

    base.trainable = True
    total = _count(keras_model.trainable_weights)
    base.trainable = False
    head_only = _count(keras_model.trainable_weights)

    model = TrainableModel(
        backbone=backbone, head=head, mode=Mode.FEATURE_EXTRACT, keras_model=keras_model,
        base=base, head_param_count=head_only, total_param_count=total,
    )
    logger.info(f"[{model.model_id}] Built {backbone.name.value} (pretrained={backbone.pretrained}): "
                f"{total} parameters, {head_only} in the head")
    if mode == Mode.FINE_TUNE:
        model = set_fine_tune_policy(model, policy or FineTunePolicy(kind=PolicyKind.LAST_BLOCK))
    return model


def set_fine_tune_policy(model: TrainableModel, policy: FineTunePolicy) -> TrainableModel:
    """Unfreeze a trailing part of the backbone; the handle is updated in place and returned."""
    layers = model.base.layers
    if policy.kind == PolicyKind.NONE or (policy.kind == PolicyKind.LAST_N_LAYERS and policy.n_layers == 0):
        unfreeze_from = len(layers)
    elif policy.kind == PolicyKind.ALL:
        unfreeze_from = 0
    elif policy.kind == PolicyKind.LAST_N_LAYERS:
        if policy.n_layers > len(layers):
            raise PolicyInvalid(f"cannot unfreeze {policy.n_layers} layers; "
                                f"{model.backbone.name.value} has {len(layers)}")
        unfreeze_from = len(layers) - policy.n_layers
    else:
        boundary = BACKBONES[model.backbone.name].last_block_after
        names = [layer.name for layer in layers]
        if boundary not in names:
            raise PolicyInvalid(f"{model.backbone.name.value} has no layer {boundary!r}")
        unfreeze_from = names.index(boundary) + 1

    model.base.trainable = unfreeze_from < len(layers)
    if model.base.trainable:
        for index, layer in enumerate(layers):
            layer.trainable = index >= unfreeze_from

    model.policy = policy
    model.mode = Mode.FINE_TUNE if model.trainable_param_count > model.head_param_count else Mode.FEATURE_EXTRACT
    logger.info(f"[{model.model_id}] Policy {policy.kind.value}: "
                f"{model.trainable_param_count}/{model.total_param_count} parameters trainable")
    return model


def to_model_input(batch: Union[Sequence[PixelImage], np.ndarray], spec: BackboneSpec) -> np.ndarray:
    """Stack images as float32 (n, h, w, 3) at the backbone's native resolution."""
    width, height, _ = spec.native_input
    if isinstance(batch, np.ndarray):
        if batch.ndim != 4 or batch.shape[-1] not in (1, 3):
            raise ShapeMismatch(f"expected (n, h, w, 1|3) array, got {batch.shape}")
        batch = [PixelImage(data=image) for image in batch]
    if len(batch) == 0:
        return np.zeros((0, height, width, 3), dtype=np.float32)
    arrays = []
    for image in batch:
        if (image.width, image.height) != (width, height):
            image = resize(image, (width, height), Interpolation.BILINEAR)
        data = image.data
        if data.shape[2] == 1:
            data = np.repeat(data, 3, axis=2)
        arrays.append(data)
    return np.stack(arrays).astype(np.float32)


def predict(model: TrainableModel, batch: Union[Sequence[PixelImage], np.ndarray], batch_size: int = 32) -> np.ndarray:
    """One COVID probability per image, in [0, 1]."""
    inputs = to_model_input(batch, model.backbone)
    if len(inputs) == 0:
        return np.zeros((0,), dtype=np.float32)
    probabilities = model.keras_model.predict(inputs, batch_size=batch_size, verbose=0)
    return np.clip(probabilities.reshape(-1), 0.0, 1.0)


def reference_param_count(spec: Union[BackboneSpec, str]) -> int:
    """Parameter count of the published architecture, classifier top included."""
    if not isinstance(spec, BackboneSpec):
        spec = backbone_spec(spec, pretrained=False)
    return int(BACKBONES[spec.name].factory(include_top=True, weights=None).count_params())


def save_checkpoint(model: TrainableModel, directory: str, provenance: Optional[Dict[str, Any]] = None) -> str:
    os.makedirs(directory, exist_ok=True)
    model.keras_model.save_weights(checkpoint_store.weights_path(directory))
    metadata = {
        "model_id": model.model_id,
        "backbone": model.backbone.model_dump(mode="json"),
        "head": model.head.model_dump(mode="json"),
        "mode": model.mode.value,
        "policy": model.policy.model_dump(mode="json"),
        "trainable_param_count": model.trainable_param_count,
        "total_param_count": model.total_param_count,
        "seen_record_ids": sorted(model.seen_record_ids),
        "provenance": {**model.provenance, **(provenance or {})},
    }
    checkpoint_store.write_metadata(directory, metadata)
    logger.info(f"[{model.model_id}] Checkpoint saved to {directory}")
    return directory


def load_checkpoint(directory: str) -> TrainableModel:
    metadata = checkpoint_store.read_metadata(directory)
    # the saved weights replace everything, so skip the pretrained download
    spec = BackboneSpec(**{**metadata["backbone"], "pretrained": False})
    model = build_model(spec, HeadConfig(**metadata["head"]))
    model = set_fine_tune_policy(model, FineTunePolicy(**metadata["policy"]))
    model.keras_model.load_weights(checkpoint_store.weights_path(directory))
    model.backbone = BackboneSpec(**metadata["backbone"])
    model.seen_record_ids = set(metadata.get("seen_record_ids", ()))
    model.provenance = metadata.get("provenance", {})
    return model
