import hashlib
import logging
import os
from typing import List

import numpy as np
from pydantic import ValidationError

from errors import NotSplit, SpecInvalid
from metrics import images_augmented_total
from models.augment import AugmentationSpec
from models.dataset import ImageRecord, Manifest, Split
from models.image import Interpolation, PixelImage
from repositories.image_store import load_image, save_png
from services.preprocess_service import resize

logger = logging.getLogger(__name__)


def validate_spec(spec) -> AugmentationSpec:
    if isinstance(spec, AugmentationSpec):
        return spec
    try:
        return AugmentationSpec.model_validate(spec)
    except ValidationError as e:
        raise SpecInvalid(str(e)) from e


def record_rng(seed: int, record_id: str) -> np.random.Generator:
    """Generator derived from (seed, record id) so records augment independently of order."""
    digest = hashlib.sha256(f"{seed}:{record_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def zoom(img: PixelImage, factor: float) -> PixelImage:
    """Centre-anchored zoom that keeps the image size: crop-and-enlarge above 1,
    shrink-and-pad-white below 1."""
    if factor == 1.0:
        return img
    width, height = img.width, img.height
    if factor > 1.0:
        crop_w = max(1, int(round(width / factor)))
        crop_h = max(1, int(round(height / factor)))
        x, y = (width - crop_w) // 2, (height - crop_h) // 2
        cropped = PixelImage(data=img.data[y:y + crop_h, x:x + crop_w, :])
        return resize(cropped, (width, height), Interpolation.BILINEAR)
    small_w = max(1, int(round(width * factor)))
    small_h = max(1, int(round(height * factor)))
    small = resize(img, (small_w, small_h), Interpolation.BILINEAR)
    canvas = np.ones_like(img.data)
    x, y = (width - small_w) // 2, (height - small_h) // 2
    canvas[y:y + small_h, x:x + small_w, :] = small.data
    return PixelImage(data=canvas)


def augment_image(img: PixelImage, spec: AugmentationSpec, draw: np.random.Generator) -> PixelImage:
    """One label-preserving variant; parameters are always drawn in the same order."""
    spec = validate_spec(spec)
    delta = draw.uniform(*spec.brightness_delta)
    factor = draw.uniform(*spec.zoom)
    flip_h = draw.random() < 0.5
    flip_v = draw.random() < 0.5

    out = zoom(img, float(factor))
    data = out.data
    if spec.mirror_horizontal and flip_h:
        data = data[:, ::-1, :]
    if spec.mirror_vertical and flip_v:
        data = data[::-1, :, :]
    if delta != 0.0:
        data = np.clip(data + np.float32(delta), 0.0, 1.0)
    if data is img.data:
        return img
    return PixelImage(data=data)


def _augmented_path(out_dir: str, record: ImageRecord, copy_index: int) -> str:
    stem, _ = os.path.splitext(record.id)
    return os.path.join(out_dir, f"{stem}__aug{copy_index}.png")


def augment_record(record: ImageRecord, spec: AugmentationSpec, out_dir: str) -> List[ImageRecord]:
    draw = record_rng(spec.seed, record.id)
    source = load_image(record.path)
    children = []
    for copy_index in range(spec.copies_per_image):
        variant = augment_image(source, spec, draw)
        path = save_png(variant, _augmented_path(out_dir, record, copy_index))
        children.append(ImageRecord(
            id=f"{record.id}__aug{copy_index}",
            path=path,
            label=record.label,
            width=variant.width,
            height=variant.height,
            split=Split.TRAIN,
            fold=record.fold,
            parent_id=record.id,
        ))
        images_augmented_total.inc()
    logger.debug(f"[{record.id}] Wrote {len(children)} augmented copies")
    return children


def augment_split(manifest: Manifest, spec: AugmentationSpec, out_dir: str) -> Manifest:
    """Append augmented copies of every original TRAIN record; TEST and VAL are untouched."""
    spec = validate_spec(spec)
    if not manifest.is_split:
        raise NotSplit("manifest must be split before augmentation")
    if spec.copies_per_image == 0:
        return manifest

    parents = manifest.split_records(Split.TRAIN, include_augmented=False)
    existing = {r.id for r in manifest.records}
    added: List[ImageRecord] = []
    for record in parents:
        added.extend(c for c in augment_record(record, spec, out_dir) if c.id not in existing)
    logger.info(f"Augmented {len(parents)} TRAIN images into {len(added)} new records in {out_dir}")
    return manifest.replace_records(list(manifest.records) + added)
