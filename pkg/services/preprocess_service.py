"""
Scanned-sheet cleanup: rectangular frame crop, ink-density gridline removal,
resize and optional intensity normalisation.

All functions are pure: they never modify their input image.
"""

import logging
import os
from typing import Optional, Tuple

import cv2
import numpy as np

from errors import BadTarget, RectOutOfBounds
from metrics import images_preprocessed_total
from models.dataset import ImageRecord, Manifest
from models.image import DensityMode, Interpolation, Normalize, PixelImage, PreprocessConfig
from repositories.image_store import load_image, save_png

logger = logging.getLogger(__name__)

CV2_INTERPOLATION = {
    Interpolation.NEAREST: cv2.INTER_NEAREST,
    Interpolation.BILINEAR: cv2.INTER_LINEAR,
}


def crop_frame(img: PixelImage, rect: Tuple[int, int, int, int]) -> PixelImage:
    x, y, w, h = rect
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > img.width or y + h > img.height:
        raise RectOutOfBounds(f"rect {rect} is outside the {img.width}x{img.height} image")
    return PixelImage(data=img.data[y:y + h, x:x + w, :])


def density_map(img: PixelImage, mode: DensityMode = DensityMode.LUMINANCE) -> np.ndarray:
    """Per-pixel ink density in [0, 1], shape (height, width)."""
    data = img.data.astype(np.float64)
    if img.channels == 1:
        intensity = data[:, :, 0]
    elif mode == DensityMode.RED_SUPPRESS:
        # red/pink grid ink is bright in the red channel, black trace ink is not
        intensity = data[:, :, 0]
    else:
        # BT.601 luma with integral weights, so pure white is exactly zero density
        intensity = (data[:, :, 0] * 299.0 + data[:, :, 1] * 587.0 + data[:, :, 2] * 114.0) / 1000.0
    return np.clip(1.0 - intensity, 0.0, 1.0).astype(np.float32)


def remove_gridlines(img: PixelImage, cfg: PreprocessConfig) -> PixelImage:
    """Set every pixel lighter than the density threshold to white."""
    if cfg.density_threshold <= 0.0:
        return img
    faint = density_map(img, cfg.density_mode) < cfg.density_threshold
    if not faint.any():
        return img
    data = img.data.copy()
    data[faint] = 1.0
    return PixelImage(data=data)


def resize(img: PixelImage, target: Tuple[int, int], interpolation: Interpolation = Interpolation.BILINEAR) -> PixelImage:
    """Stretch to exactly (width, height); aspect ratio is not preserved."""
    width, height = target
    if width <= 0 or height <= 0:
        raise BadTarget(f"target size must be positive, got {target}")
    if (width, height) == (img.width, img.height) and interpolation == Interpolation.NEAREST:
        return img
    out = cv2.resize(img.data, (width, height), interpolation=CV2_INTERPOLATION[interpolation])
    if out.ndim == 2:
        out = out[:, :, np.newaxis]
    return PixelImage(data=np.clip(out, 0.0, 1.0))


def normalize(img: PixelImage, mode: Normalize) -> PixelImage:
    if mode == Normalize.NONE:
        return img
    lo, hi = float(img.data.min()), float(img.data.max())
    if hi <= lo:
        return img
    return PixelImage(data=np.clip((img.data.astype(np.float64) - lo) / (hi - lo), 0.0, 1.0))


def preprocess_pipeline(img: PixelImage, cfg: PreprocessConfig) -> PixelImage:
    """crop -> gridline removal -> resize -> normalise."""
    if cfg.crop_rect is not None:
        img = crop_frame(img, cfg.crop_rect)
    img = remove_gridlines(img, cfg)
    img = resize(img, cfg.target_size, cfg.interpolation)
    return normalize(img, cfg.normalize)


def _output_path(out_dir: str, record: ImageRecord) -> str:
    stem, _ = os.path.splitext(record.id)
    return os.path.join(out_dir, stem + ".png")


def preprocess_record(record: ImageRecord, cfg: PreprocessConfig, out_dir: str) -> ImageRecord:
    cleaned = preprocess_pipeline(load_image(record.path), cfg)
    path = save_png(cleaned, _output_path(out_dir, record))
    images_preprocessed_total.inc()
    logger.debug(f"[{record.id}] Preprocessed to {path}")
    return record.model_copy(update={"path": path, "width": cleaned.width, "height": cleaned.height})


def preprocess_manifest(manifest: Manifest, cfg: PreprocessConfig, out_dir: str,
                        source_root: Optional[str] = None) -> Manifest:
    """Clean every image in the manifest; the returned manifest points at the PNG outputs."""
    logger.info(f"Preprocessing {len(manifest.records)} images into {out_dir}")
    records = [preprocess_record(r, cfg, out_dir) for r in manifest.records]
    return manifest.replace_records(records, source_root=source_root or out_dir)
