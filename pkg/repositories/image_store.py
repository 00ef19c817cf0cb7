"""Image files on disk: PNG/JPEG in, lossless PNG out."""

import logging
import os
from typing import Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from errors import UnreadableImage
from models.image import PixelImage

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
GRAYSCALE_MODES = ("1", "L", "I", "I;16", "F")


def is_image_file(path: str) -> bool:
    return path.lower().endswith(IMAGE_SUFFIXES)


def read_size(path: str) -> Tuple[int, int]:
    """Width and height of a decodable image; raises UnreadableImage otherwise."""
    try:
        with Image.open(path) as img:
            img.verify()
        with Image.open(path) as img:
            img.load()
            return img.size
    except (OSError, UnidentifiedImageError, SyntaxError, ValueError) as e:
        raise UnreadableImage(f"{path}: {e}") from e


def load_image(path: str) -> PixelImage:
    try:
        with Image.open(path) as img:
            if img.mode in GRAYSCALE_MODES:
                arr = np.asarray(img.convert("L"), dtype=np.float32) / 255.0
            else:
                arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    except (OSError, UnidentifiedImageError, SyntaxError, ValueError) as e:
        raise UnreadableImage(f"{path}: {e}") from e
    return PixelImage(data=arr)


def to_uint8(img: PixelImage) -> np.ndarray:
    arr = np.clip(np.round(img.data * 255.0), 0, 255).astype(np.uint8)
    return arr[:, :, 0] if img.channels == 1 else arr


def save_png(img: PixelImage, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    arr = to_uint8(img)
    Image.fromarray(arr, mode="L" if arr.ndim == 2 else "RGB").save(path, format="PNG")
    return path
