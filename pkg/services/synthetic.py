"""
Synthetic ECG-like paper scans.

A sheet is white paper with printed header blocks in the top margin, a
rectangular frame holding a red millimetre grid, and dark multi-lead traces
drawn inside the frame. The generator returns boolean masks for every pixel
class, so tests can check preprocessing against exact ground truth.
"""

import logging
import os
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from PIL import Image, ImageDraw

from models.image import PixelImage
from repositories.image_store import save_png

logger = logging.getLogger(__name__)

# luminance 0.7 (density 0.3) and 0.1 (density 0.9)
GRID_RGB = (1.0, 0.57204, 0.57204)
GRID_GRAY = 0.7
TRACE_GRAY = 0.1
MARGIN_GRAY = 0.15


@dataclass(frozen=True)
class SyntheticSheet:
    image: PixelImage
    trace_mask: np.ndarray
    grid_mask: np.ndarray
    margin_mask: np.ndarray
    frame_rect: Tuple[int, int, int, int]


def frame_rect_for(width: int, height: int) -> Tuple[int, int, int, int]:
    """Frame placement depends only on the sheet size."""
    x0, y0 = width // 12, height // 7
    return x0, y0, width - 2 * x0, height - y0 - height // 14


def _mask(width: int, height: int) -> Tuple[Image.Image, ImageDraw.ImageDraw]:
    canvas = Image.new("L", (width, height), 0)
    return canvas, ImageDraw.Draw(canvas)


def _grid(width, height, rect, step) -> np.ndarray:
    canvas, draw = _mask(width, height)
    x0, y0, w, h = rect
    for x in range(x0, x0 + w, step):
        draw.line([(x, y0), (x, y0 + h - 1)], fill=255)
    for y in range(y0, y0 + h, step):
        draw.line([(x0, y), (x0 + w - 1, y)], fill=255)
    draw.rectangle([x0, y0, x0 + w - 1, y0 + h - 1], outline=255)
    return np.asarray(canvas) > 0


def _traces(width, height, rect, leads, thickness, rng) -> np.ndarray:
    canvas, draw = _mask(width, height)
    x0, y0, w, h = rect
    band = h / leads
    pad = thickness + 2
    amplitude = max(1.0, band / 2 - pad)
    xs = np.arange(x0 + pad, x0 + w - pad)
    for lead in range(leads):
        centre = y0 + band * (lead + 0.5)
        period = rng.uniform(0.12, 0.2) * w
        phase = rng.uniform(0, period)
        t = ((xs - x0 + phase) % period) / period
        # slow baseline wave plus a sharp beat once per period
        wave = 0.25 * np.sin(2 * np.pi * t) + 0.75 * np.exp(-((t - 0.5) ** 2) / 0.0008)
        ys = np.clip(centre - amplitude * wave, centre - amplitude, centre + amplitude)
        draw.line(list(zip(xs.tolist(), ys.round().astype(int).tolist())), fill=255, width=thickness)
    return np.asarray(canvas) > 0


def _margin_blocks(width, height, rect, rng) -> np.ndarray:
    canvas, draw = _mask(width, height)
    x0, y0, w, _ = rect
    top, bottom = max(1, y0 // 5), max(2, y0 * 4 // 5)
    x = x0
    while x < x0 + w - 10:
        block_w = int(rng.integers(max(4, w // 40), max(8, w // 12)))
        draw.rectangle([x, top, min(x + block_w, x0 + w - 1), bottom], fill=255)
        x += block_w + int(rng.integers(6, 20))
    return np.asarray(canvas) > 0


def generate_sheet(width: int = 1000, height: int = 700, leads: int = 3, trace_thickness: int = 2,
                   grid_step: int = 20, color: bool = True, seed: int = 0) -> SyntheticSheet:
    rng = np.random.default_rng(seed)
    rect = frame_rect_for(width, height)
    grid = _grid(width, height, rect, grid_step)
    trace = _traces(width, height, rect, leads, trace_thickness, rng)
    margin = _margin_blocks(width, height, rect, rng)

    channels = 3 if color else 1
    data = np.ones((height, width, channels), dtype=np.float32)
    data[grid] = GRID_RGB if color else GRID_GRAY
    data[trace] = TRACE_GRAY
    data[margin] = MARGIN_GRAY
    return SyntheticSheet(
        image=PixelImage(data=data),
        trace_mask=trace,
        grid_mask=grid & ~trace,
        margin_mask=margin,
        frame_rect=rect,
    )


# class folder -> (leads, trace thickness as a fraction of sheet height)
DEMO_CLASSES: Dict[str, Tuple[int, float]] = {
    "COVID": (6, 0.03),
    "Normal": (2, 0.004),
}


def generate_corpus(out_dir: str, per_class: int = 20, size: Tuple[int, int] = (320, 240),
                    seed: int = 0, classes: Optional[Dict[str, Tuple[int, float]]] = None) -> Dict[str, int]:
    """Write a two-class corpus as `<out_dir>/<class>/<class>_NNN.png`.

    The classes differ in ink coverage (many thick leads vs. few thin ones),
    so they are separable from pixel statistics alone.
    """
    width, height = size
    written: Dict[str, int] = {}
    for class_index, (folder, (leads, thickness_frac)) in enumerate(sorted((classes or DEMO_CLASSES).items())):
        thickness = max(1, int(round(thickness_frac * height)))
        for i in range(per_class):
            sheet = generate_sheet(width, height, leads=leads, trace_thickness=thickness,
                                   grid_step=max(4, width // 40), seed=seed * 100_003 + class_index * 10_007 + i)
            save_png(sheet.image, os.path.join(out_dir, folder, f"{folder.lower()}_{i:03d}.png"))
        written[folder] = per_class
        logger.info(f"Wrote {per_class} synthetic {folder} sheets to {os.path.join(out_dir, folder)}")
    return written
