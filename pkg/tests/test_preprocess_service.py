import numpy as np
import pytest

from errors import BadTarget, RectOutOfBounds
from models.image import DensityMode, Interpolation, Normalize, PixelImage, PreprocessConfig
from repositories.image_store import load_image, save_png
from services.preprocess_service import (
    crop_frame, density_map, normalize, preprocess_pipeline, remove_gridlines, resize,
)
from services.synthetic import generate_sheet


@pytest.fixture(scope="module")
def sheet():
    return generate_sheet(1000, 700, seed=3)


def _cfg(**kwargs) -> PreprocessConfig:
    return PreprocessConfig(**kwargs)


def test_crop_frame_index_arithmetic():
    rng = np.random.default_rng(0)
    img = PixelImage(data=rng.random((100, 100, 3)))
    out = crop_frame(img, (10, 10, 50, 40))
    assert (out.width, out.height) == (50, 40)
    assert np.array_equal(out.data[0, 0], img.data[10, 10])
    assert crop_frame(img, (0, 0, 100, 100)).same_pixels(img)


@pytest.mark.parametrize("rect", [(-1, 0, 10, 10), (0, 0, 101, 10), (95, 95, 10, 10), (0, 0, 0, 5)])
def test_crop_frame_out_of_bounds(rect):
    img = PixelImage(data=np.ones((100, 100)))
    with pytest.raises(RectOutOfBounds):
        crop_frame(img, rect)


def test_crop_keeps_trace_and_drops_margin(sheet):
    x, y, w, h = sheet.frame_rect
    inside = np.zeros_like(sheet.trace_mask)
    inside[y:y + h, x:x + w] = True
    assert sheet.trace_mask.sum() > 0 and sheet.margin_mask.sum() > 0
    assert (sheet.trace_mask & inside).sum() == sheet.trace_mask.sum()
    assert (sheet.margin_mask & inside).sum() == 0

    cropped = crop_frame(sheet.image, sheet.frame_rect)
    assert np.array_equal(cropped.data, sheet.image.data[y:y + h, x:x + w])


def test_density_extremes():
    assert np.all(density_map(PixelImage(data=np.ones((5, 7, 3)))) == 0.0)
    assert np.all(density_map(PixelImage(data=np.zeros((5, 7, 3)))) == 1.0)
    assert density_map(PixelImage(data=np.ones((5, 7)))).shape == (5, 7)


def test_trace_is_denser_than_grid(sheet):
    density = density_map(sheet.image)
    assert density[sheet.trace_mask].min() > density[sheet.grid_mask].max()
    assert np.allclose(density[sheet.grid_mask], 0.3, atol=1e-4)
    assert np.allclose(density[sheet.trace_mask], 0.9, atol=1e-4)


def test_red_suppress_ignores_red_grid(sheet):
    density = density_map(sheet.image, DensityMode.RED_SUPPRESS)
    assert np.all(density[sheet.grid_mask] == 0.0)
    assert np.allclose(density[sheet.trace_mask], 0.9, atol=1e-4)


def test_remove_gridlines_oracle(sheet):
    cleaned = remove_gridlines(sheet.image, _cfg(density_threshold=0.5))
    white = np.all(cleaned.data == 1.0, axis=2)
    removed_grid = white[sheet.grid_mask].mean()
    kept_trace = np.all(cleaned.data[sheet.trace_mask] == sheet.image.data[sheet.trace_mask], axis=1).mean()
    assert removed_grid >= 0.99
    assert kept_trace >= 0.99


def test_remove_gridlines_is_idempotent_on_png(tmp_path, sheet):
    cfg = _cfg(density_threshold=0.5)
    first = save_png(remove_gridlines(sheet.image, cfg), str(tmp_path / "once.png"))
    second = save_png(remove_gridlines(load_image(first), cfg), str(tmp_path / "twice.png"))
    with open(first, "rb") as a, open(second, "rb") as b:
        assert a.read() == b.read()


def test_remove_gridlines_trivial_cases(sheet):
    white = PixelImage(data=np.ones((8, 8, 3)))
    assert remove_gridlines(white, _cfg(density_threshold=0.9)).same_pixels(white)
    assert remove_gridlines(sheet.image, _cfg(density_threshold=0.0)).same_pixels(sheet.image)


def test_removed_pixels_grow_with_threshold():
    rng = np.random.default_rng(5)
    for _ in range(20):
        img = PixelImage(data=rng.random((12, 16, 3)))
        previous = np.zeros((12, 16), dtype=bool)
        for threshold in np.linspace(0.0, 1.0, 11):
            out = remove_gridlines(img, _cfg(density_threshold=float(threshold)))
            removed = np.any(out.data != img.data, axis=2)
            assert np.all(removed[previous])
            previous = removed


def test_resize_shapes_and_identity():
    big = PixelImage(data=np.full((1572, 2213), 0.5, dtype=np.float32))
    out = resize(big, (987, 987))
    assert (out.width, out.height, out.channels) == (987, 987, 1)

    rng = np.random.default_rng(1)
    img = PixelImage(data=rng.random((30, 40, 3)))
    assert resize(img, (40, 30), Interpolation.NEAREST).same_pixels(img)


@pytest.mark.parametrize("interpolation", list(Interpolation))
def test_resize_constant_image(interpolation):
    img = PixelImage(data=np.full((20, 30, 3), 0.37, dtype=np.float32))
    out = resize(img, (17, 45), interpolation)
    assert (out.width, out.height) == (17, 45)
    assert np.allclose(out.data, 0.37, atol=1e-6)


def test_resize_rejects_bad_target():
    img = PixelImage(data=np.ones((4, 4)))
    with pytest.raises(BadTarget):
        resize(img, (0, 4))


def test_normalize_unit_range():
    img = PixelImage(data=np.linspace(0.2, 0.6, 12).reshape(3, 4))
    out = normalize(img, Normalize.UNIT_RANGE)
    assert out.data.min() == 0.0 and np.isclose(out.data.max(), 1.0)
    assert normalize(img, Normalize.NONE) is img


def test_pipeline_identity_configuration():
    rng = np.random.default_rng(2)
    img = PixelImage(data=rng.random((25, 35, 3)))
    cfg = _cfg(density_threshold=0.0, target_size=(35, 25), interpolation=Interpolation.NEAREST)
    assert preprocess_pipeline(img, cfg).same_pixels(img)


def test_pipeline_on_synthetic_sheet(sheet):
    x, y, w, h = sheet.frame_rect
    cfg = _cfg(crop_rect=sheet.frame_rect, target_size=(w, h), interpolation=Interpolation.NEAREST)
    out = preprocess_pipeline(sheet.image, cfg)
    grid_in_frame = sheet.grid_mask[y:y + h, x:x + w]
    assert np.all(out.data[grid_in_frame] == 1.0)

    resized = preprocess_pipeline(sheet.image, _cfg(crop_rect=sheet.frame_rect, target_size=(224, 224)))
    assert (resized.width, resized.height) == (224, 224)
    again = preprocess_pipeline(sheet.image, _cfg(crop_rect=sheet.frame_rect, target_size=(224, 224)))
    assert resized.same_pixels(again)
