import os

# settings are read at import time, before any pipeline module loads
os.environ["OTEL_ENABLED"] = "false"
os.environ["CELERY_ALWAYS_EAGER"] = "true"
os.environ.pop("METRICS_TEXTFILE", None)
os.environ.pop("PROMETHEUS_MULTIPROC_DIR", None)

import pytest  # noqa: E402
from PIL import Image  # noqa: E402

from models.dataset import ImageRecord, Label, Manifest  # noqa: E402


def make_records(n_covid: int, n_non_covid: int, prefix: str = "img"):
    records = []
    for label, n in ((Label.COVID, n_covid), (Label.NON_COVID, n_non_covid)):
        for i in range(n):
            rid = f"{label.value}/{prefix}_{i:04d}.png"
            records.append(ImageRecord(id=rid, path=f"/nonexistent/{rid}", label=label, width=10, height=10))
    return records


@pytest.fixture
def manifest_factory():
    def build(n_covid: int, n_non_covid: int) -> Manifest:
        return Manifest(records=tuple(make_records(n_covid, n_non_covid)), source_root="/nonexistent")
    return build


@pytest.fixture
def image_tree(tmp_path):
    """Dataset root with COVID/ and Normal/ folders of small PNGs."""
    def build(n_covid: int = 10, n_normal: int = 10, size=(24, 16)):
        root = tmp_path / "dataset"
        for folder, n, shade in (("COVID", n_covid, 40), ("Normal", n_normal, 220)):
            (root / folder).mkdir(parents=True, exist_ok=True)
            for i in range(n):
                Image.new("RGB", size, (shade, shade, shade)).save(root / folder / f"{folder.lower()}_{i:03d}.png")
        return root
    return build
