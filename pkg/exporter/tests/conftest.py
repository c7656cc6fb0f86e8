import numpy as np
import pytest
from PIL import Image

from fuselens_exporter import ExportJob, ToyVisionLanguageBackbone

BASE_CLASSES = ("cat", "dog")
NOVEL_CLASSES = ("fox", "owl")


def _write_image(path, seed):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(24, 24, 3), dtype=np.uint8)
    Image.fromarray(pixels, "RGB").save(path)


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("dataset")
    for c, class_name in enumerate(BASE_CLASSES + NOVEL_CLASSES):
        class_dir = root / class_name
        class_dir.mkdir()
        for i in range(3):
            _write_image(class_dir / f"img_{i}.png", seed=100 * c + i)
    return root


@pytest.fixture()
def job(dataset_dir, tmp_path):
    return ExportJob(
        dataset=dataset_dir,
        base_classes=BASE_CLASSES,
        novel_classes=NOVEL_CLASSES,
        output_dir=tmp_path / "out",
        backbone="toy-64",
    )


@pytest.fixture(scope="session")
def backbone():
    return ToyVisionLanguageBackbone(dim=64)
