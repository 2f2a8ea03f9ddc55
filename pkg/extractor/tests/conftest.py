import numpy as np
import pytest
from PIL import Image

from rsir_extractor import ExtractionConfig, extract


@pytest.fixture(scope="session")
def image_folder(tmp_path_factory):
    """10 small images in two class folders, plus one unreadable file."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(99)
    for cls, count in (("coast", 5), ("urban", 5)):
        folder = root / cls
        folder.mkdir()
        for i in range(count):
            arr = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
            Image.fromarray(arr).save(folder / f"{cls}{i}.png")
    (root / "coast" / "broken.png").write_text("this is not an image")
    return root


@pytest.fixture(scope="session")
def extracted(tmp_path_factory, image_folder):
    out = tmp_path_factory.mktemp("out")
    config = ExtractionConfig(output_dir=str(out), max_features=120, seed=0)
    manifest = extract(image_folder, config)
    return {"root": out, "manifest": manifest, "config": config}
