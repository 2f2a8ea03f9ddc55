import numpy as np
import pytest
from PIL import Image

import rsir
from rsir_extractor import ExtractionConfig, extract_image, load_backbone
from rsir_extractor.extract import FEATURE_DIM, discover_images


def test_output_validates_and_loads(extracted):
    manifest = extracted["manifest"]
    assert len(manifest.images) == 10  # the broken file was skipped
    assert manifest.d == FEATURE_DIM
    report = rsir.validate_manifest(manifest, extracted["root"])
    assert report.ok, str(report)


def test_descriptor_contents(extracted):
    sets = rsir.load_dataset(extracted["manifest"], extracted["root"])
    ladder = np.asarray(rsir.SCALE_LADDER, dtype=np.float32)
    for dset in sets:
        assert 0 < len(dset) <= extracted["config"].max_features
        assert dset.d == FEATURE_DIM
        assert np.all(np.diff(dset.attention) <= 0)
        assert np.all(np.isin(dset.scale, ladder))
        assert np.all((dset.x >= 0) & (dset.x <= 1) & (dset.y >= 0) & (dset.y <= 1))


def test_multiple_scales_recorded(extracted):
    sets = rsir.load_dataset(extracted["manifest"], extracted["root"])
    # 64px images keep the scales down to 0.25 (16px); expect several distinct.
    assert all(len(np.unique(s.scale)) >= 2 for s in sets)


def test_class_labels_from_folders(extracted):
    manifest = extracted["manifest"]
    assert manifest.classes == ["coast", "urban"]
    assert all(e.class_label in manifest.classes for e in manifest.images)


def test_solid_color_image_still_valid(tmp_path):
    backbone = load_backbone(ExtractionConfig(seed=0))
    solid = Image.new("RGB", (48, 48), (120, 130, 140))
    dset = extract_image(backbone, solid, ExtractionConfig(max_features=50, seed=0), "solid", "c")
    assert dset.d == FEATURE_DIM and len(dset) <= 50
    rsir.save_descriptor_set(dset, tmp_path / "solid.desc")
    assert rsir.load_descriptor_set(tmp_path / "solid.desc", FEATURE_DIM, class_label="c") == dset


def test_tiny_image_skips_small_scales(tmp_path):
    backbone = load_backbone(ExtractionConfig(seed=0))
    tiny = Image.new("RGB", (20, 20), (10, 200, 30))
    dset = extract_image(backbone, tiny, ExtractionConfig(seed=0), "tiny", "c")
    # only scales with a resized side of at least 16 pixels contribute
    assert np.all(dset.scale >= np.float32(0.7))


def test_discover_flat_folder(tmp_path):
    Image.new("RGB", (16, 16)).save(tmp_path / "a.png")
    Image.new("RGB", (16, 16)).save(tmp_path / "b.jpg")
    (tmp_path / "notes.txt").write_text("ignored")
    found = discover_images(tmp_path)
    assert [label for _, label in found] == ["unlabeled", "unlabeled"]


def test_config_rejects_off_ladder_scales():
    with pytest.raises(ValueError):
        ExtractionConfig(scales=(0.5, 1.0, 2.0))
    with pytest.raises(ValueError):
        ExtractionConfig(max_features=0)
    ExtractionConfig(scales=(0.25, 0.354, 0.5, 0.707, 1.0, 1.414, 2.0))  # rounded ladder OK


def test_unknown_model_is_fatal():
    with pytest.raises(RuntimeError, match="unknown model"):
        load_backbone(ExtractionConfig(model="vgg-nope"))
    with pytest.raises(RuntimeError, match="weights"):
        load_backbone(ExtractionConfig(weights="bogus"))
