"""Run a convolutional backbone over images and emit rsir descriptor files.

Each image is resized to the seven-scale ladder (0.25 up to 2.0, factor
sqrt(2)) and pushed through a ResNet-50 truncated after its third block,
which yields 1024-channel activation maps. Every map location becomes one
local descriptor: its activation vector, its normalized position, the scale
it came from, and an attention score. Without a trained attention head the
score falls back to the channel-mean activation magnitude, which keeps the
bridge usable with any backbone. Descriptors are ranked by attention across
all scales and the best ``max_features`` are kept.

Output is exactly the primary engine's interchange format: one binary
descriptor file per image plus a dataset manifest, so the result feeds
``validate_manifest`` and ``build-index`` unchanged. Images live either flat
in one folder (single class) or in one subfolder per class.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torchvision
from PIL import Image, UnidentifiedImageError

from rsir import (
    DatasetManifest,
    DescriptorSet,
    ImageEntry,
    SCALE_LADDER,
    save_descriptor_set,
    save_manifest,
)

log = logging.getLogger("rsir_extractor")

#: Channel width of the truncated backbone's output, i.e. descriptor length.
FEATURE_DIM = 1024

#: Resized sides smaller than this skip the scale (map would be empty).
MIN_SIDE = 16

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff", ".webp"}

_IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
_IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


@dataclass(frozen=True)
class ExtractionConfig:
    model: str = "resnet50-block3"
    weights: str = "random"  # "random" (seeded) or "imagenet" (needs download)
    scales: tuple[float, ...] = tuple(SCALE_LADDER)
    max_features: int = 300
    output_dir: str = "extracted"
    dataset_name: str = "extracted"
    seed: int = 0

    def __post_init__(self):
        ladder = tuple(SCALE_LADDER)
        if len(self.scales) != len(ladder) or not all(
            math.isclose(a, b, rel_tol=2e-3) for a, b in zip(self.scales, ladder)
        ):
            raise ValueError(
                f"scales must be the ladder {[round(s, 4) for s in ladder]}, got {list(self.scales)}"
            )
        if self.max_features < 1:
            raise ValueError(f"max_features must be >= 1, got {self.max_features}")


def load_backbone(config: ExtractionConfig) -> torch.nn.Module:
    """Truncated ResNet-50 (through its third block). Load failure is fatal."""
    if config.model != "resnet50-block3":
        raise RuntimeError(f"unknown model identifier {config.model!r}")
    try:
        if config.weights == "imagenet":
            weights = torchvision.models.ResNet50_Weights.IMAGENET1K_V2
        elif config.weights == "random":
            torch.manual_seed(config.seed)
            weights = None
        else:
            raise RuntimeError(f"unknown weights spec {config.weights!r}")
        net = torchvision.models.resnet50(weights=weights)
    except Exception as exc:  # model download/init failure is fatal
        raise RuntimeError(f"failed to load backbone: {exc}") from exc
    trunk = torch.nn.Sequential(
        net.conv1, net.bn1, net.relu, net.maxpool, net.layer1, net.layer2, net.layer3
    )
    trunk.eval()
    for p in trunk.parameters():
        p.requires_grad_(False)
    return trunk


def _to_tensor(image: Image.Image) -> torch.Tensor:
    arr = np.asarray(image.convert("RGB"), dtype=np.float32) / 255.0
    arr = (arr - _IMAGENET_MEAN) / _IMAGENET_STD
    return torch.from_numpy(arr.transpose(2, 0, 1))[None]


def extract_image(
    backbone: torch.nn.Module, image: Image.Image, config: ExtractionConfig,
    image_id: str, class_label: str,
) -> DescriptorSet:
    """Multi-scale descriptors of one image, attention-ranked, best kept."""
    width, height = image.size
    vectors, attention, scales, xs, ys = [], [], [], [], []
    for scale in config.scales:
        w = max(1, round(width * scale))
        h = max(1, round(height * scale))
        if min(w, h) < MIN_SIDE:
            log.debug("%s: skipping scale %.3f (resized to %dx%d)", image_id, scale, w, h)
            continue
        resized = image.resize((w, h), Image.BILINEAR)
        with torch.no_grad():
            fmap = backbone(_to_tensor(resized))[0]  # (1024, h', w')
        fmap = torch.relu(fmap)
        channels, fh, fw = fmap.shape
        flat = fmap.reshape(channels, fh * fw).T.numpy()  # one row per location
        vectors.append(flat.astype(np.float32))
        attention.append(flat.mean(axis=1))
        scales.append(np.full(fh * fw, scale, dtype=np.float32))
        grid_y, grid_x = np.divmod(np.arange(fh * fw), fw)
        xs.append(((grid_x + 0.5) / fw).astype(np.float32))
        ys.append(((grid_y + 0.5) / fh).astype(np.float32))

    if not vectors:
        return DescriptorSet.empty(image_id, class_label, FEATURE_DIM)
    dset = DescriptorSet(
        image_id,
        class_label,
        np.concatenate(vectors),
        np.concatenate(attention),
        np.concatenate(scales),
        np.concatenate(xs),
        np.concatenate(ys),
    )
    # Constructor sorted by attention across all scales; cut to the budget.
    if len(dset) > config.max_features:
        dset = DescriptorSet(
            image_id, class_label,
            dset.vectors[: config.max_features],
            dset.attention[: config.max_features],
            dset.scale[: config.max_features],
            dset.x[: config.max_features],
            dset.y[: config.max_features],
        )
    return dset


def discover_images(image_dir: str | Path) -> list[tuple[Path, str]]:
    """(path, class_label) pairs; labels come from subfolder names if present."""
    image_dir = Path(image_dir)
    found: list[tuple[Path, str]] = []
    for sub in sorted(p for p in image_dir.iterdir() if p.is_dir()):
        for f in sorted(sub.iterdir()):
            if f.suffix.lower() in IMAGE_SUFFIXES:
                found.append((f, sub.name))
    for f in sorted(image_dir.iterdir()):
        if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES:
            found.append((f, "unlabeled"))
    return found


def extract(image_dir: str | Path, config: ExtractionConfig) -> DatasetManifest:
    """Extract every image under ``image_dir`` and write dataset artifacts.

    Unreadable images are skipped with a warning; a backbone failure aborts.
    Returns the written manifest.
    """
    backbone = load_backbone(config)
    out_dir = Path(config.output_dir)
    desc_dir = out_dir / "descriptors"
    desc_dir.mkdir(parents=True, exist_ok=True)

    entries: list[ImageEntry] = []
    classes: list[str] = []
    for path, label in discover_images(image_dir):
        image_id = f"{label}_{path.stem}"
        try:
            with Image.open(path) as img:
                img.load()
                dset = extract_image(backbone, img, config, image_id, label)
        except (OSError, UnidentifiedImageError) as exc:
            log.warning("%s: unreadable image skipped (%s)", path, exc)
            continue
        rel = f"descriptors/{image_id}.desc"
        save_descriptor_set(dset, out_dir / rel)
        entries.append(ImageEntry(image_id=image_id, class_label=label, path=rel))
        if label not in classes:
            classes.append(label)

    manifest = DatasetManifest(
        name=config.dataset_name,
        d=FEATURE_DIM,
        classes=classes,
        images=entries,
        scales=list(config.scales),
    )
    save_manifest(manifest, out_dir / "manifest.json")
    log.info("extracted %d images into %s", len(entries), out_dir)
    return manifest
