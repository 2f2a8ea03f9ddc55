"""Deterministic synthetic descriptor datasets with planted class structure.

Each class owns a small set of latent prototype vectors ("parts"). An image of
that class samples most of its descriptors around randomly chosen class
prototypes and the rest around a background pool shared by all classes. The
pool is much larger than any image's draw, so background clutter is
effectively private to each image: it pollutes that image's aggregate without
making unrelated images look alike. Attention scores fall off with the
distance to the nearest own-class prototype, and class descriptors get a
multiplicative boost, so attention ranking prefers class-relevant features
over background clutter.

Everything derives from one configured seed: one stream for the latent geometry,
one independently seeded stream per image, so generation is reproducible
byte-for-byte and could run image-parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import (
    SCALE_LADDER,
    DatasetManifest,
    DescriptorSet,
    ImageEntry,
    save_descriptor_set,
    save_manifest,
)


@dataclass(frozen=True)
class AttentionModel:
    """How attention scores are synthesized.

    signal_boost multiplies the attention of class descriptors;
    distractor_rate is the fraction of descriptors drawn from the background
    pool instead of class prototypes.
    """

    signal_boost: float = 4.0
    distractor_rate: float = 0.2


@dataclass(frozen=True)
class SynthSpec:
    classes: int
    images_per_class: int
    descriptors_per_image: int
    d: int
    class_separation: float
    within_noise: float
    attention: AttentionModel = AttentionModel()
    seed: int = 0
    prototypes_per_class: int = 8

    def __post_init__(self):
        for name in ("classes", "images_per_class", "descriptors_per_image", "d", "prototypes_per_class"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("class_separation", "within_noise"):
            value = getattr(self, name)
            if not (value > 0 and np.isfinite(value)):
                raise ValueError(f"{name} must be finite and positive, got {value}")
        if not 0.0 <= self.attention.distractor_rate <= 1.0:
            raise ValueError(f"distractor_rate must be in [0, 1], got {self.attention.distractor_rate}")


def _latents(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([spec.seed, 0])
    centers = rng.normal(0.0, spec.class_separation, size=(spec.classes, spec.d))
    prototypes = centers[:, None, :] + rng.normal(
        0.0, spec.class_separation / 2.0, size=(spec.classes, spec.prototypes_per_class, spec.d)
    )
    pool = rng.normal(0.0, spec.class_separation, size=(128 * spec.prototypes_per_class, spec.d))
    return prototypes, pool


def _synth_image(
    spec: SynthSpec,
    class_idx: int,
    image_idx: int,
    prototypes: np.ndarray,
    pool: np.ndarray,
    label: str,
) -> DescriptorSet:
    rng = np.random.default_rng([spec.seed, 1, class_idx, image_idx])
    n = spec.descriptors_per_image
    n_distractors = int(round(spec.attention.distractor_rate * n))
    n_signal = n - n_distractors

    class_protos = prototypes[class_idx]
    parts = []
    if n_signal:
        # Balanced prototype coverage: in the noise-free limit every image of
        # a class then carries the identical descriptor multiset.
        picks = np.arange(n_signal) % class_protos.shape[0]
        parts.append(class_protos[picks] + rng.normal(0.0, spec.within_noise, size=(n_signal, spec.d)))
    if n_distractors:
        picks = rng.integers(pool.shape[0], size=n_distractors)
        parts.append(pool[picks] + rng.normal(0.0, spec.within_noise, size=(n_distractors, spec.d)))
    vectors = np.concatenate(parts, axis=0)

    # Attention falls with distance to the nearest own-class prototype; class
    # descriptors additionally get the signal boost, background ones do not.
    dists = np.sqrt(
        ((vectors[:, None, :] - class_protos[None, :, :]) ** 2).sum(axis=2)
    ).min(axis=1)
    gain = np.full(n, 1.0)
    gain[:n_signal] = spec.attention.signal_boost
    attention = gain / (1.0 + dists)

    return DescriptorSet(
        image_id=f"{label}_{image_idx:03d}",
        class_label=label,
        vectors=vectors.astype(np.float32),
        attention=attention.astype(np.float32),
        scale=rng.choice(np.asarray(SCALE_LADDER), size=n).astype(np.float32),
        x=rng.uniform(size=n).astype(np.float32),
        y=rng.uniform(size=n).astype(np.float32),
    )


def synth_descriptor_sets(spec: SynthSpec) -> list[DescriptorSet]:
    """Generate all descriptor sets in class-major order, without touching disk."""
    prototypes, pool = _latents(spec)
    sets = []
    for class_idx in range(spec.classes):
        label = f"class{class_idx:02d}"
        for image_idx in range(spec.images_per_class):
            sets.append(_synth_image(spec, class_idx, image_idx, prototypes, pool, label))
    return sets


def generate_synthetic_dataset(spec: SynthSpec, out_dir: str | Path) -> DatasetManifest:
    """Write descriptor files plus manifest under ``out_dir`` and return the manifest."""
    out_dir = Path(out_dir)
    desc_dir = out_dir / "descriptors"
    desc_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for dset in synth_descriptor_sets(spec):
        rel = f"descriptors/{dset.image_id}.desc"
        save_descriptor_set(dset, out_dir / rel)
        entries.append(ImageEntry(image_id=dset.image_id, class_label=dset.class_label, path=rel))

    manifest = DatasetManifest(
        name=f"synthetic-seed{spec.seed}",
        d=spec.d,
        classes=[f"class{c:02d}" for c in range(spec.classes)],
        images=entries,
        scales=list(SCALE_LADDER),
    )
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest
