import numpy as np
import pytest

import rsir
from rsir.evaluation import EvalConfig, evaluate_dataset
from rsir.model import validate_manifest
from rsir.synthgen import AttentionModel, SynthSpec, generate_synthetic_dataset, synth_descriptor_sets


def _tree_bytes(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_identical_seeds_give_byte_identical_datasets(tmp_path):
    spec = SynthSpec(classes=3, images_per_class=4, descriptors_per_image=30, d=16,
                     class_separation=1.0, within_noise=1.0, seed=42)
    generate_synthetic_dataset(spec, tmp_path / "a")
    generate_synthetic_dataset(spec, tmp_path / "b")
    a, b = _tree_bytes(tmp_path / "a"), _tree_bytes(tmp_path / "b")
    assert list(a) == list(b)
    assert all(a[k] == b[k] for k in a)


def test_different_seed_changes_data(tmp_path):
    base = SynthSpec(classes=2, images_per_class=2, descriptors_per_image=10, d=8,
                     class_separation=1.0, within_noise=1.0, seed=1)
    other = SynthSpec(classes=2, images_per_class=2, descriptors_per_image=10, d=8,
                      class_separation=1.0, within_noise=1.0, seed=2)
    a = synth_descriptor_sets(base)[0]
    b = synth_descriptor_sets(other)[0]
    assert not np.array_equal(a.vectors, b.vectors)


def test_generated_dataset_validates(tmp_path):
    spec = SynthSpec(classes=4, images_per_class=5, descriptors_per_image=40, d=24,
                     class_separation=1.0, within_noise=1.5, seed=3)
    manifest = generate_synthetic_dataset(spec, tmp_path)
    assert len(manifest.images) == 20
    assert validate_manifest(manifest, tmp_path).ok


def _pipeline_precision(spec, tmp, top_k=10, n_values=(1, 5, 10), k=8, per_image=20):
    manifest = generate_synthetic_dataset(spec, tmp)
    feats = rsir.codebook_training_matrix(manifest, tmp, per_image)
    codebook = rsir.train_codebook(feats, k=k, seed=spec.seed)
    index = rsir.build_dataset_index(manifest, tmp, codebook, top_n=spec.descriptors_per_image)
    return evaluate_dataset(index, manifest, EvalConfig(top_k=top_k, n_values=n_values)).average


def test_noise_free_limit_gives_perfect_retrieval(tmp_path):
    spec = SynthSpec(classes=3, images_per_class=21, descriptors_per_image=40, d=16,
                     class_separation=1.0, within_noise=1e-6,
                     attention=AttentionModel(signal_boost=4.0, distractor_rate=0.0), seed=5)
    precision = _pipeline_precision(spec, tmp_path, top_k=20, n_values=(1, 20), k=4, per_image=10)
    assert precision == 1.0


def test_difficulty_monotone_over_noise_ladder(tmp_path):
    jitter = 0.02
    averages = []
    for i, noise in enumerate((0.5, 2.0, 10.0)):
        spec = SynthSpec(classes=6, images_per_class=12, descriptors_per_image=60, d=32,
                         class_separation=1.0, within_noise=noise,
                         attention=AttentionModel(signal_boost=4.0, distractor_rate=0.0), seed=11)
        averages.append(_pipeline_precision(spec, tmp_path / str(i)))
    assert averages[1] <= averages[0] + jitter
    assert averages[2] <= averages[1] + jitter


def test_attention_prefers_class_features(tmp_path):
    # With background clutter present, high-attention descriptors should sit
    # closer to class prototypes; the top of each set should be signal-heavy.
    spec = SynthSpec(classes=2, images_per_class=3, descriptors_per_image=50, d=16,
                     class_separation=1.0, within_noise=0.5,
                     attention=AttentionModel(signal_boost=4.0, distractor_rate=0.4), seed=9)
    n_signal = 30  # 50 descriptors at 40% distractors
    for dset in synth_descriptor_sets(spec):
        assert np.mean(dset.attention[:n_signal]) > 2 * np.mean(dset.attention[n_signal:])
        assert dset.attention.min() >= 0


def test_manifest_carries_scale_ladder(tmp_path):
    spec = SynthSpec(classes=2, images_per_class=2, descriptors_per_image=5, d=4,
                     class_separation=1.0, within_noise=1.0, seed=0)
    manifest = generate_synthetic_dataset(spec, tmp_path)
    assert manifest.scales == pytest.approx(list(rsir.SCALE_LADDER))
    sets = rsir.load_dataset(manifest, tmp_path)
    assert all(s.scale[i] in np.float32(rsir.SCALE_LADDER) for s in sets for i in range(len(s)))


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(classes=0, images_per_class=1, descriptors_per_image=1, d=1,
                  class_separation=1.0, within_noise=1.0)
    with pytest.raises(ValueError):
        SynthSpec(classes=1, images_per_class=1, descriptors_per_image=1, d=1,
                  class_separation=-1.0, within_noise=1.0)
    with pytest.raises(ValueError):
        SynthSpec(classes=1, images_per_class=1, descriptors_per_image=1, d=1,
                  class_separation=1.0, within_noise=1.0,
                  attention=AttentionModel(distractor_rate=1.5))
