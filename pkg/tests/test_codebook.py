import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsir.codebook import (
    Codebook,
    TrainingMeta,
    assign,
    assign_many,
    load_codebook,
    save_codebook,
    select_codebook_training_features,
    train_codebook,
)
from rsir.errors import DataError, DimensionError, InsufficientDataError

from conftest import make_set


def test_select_counts_by_enumeration():
    sets = [make_set(image_id=f"i{j}", n=12, d=4, seed=j) for j in range(5)]
    feats = select_codebook_training_features(sets, 10)
    assert feats.shape == (sum(min(10, 12) for _ in sets), 4) == (50, 4)


def test_select_saturates():
    sets = [make_set(image_id=f"i{j}", n=12, d=4, seed=j) for j in range(3)]
    feats = select_codebook_training_features(sets, 50)
    assert feats.shape == (36, 4)


def test_select_takes_prefixes_in_order():
    sets = [make_set(image_id=f"i{j}", n=8, d=3, seed=j) for j in range(4)]
    feats = select_codebook_training_features(sets, 5)
    expected = np.concatenate([s.vectors[:5] for s in sets])
    assert np.array_equal(feats, expected)


def test_select_empty_dataset_errors():
    with pytest.raises(InsufficientDataError):
        select_codebook_training_features([], 10)


def test_k1_centroid_is_sample_mean(rng):
    feats = rng.normal(size=(200, 16)).astype(np.float32)
    cb = train_codebook(feats, k=1, seed=0)
    assert np.allclose(cb.centroids[0], feats.astype(np.float64).mean(axis=0), atol=1e-12)


def test_two_planted_clusters_match_exhaustive_partition(rng):
    # 20 points, 2 planted clusters in the plane; enumerate all 2-partitions.
    a = rng.normal(loc=(-4.0, 0.0), scale=0.4, size=(10, 2))
    b = rng.normal(loc=(4.0, 1.0), scale=0.4, size=(10, 2))
    points = np.concatenate([a, b])

    n = points.shape[0]
    masks = (np.arange(2**n)[:, None] >> np.arange(n)) & 1  # (2^n, n)
    counts1 = masks.sum(axis=1)
    valid = (counts1 > 0) & (counts1 < n)
    masks = masks[valid].astype(np.float64)
    counts1 = counts1[valid].astype(np.float64)
    counts0 = n - counts1
    total = points.sum(axis=0)
    sums1 = masks @ points
    sums0 = total - sums1
    sumsq = float((points**2).sum())
    inertia = sumsq - ((sums1**2).sum(axis=1) / counts1 + (sums0**2).sum(axis=1) / counts0)
    best = masks[np.argmin(inertia)].astype(bool)
    planted = np.stack([points[~best].mean(axis=0), points[best].mean(axis=0)])

    cb = train_codebook(points, k=2, seed=5)
    got = cb.centroids[np.argsort(cb.centroids[:, 0])]
    want = planted[np.argsort(planted[:, 0])]
    assert np.allclose(got, want, atol=1e-6)


def test_assign_exact_centroid(rng):
    cb = train_codebook(rng.normal(size=(40, 3)), k=5, seed=1)
    for i in range(cb.k):
        assert assign(cb.centroids[i], cb) == i


def test_assign_tie_breaks_to_lowest_index():
    centroids = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 9.0]])
    cb = Codebook(centroids=centroids, meta=TrainingMeta(seed=0, iterations=0, inertia=0.0))
    assert assign(np.array([1.0, 0.0]), cb) == 0


def test_assign_matches_bruteforce_oracle(rng):
    cb = train_codebook(rng.normal(size=(100, 8)), k=7, seed=2)
    feats = rng.normal(size=(1000, 8)).astype(np.float32)
    got = assign_many(feats, cb)
    for j in range(feats.shape[0]):
        dists = [float(np.sum((feats[j].astype(np.float64) - c) ** 2)) for c in cb.centroids]
        assert got[j] == int(np.argmin(dists))


@given(seed=st.integers(0, 500), k=st.integers(1, 4), n=st.integers(4, 20))
def test_assign_oracle_property(seed, k, n):
    rng = np.random.default_rng(seed)
    cb = train_codebook(rng.normal(size=(max(n, k), 3)), k=k, seed=seed)
    feats = rng.normal(size=(n, 3))
    got = assign_many(feats, cb)
    want = [int(np.argmin([np.sum((f - c) ** 2) for c in cb.centroids])) for f in feats]
    assert got.tolist() == want


def test_assign_permutation_covariant(rng):
    cb = train_codebook(rng.normal(size=(60, 4)), k=6, seed=3)
    perm = rng.permutation(cb.k)
    permuted = Codebook(centroids=cb.centroids[perm], meta=cb.meta)
    feats = rng.normal(size=(100, 4))
    base = assign_many(feats, cb)
    relabeled = assign_many(feats, permuted)
    inverse = np.argsort(perm)
    assert np.array_equal(inverse[base], relabeled)


def test_assign_dimension_mismatch(rng):
    cb = train_codebook(rng.normal(size=(10, 4)), k=2, seed=0)
    with pytest.raises(DimensionError):
        assign(np.zeros(5), cb)


def test_training_is_deterministic(rng):
    feats = rng.normal(size=(300, 6))
    a = train_codebook(feats, k=4, seed=11)
    b = train_codebook(feats, k=4, seed=11)
    assert np.array_equal(a.centroids, b.centroids)
    assert a.meta == b.meta


def test_inertia_never_increases(rng):
    for seed in range(5):
        feats = np.random.default_rng(seed).normal(size=(250, 5))
        hist = train_codebook(feats, k=6, seed=seed).meta.inertia_history
        assert all(nxt <= prev * (1 + 1e-9) for prev, nxt in zip(hist, hist[1:]))


def test_converged_within_tolerance(rng):
    feats = rng.normal(size=(400, 4))
    tol = 1e-4
    cb = train_codebook(feats, k=5, seed=7, tol=tol)
    # One more Lloyd pass from the returned centroids barely moves inertia.
    labels = assign_many(feats, cb)
    updated = np.stack([feats[labels == i].mean(axis=0) for i in range(cb.k)])
    new_inertia = sum(
        float(np.sum((feats[labels == i] - updated[i]) ** 2)) for i in range(cb.k)
    )
    assert cb.meta.inertia - new_inertia <= tol * cb.meta.inertia


def test_empty_clusters_reseeded(rng):
    # Only two distinct points but k=3: some cluster must be re-seeded.
    feats = np.repeat(np.array([[0.0, 0.0], [5.0, 5.0]]), 10, axis=0)
    cb = train_codebook(feats, k=3, seed=0)
    assert cb.k == 3 and np.all(np.isfinite(cb.centroids))


def test_too_few_features_errors():
    with pytest.raises(InsufficientDataError):
        train_codebook(np.zeros((3, 2)), k=4, seed=0)


def test_nonfinite_features_error():
    feats = np.zeros((10, 2))
    feats[3, 1] = np.inf
    with pytest.raises(DataError):
        train_codebook(feats, k=2, seed=0)


def test_save_load_round_trip(tmp_path, rng):
    cb = train_codebook(rng.normal(size=(80, 5)), k=4, seed=9)
    save_codebook(cb, tmp_path / "cb.bin")
    loaded = load_codebook(tmp_path / "cb.bin")
    # centers are stored as float32
    assert np.array_equal(loaded.centroids, cb.centroids.astype(np.float32).astype(np.float64))
    assert loaded.meta == cb.meta
    save_codebook(cb, tmp_path / "cb2.bin")
    assert (tmp_path / "cb.bin").read_bytes() == (tmp_path / "cb2.bin").read_bytes()
