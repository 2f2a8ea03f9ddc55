import numpy as np
import pytest

from rsir.aggregation import GlobalDescriptor
from rsir.engine import (
    Index,
    benchmark_search,
    build_index,
    load_index,
    save_index,
    search,
)
from rsir.errors import DataError, DimensionError, EmptyIndexError


def _globals(matrix, prefix="img"):
    return [
        GlobalDescriptor(values=row, image_id=f"{prefix}{i}", normalized=True)
        for i, row in enumerate(matrix)
    ]


def brute_force_ranking(matrix, query, top_k):
    """Independent oracle: python loop + full sort with row-order tie-break."""
    q = np.asarray(query, dtype=np.float32)
    dists = []
    for row in matrix:
        diff = row - q
        dists.append(float(np.square(diff).sum(dtype=np.float64)))
    order = sorted(range(len(dists)), key=lambda i: (dists[i], i))
    return order[:top_k], [np.sqrt(dists[i]) for i in order[:top_k]]


def test_build_index_at_production_scale():
    row = np.zeros(16384, dtype=np.float32)
    globals_ = [GlobalDescriptor(values=row, image_id=f"im{i}", normalized=False) for i in range(2100)]
    index = build_index(globals_, ["cls"] * 2100)
    assert len(index) == 2100 and index.dim == 16384


def test_build_index_row_order_and_labels(rng):
    mat = rng.normal(size=(5, 4)).astype(np.float32)
    index = build_index(_globals(mat), list("abcde"))
    assert index.ids == [f"img{i}" for i in range(5)]
    assert index.labels == list("abcde")
    assert np.array_equal(index.matrix, mat)


def test_duplicate_id_rejected(rng):
    mat = rng.normal(size=(2, 3)).astype(np.float32)
    globals_ = [GlobalDescriptor(mat[0], "same", True), GlobalDescriptor(mat[1], "same", True)]
    with pytest.raises(DataError, match="duplicate"):
        build_index(globals_, ["a", "b"])


def test_mixed_dimensions_rejected(rng):
    globals_ = [
        GlobalDescriptor(rng.normal(size=4), "a", True),
        GlobalDescriptor(rng.normal(size=5), "b", True),
    ]
    with pytest.raises(DimensionError):
        build_index(globals_, ["x", "y"])


def test_empty_index_allowed_but_queries_error():
    index = build_index([], [])
    assert len(index) == 0
    with pytest.raises(EmptyIndexError):
        search(index, np.zeros(0), 1)


def test_self_match_first_with_zero_distance(rng):
    mat = rng.normal(size=(10, 6)).astype(np.float32)
    index = build_index(_globals(mat), [""] * 10)
    ranked = search(index, mat[4], 3)
    assert ranked.entries[0].image_id == "img4"
    assert ranked.entries[0].distance == 0.0


def test_top_k_saturation_returns_all_sorted(rng):
    mat = rng.normal(size=(7, 3)).astype(np.float32)
    index = build_index(_globals(mat), [""] * 7)
    ranked = search(index, rng.normal(size=3), 50)
    assert len(ranked) == 7
    dists = [e.distance for e in ranked]
    assert dists == sorted(dists)


def test_search_matches_oracle_with_ties(rng):
    for trial in range(10):
        trial_rng = np.random.default_rng(trial)
        n = int(trial_rng.integers(5, 60))
        dim = int(trial_rng.integers(2, 16))
        mat = trial_rng.normal(size=(n, dim)).astype(np.float32)
        mat[n // 2] = mat[0]  # exact duplicate forces a tie
        index = build_index(_globals(mat), [""] * n)
        query = mat[0] if trial % 2 else trial_rng.normal(size=dim).astype(np.float32)
        top_k = int(trial_rng.integers(1, n + 1))
        ranked = search(index, query, top_k)
        want_rows, want_dists = brute_force_ranking(mat, query, top_k)
        assert [e.image_id for e in ranked] == [f"img{i}" for i in want_rows]
        assert np.allclose([e.distance for e in ranked], want_dists, atol=0.0)


def test_distance_symmetry_consistency(rng):
    a = rng.normal(size=6).astype(np.float32)
    b = rng.normal(size=6).astype(np.float32)
    index_a = build_index([GlobalDescriptor(a, "a", True)], ["x"])
    index_b = build_index([GlobalDescriptor(b, "b", True)], ["x"])
    d_ab = search(index_a, b, 1).entries[0].distance
    d_ba = search(index_b, a, 1).entries[0].distance
    assert d_ab == d_ba


def test_query_dimension_mismatch(rng):
    index = build_index(_globals(rng.normal(size=(3, 4)).astype(np.float32)), [""] * 3)
    with pytest.raises(DimensionError):
        search(index, np.zeros(5), 1)


def test_top_k_must_be_positive(rng):
    index = build_index(_globals(rng.normal(size=(3, 4)).astype(np.float32)), [""] * 3)
    with pytest.raises(ValueError):
        search(index, np.zeros(4), 0)


def test_index_round_trip_and_byte_determinism(tmp_path, rng):
    mat = rng.normal(size=(6, 8)).astype(np.float32)
    index = build_index(_globals(mat), ["c"] * 6)
    save_index(index, tmp_path / "a.idx", k=2)
    save_index(index, tmp_path / "b.idx", k=2)
    assert (tmp_path / "a.idx").read_bytes() == (tmp_path / "b.idx").read_bytes()
    loaded = load_index(tmp_path / "a.idx")
    assert loaded.ids == index.ids
    assert np.array_equal(loaded.matrix, index.matrix)
    assert loaded.labels == [""] * 6
    relabeled = load_index(tmp_path / "a.idx", labels={"img0": "harbor"})
    assert relabeled.labels[0] == "harbor"


def test_save_index_k_must_divide_dim(tmp_path, rng):
    index = build_index(_globals(rng.normal(size=(2, 6)).astype(np.float32)), ["", ""])
    with pytest.raises(DimensionError):
        save_index(index, tmp_path / "x.idx", k=4)


def test_benchmark_produces_full_grid():
    report = benchmark_search([10, 20], [8, 16], repetitions=3, seed=1)
    assert set(report.cells) == {(10, 8), (10, 16), (20, 8), (20, 16)}
    assert all(c.median_ms > 0 and c.mean_ms > 0 for c in report.cells.values())
    table = report.format_table()
    assert "16" in table and "20" in table
    records = report.records()
    assert len(records) == 4 and {"size", "dim", "median_ms", "mean_ms", "repetitions"} <= set(records[0])


def test_benchmark_rejects_bad_repetitions():
    with pytest.raises(ValueError):
        benchmark_search([10], [8], repetitions=0)
