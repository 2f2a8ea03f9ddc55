"""Exhaustive Euclidean matching over global descriptors, plus timing runs.

Search scans every database row (no approximation); distances are computed in
single precision and accumulated in double precision, which matters for the
16K-dimensional vectors. Ties break by ascending row order. The index is
immutable after construction and safe to share across concurrent queries.

Index file (binary, little-endian)::

    magic   8 bytes  b"RSIRVLAD"
    version u16      1
    count   u32
    k       u32
    d       u32     (row length is k*d; reduced indexes store k=1, d=length)
    records count x [id_len u16, id utf-8 bytes, k*d x f32]

Class labels are manifest metadata and are not stored in the index file.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .aggregation import GlobalDescriptor
from .errors import DataError, DimensionError, EmptyIndexError, FormatError

INDEX_MAGIC = b"RSIRVLAD"
INDEX_VERSION = 1
_HEADER = struct.Struct("<8sHIII")

DEFAULT_TOP_K = 20


@dataclass
class Index:
    """Row-per-image matrix of global descriptors with ids and class labels."""

    ids: list[str]
    labels: list[str]
    matrix: np.ndarray  # (count, dim) float32
    _row_of: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float32)
        if self.matrix.ndim != 2:
            raise DimensionError(f"index matrix must be 2-D, got shape {self.matrix.shape}")
        if not (len(self.ids) == len(self.labels) == self.matrix.shape[0]):
            raise DimensionError(
                f"ids ({len(self.ids)}), labels ({len(self.labels)}) and rows "
                f"({self.matrix.shape[0]}) must all match"
            )
        self._row_of = {}
        for row, image_id in enumerate(self.ids):
            if image_id in self._row_of:
                raise DataError(f"duplicate image id in index: {image_id!r}")
            self._row_of[image_id] = row

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def row(self, image_id: str) -> int:
        return self._row_of[image_id]

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._row_of

    def vector(self, image_id: str) -> np.ndarray:
        return self.matrix[self._row_of[image_id]]


@dataclass(frozen=True)
class RankedEntry:
    image_id: str
    class_label: str
    distance: float


@dataclass
class RankedList:
    """Candidates ordered by non-decreasing distance, no repeated ids."""

    entries: list[RankedEntry]

    def __post_init__(self):
        dists = [e.distance for e in self.entries]
        if any(b < a for a, b in zip(dists, dists[1:])):
            raise DataError("ranked distances must be non-decreasing")
        ids = [e.image_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise DataError("ranked list contains duplicate image ids")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ids(self) -> list[str]:
        return [e.image_id for e in self.entries]


def build_index(globals_: Sequence[GlobalDescriptor], labels: Sequence[str]) -> Index:
    """Assemble an index from global descriptors; row order follows input order."""
    if len(globals_) != len(labels):
        raise DimensionError(f"{len(globals_)} descriptors but {len(labels)} labels")
    if not globals_:
        return Index(ids=[], labels=[], matrix=np.zeros((0, 0), dtype=np.float32))
    dims = {g.values.shape[0] for g in globals_}
    if len(dims) != 1:
        raise DimensionError(f"mixed global-descriptor lengths {sorted(dims)}")
    matrix = np.stack([g.values for g in globals_]).astype(np.float32)
    return Index(ids=[g.image_id for g in globals_], labels=list(labels), matrix=matrix)


def search(index: Index, query: np.ndarray, top_k: int) -> RankedList:
    """Exact top_k nearest rows by Euclidean distance, full database scan."""
    if len(index) == 0:
        raise EmptyIndexError("cannot search an empty index")
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    q = np.asarray(query, dtype=np.float32).reshape(-1)
    if q.shape[0] != index.dim:
        raise DimensionError(f"query length {q.shape[0]} does not match index dim {index.dim}")
    diff = index.matrix - q
    d2 = np.square(diff).sum(axis=1, dtype=np.float64)
    order = np.argsort(d2, kind="stable")[: min(top_k, len(index))]
    return RankedList(
        entries=[
            RankedEntry(index.ids[i], index.labels[i], float(np.sqrt(d2[i]))) for i in order
        ]
    )


def save_index(index: Index, path: str | Path, k: int | None = None) -> None:
    """Write the index; k partitions the row length for provenance (default 1)."""
    dim = index.dim
    if k is None:
        k = 1
    if k < 1 or dim % k:
        raise DimensionError(f"k={k} does not divide row length {dim}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(INDEX_MAGIC, INDEX_VERSION, len(index), k, dim // k))
        for row, image_id in enumerate(index.ids):
            raw = image_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise DataError(f"image id too long to serialize: {image_id[:32]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(index.matrix[row].astype("<f4").tobytes())


def load_index(path: str | Path, labels: Mapping[str, str] | None = None) -> Index:
    """Read an index file; labels, if given, are attached by image id."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header at byte {len(data)}")
    magic, version, count, k, d = _HEADER.unpack_from(data)
    if magic != INDEX_MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0 (got {magic!r})")
    if version != INDEX_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 8")
    dim = k * d
    ids: list[str] = []
    matrix = np.empty((count, dim), dtype=np.float32)
    offset = _HEADER.size
    for row in range(count):
        if len(data) < offset + 2:
            raise FormatError(f"{path}: truncated record {row} at byte {offset}")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if len(data) < offset + id_len + 4 * dim:
            raise FormatError(f"{path}: truncated record {row} at byte {offset}")
        ids.append(data[offset : offset + id_len].decode("utf-8"))
        offset += id_len
        matrix[row] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
    if len(data) != offset:
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes at byte {offset}")
    attached = [labels.get(i, "") if labels else "" for i in ids]
    return Index(ids=ids, labels=attached, matrix=matrix)


@dataclass(frozen=True)
class TimingCell:
    median_ms: float
    mean_ms: float


@dataclass
class TimingReport:
    sizes: list[int]
    dims: list[int]
    repetitions: int
    cells: dict[tuple[int, int], TimingCell]

    def format_table(self) -> str:
        header = ["size \\ dim"] + [str(d) for d in self.dims]
        rows = [header]
        for size in self.sizes:
            rows.append(
                [str(size)]
                + [f"{self.cells[(size, d)].median_ms:.3f}" for d in self.dims]
            )
        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]
        return "\n".join(lines)

    def records(self) -> list[dict]:
        return [
            {
                "size": size,
                "dim": dim,
                "median_ms": cell.median_ms,
                "mean_ms": cell.mean_ms,
                "repetitions": self.repetitions,
            }
            for (size, dim), cell in sorted(self.cells.items())
        ]


def benchmark_search(
    sizes: Sequence[int],
    dims: Sequence[int],
    repetitions: int,
    top_k: int = DEFAULT_TOP_K,
    seed: int = 0,
) -> TimingReport:
    """Median/mean wall time of one full query per (size, dim) cell.

    Each cell gets its own synthetic index, one warm-up query, then
    ``repetitions`` timed single-query scans. Absolute numbers depend on the
    machine; the point is relative behavior across sizes and dimensions.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    cells: dict[tuple[int, int], TimingCell] = {}
    for dim in dims:
        for size in sizes:
            rng = np.random.default_rng([seed, size, dim])
            matrix = rng.standard_normal((size, dim), dtype=np.float32)
            index = Index(
                ids=[f"img{i:06d}" for i in range(size)], labels=[""] * size, matrix=matrix
            )
            query = rng.standard_normal(dim, dtype=np.float32)
            search(index, query, top_k)  # warm-up
            times = np.empty(repetitions)
            for rep in range(repetitions):
                t0 = time.perf_counter()
                search(index, query, top_k)
                times[rep] = time.perf_counter() - t0
            cells[(size, dim)] = TimingCell(
                median_ms=float(np.median(times) * 1e3),
                mean_ms=float(times.mean() * 1e3),
            )
    return TimingReport(
        sizes=list(sizes), dims=list(dims), repetitions=repetitions, cells=cells
    )
