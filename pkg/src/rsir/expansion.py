"""Memory-vector fusion of global descriptors and automatic query expansion.

A group of global descriptors is summarized by a single vector either as the
element-wise sum of its members (``psum``) or through the Moore-Penrose
pseudo-inverse (``pinv_mv``), which down-weights repeated directions. For a
group with mutually orthonormal members the two coincide.

Query expansion needs no user input: retrieve the top candidates, fuse their
vectors with the query's, re-normalize, and query again. Both passes scan the
full index, so an expanded query costs two scans. When the query image is
itself a database member it is excluded from its own candidate list and, in
leave-one-out mode, from the returned ranking.

Group layout: descriptors are the *columns* of the group matrix, so the sum
construction is the matrix-vector product with the all-ones vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .aggregation import GlobalDescriptor
from .engine import Index, RankedList, search
from .errors import DataError, DimensionError

EXPANSION_METHODS = ("psum", "pinv")

#: How many top candidates feed the expanded query.
DEFAULT_CANDIDATES = 3


@dataclass(frozen=True)
class DescriptorGroup:
    """Global descriptors to fuse, stored as columns of a (dim, m) matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[1] < 1:
            raise DimensionError(f"group matrix must be (dim, m) with m >= 1, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise DataError("group contains non-finite entries")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_vectors(cls, vectors: Sequence[np.ndarray]) -> "DescriptorGroup":
        if not vectors:
            raise DimensionError("a group needs at least one member")
        return cls(np.column_stack([np.asarray(v, dtype=np.float64).reshape(-1) for v in vectors]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def m(self) -> int:
        return self.matrix.shape[1]


def psum(group: DescriptorGroup) -> np.ndarray:
    """Element-wise sum of the group members (product with the ones vector)."""
    return group.matrix.sum(axis=1)


def pseudo_inverse(matrix: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values at or below ``tol * sigma_max`` are treated as zero;
    the default tol is max(shape) times the float64 machine epsilon.
    """
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DataError("matrix contains non-finite entries")
    if tol is None:
        tol = max(mat.shape) * np.finfo(np.float64).eps
    elif tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    u, svals, vt = np.linalg.svd(mat, full_matrices=False)
    if svals.size == 0 or svals[0] == 0.0:
        return np.zeros((mat.shape[1], mat.shape[0]))
    inv = np.where(svals > tol * svals[0], np.divide(1.0, svals, where=svals > 0), 0.0)
    return (vt.T * inv) @ u.T


def pinv_mv(group: DescriptorGroup) -> np.ndarray:
    """Pseudo-inverse memory vector: transpose of the group pseudo-inverse
    applied to the ones vector. Returns the zero vector for all-zero groups."""
    return pseudo_inverse(group.matrix).T @ np.ones(group.m)


def expand_query(
    query: GlobalDescriptor,
    candidates: Sequence[np.ndarray | GlobalDescriptor],
    method: str = "psum",
) -> GlobalDescriptor:
    """Fuse the query with its candidate vectors into a unit-norm query.

    An empty candidate list, or a degenerate (zero) fusion, falls back to the
    original query unchanged.
    """
    if method not in EXPANSION_METHODS:
        raise ValueError(f"unknown expansion method {method!r}, expected one of {EXPANSION_METHODS}")
    if not candidates:
        return query
    vectors = [query.values] + [
        c.values if isinstance(c, GlobalDescriptor) else np.asarray(c) for c in candidates
    ]
    group = DescriptorGroup.from_vectors(vectors)
    fused = psum(group) if method == "psum" else pinv_mv(group)
    norm = float(np.linalg.norm(fused))
    if norm == 0.0:
        return query
    return GlobalDescriptor(values=fused / norm, image_id=query.image_id, normalized=True)


def query_with_expansion(
    index: Index,
    query: GlobalDescriptor,
    method: str = "psum",
    top_k: int = 20,
    candidates: int = DEFAULT_CANDIDATES,
    leave_one_out: bool = True,
) -> RankedList:
    """Two-pass retrieval: search, expand with the top candidates, search again.

    Exactly two full index scans. With ``leave_one_out`` (default) a query
    that is itself a database row never appears among its own candidates or
    in the returned ranking.
    """
    exclude = query.image_id if leave_one_out and query.image_id in index else None
    extra = 1 if exclude is not None else 0

    first = search(index, query.values, min(candidates + extra, len(index)))
    picked = [e for e in first.entries if e.image_id != exclude][:candidates]
    expanded = expand_query(query, [index.vector(e.image_id) for e in picked], method)

    second = search(index, expanded.values, min(top_k + extra, len(index)))
    if exclude is None:
        return second
    return RankedList(entries=[e for e in second.entries if e.image_id != exclude][:top_k])
