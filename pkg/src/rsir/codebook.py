"""Visual dictionary: k-means codebook training and nearest-word assignment.

Training is plain Lloyd iteration with distance-weighted (k-means++ style)
seeding from a seeded generator, so identical inputs and seed reproduce the
codebook bit for bit. Convergence: relative inertia change below ``tol`` or
``max_iters`` assignment passes, whichever comes first. A cluster that loses
all its points is re-seeded at the feature farthest from its assigned
centroid, which preserves k and cannot increase inertia.

Codebook file (binary, little-endian)::

    magic   8 bytes  b"RSIRCDBK"
    version u16      1
    k       u32
    d       u32
    centers k x d x f32
    seed    i64
    iters   u32
    inertia f64
    history u32 n, then n x f64 (per-pass inertia values)

Centers are stored in float32; in memory they are float64, so a save/load
round trip quantizes the centroids.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DataError, DimensionError, FormatError, InsufficientDataError
from .model import DescriptorSet

CODEBOOK_MAGIC = b"RSIRCDBK"
CODEBOOK_VERSION = 1
_HEADER = struct.Struct("<8sHII")
_META = struct.Struct("<qId")

DEFAULT_K = 16
DEFAULT_MAX_ITERS = 100
DEFAULT_TOL = 1e-4


@dataclass(frozen=True)
class TrainingMeta:
    seed: int
    iterations: int
    inertia: float
    inertia_history: tuple[float, ...] = ()


@dataclass(frozen=True)
class Codebook:
    """k centroid vectors partitioning descriptor space into visual words."""

    centroids: np.ndarray  # (k, d) float64
    meta: TrainingMeta

    def __post_init__(self):
        c = np.asarray(self.centroids, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 1:
            raise DimensionError(f"centroids must be a (k, d) matrix with k >= 1, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DataError("centroids contain non-finite entries")
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def d(self) -> int:
        return self.centroids.shape[1]


def select_codebook_training_features(
    sets: Iterable[DescriptorSet], n_per_image: int
) -> np.ndarray:
    """Stack the ``n_per_image`` most attentive descriptors of every image.

    Sets are already attention-ordered, so this takes each prefix and
    concatenates in input (manifest) order. Returns an (m, d) float32 matrix.
    """
    if n_per_image < 1:
        raise ValueError(f"n_per_image must be positive, got {n_per_image}")
    blocks = [s.vectors[:n_per_image] for s in sets]
    if not blocks:
        raise InsufficientDataError("no images available for codebook training")
    dims = {b.shape[1] for b in blocks}
    if len(dims) != 1:
        raise DimensionError(f"mixed descriptor dimensionalities {sorted(dims)}")
    return np.concatenate(blocks, axis=0)


def _pairwise_sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # |x - c|^2 = |x|^2 - 2 x.c + |c|^2, computed in float64. Fast (BLAS) but
    # can go slightly negative from cancellation; clip for use as inertia.
    d2 = (
        np.sum(points * points, axis=1)[:, None]
        - 2.0 * (points @ centers.T)
        + np.sum(centers * centers, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0, out=d2)


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    closest = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            # All remaining mass at distance zero (duplicate-heavy data):
            # fall back to a uniform draw over unchosen points.
            remaining = np.setdiff1d(np.arange(n), chosen[:i])
            chosen[i] = rng.choice(remaining)
        else:
            chosen[i] = rng.choice(n, p=closest / total)
        closest = np.minimum(closest, np.sum((points - points[chosen[i]]) ** 2, axis=1))
    return points[chosen].copy()


def train_codebook(
    features: np.ndarray,
    k: int,
    seed: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> Codebook:
    """Cluster features into a k-word codebook; deterministic given the seed."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise DimensionError(f"features must be an (m, d) matrix, got shape {feats.shape}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    if feats.shape[0] < k:
        raise InsufficientDataError(f"need at least k={k} features, got {feats.shape[0]}")
    if not np.all(np.isfinite(feats)):
        raise DataError("training features contain non-finite entries")

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(feats, k, rng)
    history: list[float] = []

    for it in range(1, max_iters + 1):
        d2 = _pairwise_sq_dists(feats, centroids)
        labels = np.argmin(d2, axis=1)
        min_d2 = d2[np.arange(feats.shape[0]), labels]
        inertia = float(min_d2.sum())
        history.append(inertia)

        converged = len(history) >= 2 and (history[-2] - inertia) <= tol * history[-2]
        if converged or inertia == 0.0 or it == max_iters:
            iterations = it
            break

        onehot = np.zeros((feats.shape[0], k), dtype=np.float64)
        onehot[np.arange(feats.shape[0]), labels] = 1.0
        counts = onehot.sum(axis=0)
        sums = onehot.T @ feats
        nonempty = counts > 0
        centroids = centroids.copy()
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]

        if not np.all(nonempty):
            # Re-seed each empty word at the worst-fit point so no k is lost.
            spare = min_d2.copy()
            for empty_idx in np.flatnonzero(~nonempty):
                far = int(np.argmax(spare))
                centroids[empty_idx] = feats[far]
                spare[far] = -np.inf

    return Codebook(
        centroids=centroids,
        meta=TrainingMeta(
            seed=seed,
            iterations=iterations,
            inertia=history[-1],
            inertia_history=tuple(history),
        ),
    )


def assign_many(features: np.ndarray, codebook: Codebook, chunk: int = 8192) -> np.ndarray:
    """Nearest-word index per feature, ties broken by lowest word index.

    Uses explicit residual differences rather than the expanded dot-product
    form, so exact ties resolve the same way a per-centroid scan would.
    """
    feats = np.atleast_2d(np.asarray(features))
    if feats.shape[1] != codebook.d:
        raise DimensionError(f"expected features of length {codebook.d}, got {feats.shape[1]}")
    centers = codebook.centroids
    out = np.empty(feats.shape[0], dtype=np.int64)
    for start in range(0, feats.shape[0], chunk):
        block = feats[start : start + chunk].astype(np.float64, copy=False)
        diff = block[:, None, :] - centers[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        out[start : start + chunk] = np.argmin(d2, axis=1)
    return out


def assign(feature: np.ndarray, codebook: Codebook) -> int:
    """Index of the visual word nearest to one feature vector."""
    feature = np.asarray(feature)
    if feature.ndim != 1:
        raise DimensionError(f"expected a 1-D feature vector, got shape {feature.shape}")
    return int(assign_many(feature[None, :], codebook)[0])


def save_codebook(codebook: Codebook, path: str | Path) -> None:
    meta = codebook.meta
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CODEBOOK_MAGIC, CODEBOOK_VERSION, codebook.k, codebook.d))
        fh.write(codebook.centroids.astype("<f4").tobytes())
        fh.write(_META.pack(meta.seed, meta.iterations, meta.inertia))
        fh.write(struct.pack("<I", len(meta.inertia_history)))
        fh.write(np.asarray(meta.inertia_history, dtype="<f8").tobytes())


def load_codebook(path: str | Path) -> Codebook:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header at byte {len(data)}")
    magic, version, k, d = _HEADER.unpack_from(data)
    if magic != CODEBOOK_MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0 (got {magic!r})")
    if version != CODEBOOK_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 8")
    offset = _HEADER.size
    n_center_bytes = k * d * 4
    if len(data) < offset + n_center_bytes + _META.size + 4:
        raise FormatError(f"{path}: truncated payload at byte {len(data)}")
    centers = (
        np.frombuffer(data, dtype="<f4", count=k * d, offset=offset)
        .reshape(k, d)
        .astype(np.float64)
    )
    offset += n_center_bytes
    seed, iterations, inertia = _META.unpack_from(data, offset)
    offset += _META.size
    (n_hist,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if len(data) != offset + 8 * n_hist:
        raise FormatError(f"{path}: truncated history at byte {len(data)}")
    history = tuple(float(v) for v in np.frombuffer(data, dtype="<f8", count=n_hist, offset=offset))
    return Codebook(
        centroids=centers,
        meta=TrainingMeta(seed=seed, iterations=iterations, inertia=inertia, inertia_history=history),
    )
