"""PCA compression, applied either to local features or to global vectors.

The model holds the sample mean and the top eigenvectors of the sample
covariance (1/(n-1) normalization), ordered by decreasing eigenvalue. No
whitening. Signs are fixed so each component's largest-magnitude entry is
positive, making the fit reproducible.

Feature-level projections feed clustering/aggregation unchanged; global-level
projections must be re-L2-normalized before matching (``project_global``),
since matching assumes unit-norm vectors.

PCA model file (binary, little-endian)::

    magic    8 bytes  b"RSIRPCA0"
    version  u16      1
    d_in     u32
    d_out    u32
    mean     d_in x f64
    comps    d_out x d_in x f64 (row-major)
    variance d_out x f64
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, DimensionError, FormatError, InsufficientDataError

PCA_MAGIC = b"RSIRPCA0"
PCA_VERSION = 1
_HEADER = struct.Struct("<8sHII")


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray                # (d_in,) float64
    components: np.ndarray          # (d_out, d_in) float64, orthonormal rows
    explained_variance: np.ndarray  # (d_out,) float64, non-increasing

    @property
    def d_in(self) -> int:
        return self.components.shape[1]

    @property
    def d_out(self) -> int:
        return self.components.shape[0]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    flip = components[np.arange(components.shape[0]), np.argmax(np.abs(components), axis=1)] < 0
    components[flip] *= -1.0
    return components


def fit_pca(vectors: np.ndarray, d_out: int) -> PcaModel:
    """Fit a d_out-component PCA on an (n, d_in) sample.

    Uses a covariance eigendecomposition when n >= d_in and an SVD of the
    centered sample otherwise (cheaper for wide data such as global vectors);
    both give the same model up to the sign convention.
    """
    data = np.asarray(vectors, dtype=np.float64)
    if data.ndim != 2:
        raise DimensionError(f"expected an (n, d_in) sample, got shape {data.shape}")
    n, d_in = data.shape
    if d_out < 1:
        raise ValueError(f"d_out must be >= 1, got {d_out}")
    if d_out > d_in:
        raise DimensionError(f"d_out={d_out} exceeds input dimensionality {d_in}")
    if n < d_out:
        raise InsufficientDataError(f"need at least d_out={d_out} samples, got {n}")
    if not np.all(np.isfinite(data)):
        raise DataError("sample contains non-finite entries")

    mean = data.mean(axis=0)
    centered = data - mean
    if n >= d_in:
        cov = centered.T @ centered / (n - 1) if n > 1 else np.zeros((d_in, d_in))
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1][:d_out]
        components = eigvecs[:, order].T.copy()
        variance = eigvals[order]
    else:
        _, svals, vt = np.linalg.svd(centered, full_matrices=False)
        components = vt[:d_out].copy()
        variance = (svals[:d_out] ** 2) / (n - 1)

    return PcaModel(
        mean=mean,
        components=_fix_signs(components),
        explained_variance=np.maximum(variance, 0.0),
    )


def project(v: np.ndarray, model: PcaModel) -> np.ndarray:
    """Project one vector (or an (n, d_in) batch) onto the components."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape[-1] != model.d_in:
        raise DimensionError(f"expected length {model.d_in}, got {arr.shape[-1]}")
    return (arr - model.mean) @ model.components.T


def project_global(v: np.ndarray, model: PcaModel) -> np.ndarray:
    """Project a global vector and re-normalize to unit length for matching."""
    out = project(v, model)
    norm = np.linalg.norm(out, axis=-1, keepdims=True)
    return np.divide(out, norm, out=np.zeros_like(out), where=norm > 0)


def save_pca(model: PcaModel, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(PCA_MAGIC, PCA_VERSION, model.d_in, model.d_out))
        fh.write(model.mean.astype("<f8").tobytes())
        fh.write(model.components.astype("<f8").tobytes())
        fh.write(model.explained_variance.astype("<f8").tobytes())


def load_pca(path: str | Path) -> PcaModel:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header at byte {len(data)}")
    magic, version, d_in, d_out = _HEADER.unpack_from(data)
    if magic != PCA_MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0 (got {magic!r})")
    if version != PCA_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 8")
    expected = _HEADER.size + 8 * (d_in + d_out * d_in + d_out)
    if len(data) != expected:
        raise FormatError(f"{path}: truncated payload at byte {len(data)}, expected {expected}")
    offset = _HEADER.size
    mean = np.frombuffer(data, dtype="<f8", count=d_in, offset=offset).copy()
    offset += 8 * d_in
    components = (
        np.frombuffer(data, dtype="<f8", count=d_out * d_in, offset=offset)
        .reshape(d_out, d_in)
        .copy()
    )
    offset += 8 * d_out * d_in
    variance = np.frombuffer(data, dtype="<f8", count=d_out, offset=offset).copy()
    return PcaModel(mean=mean, components=components, explained_variance=variance)
