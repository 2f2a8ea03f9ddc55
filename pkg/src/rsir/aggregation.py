"""Global descriptors: residual aggregation of local features over a codebook.

The global vector is the concatenation, in word order, of per-word sums of
residuals (feature minus centroid) over the features assigned to each word,
with a single final L2 normalization. Words with no features contribute exact
zero blocks. An all-zero result (empty input, or residuals cancelling) is kept
as the zero vector with ``normalized=False``.

Aggregation is a pure function of its inputs; one aggregation per image can
run in parallel across a dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook, assign_many
from .errors import DimensionError
from .model import DESCRIPTORS_PER_IMAGE, DescriptorSet


@dataclass
class GlobalDescriptor:
    """One image's aggregated vector of length k*d (or a reduced form of it)."""

    values: np.ndarray  # float64
    image_id: str
    normalized: bool

    @property
    def is_degenerate(self) -> bool:
        return not np.any(self.values)


def select_top_attentive(dset: DescriptorSet, n: int = DESCRIPTORS_PER_IMAGE) -> DescriptorSet:
    """First min(n, len) descriptors; the set is already attention-ordered."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n >= len(dset):
        return dset
    return DescriptorSet(
        dset.image_id,
        dset.class_label,
        dset.vectors[:n],
        dset.attention[:n],
        dset.scale[:n],
        dset.x[:n],
        dset.y[:n],
    )


def aggregate_vlad(dset: DescriptorSet, codebook: Codebook, normalize: bool = True) -> GlobalDescriptor:
    """Aggregate one image's local descriptors into a global residual vector.

    Component i sums (f - c_i) over features whose nearest word is i; the k
    components are concatenated in word order. With ``normalize`` the final
    vector is divided by its L2 norm (zero vectors are left as zero and
    flagged unnormalized).
    """
    if dset.d != codebook.d:
        raise DimensionError(
            f"{dset.image_id}: descriptor d={dset.d} does not match codebook d={codebook.d}"
        )
    k, d = codebook.k, codebook.d
    acc = np.zeros((k, d), dtype=np.float64)
    if len(dset):
        words = assign_many(dset.vectors, codebook)
        np.add.at(acc, words, dset.vectors.astype(np.float64))
        counts = np.bincount(words, minlength=k).astype(np.float64)
        acc -= counts[:, None] * codebook.centroids

    values = acc.reshape(k * d)
    normalized = False
    if normalize:
        norm = float(np.linalg.norm(values))
        if norm > 0.0:
            values = values / norm
            normalized = True
    return GlobalDescriptor(values=values, image_id=dset.image_id, normalized=normalized)
