"""Dataset-level wiring shared by the CLI, the experiment scripts, and tests.

These helpers compose the loading, selection, optional PCA, aggregation, and
indexing steps for a whole dataset. Feature-level PCA changes the space the
codebook lives in, so a codebook trained on raw features is refused alongside
a feature-level model (and vice versa).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .aggregation import GlobalDescriptor, aggregate_vlad, select_top_attentive
from .codebook import Codebook, select_codebook_training_features
from .engine import Index, build_index
from .errors import DimensionError
from .model import DESCRIPTORS_PER_IMAGE, DatasetManifest, DescriptorSet, iter_dataset
from .reduction import PcaModel, project, project_global


def check_codebook_space(manifest_d: int, codebook: Codebook, feature_pca: PcaModel | None) -> None:
    """Refuse mixed-dimension codebook/PCA pairs before any work happens."""
    if feature_pca is None:
        if codebook.d != manifest_d:
            raise DimensionError(
                f"codebook d={codebook.d} does not match dataset d={manifest_d}; "
                "a feature-level PCA model is required to bridge them"
            )
        return
    if feature_pca.d_in != manifest_d:
        raise DimensionError(
            f"feature PCA expects d_in={feature_pca.d_in}, dataset has d={manifest_d}"
        )
    if codebook.d != feature_pca.d_out:
        raise DimensionError(
            f"codebook d={codebook.d} does not match PCA output d={feature_pca.d_out}; "
            "retrain the codebook in the reduced space"
        )


def codebook_training_matrix(
    manifest: DatasetManifest,
    root: str | Path,
    n_per_image: int,
    feature_pca: PcaModel | None = None,
) -> np.ndarray:
    """Top-n_per_image descriptors of every image, optionally PCA-projected."""
    feats = select_codebook_training_features(iter_dataset(manifest, root), n_per_image)
    if feature_pca is not None:
        feats = project(feats, feature_pca)
    return feats


def dataset_globals(
    manifest: DatasetManifest,
    root: str | Path,
    codebook: Codebook,
    top_n: int = DESCRIPTORS_PER_IMAGE,
    feature_pca: PcaModel | None = None,
    global_pca: PcaModel | None = None,
) -> tuple[list[GlobalDescriptor], list[str]]:
    """Aggregate every dataset image into a global descriptor, in manifest order."""
    check_codebook_space(manifest.d, codebook, feature_pca)
    globals_: list[GlobalDescriptor] = []
    labels: list[str] = []
    for dset in iter_dataset(manifest, root):
        top = select_top_attentive(dset, top_n)
        if feature_pca is not None:
            top = project_descriptor_set(top, feature_pca)
        g = aggregate_vlad(top, codebook, normalize=True)
        if global_pca is not None:
            g = GlobalDescriptor(
                values=project_global(g.values, global_pca),
                image_id=g.image_id,
                normalized=g.normalized,
            )
        globals_.append(g)
        labels.append(dset.class_label)
    return globals_, labels


def build_dataset_index(
    manifest: DatasetManifest,
    root: str | Path,
    codebook: Codebook,
    top_n: int = DESCRIPTORS_PER_IMAGE,
    feature_pca: PcaModel | None = None,
    global_pca: PcaModel | None = None,
) -> Index:
    globals_, labels = dataset_globals(manifest, root, codebook, top_n, feature_pca, global_pca)
    return build_index(globals_, labels)


def project_descriptor_set(dset: DescriptorSet, model: PcaModel) -> DescriptorSet:
    """Replace each descriptor vector by its PCA projection, keeping metadata."""
    return DescriptorSet(
        dset.image_id,
        dset.class_label,
        project(dset.vectors, model).astype(np.float32),
        dset.attention,
        dset.scale,
        dset.x,
        dset.y,
    )
