"""Image retrieval from attentive local descriptors.

Local descriptors (vector + position + scale + attention) are aggregated per
image into a global residual vector over a k-means visual dictionary, matched
exhaustively by Euclidean distance, and optionally improved by a query
expansion step that fuses the query with its top candidates through memory
vectors. PCA can compress either the local features or the global vectors.
"""

from .aggregation import GlobalDescriptor, aggregate_vlad, select_top_attentive
from .codebook import (
    Codebook,
    TrainingMeta,
    assign,
    assign_many,
    load_codebook,
    save_codebook,
    select_codebook_training_features,
    train_codebook,
)
from .engine import (
    Index,
    RankedEntry,
    RankedList,
    TimingReport,
    benchmark_search,
    build_index,
    load_index,
    save_index,
    search,
)
from .errors import (
    DataError,
    DimensionError,
    EmptyIndexError,
    EvaluationError,
    FormatError,
    InsufficientDataError,
    RsirError,
)
from .evaluation import (
    EvalConfig,
    EvaluationReport,
    compare_expansion,
    evaluate_dataset,
    format_report,
    precision_at_n,
    report_records,
)
from .expansion import (
    DescriptorGroup,
    expand_query,
    pinv_mv,
    pseudo_inverse,
    psum,
    query_with_expansion,
)
from .model import (
    SCALE_LADDER,
    DatasetManifest,
    DescriptorSet,
    ImageEntry,
    LocalDescriptor,
    ValidationReport,
    iter_dataset,
    load_dataset,
    load_descriptor_set,
    load_manifest,
    save_descriptor_set,
    save_manifest,
    validate_manifest,
)
from .pipeline import build_dataset_index, codebook_training_matrix, dataset_globals
from .reduction import PcaModel, fit_pca, load_pca, project, project_global, save_pca
from .synthgen import AttentionModel, SynthSpec, generate_synthetic_dataset, synth_descriptor_sets

__version__ = "0.1.0"

__all__ = [
    "AttentionModel",
    "Codebook",
    "DataError",
    "DatasetManifest",
    "DescriptorGroup",
    "DescriptorSet",
    "DimensionError",
    "EmptyIndexError",
    "EvalConfig",
    "EvaluationError",
    "EvaluationReport",
    "FormatError",
    "GlobalDescriptor",
    "ImageEntry",
    "Index",
    "InsufficientDataError",
    "LocalDescriptor",
    "PcaModel",
    "RankedEntry",
    "RankedList",
    "RsirError",
    "SCALE_LADDER",
    "SynthSpec",
    "TimingReport",
    "TrainingMeta",
    "ValidationReport",
    "aggregate_vlad",
    "assign",
    "assign_many",
    "benchmark_search",
    "build_dataset_index",
    "build_index",
    "codebook_training_matrix",
    "compare_expansion",
    "dataset_globals",
    "evaluate_dataset",
    "expand_query",
    "fit_pca",
    "format_report",
    "generate_synthetic_dataset",
    "iter_dataset",
    "load_codebook",
    "load_dataset",
    "load_descriptor_set",
    "load_index",
    "load_manifest",
    "load_pca",
    "pinv_mv",
    "precision_at_n",
    "project",
    "project_global",
    "pseudo_inverse",
    "psum",
    "query_with_expansion",
    "report_records",
    "save_codebook",
    "save_descriptor_set",
    "save_index",
    "save_manifest",
    "save_pca",
    "search",
    "select_codebook_training_features",
    "select_top_attentive",
    "synth_descriptor_sets",
    "train_codebook",
    "validate_manifest",
]
