"""Bridge from real images to the retrieval engine's descriptor format."""

from .extract import (
    FEATURE_DIM,
    ExtractionConfig,
    discover_images,
    extract,
    extract_image,
    load_backbone,
)

__version__ = "0.1.0"

__all__ = [
    "ExtractionConfig",
    "FEATURE_DIM",
    "discover_images",
    "extract",
    "extract_image",
    "load_backbone",
]
