"""Interchange data model: local descriptors, descriptor sets, dataset manifests.

On-disk formats
---------------
Descriptor file (binary, little-endian)::

    magic   8 bytes  b"RSIRDESC"
    version u16      1
    d       u32      vector length
    count   u32      number of descriptors
    records count x [attention f32, scale f32, x f32, y f32, vector d x f32]

Manifest (UTF-8 JSON)::

    {
      "name": str,
      "d": int,
      "classes": [str, ...],
      "scales": [float, ...],          # optional; must be the 7-scale ladder
      "images": [{"id": str, "class": str, "path": str}, ...]
    }

Image paths are relative to the manifest's directory. Descriptor files do not
store the image id or class label; those belong to the manifest. The loader
defaults the id to the file stem, which is the naming convention used by every
writer in this package.

Loaded sets and manifests are treated as immutable and are safe to share
across threads; writes are single-writer.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError, DimensionError, FormatError

DESCRIPTOR_MAGIC = b"RSIRDESC"
DESCRIPTOR_VERSION = 1
_HEADER = struct.Struct("<8sHII")

#: Multi-scale extraction ladder: seven scales from 0.25 to 2.0, factor sqrt(2).
SCALE_LADDER = tuple(0.25 * math.sqrt(2.0) ** i for i in range(7))

#: Default number of stored descriptors per image.
DESCRIPTORS_PER_IMAGE = 300


def _record_dtype(d: int) -> np.dtype:
    return np.dtype(
        [
            ("attention", "<f4"),
            ("scale", "<f4"),
            ("x", "<f4"),
            ("y", "<f4"),
            ("vector", "<f4", (d,)),
        ]
    )


@dataclass(frozen=True)
class LocalDescriptor:
    """One attentive local feature: vector plus position, scale and relevance."""

    vector: np.ndarray
    x: float
    y: float
    scale: float
    attention: float


class DescriptorSet:
    """All stored descriptors of one image, ordered by attention descending.

    Stored column-wise (one array per field) so aggregation and clustering can
    operate on contiguous matrices. Indexing returns a ``LocalDescriptor``
    view of one row.
    """

    __slots__ = ("image_id", "class_label", "vectors", "attention", "scale", "x", "y")

    def __init__(
        self,
        image_id: str,
        class_label: str,
        vectors: np.ndarray,
        attention: np.ndarray,
        scale: np.ndarray,
        x: np.ndarray,
        y: np.ndarray,
    ):
        vectors = np.asarray(vectors, dtype=np.float32)
        attention = np.asarray(attention, dtype=np.float32)
        scale = np.asarray(scale, dtype=np.float32)
        x = np.asarray(x, dtype=np.float32)
        y = np.asarray(y, dtype=np.float32)

        if vectors.ndim != 2:
            raise DimensionError(f"descriptor matrix must be 2-D, got shape {vectors.shape}")
        n = vectors.shape[0]
        for name, col in (("attention", attention), ("scale", scale), ("x", x), ("y", y)):
            if col.shape != (n,):
                raise DimensionError(f"{name} must have shape ({n},), got {col.shape}")
        if not np.all(np.isfinite(vectors)):
            raise DataError(f"{image_id}: descriptor vectors contain non-finite entries")
        for name, col in (("attention", attention), ("scale", scale), ("x", x), ("y", y)):
            if not np.all(np.isfinite(col)):
                raise DataError(f"{image_id}: {name} contains non-finite entries")
        if np.any(attention < 0):
            raise DataError(f"{image_id}: attention scores must be non-negative")
        if n and np.any(scale <= 0):
            raise DataError(f"{image_id}: scales must be positive")
        if np.any((x < 0) | (x > 1)) or np.any((y < 0) | (y > 1)):
            raise DataError(f"{image_id}: positions must lie in [0, 1]")

        # Keep non-increasing attention order; stable sort preserves the
        # original order of ties.
        if n > 1 and np.any(np.diff(attention) > 0):
            order = np.argsort(-attention, kind="stable")
            vectors = vectors[order]
            attention = attention[order]
            scale = scale[order]
            x = x[order]
            y = y[order]

        self.image_id = image_id
        self.class_label = class_label
        self.vectors = vectors
        self.attention = attention
        self.scale = scale
        self.x = x
        self.y = y

    @classmethod
    def from_descriptors(
        cls, image_id: str, class_label: str, descriptors: Sequence[LocalDescriptor], d: int | None = None
    ) -> "DescriptorSet":
        """Build a set from row objects; all vectors must share one length."""
        if not descriptors:
            if d is None:
                raise DimensionError("empty descriptor list needs an explicit d")
            return cls.empty(image_id, class_label, d)
        lengths = {len(np.atleast_1d(desc.vector)) for desc in descriptors}
        if len(lengths) != 1:
            raise DimensionError(f"{image_id}: mixed descriptor lengths {sorted(lengths)}")
        found = lengths.pop()
        if d is not None and found != d:
            raise DimensionError(f"{image_id}: expected d={d}, found d={found}")
        return cls(
            image_id,
            class_label,
            np.stack([np.asarray(desc.vector, dtype=np.float32) for desc in descriptors]),
            np.array([desc.attention for desc in descriptors], dtype=np.float32),
            np.array([desc.scale for desc in descriptors], dtype=np.float32),
            np.array([desc.x for desc in descriptors], dtype=np.float32),
            np.array([desc.y for desc in descriptors], dtype=np.float32),
        )

    @classmethod
    def empty(cls, image_id: str, class_label: str, d: int) -> "DescriptorSet":
        zero = np.zeros(0, dtype=np.float32)
        return cls(image_id, class_label, np.zeros((0, d), dtype=np.float32), zero, zero, zero, zero)

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def is_degenerate(self) -> bool:
        """True for sets with no descriptors; valid but useless for matching."""
        return len(self) == 0

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __getitem__(self, i: int) -> LocalDescriptor:
        return LocalDescriptor(
            vector=self.vectors[i],
            x=float(self.x[i]),
            y=float(self.y[i]),
            scale=float(self.scale[i]),
            attention=float(self.attention[i]),
        )

    def __iter__(self) -> Iterator[LocalDescriptor]:
        return (self[i] for i in range(len(self)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DescriptorSet):
            return NotImplemented
        return (
            self.image_id == other.image_id
            and self.class_label == other.class_label
            and self.vectors.shape == other.vectors.shape
            and np.array_equal(self.vectors, other.vectors)
            and np.array_equal(self.attention, other.attention)
            and np.array_equal(self.scale, other.scale)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )

    def __repr__(self) -> str:
        return f"DescriptorSet({self.image_id!r}, {self.class_label!r}, n={len(self)}, d={self.d})"


def save_descriptor_set(dset: DescriptorSet, path: str | Path) -> None:
    """Write one descriptor set in the binary format; byte-deterministic."""
    path = Path(path)
    n, d = dset.vectors.shape
    records = np.empty(n, dtype=_record_dtype(d))
    records["attention"] = dset.attention
    records["scale"] = dset.scale
    records["x"] = dset.x
    records["y"] = dset.y
    records["vector"] = dset.vectors
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DESCRIPTOR_MAGIC, DESCRIPTOR_VERSION, d, n))
        fh.write(records.tobytes())


def load_descriptor_set(
    path: str | Path,
    expected_d: int,
    *,
    image_id: str | None = None,
    class_label: str = "",
) -> DescriptorSet:
    """Read one descriptor file, re-sorting by attention if it is unordered.

    The id defaults to the file stem; the class label is manifest metadata and
    must be supplied by the caller when known.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header at byte {len(data)}, need {_HEADER.size}")
    magic, version, d, count = _HEADER.unpack_from(data)
    if magic != DESCRIPTOR_MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0 (got {magic!r})")
    if version != DESCRIPTOR_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 8")
    if d != expected_d:
        raise DimensionError(f"{path}: expected d={expected_d}, found d={d}")
    dtype = _record_dtype(d)
    expected_size = _HEADER.size + count * dtype.itemsize
    if len(data) != expected_size:
        raise FormatError(
            f"{path}: truncated payload at byte {len(data)}, expected {expected_size} bytes"
        )
    records = np.frombuffer(data, dtype=dtype, count=count, offset=_HEADER.size)
    return DescriptorSet(
        image_id if image_id is not None else path.stem,
        class_label,
        records["vector"].copy(),
        records["attention"].copy(),
        records["scale"].copy(),
        records["x"].copy(),
        records["y"].copy(),
    )


@dataclass(frozen=True)
class ImageEntry:
    image_id: str
    class_label: str
    path: str


@dataclass
class DatasetManifest:
    """Catalog of one dataset: descriptor dimensionality, classes, image files."""

    name: str
    d: int
    classes: list[str]
    images: list[ImageEntry]
    scales: list[float] | None = None

    def labels_by_id(self) -> dict[str, str]:
        return {entry.image_id: entry.class_label for entry in self.images}


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    doc: dict = {
        "name": manifest.name,
        "d": manifest.d,
        "classes": list(manifest.classes),
    }
    if manifest.scales is not None:
        doc["scales"] = [float(s) for s in manifest.scales]
    doc["images"] = [
        {"id": e.image_id, "class": e.class_label, "path": e.path} for e in manifest.images
    ]
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    try:
        images = [
            ImageEntry(image_id=str(e["id"]), class_label=str(e["class"]), path=str(e["path"]))
            for e in doc["images"]
        ]
        return DatasetManifest(
            name=str(doc["name"]),
            d=int(doc["d"]),
            classes=[str(c) for c in doc["classes"]],
            images=images,
            scales=[float(s) for s in doc["scales"]] if "scales" in doc else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed manifest: {exc}") from exc


@dataclass(frozen=True)
class ValidationIssue:
    kind: str
    subject: str
    detail: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, kind: str, subject: str, detail: str) -> None:
        self.issues.append(ValidationIssue(kind, subject, detail))

    def __str__(self) -> str:
        if self.ok:
            return "OK"
        return "\n".join(f"[{i.kind}] {i.subject}: {i.detail}" for i in self.issues)


def _scales_match_ladder(scales: Sequence[float]) -> bool:
    if len(scales) != len(SCALE_LADDER):
        return False
    # Manifests may carry values rounded to three decimals (e.g. 0.354).
    return all(
        math.isclose(got, want, rel_tol=2e-3) for got, want in zip(scales, SCALE_LADDER)
    )


def validate_manifest(manifest: DatasetManifest, root: str | Path) -> ValidationReport:
    """Check a manifest against the files on disk.

    Reports every missing file, duplicate image id, unknown class label,
    dimension mismatch, unreadable descriptor file, and off-ladder scale list.
    An empty report means the dataset is loadable.
    """
    root = Path(root)
    report = ValidationReport()
    known = set(manifest.classes)
    seen: set[str] = set()

    if manifest.scales is not None and not _scales_match_ladder(manifest.scales):
        report.add(
            "bad-scales",
            manifest.name,
            f"scales {list(manifest.scales)} do not match the 7-scale ladder "
            f"{[round(s, 4) for s in SCALE_LADDER]}",
        )

    for entry in manifest.images:
        if entry.image_id in seen:
            report.add("duplicate-id", entry.image_id, "image id occurs more than once")
        seen.add(entry.image_id)
        if entry.class_label not in known:
            report.add(
                "unknown-class", entry.image_id, f"class {entry.class_label!r} not in manifest classes"
            )
        fpath = root / entry.path
        if not fpath.is_file():
            report.add("missing-file", entry.image_id, f"descriptor file not found: {fpath}")
            continue
        try:
            with open(fpath, "rb") as fh:
                header = fh.read(_HEADER.size)
            if len(header) < _HEADER.size:
                raise FormatError(f"{fpath}: truncated header at byte {len(header)}")
            magic, version, d, count = _HEADER.unpack(header)
            if magic != DESCRIPTOR_MAGIC:
                raise FormatError(f"{fpath}: bad magic at byte 0")
            if version != DESCRIPTOR_VERSION:
                raise FormatError(f"{fpath}: unsupported version {version}")
            actual_size = fpath.stat().st_size
            expected_size = _HEADER.size + count * _record_dtype(d).itemsize
            if actual_size != expected_size:
                raise FormatError(
                    f"{fpath}: size {actual_size} does not match header (expected {expected_size})"
                )
        except FormatError as exc:
            report.add("bad-file", entry.image_id, str(exc))
            continue
        if d != manifest.d:
            report.add(
                "dimension-mismatch", entry.image_id, f"expected d={manifest.d}, found d={d}"
            )
    return report


def load_dataset(manifest: DatasetManifest, root: str | Path) -> list[DescriptorSet]:
    """Load every descriptor set of a dataset, in manifest order."""
    return list(iter_dataset(manifest, root))


def iter_dataset(manifest: DatasetManifest, root: str | Path) -> Iterator[DescriptorSet]:
    root = Path(root)
    for entry in manifest.images:
        yield load_descriptor_set(
            root / entry.path,
            manifest.d,
            image_id=entry.image_id,
            class_label=entry.class_label,
        )
