"""Retrieval-precision evaluation over an indexed dataset.

A retrieved image counts as a match when it shares the query's class label.
Precision at N is the matching fraction of the first N candidates; reports
aggregate per class (mean over that class's queries at the report cutoff,
default 20) and overall (mean of the per-class values), plus a precision
curve over several retrieval-set sizes.

Every image is used once as a query. In leave-one-out mode (default) the
query is excluded from its own candidate set; with it disabled, a query that
is in the index trivially retrieves itself first.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .aggregation import GlobalDescriptor
from .engine import Index, RankedList, search
from .errors import EvaluationError
from .expansion import DEFAULT_CANDIDATES, query_with_expansion
from .model import DatasetManifest

#: Retrieval-set sizes reported in the precision curve.
CURVE_N = (1, 3, 5, 10, 15, 20)


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation knobs plus provenance fields recorded in the report."""

    expansion: str = "none"  # none | psum | pinv
    top_k: int = 20
    n_values: tuple[int, ...] = CURVE_N
    leave_one_out: bool = True
    candidates: int = DEFAULT_CANDIDATES
    workers: int = 1
    # Provenance of the index being evaluated; not interpreted here.
    k: int | None = None
    d: int | None = None
    pca_level: str | None = None
    pca_dim: int | None = None
    seed: int | None = None


@dataclass
class EvaluationReport:
    per_class: dict[str, float]
    average: float
    per_n: dict[int, float]
    config: EvalConfig
    warnings: list[str] = field(default_factory=list)


def precision_at_n(ranked: RankedList, query_class: str, n: int) -> float:
    """Fraction of the first n candidates whose class matches the query's."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if len(ranked) < n:
        raise EvaluationError(f"ranked list has {len(ranked)} entries, need {n}")
    hits = sum(1 for e in ranked.entries[:n] if e.class_label == query_class)
    return hits / n


def _rank_for_query(index: Index, image_id: str, config: EvalConfig, depth: int) -> RankedList:
    vector = index.vector(image_id)
    if config.expansion == "none":
        extra = 1 if config.leave_one_out else 0
        ranked = search(index, vector, min(depth + extra, len(index)))
        if not config.leave_one_out:
            return ranked
        return RankedList(entries=[e for e in ranked.entries if e.image_id != image_id][:depth])
    query = GlobalDescriptor(values=vector, image_id=image_id, normalized=True)
    return query_with_expansion(
        index,
        query,
        method=config.expansion,
        top_k=depth,
        candidates=config.candidates,
        leave_one_out=config.leave_one_out,
    )


def evaluate_dataset(
    index: Index,
    manifest: DatasetManifest | None = None,
    config: EvalConfig = EvalConfig(),
) -> EvaluationReport:
    """Evaluate retrieval precision using every image once as a query.

    Queries and class labels come from the manifest when given (each manifest
    image must be present in the index), otherwise from the index itself.
    Deterministic for fixed inputs and config.
    """
    if manifest is not None:
        queries = [(e.image_id, e.class_label) for e in manifest.images]
        classes = list(manifest.classes)
        missing = [i for i, _ in queries if i not in index]
        if missing:
            raise EvaluationError(f"{len(missing)} manifest images missing from index: {missing[:5]}")
    else:
        queries = list(zip(index.ids, index.labels))
        classes = sorted(set(index.labels))
    if not queries:
        raise EvaluationError("no queries to evaluate")

    depth = max(config.top_k, max(config.n_values))
    available = len(index) - (1 if config.leave_one_out else 0)
    if available < depth:
        raise EvaluationError(
            f"index yields {available} candidates per query, need {depth}"
        )

    def run(query: tuple[str, str]) -> tuple[str, list[float], float]:
        image_id, label = query
        ranked = _rank_for_query(index, image_id, config, depth)
        curve = [precision_at_n(ranked, label, n) for n in config.n_values]
        return label, curve, precision_at_n(ranked, label, config.top_k)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run, queries))
    else:
        results = [run(q) for q in queries]

    by_class: dict[str, list[tuple[list[float], float]]] = {c: [] for c in classes}
    for label, curve, p_top in results:
        by_class.setdefault(label, []).append((curve, p_top))

    warnings: list[str] = []
    per_class: dict[str, float] = {}
    curve_by_class: dict[str, np.ndarray] = {}
    for cls in classes:
        rows = by_class.get(cls, [])
        if not rows:
            warnings.append(f"class {cls!r} has no queries; omitted from the report")
            continue
        per_class[cls] = float(np.mean([p for _, p in rows]))
        curve_by_class[cls] = np.mean([c for c, _ in rows], axis=0)

    if not per_class:
        raise EvaluationError("every class ended up empty")
    average = float(np.mean(list(per_class.values())))
    curve = np.mean(list(curve_by_class.values()), axis=0)
    per_n = {n: float(v) for n, v in zip(config.n_values, curve)}
    return EvaluationReport(
        per_class=per_class, average=average, per_n=per_n, config=config, warnings=warnings
    )


def format_report(report: EvaluationReport, title: str = "retrieval precision") -> str:
    """Aligned, human-readable table: one row per class plus the average."""
    cfg = report.config
    lines = [
        f"{title} (top {cfg.top_k}, expansion={cfg.expansion}, "
        f"leave_one_out={cfg.leave_one_out})"
    ]
    width = max([len(c) for c in report.per_class] + [len("Average")])
    for cls in sorted(report.per_class):
        lines.append(f"  {cls.ljust(width)}  {report.per_class[cls]:.3f}")
    lines.append(f"  {'Average'.ljust(width)}  {report.average:.3f}")
    lines.append("")
    lines.append("precision by retrieval-set size")
    for n in sorted(report.per_n):
        lines.append(f"  N={n:<3d}  {report.per_n[n]:.3f}")
    for warning in report.warnings:
        lines.append(f"  warning: {warning}")
    return "\n".join(lines)


def report_records(report: EvaluationReport) -> list[dict]:
    """Machine-readable form: one record per class plus one summary record."""
    cfg = report.config
    base = {
        "expansion": cfg.expansion,
        "top_k": cfg.top_k,
        "leave_one_out": cfg.leave_one_out,
        "k": cfg.k,
        "d": cfg.d,
        "pca_level": cfg.pca_level,
        "pca_dim": cfg.pca_dim,
        "seed": cfg.seed,
    }
    records = [
        {"class": cls, "precision": prec, **base} for cls, prec in sorted(report.per_class.items())
    ]
    records.append(
        {
            "class": None,
            "precision": report.average,
            "per_n": {str(n): v for n, v in sorted(report.per_n.items())},
            **base,
        }
    )
    return records


def compare_expansion(
    index: Index,
    manifest: DatasetManifest | None,
    config: EvalConfig,
    methods: Sequence[str] = ("none", "psum", "pinv"),
) -> dict[str, EvaluationReport]:
    """Evaluate the same index under several expansion settings."""
    return {m: evaluate_dataset(index, manifest, replace(config, expansion=m)) for m in methods}
