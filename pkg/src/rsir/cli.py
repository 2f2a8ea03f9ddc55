"""Command-line entry point wiring all pipeline stages.

Subcommands: synth, validate, train-codebook, train-pca, build-index, query,
evaluate, benchmark. Every run logs its resolved configuration to stderr, and
identical configurations produce identical artifacts (timing output aside).

Exit codes: 0 success, 2 usage, 3 format error, 4 dimension error, 5 data
error, 6 insufficient data, 7 missing file, 8 validation issues found,
9 empty index, 10 evaluation error.

The environment variable RSIR_WORKERS sets the evaluation worker count.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .aggregation import GlobalDescriptor, aggregate_vlad, select_top_attentive
from .codebook import load_codebook, save_codebook, train_codebook
from .engine import benchmark_search, load_index, save_index, search
from .errors import (
    DataError,
    DimensionError,
    EmptyIndexError,
    EvaluationError,
    FormatError,
    InsufficientDataError,
)
from .evaluation import EvalConfig, evaluate_dataset, format_report, report_records
from .expansion import query_with_expansion
from .model import load_descriptor_set, load_manifest, validate_manifest
from .pipeline import (
    build_dataset_index,
    check_codebook_space,
    codebook_training_matrix,
    project_descriptor_set,
)
from .reduction import fit_pca, load_pca, project, project_global, save_pca
from .synthgen import AttentionModel, SynthSpec, generate_synthetic_dataset

log = logging.getLogger("rsir")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CODES = {
    FormatError: 3,
    DimensionError: 4,
    DataError: 5,
    InsufficientDataError: 6,
    FileNotFoundError: 7,
    EmptyIndexError: 9,
    EvaluationError: 10,
}
EXIT_VALIDATION = 8


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("RSIR_WORKERS", "1")))
    except ValueError:
        return 1


def _manifest_arg(dataset: str):
    path = Path(dataset)
    manifest_path = path / "manifest.json" if path.is_dir() else path
    if not manifest_path.is_file():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    return load_manifest(manifest_path), manifest_path.parent


def _require(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _log_config(name: str, args: argparse.Namespace) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    log.info("%s config: %s", name, json.dumps(config, sort_keys=True, default=str))


def cmd_synth(args) -> int:
    spec = SynthSpec(
        classes=args.classes,
        images_per_class=args.images,
        descriptors_per_image=args.per_image,
        d=args.dim,
        class_separation=args.separation,
        within_noise=args.noise,
        attention=AttentionModel(signal_boost=args.boost, distractor_rate=args.distractor_rate),
        seed=args.seed,
        prototypes_per_class=args.prototypes,
    )
    manifest = generate_synthetic_dataset(spec, args.out)
    print(f"wrote {len(manifest.images)} descriptor files under {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    manifest, root = _manifest_arg(args.dataset)
    report = validate_manifest(manifest, root)
    if report.ok:
        print(f"{manifest.name}: OK ({len(manifest.images)} images, d={manifest.d})")
        return EXIT_OK
    print(report)
    print(f"{manifest.name}: {len(report.issues)} issue(s) found")
    return EXIT_VALIDATION


def cmd_train_codebook(args) -> int:
    if args.k not in (2, 4, 8, 16):
        log.info("k=%d is outside the usual {2, 4, 8, 16} grid; training anyway", args.k)
    manifest, root = _manifest_arg(args.dataset)
    feature_pca = load_pca(_require(args.feature_pca, "PCA model")) if args.feature_pca else None
    features = codebook_training_matrix(manifest, root, args.per_image, feature_pca)
    codebook = train_codebook(features, k=args.k, seed=args.seed, max_iters=args.max_iters, tol=args.tol)
    save_codebook(codebook, args.out)
    print(
        f"trained k={codebook.k} d={codebook.d} codebook on {features.shape[0]} features "
        f"({codebook.meta.iterations} iterations, inertia {codebook.meta.inertia:.6g}) -> {args.out}"
    )
    return EXIT_OK


def cmd_train_pca(args) -> int:
    if args.level == "feature":
        manifest, root = _manifest_arg(args.dataset)
        sample = codebook_training_matrix(manifest, root, args.per_image)
    else:
        if not args.index:
            print("train-pca --level global requires --index", file=sys.stderr)
            return EXIT_USAGE
        index = load_index(_require(args.index, "index"))
        sample = index.matrix
    model = fit_pca(sample, args.dim)
    save_pca(model, args.out)
    kept = float(model.explained_variance.sum())
    print(
        f"fitted {args.level}-level PCA {model.d_in} -> {model.d_out} on {sample.shape[0]} "
        f"vectors (variance kept {kept:.6g}) -> {args.out}"
    )
    return EXIT_OK


def cmd_build_index(args) -> int:
    manifest, root = _manifest_arg(args.dataset)
    codebook = load_codebook(_require(args.codebook, "codebook"))
    feature_pca = load_pca(_require(args.feature_pca, "PCA model")) if args.feature_pca else None
    global_pca = load_pca(_require(args.global_pca, "PCA model")) if args.global_pca else None
    index = build_dataset_index(
        manifest, root, codebook, top_n=args.top, feature_pca=feature_pca, global_pca=global_pca
    )
    save_index(index, args.out, k=1 if global_pca is not None else codebook.k)
    print(f"indexed {len(index)} images at dim {index.dim} -> {args.out}")
    return EXIT_OK


def _query_vector(args, index) -> GlobalDescriptor:
    if args.id is not None:
        if args.id not in index:
            raise DataError(f"image id {args.id!r} not in index")
        return GlobalDescriptor(values=index.vector(args.id), image_id=args.id, normalized=True)
    if args.desc is None or args.codebook is None:
        raise DataError("query needs either --id or both --desc and --codebook")
    codebook = load_codebook(_require(args.codebook, "codebook"))
    feature_pca = load_pca(_require(args.feature_pca, "PCA model")) if args.feature_pca else None
    global_pca = load_pca(_require(args.global_pca, "PCA model")) if args.global_pca else None
    expected_d = feature_pca.d_in if feature_pca is not None else codebook.d
    check_codebook_space(expected_d, codebook, feature_pca)
    dset = load_descriptor_set(_require(args.desc, "descriptor file"), expected_d)
    dset = select_top_attentive(dset, args.top)
    if feature_pca is not None:
        dset = project_descriptor_set(dset, feature_pca)
    g = aggregate_vlad(dset, codebook, normalize=True)
    if global_pca is not None:
        g = GlobalDescriptor(project_global(g.values, global_pca), g.image_id, g.normalized)
    return g


def cmd_query(args) -> int:
    index = load_index(_require(args.index, "index"))
    if args.dataset:
        manifest, _ = _manifest_arg(args.dataset)
        labels = manifest.labels_by_id()
        index.labels = [labels.get(i, "") for i in index.ids]
    query = _query_vector(args, index)
    if args.expansion == "none":
        exclude_self = not args.keep_self and query.image_id in index
        ranked = search(index, query.values, args.top_k + (1 if exclude_self else 0))
        if exclude_self:
            ranked.entries = [e for e in ranked.entries if e.image_id != query.image_id][: args.top_k]
    else:
        ranked = query_with_expansion(
            index, query, method=args.expansion, top_k=args.top_k, leave_one_out=not args.keep_self
        )
    for rank, entry in enumerate(ranked, start=1):
        label = f" {entry.class_label}" if entry.class_label else ""
        print(f"{rank:3d}  {entry.image_id}{label}  {entry.distance:.6f}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    manifest, root = _manifest_arg(args.dataset)
    index = load_index(_require(args.index, "index"), labels=manifest.labels_by_id())
    n_values = tuple(int(v) for v in args.n.split(","))
    config = EvalConfig(
        expansion=args.expansion,
        top_k=args.top_k,
        n_values=n_values,
        leave_one_out=not args.keep_self,
        workers=_workers(),
    )
    report = evaluate_dataset(index, manifest, config)
    text = format_report(report, title=f"{manifest.name} retrieval precision")
    print(text)
    if args.report:
        out = Path(args.report)
        out.write_text(text + "\n", encoding="utf-8")
        out.with_suffix(".json").write_text(
            json.dumps(report_records(report), indent=2) + "\n", encoding="utf-8"
        )
        print(f"report written to {out} and {out.with_suffix('.json')}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    sizes = [int(v) for v in args.sizes.split(",")]
    dims = [int(v) for v in args.dims.split(",")]
    report = benchmark_search(sizes, dims, repetitions=args.repetitions, top_k=args.top_k, seed=args.seed)
    table = report.format_table()
    print(f"median query time (ms) over {args.repetitions} repetitions")
    print(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "timings.txt").write_text(table + "\n", encoding="utf-8")
        (out / "timings.json").write_text(
            json.dumps(report.records(), indent=2) + "\n", encoding="utf-8"
        )
        print(f"timings written under {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsir", description="attentive-descriptor image retrieval pipeline"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic descriptor dataset")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--images", type=int, default=50, help="images per class")
    p.add_argument("--per-image", type=int, default=300, help="descriptors per image")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--separation", type=float, default=1.0, help="class-center spread")
    p.add_argument("--noise", type=float, default=1.0, help="within-class descriptor noise")
    p.add_argument("--boost", type=float, default=4.0, help="attention boost for class features")
    p.add_argument("--distractor-rate", type=float, default=0.2)
    p.add_argument("--prototypes", type=int, default=8, help="latent prototypes per class")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="check a dataset manifest against its files")
    p.add_argument("--dataset", required=True, help="dataset directory or manifest path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train-codebook", help="cluster attentive features into visual words")
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--per-image", type=int, default=100, help="training features per image")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--feature-pca", help="project features with this model before clustering")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_codebook)

    p = sub.add_parser("train-pca", help="fit PCA at feature or global level")
    p.add_argument("--level", choices=("feature", "global"), required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--dataset", help="required for --level feature")
    p.add_argument("--per-image", type=int, default=100, help="feature-level sample per image")
    p.add_argument("--index", help="required for --level global: fit on these vectors")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_pca)

    p = sub.add_parser("build-index", help="aggregate every image and build the search index")
    p.add_argument("--dataset", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--top", type=int, default=300, help="most attentive descriptors per image")
    p.add_argument("--feature-pca")
    p.add_argument("--global-pca")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("query", help="rank database images against one query")
    p.add_argument("--index", required=True)
    p.add_argument("--dataset", help="attach class labels from this manifest")
    p.add_argument("--id", help="query by image id already in the index")
    p.add_argument("--desc", help="query from a descriptor file (needs --codebook)")
    p.add_argument("--codebook")
    p.add_argument("--top", type=int, default=300)
    p.add_argument("--feature-pca")
    p.add_argument("--global-pca")
    p.add_argument("--expansion", choices=("none", "psum", "pinv"), default="none")
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--keep-self", action="store_true", help="do not exclude the query from results")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="precision evaluation with every image as a query")
    p.add_argument("--dataset", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--n", default="1,3,5,10,15,20", help="comma-separated retrieval-set sizes")
    p.add_argument("--expansion", choices=("none", "psum", "pinv"), default="none")
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--keep-self", action="store_true")
    p.add_argument("--report", help="write the text report here (plus .json sibling)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="time full-scan queries across sizes and dims")
    p.add_argument("--sizes", default="50,100,200,300,400,500")
    p.add_argument("--dims", default="16384,1024,512,256")
    p.add_argument("--repetitions", type=int, default=15)
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for timings.txt / timings.json")
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    _log_config(args.command, args)
    try:
        return args.func(args)
    except tuple(EXIT_CODES) as exc:
        print(f"error: {exc}", file=sys.stderr)
        for cls, code in EXIT_CODES.items():
            if isinstance(exc, cls):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
