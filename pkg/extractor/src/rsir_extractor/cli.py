"""Command-line front end for the descriptor extractor."""

from __future__ import annotations

import argparse
import logging
import sys

from .extract import ExtractionConfig, extract


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rsir-extract",
        description="extract multi-scale convolutional descriptors into rsir format",
    )
    parser.add_argument("--images", required=True, help="folder of images (optionally one subfolder per class)")
    parser.add_argument("--out", required=True, help="output directory for descriptors + manifest")
    parser.add_argument("--model", default="resnet50-block3")
    parser.add_argument("--weights", choices=("random", "imagenet"), default="random")
    parser.add_argument("--max-features", type=int, default=300)
    parser.add_argument("--name", default="extracted", help="dataset name written to the manifest")
    parser.add_argument("--seed", type=int, default=0, help="weight-init seed for --weights random")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    config = ExtractionConfig(
        model=args.model,
        weights=args.weights,
        max_features=args.max_features,
        output_dir=args.out,
        dataset_name=args.name,
        seed=args.seed,
    )
    try:
        manifest = extract(args.images, config)
    except RuntimeError as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest.images)} descriptor files under {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
