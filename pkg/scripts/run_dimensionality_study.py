#!/usr/bin/env python3
"""Dimensionality-reduction study on synthetic data.

Two regimes, evaluated on the same dataset:
  * feature-level PCA before clustering, over a grid of visual-word counts
    and reduced feature sizes (the codebook is retrained in each space);
  * global-level PCA applied directly to the aggregated vectors.
Prints average precision@20 per configuration.
"""

import argparse
import tempfile

import rsir


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--noise", type=float, default=1.5)
    parser.add_argument("--distractor-rate", type=float, default=0.05)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--ks", default="2,4,8,16")
    parser.add_argument("--feature-dims", default="64,32,16")
    parser.add_argument("--global-dims", default="256,128,64,32")
    args = parser.parse_args()

    ks = [int(v) for v in args.ks.split(",")]
    feature_dims = [int(v) for v in args.feature_dims.split(",")]
    global_dims = [int(v) for v in args.global_dims.split(",")]

    spec = rsir.SynthSpec(
        classes=10, images_per_class=50, descriptors_per_image=300, d=args.dim,
        class_separation=1.0, within_noise=args.noise,
        attention=rsir.AttentionModel(signal_boost=4.0, distractor_rate=args.distractor_rate),
        seed=args.seed,
    )
    with tempfile.TemporaryDirectory() as tmp:
        manifest = rsir.generate_synthetic_dataset(spec, tmp)
        features = rsir.codebook_training_matrix(manifest, tmp, 100)
        config = rsir.EvalConfig(seed=args.seed)

        print(f"feature-level PCA (dataset d={args.dim}); average precision@20")
        header = "k \\ d_out " + "".join(f"{d:>8d}" for d in feature_dims)
        print(header)
        for k in ks:
            cells = []
            for d_out in feature_dims:
                if d_out == args.dim:
                    codebook = rsir.train_codebook(features, k=k, seed=args.seed)
                    index = rsir.build_dataset_index(manifest, tmp, codebook)
                else:
                    model = rsir.fit_pca(features, d_out)
                    codebook = rsir.train_codebook(rsir.project(features, model), k=k, seed=args.seed)
                    index = rsir.build_dataset_index(manifest, tmp, codebook, feature_pca=model)
                cells.append(rsir.evaluate_dataset(index, manifest, config).average)
            print(f"{k:>9d} " + "".join(f"{v:8.4f}" for v in cells))

        print()
        print("global-level PCA on k=16 aggregates; average precision@20")
        codebook = rsir.train_codebook(features, k=16, seed=args.seed)
        full_index = rsir.build_dataset_index(manifest, tmp, codebook)
        base = rsir.evaluate_dataset(full_index, manifest, config).average
        print(f"{'size':>8s} {'precision':>10s}")
        print(f"{full_index.dim:>8d} {base:>10.4f}")
        for d_out in global_dims:
            model = rsir.fit_pca(full_index.matrix, d_out)
            index = rsir.build_dataset_index(manifest, tmp, codebook, global_pca=model)
            avg = rsir.evaluate_dataset(index, manifest, config).average
            print(f"{d_out:>8d} {avg:>10.4f}")


if __name__ == "__main__":
    main()
