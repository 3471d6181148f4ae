#!/usr/bin/env python3
"""Pairwise L2 fingerprint distances between the bundled strategies, all
probed by the Joss-Ann family built on TFT."""

import argparse
from pathlib import Path

from probefp import (
    PayoffMatrix,
    distance_matrix,
    joss_ann,
    load_bundled_strategy,
    pointwise_fingerprint,
)

BUNDLED = ("tft", "allc", "alld", "pavlov", "grim")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quad-n", type=int, default=100, help="quadrature resolution")
    parser.add_argument("--out", default="results/distance_matrix.csv")
    args = parser.parse_args()

    payoff = PayoffMatrix.default_prisoners_dilemma()
    probe = joss_ann(load_bundled_strategy("tft"))
    corpus = []
    for name in BUNDLED:
        player = load_bundled_strategy(name)
        corpus.append((player.name, pointwise_fingerprint(player, probe, payoff)))

    matrix = distance_matrix(corpus, args.quad_n)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(matrix.to_csv())
    print(f"wrote {out_path}")

    width = max(len(n) for n in matrix.names) + 2
    print("".rjust(width) + "".join(n.rjust(width) for n in matrix.names))
    for i, name in enumerate(matrix.names):
        cells = "".join(f"{matrix.d[i, j]:.4f}".rjust(width) for j in range(len(matrix.names)))
        print(name.rjust(width) + cells)


if __name__ == "__main__":
    main()
