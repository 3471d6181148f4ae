#!/usr/bin/env python3
"""Fingerprint every bundled strategy against the Joss-Ann probe of TFT.

Writes one grid CSV per strategy (and the closed form where the joint chain
is irreducible) into results/, and prints a short summary table.
"""

import argparse
from pathlib import Path

from probefp import (
    PayoffMatrix,
    fingerprint_grid,
    joss_ann,
    load_bundled_strategy,
    symbolic_fingerprint,
)
from probefp.errors import ReducibleChainError

BUNDLED = ("tft", "allc", "alld", "pavlov", "grim")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-n", type=int, default=20, help="grid resolution")
    parser.add_argument("--out", default="results", help="output directory")
    args = parser.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payoff = PayoffMatrix.default_prisoners_dilemma()
    probe = joss_ann(load_bundled_strategy("tft"))

    for name in BUNDLED:
        player = load_bundled_strategy(name)
        grid = fingerprint_grid(player, probe, payoff, args.n)
        path = out_dir / f"{name}_vs_ja_tft.csv"
        path.write_text(grid.to_csv())
        values = list(grid.values.values())
        line = f"{player.name:8s} grid [{min(values):.3f}, {max(values):.3f}] -> {path}"
        try:
            closed = symbolic_fingerprint(player, probe, payoff)
            line += f"  F(x,y) = ({closed.fn.num.render()}) / ({closed.fn.den.render()})"
        except ReducibleChainError:
            line += "  (reducible chain: grid only)"
        print(line)


if __name__ == "__main__":
    main()
