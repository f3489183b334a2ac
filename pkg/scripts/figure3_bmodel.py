#!/usr/bin/env python3
"""B-model histograms at three temperatures (Figure 3 bundle)."""
import argparse
from pathlib import Path

from bitgas.experiment import DEFAULT_FIGURE_TEMPERATURES, ExperimentConfig, run_figure

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bits", type=int, default=16384)
    parser.add_argument("--count", type=int, default=10_000, help="substrings per ensemble")
    parser.add_argument("--temperatures", type=float, nargs="+", default=list(DEFAULT_FIGURE_TEMPERATURES))
    parser.add_argument("--out", type=Path, default=Path("out/figure3"))
    args = parser.parse_args()

    cfg = ExperimentConfig(model="b", M=args.bits, N=args.count, temperature=args.temperatures[0], out=args.out)
    print(f"wrote {run_figure(3, cfg, temperatures=args.temperatures)}")
