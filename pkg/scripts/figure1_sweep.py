#!/usr/bin/env python3
"""Ground-state fraction versus temperature for both models (Figure 1 bundle)."""
import argparse
from pathlib import Path

from bitgas.experiment import ExperimentConfig, SweepSpec, run_figure

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bits", type=int, nargs="+", default=[1024, 4096, 16384])
    parser.add_argument("--points", type=int, default=100)
    parser.add_argument("--out", type=Path, default=Path("out/figure1"))
    args = parser.parse_args()

    spec = SweepSpec(M_values=args.bits, count=args.points)
    script = run_figure(1, ExperimentConfig(M=max(args.bits), temperature=0.25, out=args.out), sweep=spec)
    print(f"wrote {args.out}/sweep.csv; plot with: cd {args.out} && gnuplot {script.name}")
