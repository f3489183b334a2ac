#!/usr/bin/env python3
"""Time C-model ensemble construction (cyclic Hamming kernel) at a given size."""
import argparse
import time

import numba

from bitgas.bitcore import BitString, SourceSpec, cyclic_distances, generate_source
from bitgas.ensemble import build_c_ensemble

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--log2-bits", type=int, default=20)
    parser.add_argument("--log2-count", type=int, default=16)
    parser.add_argument("--threads", type=int, default=numba.get_num_threads())
    args = parser.parse_args()

    numba.set_num_threads(args.threads)
    cyclic_distances(BitString.from_str("0110"), [1])
    M, N = 2**args.log2_bits, 2**args.log2_count
    t0 = time.perf_counter()
    src = generate_source(SourceSpec(M, 0.3, 1))
    t1 = time.perf_counter()
    h = build_c_ensemble(src, N)
    t2 = time.perf_counter()
    words = N * len(src.words)
    print(f"M=2^{args.log2_bits} N=2^{args.log2_count} threads={args.threads}")
    print(f"  source {t1 - t0:.3f} s, ensemble {t2 - t1:.3f} s ({words / (t2 - t1) / 1e9:.2f} Gword/s)")
    print(f"  mean={h.mean:.3f} macrostates={len(h)}")
