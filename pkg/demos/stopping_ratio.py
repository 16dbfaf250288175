"""Mean stopping time grows like C^2 / sin^2(d_H).

Two groups of three nearly deterministic sequences, far apart. Their
spectral points are close to orthogonal, so d_H is close to sqrt(2) and
N / C^2 should settle near 1 / sin^2(sqrt(2)) ~ 1.025 for large C.

    python demos/stopping_ratio.py --trials 100
"""

import argparse

from seqspec.bench import BenchConfig, run_bench
from seqspec.datagen import gen_two_block_instance
from seqspec.diagnostics import diagnose
from seqspec.spectral import build_affinity

parser = argparse.ArgumentParser()
parser.add_argument("--trials", type=int, default=100)
args = parser.parse_args()

inst = gen_two_block_instance()
d = diagnose(build_affinity(inst.true_distances(), 0.3), 2, inst.truth)
print(f"d_H = {d.d_H:.5f}  beta = {d.beta:.3g}  1/sin^2(d_H) = {d.stop_ratio:.4f}")

s = run_bench(BenchConfig("seq-spec", [5, 10, 20, 40], trials=args.trials, sigma_a=0.3), inst)
for r in s.rows:
    print(f"C={r['C']:<4g} mean_N={r['mean_N']:9.2f}  N/C^2={r['mean_N'] / r['C'] ** 2:.4f}")
