"""Per-step eigen-decomposition cost, exact against incremental.

The exact algorithm pays M^3 every step. The incremental one pays
(l^2 + p^2)(l + p) + M p (l + p) on most steps, M^3 on refresh and
stop-verification steps. Averages are over the whole run.

    python demos/eigen_cost.py --trials 20
"""

import argparse

from seqspec.bench import BenchConfig, run_bench
from seqspec.datagen import gen_circle_instance
from seqspec.incremental import IAConfig

parser = argparse.ArgumentParser()
parser.add_argument("--trials", type=int, default=20)
parser.add_argument("--c", type=float, default=8.0)
args = parser.parse_args()

print(f"{'M':>4} {'IA-SEQ-SPEC':>12} {'SEQ-SPEC':>10}")
for inner, outer in [(10, 20), (15, 30), (20, 40)]:
    inst = gen_circle_instance(n_inner=inner, n_outer=outer)
    ia = run_bench(BenchConfig("ia-seq-spec", [args.c], trials=args.trials, sigma_a=0.1,
                               ia=IAConfig(4, 0.7, 50)), inst)
    ex = run_bench(BenchConfig("seq-spec", [args.c], trials=args.trials, sigma_a=0.1), inst)
    print(f"{inst.M:4d} {ia.rows[0]['mean_eigen_ops']:12.0f} {ex.rows[0]['mean_eigen_ops']:10.0f}")
