"""Clustering labeled data: one cluster per digit, two sequences per digit.

Any ``label, feature, ...`` file works. Without one, this writes the small
8x8 digits set shipped with scikit-learn (needs the ``demos`` extra) and
uses that. Each digit's images are split in two pools; a sequence draws
from its pool with replacement.

    python demos/labeled_digits.py --trials 100
    python demos/labeled_digits.py --data my_features.csv
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from seqspec.bench import BenchConfig, run_bench
from seqspec.datagen import ingest_labeled

parser = argparse.ArgumentParser()
parser.add_argument("--data", help="labeled feature file")
parser.add_argument("--trials", type=int, default=100)
parser.add_argument("--sigma-g", type=float, default=20.0)
parser.add_argument("--sigma-a", type=float, default=0.1)
args = parser.parse_args()

path = args.data
if path is None:
    from sklearn.datasets import load_digits

    X, y = load_digits(return_X_y=True)
    path = Path(tempfile.mkdtemp()) / "digits.csv"
    np.savetxt(path, np.column_stack([y, X]), fmt="%g", delimiter=",")
    print(f"wrote {path}")

inst = ingest_labeled(path, splits_per_label=2, seed=0)
print(f"M = {inst.M} sequences, K = {inst.K} clusters")

common = dict(trials=args.trials, sigma_a=args.sigma_a, sigma_g=args.sigma_g)
for label, cfg in [
    ("SEQ-SPEC", BenchConfig("seq-spec", [2, 3, 4, 5], **common)),
    ("SEQ-KMED", BenchConfig("seq-kmed", [0.5, 1, 1.5, 2], **common)),
    ("SEQ-SLINK", BenchConfig("seq-slink", [0.5, 1, 1.5, 2], **common)),
]:
    s = run_bench(cfg, inst)
    print(f"\n{label}")
    for r in s.rows:
        print(f"  C={r['C']:<5g} mean_N={r['mean_N']:7.2f}  ln P={r['ln_error_prob']:7.3f}")
