"""Two blobs joined by a bridge of six sequences.

The bridge sequences may end up in either cluster; only the 24 blob
sequences are scored. Single linkage chains through the bridge and merges
the blobs, while the spectral and medoid methods keep them apart.

    python demos/bridge.py --trials 500
"""

import argparse

from seqspec.bench import BenchConfig, run_bench
from seqspec.datagen import gen_bridge_instance
from seqspec.diagnostics import diagnose
from seqspec.incremental import IAConfig
from seqspec.spectral import build_affinity

parser = argparse.ArgumentParser()
parser.add_argument("--trials", type=int, default=500)
args = parser.parse_args()

inst = gen_bridge_instance()
d = diagnose(build_affinity(inst.true_distances(), 0.1), 2, inst.truth)
print(f"d_H = {d.d_H:.3f}, limiting N/C^2 = {d.stop_ratio:.2f}")

common = dict(trials=args.trials, sigma_a=0.1)
for label, cfg in [
    ("SEQ-SPEC", BenchConfig("seq-spec", [1.5, 2.0, 2.25, 2.5, 3.0], **common)),
    ("IA-SEQ-SPEC", BenchConfig("ia-seq-spec", [1.5, 2.0, 2.25, 2.5, 3.0], ia=IAConfig(4, 0.7, 50), **common)),
    ("SEQ-KMED", BenchConfig("seq-kmed", [0.75, 1.0, 1.25, 1.5], **common)),
    ("SEQ-SLINK", BenchConfig("seq-slink", [1.0, 1.5, 2.0, 2.5], **common)),
]:
    s = run_bench(cfg, inst)
    print(f"\n{label}")
    for r in s.rows:
        print(f"  C={r['C']:<5g} mean_N={r['mean_N']:7.2f}  ln P={r['ln_error_prob']:7.3f}")
