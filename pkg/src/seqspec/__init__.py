"""Sequential spectral clustering of data streams with MMD distances."""

__version__ = "0.1.0"

from .baselines import BaselineConfig, run_baseline, run_fss_spec, run_seq_kmed, run_seq_slink
from .bench import BenchConfig, BenchSummary, emit, parse_emitted, partition_error, run_bench
from .datagen import (
    ProblemInstance,
    builtin_instance,
    gen_bridge_instance,
    gen_circle_instance,
    gen_two_block_instance,
    ingest_labeled,
)
from .diagnostics import conductance, diagnose, spectral_separation
from .exceptions import DegenerateRowError, InputError, InternalInvariantError, SeqSpecError, StreamExhausted
from .incremental import IAConfig, incremental_update, run_ia_seq_spec
from .kernel_mmd import KernelConfig, PairwiseDistanceState, batch_mmd, mmd_update
from .sequential import SeqConfig, SeqResult, run_seq_spec, stopping_rule
from .spectral import Clustering, kmeans, spec_cluster

__all__ = [
    "BaselineConfig", "BenchConfig", "BenchSummary", "Clustering", "DegenerateRowError", "IAConfig",
    "InputError", "InternalInvariantError", "KernelConfig", "PairwiseDistanceState", "ProblemInstance",
    "SeqConfig", "SeqResult", "SeqSpecError", "StreamExhausted", "batch_mmd", "builtin_instance",
    "conductance", "diagnose", "emit", "gen_bridge_instance", "gen_circle_instance",
    "gen_two_block_instance", "incremental_update", "ingest_labeled", "kmeans", "mmd_update",
    "parse_emitted", "partition_error", "run_baseline", "run_bench", "run_fss_spec",
    "run_ia_seq_spec", "run_seq_kmed", "run_seq_slink", "run_seq_spec", "spec_cluster",
    "spectral_separation", "stopping_rule",
]
