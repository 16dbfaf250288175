"""Sequential spectral clustering with an arcsin stopping threshold.

At every step one sample is drawn from each sequence, the pairwise MMD
estimates are updated, the sequences are clustered spectrally and the
minimum cross-cluster distance ``gamma`` between spectral points is compared
with ``arcsin(C / sqrt(t))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .exceptions import InputError
from .kernel_mmd import KernelConfig, PairwiseDistanceState
from .spectral import (
    Clustering,
    build_affinity,
    build_normalized,
    cluster_embedding,
    fix_signs,
    full_eigen,
)
from .streams import draw_all, step_rng_seed

THRESHOLD_FORMS = ("arcsin", "ratio")


def default_max_t(C: float) -> int:
    return 10 * math.ceil(C * C) + 500


@dataclass
class SeqConfig:
    """Parameters of one sequential run.

    ``threshold`` selects ``arcsin(C/sqrt(t))`` or the plain ratio
    ``C/sqrt(t)``. ``check_every`` evaluates the clustering and stop test
    only every that many samples (1 is the standard algorithm).
    """

    K: int
    C: float
    sigma_a: float = 1.0
    sigma_g: float = 1.0
    max_t: int | None = None
    seed: int | tuple = 0
    threshold: str = "arcsin"
    keep_trace: bool = True
    check_every: int = 1

    def __post_init__(self):
        if not self.C > 0:
            raise InputError(f"C must be positive, got {self.C}")
        if self.K < 1:
            raise InputError(f"K must be >= 1, got {self.K}")
        if self.threshold not in THRESHOLD_FORMS:
            raise InputError(f"threshold must be one of {THRESHOLD_FORMS}")
        if self.max_t is None:
            self.max_t = default_max_t(self.C)
        if self.max_t < math.ceil(self.C * self.C):
            raise InputError(f"max_t={self.max_t} is below ceil(C^2)={math.ceil(self.C * self.C)}")
        if self.check_every < 1:
            raise InputError("check_every must be >= 1")

    @property
    def kernel(self) -> KernelConfig:
        return KernelConfig(bandwidth=self.sigma_g)


@dataclass
class StepRecord:
    t: int
    gamma: float
    threshold: float
    stop: bool
    ops: float = 0.0
    exact: bool = True
    rank: int | None = None
    block: tuple | None = None
    verified: bool = False


@dataclass
class SeqResult:
    N: int
    clustering: Clustering
    stopped_by_cap: bool
    eigen_op_count: float
    trace: list[StepRecord] | None = None
    method: str = "seq-spec"
    surrogate_statistic: bool = False

    @property
    def mean_eigen_ops(self) -> float:
        return self.eigen_op_count / self.N if self.N else 0.0


def threshold_value(t: int, C: float, form: str = "arcsin") -> float:
    """Threshold at step ``t``; ``inf`` where ``arcsin`` is undefined (``t < C^2``)."""
    ratio = C / math.sqrt(t)
    if form == "ratio":
        return ratio
    if ratio > 1.0:
        return math.inf
    return math.asin(ratio)


def stopping_rule(gamma: float, t: int, C: float, form: str = "arcsin") -> bool:
    if t < 1:
        raise InputError("t must be >= 1")
    return gamma >= threshold_value(t, C, form)


def gamma_statistic(Y, clustering) -> float:
    """Minimum distance between spectral points in different clusters.

    Returns 0 when fewer than two clusters are non-empty.
    """
    labels = np.asarray(getattr(clustering, "labels", clustering))
    if np.unique(labels).size < 2:
        return 0.0
    Y = np.asarray(Y, dtype=float)
    diff = Y[:, None, :] - Y[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    cross = labels[:, None] != labels[None, :]
    return float(dist[cross].min())


@dataclass
class PathStep:
    """C-independent output of one evaluated step of a sequential method."""

    t: int
    statistic: float
    labels: np.ndarray
    ops: float
    extra: dict = field(default_factory=dict)


def exact_spec_step(d_hat, K: int, sigma_a: float, seed) -> tuple[Clustering, float, np.ndarray, np.ndarray]:
    """One exact SPEC evaluation: returns ``(clustering, gamma, eigenvalues, eigenvectors)``."""
    A = build_affinity(d_hat, sigma_a)
    w, V = full_eigen(build_normalized(A))
    clustering, Y, degenerate = cluster_embedding(fix_signs(V[:, :K]), K, seed)
    gamma = 0.0 if degenerate else gamma_statistic(Y, clustering)
    return clustering, gamma, w, V


class DistancePath:
    """Statistic path of a sequential method, evaluated on demand.

    The distance estimates advance one sample per step; the clustering and
    statistic are computed only for the steps asked for, and memoized.
    Steps may be requested out of order as long as every request at or
    before the current sample count was evaluated earlier. The path does
    not depend on ``C``, so one instance serves every threshold.
    Subclasses implement ``evaluate(t, d_hat)``.
    """

    ops_per_step = 0.0

    def __init__(self, streams, sigma_g: float = 1.0):
        if len(streams) < 2:
            raise InputError("need at least two streams")
        self.streams = streams
        self.M = len(streams)
        self.state = PairwiseDistanceState(self.M, KernelConfig(bandwidth=sigma_g))
        self.t = 0
        self._memo: dict[int, PathStep] = {}

    def at(self, t: int) -> PathStep:
        if t in self._memo:
            return self._memo[t]
        if t <= self.t:
            raise InputError(f"step {t} was passed without being evaluated")
        while self.t < t:
            self.state.update(draw_all(self.streams))
            self.t += 1
        step = self.evaluate(t, self.state.d_hat)
        self._memo[t] = step
        return step

    def evaluate(self, t: int, d_hat) -> PathStep:
        raise NotImplementedError


class SpecPath(DistancePath):
    """Exact SEQ-SPEC: ``gamma`` and the SPEC clustering at each step, charged ``M^3``."""

    def __init__(self, streams, K: int, sigma_a: float = 1.0, sigma_g: float = 1.0, seed=0):
        super().__init__(streams, sigma_g)
        self.K, self.sigma_a, self.seed = K, sigma_a, seed
        self.ops_per_step = float(self.M) ** 3

    def evaluate(self, t, d_hat):
        clustering, gamma, _, _ = exact_spec_step(d_hat, self.K, self.sigma_a, step_rng_seed(self.seed, t))
        return PathStep(t, gamma, clustering.labels, self.ops_per_step)


def run_path(path: DistancePath, K: int, C: float, form: str, max_t: int, keep_trace: bool,
             method: str, surrogate: bool = False, check_every: int = 1) -> SeqResult:
    """Apply the stop test for one ``C`` along a statistic path.

    Without a trace, steps whose threshold is infinite are not evaluated:
    they cannot stop the run. Their cost is still charged, as the
    algorithm computes them.
    """
    if max_t < 1:
        raise InputError("max_t must be >= 1")
    trace = [] if keep_trace else None
    ops = 0.0
    for t in range(1, max_t + 1):
        last = t == max_t
        if t % check_every and not last:
            continue
        ops += path.ops_per_step
        thr = threshold_value(t, C, form)
        if trace is None and math.isinf(thr) and not last:
            continue
        step = path.at(t)
        stop = step.statistic >= thr
        if trace is not None:
            trace.append(StepRecord(t, step.statistic, thr, stop, path.ops_per_step))
        if stop or last:
            return SeqResult(t, Clustering(step.labels, K), not stop, ops, trace, method, surrogate)
    raise AssertionError("unreachable")


def run_seq_spec(streams, cfg: SeqConfig) -> SeqResult:
    """Run SEQ-SPEC until the stop test passes or ``cfg.max_t`` is reached.

    Raises ``StreamExhausted`` when a finite stream runs dry first.
    """
    path = SpecPath(streams, cfg.K, cfg.sigma_a, cfg.sigma_g, cfg.seed)
    return run_path(path, cfg.K, cfg.C, cfg.threshold, cfg.max_t, cfg.keep_trace, "seq-spec",
                    check_every=cfg.check_every)
