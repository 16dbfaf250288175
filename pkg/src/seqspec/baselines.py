"""Comparison methods sharing the MMD front end of SEQ-SPEC.

* FSS-SPEC: spectral clustering after a fixed number of samples.
* SEQ-KMED: K-medoids on the distance estimates, stopped when the smallest
  cross-cluster distance clears ``C / sqrt(t)``.
* SEQ-SLINK: single linkage cut at ``K`` clusters, stopped the same way.

The sequential statistics are raw-distance surrogates: results carry
``surrogate_statistic=True``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.spatial.distance import squareform

from .exceptions import InputError
from .sequential import DistancePath, PathStep, SeqResult, SpecPath, default_max_t, run_path
from .spectral import Clustering

BASELINE_METHODS = ("fss-spec", "seq-kmed", "seq-slink")


@dataclass
class BaselineConfig:
    """Settings shared by the baselines.

    ``t_fixed`` is the sample count of FSS-SPEC; ``C`` the threshold
    constant of the sequential ones, whose threshold defaults to the plain
    ratio ``C / sqrt(t)``.
    """

    method: str
    K: int
    C: float | None = None
    t_fixed: int | None = None
    sigma_a: float = 1.0
    sigma_g: float = 1.0
    max_t: int | None = None
    seed: int | tuple = 0
    threshold: str = "ratio"
    keep_trace: bool = True
    check_every: int = 1

    def __post_init__(self):
        if self.method not in BASELINE_METHODS:
            raise InputError(f"method must be one of {BASELINE_METHODS}")
        if self.K < 1:
            raise InputError("K must be >= 1")
        if self.method == "fss-spec":
            if self.t_fixed is None or self.t_fixed < 1:
                raise InputError("fss-spec needs t_fixed >= 1")
        else:
            if self.C is None or not self.C > 0:
                raise InputError(f"{self.method} needs C > 0")
            if self.max_t is None:
                self.max_t = default_max_t(self.C)
        if self.check_every < 1:
            raise InputError("check_every must be >= 1")


def run_fss_spec(streams, K: int, t_fixed: int, sigma_a: float = 1.0, sigma_g: float = 1.0, seed=0) -> Clustering:
    """SPEC on the distance estimates after exactly ``t_fixed`` samples per sequence.

    K-Means is seeded as SEQ-SPEC seeds it at step ``t_fixed``, so on the
    same streams this returns what SEQ-SPEC outputs when it stops there.
    """
    if t_fixed < 1:
        raise InputError("t_fixed must be >= 1")
    return Clustering(SpecPath(streams, K, sigma_a, sigma_g, seed).at(t_fixed).labels, K)


def pam(D, K: int) -> tuple[np.ndarray, np.ndarray]:
    """K-medoids by greedy build then best-improvement swaps.

    Returns ``(medoids, labels)``; medoids are sorted and every point joins
    its nearest medoid (lowest medoid index on ties). Ties between candidate
    medoids go to the smallest index.
    """
    D = np.asarray(D, dtype=float)
    M = D.shape[0]
    if not 1 <= K <= M:
        raise InputError(f"need 1 <= K <= M, got K={K}, M={M}")
    medoids = [int(np.argmin(D.sum(axis=1)))]
    nearest = D[medoids[0]].copy()
    while len(medoids) < K:
        gain = np.maximum(nearest[None, :] - D, 0.0).sum(axis=1)
        gain[medoids] = -np.inf
        m = int(np.argmax(gain))
        medoids.append(m)
        nearest = np.minimum(nearest, D[m])

    def cost(meds):
        return float(D[meds].min(axis=0).sum())

    current = cost(medoids)
    while True:
        best, best_swap = current, None
        for a in range(K):
            for o in range(M):
                if o in medoids:
                    continue
                trial = medoids[:a] + [o] + medoids[a + 1 :]
                c = cost(trial)
                if c < best - 1e-12:
                    best, best_swap = c, trial
        if best_swap is None:
            break
        medoids, current = best_swap, best
    medoids = np.array(sorted(medoids))
    labels = np.argmin(D[medoids], axis=0)
    return medoids, labels


def min_cross_distance(D, labels) -> float:
    labels = np.asarray(labels)
    cross = labels[:, None] != labels[None, :]
    if not cross.any():
        return 0.0
    return float(np.asarray(D)[cross].min())


def single_linkage_cut(D, K: int) -> tuple[np.ndarray, float]:
    """Single-linkage labels at ``K`` clusters and the merge height that would join two of them."""
    D = np.asarray(D, dtype=float)
    M = D.shape[0]
    if not 1 <= K <= M:
        raise InputError(f"need 1 <= K <= M, got K={K}, M={M}")
    if K == M:
        return np.arange(M), min_cross_distance(D, np.arange(M))
    Z = linkage(squareform(D, checks=False), method="single")
    labels = cut_tree(Z, n_clusters=K).ravel()
    height = float(Z[M - K, 2]) if K > 1 else 0.0
    return labels, height


class KmedPath(DistancePath):
    def __init__(self, streams, K: int, sigma_g: float = 1.0):
        super().__init__(streams, sigma_g)
        self.K = K

    def evaluate(self, t, d_hat):
        _, labels = pam(d_hat, self.K)
        return PathStep(t, min_cross_distance(d_hat, labels), labels, 0.0)


class SlinkPath(DistancePath):
    def __init__(self, streams, K: int, sigma_g: float = 1.0):
        super().__init__(streams, sigma_g)
        self.K = K

    def evaluate(self, t, d_hat):
        labels, height = single_linkage_cut(d_hat, self.K)
        return PathStep(t, height, labels, 0.0)


def run_seq_kmed(streams, cfg: BaselineConfig) -> SeqResult:
    """Sequential K-medoids; statistic is the smallest cross-cluster distance estimate."""
    path = KmedPath(streams, cfg.K, cfg.sigma_g)
    return run_path(path, cfg.K, cfg.C, cfg.threshold, cfg.max_t, cfg.keep_trace, "seq-kmed", surrogate=True,
                    check_every=cfg.check_every)


def run_seq_slink(streams, cfg: BaselineConfig) -> SeqResult:
    """Sequential single linkage; statistic is the height of the next merge across clusters."""
    path = SlinkPath(streams, cfg.K, cfg.sigma_g)
    return run_path(path, cfg.K, cfg.C, cfg.threshold, cfg.max_t, cfg.keep_trace, "seq-slink", surrogate=True,
                    check_every=cfg.check_every)


def run_baseline(streams, cfg: BaselineConfig) -> SeqResult:
    """Dispatch on ``cfg.method``; FSS-SPEC is reported as a run stopped at ``t_fixed``."""
    if cfg.method == "fss-spec":
        clustering = run_fss_spec(streams, cfg.K, cfg.t_fixed, cfg.sigma_a, cfg.sigma_g, cfg.seed)
        return SeqResult(cfg.t_fixed, clustering, False, float(len(streams)) ** 3, None, "fss-spec")
    if cfg.method == "seq-kmed":
        return run_seq_kmed(streams, cfg)
    return run_seq_slink(streams, cfg)

