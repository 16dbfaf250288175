"""Measurable separation quantities of a clustering problem.

Everything here is computed from a true affinity matrix and the true
partition: conductance of each cluster, the cross-cluster functionals
``eps1`` and ``eps2``, the degree-ratio constant, the spectral distances
``d_H`` and ``d_L``, the spectral gap ``beta`` and the limiting stopping
ratio ``1 / sin^2(d_H)``. These are reported, never enforced.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import InputError
from .kernel_mmd import KernelConfig, batch_mmd
from .spectral import build_normalized, full_eigen

EXHAUSTIVE_LIMIT = 20
N_SAMPLED_SUBSETS = 100_000
EIG_TIE_TOL = 1e-10


@dataclass
class Conductance:
    value: float
    exact: bool  # False: minimum over sampled subsets, an upper estimate of the true minimum

    @property
    def label(self) -> str:
        return "exact" if self.exact else "estimate"


@dataclass
class InstanceDiagnostics:
    delta_lb: float
    eps1: float
    eps2: float
    C_row: float
    d_H: float
    d_L: float
    beta: float
    stop_ratio: float
    conductance: list
    conductance_exact: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _members(clustering):
    labels = np.asarray(getattr(clustering, "labels", clustering))
    return labels, [np.flatnonzero(labels == k) for k in np.unique(labels)]


def _cut_ratios(X, A, deg):
    """Conductance ratio for each subset indicator row of ``X``."""
    vol_in = X @ deg
    vol_out = deg.sum() - vol_in
    cut = vol_in - np.einsum("sm,sm->s", X @ A, X)
    return cut / np.minimum(vol_in, vol_out)


def conductance(A, members, n_samples: int = N_SAMPLED_SUBSETS, seed=0) -> Conductance:
    """Minimum over proper nonempty subsets ``I`` of the cluster of cut(I) / min(vol I, vol rest).

    Volumes use degrees inside the cluster. Clusters of up to 20 members
    are enumerated exhaustively; larger ones use ``n_samples`` random
    subsets and the result is flagged as an estimate.
    """
    members = np.asarray(members, dtype=int)
    m = members.size
    if m < 2:
        raise InputError("conductance is undefined for a cluster with fewer than two members")
    B = np.asarray(A, dtype=float)[np.ix_(members, members)]
    deg = B.sum(axis=1)
    if np.any(deg <= 0):
        return Conductance(0.0, True)

    best = np.inf
    if m <= EXHAUSTIVE_LIMIT:
        # the last member is always outside I; this covers every split once
        n_masks = 2 ** (m - 1)
        bits = np.arange(m - 1)
        chunk = 1 << 16
        for start in range(1, n_masks, chunk):
            masks = np.arange(start, min(start + chunk, n_masks))
            X = np.zeros((masks.size, m))
            X[:, :-1] = (masks[:, None] >> bits) & 1
            best = min(best, float(_cut_ratios(X, B, deg).min()))
        return Conductance(best, True)

    rng = np.random.default_rng(seed)
    done = 0
    while done < n_samples:
        n = min(1 << 14, n_samples - done)
        X = (rng.random((n, m)) < 0.5).astype(float)
        size = X.sum(axis=1)
        X = X[(size > 0) & (size < m)]
        if X.size:
            best = min(best, float(_cut_ratios(X, B, deg).min()))
        done += n
    return Conductance(best, False)


def assumption_quantities(A, clustering) -> dict:
    """``eps1``, ``eps2``, ``C_row`` and the per-cluster within-degrees they use.

    ``eps1`` is the largest, over ordered cluster pairs, of
    ``sum A_ij^2 / (d_i d_j)``; ``eps2`` the largest, over sequences ``i``,
    of the outside-affinity ratio of ``i`` times the root of the own-cluster
    sum; ``C_row`` the largest mean-degree to degree ratio. Degrees ``d_i``
    count affinity inside the cluster of ``i`` only.
    """
    A = np.asarray(A, dtype=float)
    labels, groups = _members(clustering)
    same = labels[:, None] == labels[None, :]
    d = np.where(same, A, 0.0).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        W = A**2 / np.outer(d, d)
    eps1 = 0.0
    for a, ga in enumerate(groups):
        for b, gb in enumerate(groups):
            if a != b:
                eps1 = max(eps1, float(W[np.ix_(ga, gb)].sum()))
    eps2 = 0.0
    C_row = 0.0
    for g in groups:
        inner = math.sqrt(float(W[np.ix_(g, g)].sum()))
        outside = np.where(same[g], 0.0, A[g]).sum(axis=1) / d[g]
        eps2 = max(eps2, float(outside.max()) * inner)
        C_row = max(C_row, float((d[g].mean() / d[g]).max()))
    return {"eps1": eps1, "eps2": eps2, "C_row": C_row, "degrees": d}


def spectral_gap(eigenvalues, K: int, tol: float = EIG_TIE_TOL) -> float:
    """Smallest gap following a distinct eigenvalue among the top ``K`` (descending input)."""
    w = np.asarray(eigenvalues, dtype=float)
    if not 1 <= K < w.size:
        raise InputError(f"need 1 <= K < M, got K={K}, M={w.size}")
    gaps = w[:K] - w[1 : K + 1]
    # a gap inside a group of repeated eigenvalues is not a spectral gap
    ends = gaps > tol
    ends[K - 1] = True
    return float(gaps[ends].min())


def spectral_separation(A, K: int, clustering) -> dict:
    """``d_H``, ``d_L``, ``beta`` and ``stop_ratio = 1 / sin^2(d_H)`` of the exact pipeline on ``A``.

    Spectral-point distances come from the projector onto the top-``K``
    eigenspace, ``Y_i . Y_j = P_ij / sqrt(P_ii P_jj)``, so repeated
    eigenvalues do not make them basis dependent.
    """
    labels, groups = _members(clustering)
    if len(groups) < 2:
        raise InputError("d_H needs at least two clusters")
    w, V = full_eigen(build_normalized(A))
    Z = V[:, :K]
    P = Z @ Z.T
    norms = np.sqrt(np.clip(np.diag(P), 0.0, None))
    if np.any(norms < 1e-12):
        raise InputError("a row of the top-K eigenvectors vanishes; spectral points are undefined")
    cos = np.clip(P / np.outer(norms, norms), -1.0, 1.0)
    dist = np.sqrt(np.clip(2.0 - 2.0 * cos, 0.0, None))
    same = labels[:, None] == labels[None, :]
    d_H = float(dist[~same].min())
    off = same & ~np.eye(len(labels), dtype=bool)
    d_L = float(dist[off].max()) if off.any() else 0.0
    s = math.sin(d_H)
    return {
        "d_H": d_H,
        "d_L": d_L,
        "beta": spectral_gap(w, K) if K < len(w) else float("nan"),
        "stop_ratio": 1.0 / (s * s) if s > 0 else math.inf,
        "eigenvalues": w,
    }


def diagnose(A, K: int, clustering, seed=0) -> InstanceDiagnostics:
    _, groups = _members(clustering)
    conds = [conductance(A, g, seed=seed) for g in groups if g.size >= 2]
    aq = assumption_quantities(A, clustering)
    sep = spectral_separation(A, K, clustering)
    h_min = min((c.value for c in conds), default=math.nan)
    return InstanceDiagnostics(
        delta_lb=h_min**2 / 2.0,
        eps1=aq["eps1"],
        eps2=aq["eps2"],
        C_row=aq["C_row"],
        d_H=sep["d_H"],
        d_L=sep["d_L"],
        beta=sep["beta"],
        stop_ratio=sep["stop_ratio"],
        conductance=[c.value for c in conds],
        conductance_exact=all(c.exact for c in conds),
    )


def concentration_bound(M: int, eps: float, t: int, B: float = 1.0) -> float:
    """Union bound ``M^2 exp(-eps^2 t / (16 B))`` on any pairwise MMD deviation above ``eps``."""
    return M * M * math.exp(-eps * eps * t / (16.0 * B))


def deviation_frequency(instance, pair, eps: float, t: int, trials: int, seed=0, sigma_g: float = 1.0) -> float:
    """Empirical ``P[|d_hat_ij(t) - d_ij| > eps]`` for one pair of an instance with closed-form distances."""
    kernel = KernelConfig(bandwidth=sigma_g)
    D = instance.true_distances(kernel)
    if D is None:
        raise InputError("deviation_frequency needs an instance with closed-form distances")
    i, j = pair
    hits = 0
    for trial in range(trials):
        streams = instance.streams((seed, trial))
        x = np.stack([streams[i].draw() for _ in range(t)])
        y = np.stack([streams[j].draw() for _ in range(t)])
        hits += abs(batch_mmd(x, y, kernel) - D[i, j]) > eps
    return hits / trials


def worst_pair(instance, sigma_g: float = 1.0) -> tuple[int, int]:
    """Pair with the largest true distance (ties to the smallest indices)."""
    D = instance.true_distances(KernelConfig(bandwidth=sigma_g))
    if D is None:
        raise InputError("worst_pair needs an instance with closed-form distances")
    i, j = np.unravel_index(int(np.argmax(D)), D.shape)
    return (int(min(i, j)), int(max(i, j)))
