"""Gaussian kernel and streaming pairwise MMD estimates.

All pairwise biased MMD estimates are maintained with the recursive
update: when the ``n``-th sample of every sequence arrives, the squared
estimate scaled by ``n**2`` grows by the kernel terms that involve the
newest sample of either sequence, so nothing but the sample histories and
the previous estimates is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import InputError


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian kernel ``exp(-||x - y||^2 / (2 bandwidth^2))`` bounded by ``bound``."""

    bandwidth: float = 1.0
    bound: float = 1.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InputError(f"kernel bandwidth must be positive, got {self.bandwidth}")
        if not self.bound > 0:
            raise InputError(f"kernel bound must be positive, got {self.bound}")


DEFAULT_KERNEL = KernelConfig()


def _as_vectors(*xs):
    arrs = [np.atleast_1d(np.asarray(x, dtype=float)) for x in xs]
    dim = arrs[0].shape
    for a in arrs[1:]:
        if a.shape != dim:
            raise InputError(f"dimension mismatch: {dim} vs {a.shape}")
    return arrs


def kernel_eval(x, y, cfg: KernelConfig = DEFAULT_KERNEL) -> float:
    x, y = _as_vectors(x, y)
    sq = float(np.sum((x - y) ** 2))
    return float(np.exp(-sq / (2.0 * cfg.bandwidth**2)))


def h_combine(x1, x2, y1, y2, cfg: KernelConfig = DEFAULT_KERNEL) -> float:
    """``k(x1, x2) + k(y1, y2) - 2 k(x1, y2)``, the summand of the recursion."""
    x1, x2, y1, y2 = _as_vectors(x1, x2, y1, y2)
    return kernel_eval(x1, x2, cfg) + kernel_eval(y1, y2, cfg) - 2.0 * kernel_eval(x1, y2, cfg)


def gaussian_mmd_closed_form(mu1, mu2, sigma2: float, cfg: KernelConfig = DEFAULT_KERNEL) -> float:
    """Population MMD between ``N(mu1, sigma2 I)`` and ``N(mu2, sigma2 I)``.

    Uses ``E k(x, y) = (s^2 / (s^2 + 2 sigma2))^{d/2} exp(-||mu1 - mu2||^2 / (2 (s^2 + 2 sigma2)))``
    with ``s`` the kernel bandwidth.
    """
    if not sigma2 > 0:
        raise InputError(f"variance must be positive, got {sigma2}")
    mu1, mu2 = _as_vectors(mu1, mu2)
    return _gaussian_mmd(mu1, mu2, sigma2, cfg)


def _gaussian_mmd(mu1, mu2, sigma2, cfg):
    # sigma2 == 0 is the point-mass limit
    d = mu1.shape[0]
    s2 = cfg.bandwidth**2
    denom = s2 + 2.0 * sigma2
    scale = (s2 / denom) ** (d / 2.0)
    cross = scale * np.exp(-float(np.sum((mu1 - mu2) ** 2)) / (2.0 * denom))
    return float(np.sqrt(max(2.0 * scale - 2.0 * cross, 0.0)))


def gaussian_mmd_matrix(means, sigma2: float, cfg: KernelConfig = DEFAULT_KERNEL) -> np.ndarray:
    """Closed-form MMD for every pair of sequences sharing covariance ``sigma2 I``.

    ``sigma2 == 0`` is accepted and gives the point-mass distances.
    """
    means = np.asarray(means, dtype=float)
    if sigma2 < 0:
        raise InputError(f"variance must be non-negative, got {sigma2}")
    M = means.shape[0]
    out = np.zeros((M, M))
    for i in range(M):
        for j in range(i + 1, M):
            out[i, j] = out[j, i] = _gaussian_mmd(means[i], means[j], sigma2, cfg)
    return out


class PairwiseDistanceState:
    """Running biased MMD estimates ``d_hat[i, j]`` for ``M`` sequences.

    Keeps the full per-sequence sample history, which the recursion needs
    every time a new sample arrives.

    Attributes
    ----------
    M : int
        Number of sequences.
    t : int
        Samples seen per sequence.
    d_hat : ndarray, shape (M, M)
        Symmetric, zero diagonal, non-negative.
    """

    def __init__(self, M: int, kernel: KernelConfig = DEFAULT_KERNEL, dim: int | None = None):
        if M < 2:
            raise InputError(f"need at least two sequences, got M={M}")
        self.M = int(M)
        self.kernel = kernel
        self.dim = dim
        self.t = 0
        self.d_hat = np.zeros((self.M, self.M))
        self._hist = None

    @property
    def history(self) -> np.ndarray:
        """Samples so far, shape ``(M, t, dim)`` (a view)."""
        if self._hist is None:
            return np.zeros((self.M, 0, self.dim or 0))
        return self._hist[:, : self.t]

    def _append(self, samples):
        if self._hist is None:
            self._hist = np.empty((self.M, 64, self.dim))
        elif self.t == self._hist.shape[1]:
            grown = np.empty((self.M, 2 * self.t, self.dim))
            grown[:, : self.t] = self._hist
            self._hist = grown
        self._hist[:, self.t] = samples

    def update(self, new_samples) -> "PairwiseDistanceState":
        samples = np.asarray(new_samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] != self.M:
            raise InputError(f"expected one sample per sequence ({self.M}), got shape {samples.shape}")
        if self.dim is None:
            self.dim = samples.shape[1]
        elif samples.shape[1] != self.dim:
            raise InputError(f"sample dimension {samples.shape[1]} != {self.dim}")

        self._append(samples)
        t_old = self.t
        n = t_old + 1
        self.t = n
        M = self.M
        inv2s2 = 1.0 / (2.0 * self.kernel.bandwidth**2)

        hist = self._hist[:, :n].reshape(M * n, self.dim)
        # g[j, i] = sum_{l <= n} k(X_l^(i), X_n^(j))
        kern = np.exp(-cdist(samples, hist, "sqeuclidean") * inv2s2)
        g = kern.reshape(M, M, n).sum(axis=2)
        k_new = np.exp(-cdist(samples, samples, "sqeuclidean") * inv2s2)

        # first sum of the recursion plus the second (l <= t) sum, per pair
        cross = g + g.T - k_new
        self_terms = np.diag(cross)
        bracket = self_terms[:, None] + self_terms[None, :] - 2.0 * cross
        bracket += (t_old**2) * self.d_hat**2
        d = np.sqrt(np.maximum(bracket, 0.0)) / n
        # each unordered pair computed once and mirrored
        iu = np.triu_indices(M, 1)
        out = np.zeros((M, M))
        out[iu] = d[iu]
        self.d_hat = out + out.T
        return self


def mmd_update(state: PairwiseDistanceState, new_samples) -> PairwiseDistanceState:
    """Advance ``state`` by one synchronized sample from each sequence (in place)."""
    return state.update(new_samples)


def batch_mmd(x, y, cfg: KernelConfig = DEFAULT_KERNEL) -> float:
    """Biased MMD estimate between sample sets ``x`` and ``y`` computed from scratch."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[1] != y.shape[1]:
        raise InputError("dimension mismatch")
    inv = 1.0 / (2.0 * cfg.bandwidth**2)
    kxx = np.exp(-cdist(x, x, "sqeuclidean") * inv).mean()
    kyy = np.exp(-cdist(y, y, "sqeuclidean") * inv).mean()
    kxy = np.exp(-cdist(x, y, "sqeuclidean") * inv).mean()
    return float(np.sqrt(max(kxx + kyy - 2.0 * kxy, 0.0)))


def batch_mmd_matrix(samples, cfg: KernelConfig = DEFAULT_KERNEL) -> np.ndarray:
    """All-pairs biased MMD from samples of shape ``(M, t, d)``."""
    samples = np.asarray(samples, dtype=float)
    M, t, d = samples.shape
    inv = 1.0 / (2.0 * cfg.bandwidth**2)
    flat = samples.reshape(M * t, d)
    gram = np.exp(-cdist(flat, flat, "sqeuclidean") * inv)
    block = gram.reshape(M, t, M, t).mean(axis=(1, 3))
    diag = np.diag(block)
    sq = diag[:, None] + diag[None, :] - 2.0 * block
    out = np.sqrt(np.maximum(sq, 0.0))
    np.fill_diagonal(out, 0.0)
    return out
