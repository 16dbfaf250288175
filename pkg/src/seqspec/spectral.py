"""Exact spectral clustering of sequences from their pairwise distances.

Pipeline: Gaussian affinity on the distances, normalized matrix
``D^{-1/2} A D^{-1/2}``, top-``K`` eigenvectors, row-normalized spectral
points, K-Means on the spectral points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateRowError, InputError, InternalInvariantError

ZERO_ROW_TOL = 1e-12


@dataclass
class Clustering:
    """Partition of ``M`` sequences into ``K`` labeled groups.

    Labels are canonical: clusters are numbered in order of their first
    member, so two equal partitions have equal label arrays.
    """

    labels: np.ndarray
    K: int

    def __post_init__(self):
        self.labels = canonical_labels(self.labels)

    @property
    def M(self) -> int:
        return len(self.labels)

    def groups(self) -> list[list[int]]:
        return [np.flatnonzero(self.labels == k).tolist() for k in range(self.labels.max() + 1)]

    def same_partition(self, other: "Clustering") -> bool:
        return np.array_equal(self.labels, other.labels)


@dataclass
class SpectralEmbedding:
    eigenvalues: np.ndarray  # descending
    Z: np.ndarray  # (M, K), orthonormal columns
    Y: np.ndarray | None = None  # (M, K), unit rows


def canonical_labels(labels) -> np.ndarray:
    labels = np.asarray(labels)
    out = np.empty(len(labels), dtype=int)
    mapping: dict = {}
    for i, lab in enumerate(labels.tolist()):
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out


def _distance_matrix(d_hat) -> np.ndarray:
    return np.asarray(getattr(d_hat, "d_hat", d_hat), dtype=float)


def build_affinity(d_hat, sigma_a: float) -> np.ndarray:
    """``A_ij = exp(-d_ij^2 / (2 sigma_a^2))`` off the diagonal, zero on it."""
    if not sigma_a > 0:
        raise InputError(f"sigma_a must be positive, got {sigma_a}")
    d = _distance_matrix(d_hat)
    A = np.exp(-0.5 * (d / sigma_a) ** 2)
    np.fill_diagonal(A, 0.0)
    return A


def build_normalized(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    deg = A.sum(axis=1)
    if np.any(deg <= 0):
        raise InternalInvariantError("non-positive degree in affinity matrix")
    # outer product of degrees is exactly symmetric, so L is too
    return A / np.sqrt(np.outer(deg, deg))


def fix_signs(Z: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive (first index on ties)."""
    Z = np.array(Z, dtype=float, copy=True)
    if Z.size == 0:
        return Z
    idx = np.argmax(np.abs(Z), axis=0)
    signs = np.sign(Z[idx, np.arange(Z.shape[1])])
    signs[signs == 0] = 1.0
    return Z * signs


def full_eigen(L) -> tuple[np.ndarray, np.ndarray]:
    """Dense symmetric eigendecomposition, eigenvalues descending."""
    w, V = np.linalg.eigh(L)
    return w[::-1].copy(), V[:, ::-1].copy()


def top_k_eigen(L, K: int) -> SpectralEmbedding:
    L = np.asarray(L, dtype=float)
    M = L.shape[0]
    if not 1 <= K <= M:
        raise InputError(f"K must lie in [1, {M}], got {K}")
    w, V = full_eigen(L)
    return SpectralEmbedding(eigenvalues=w, Z=fix_signs(V[:, :K]))


def spectral_points(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    norms = np.linalg.norm(Z, axis=1)
    bad = np.flatnonzero(norms < ZERO_ROW_TOL)
    if bad.size:
        raise DegenerateRowError(bad)
    return Z / norms[:, None]


def _kmeans_pp(X, K, n_restarts, rng):
    """k-means++ seeding for ``n_restarts`` independent restarts at once."""
    R, M = n_restarts, X.shape[0]
    rows = np.arange(R)
    chosen = np.empty((R, K), dtype=int)
    chosen[:, 0] = rng.integers(M, size=R)
    d2 = _sqdist(X, X[chosen[:, 0]])  # (R, M)
    for k in range(1, K):
        cum = np.cumsum(d2, axis=1)
        total = cum[:, -1]
        u = rng.random(R) * total
        # first index whose cumulative weight exceeds the draw; zero-weight points never win
        idx = np.minimum((cum <= u[:, None]).sum(axis=1), M - 1)
        for r in np.flatnonzero((d2[rows, idx] == 0) & (total > 0)):
            # draw rounded up to the total: take the last point with weight
            idx[r] = np.flatnonzero(d2[r] > 0)[-1]
        for r in np.flatnonzero(total <= 0):
            # every point coincides with a chosen center: lowest unused index
            idx[r] = np.setdiff1d(np.arange(M), chosen[r, :k])[0]
        chosen[:, k] = idx
        d2 = np.minimum(d2, _sqdist(X, X[idx]))
    return X[chosen]


def _sqdist(X, C):
    """Squared distances between points ``X`` (M, p) and one center per restart ``C`` (R, p)."""
    diff = X[None, :, :] - C[:, None, :]
    return np.einsum("rmp,rmp->rm", diff, diff)


def _fill_empty(labels, dist, K):
    """Reassign the farthest point of a multi-member cluster to each empty cluster."""
    M = labels.shape[0]
    while True:
        counts = np.bincount(labels, minlength=K)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return labels
        own = dist[np.arange(M), labels].copy()
        own[counts[labels] < 2] = -np.inf
        far = int(np.argmax(own))
        labels[far] = empty[0]
        dist[far, :] = np.inf
        dist[far, empty[0]] = 0.0


def kmeans(points, K: int, seed=0, n_restarts: int = 10, max_iter: int = 100) -> Clustering:
    """Lloyd's algorithm with k-means++ seeding, best of ``n_restarts`` by inertia.

    The restarts run batched. Empty clusters are refilled from the point
    farthest from its own center, so every returned cluster is non-empty.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    M = X.shape[0]
    if not 1 <= K <= M:
        raise InputError(f"need 1 <= K <= M, got K={K}, M={M}")
    if K == 1:
        return Clustering(np.zeros(M, dtype=int), 1)

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(X, K, n_restarts, rng)
    labels = None
    for _ in range(max_iter):
        dist = ((X[None, :, None, :] - centers[:, None, :, :]) ** 2).sum(-1)  # (R, M, K)
        new = np.argmin(dist, axis=2)
        onehot = new[:, :, None] == np.arange(K)  # (R, M, K)
        counts = onehot.sum(axis=1)
        for r in np.flatnonzero(counts.min(axis=1) == 0):
            new[r] = _fill_empty(new[r], dist[r].copy(), K)
            onehot[r] = new[r][:, None] == np.arange(K)
            counts[r] = onehot[r].sum(axis=0)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        onehot = onehot.astype(float)
        centers = np.einsum("rmk,md->rkd", onehot, X) / counts[:, :, None]

    inertia = ((X[None, :, :] - np.take_along_axis(centers, labels[:, :, None], axis=1)) ** 2).sum(axis=(1, 2))
    best = int(np.argmin(inertia))
    return Clustering(labels[best], K)


def cluster_embedding(Z, K: int, seed) -> tuple[Clustering, np.ndarray, bool]:
    """K-Means on the spectral points of ``Z``.

    Returns ``(clustering, Y, degenerate)``. Zero-norm rows of ``Z`` are
    left out of K-Means and assigned to ``argmax`` of their raw entries;
    ``degenerate`` is then True and their ``Y`` rows are zero.
    """
    Z = np.asarray(Z, dtype=float)
    try:
        Y = spectral_points(Z)
    except DegenerateRowError as err:
        norms = np.linalg.norm(Z, axis=1)
        good = np.ones(Z.shape[0], dtype=bool)
        good[err.rows] = False
        Y = np.zeros_like(Z)
        Y[good] = Z[good] / norms[good, None]
        labels = np.argmax(Z, axis=1)
        if good.sum() >= K:
            labels[good] = kmeans(Y[good], K, seed).labels
        return Clustering(labels, K), Y, True
    return kmeans(Y, K, seed), Y, False


def spec_cluster(d_hat, K: int, sigma_a: float, seed=0) -> tuple[Clustering, SpectralEmbedding]:
    """Spectral clustering of the sequences given their pairwise distances."""
    A = build_affinity(d_hat, sigma_a)
    emb = top_k_eigen(build_normalized(A), K)
    clustering, Y, _ = cluster_embedding(emb.Z, K, seed)
    emb.Y = Y
    return clustering, emb
