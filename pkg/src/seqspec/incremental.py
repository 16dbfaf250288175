"""Incremental approximate SEQ-SPEC.

Instead of decomposing the normalized matrix from scratch at every step,
only the ``p x p`` block of the affinity change with the largest absolute
mass is applied, and the eigen state is updated by a Rayleigh-Ritz step on
the span of the previous top-``l`` eigenvectors plus the canonical vectors
of the touched indices. The exact decomposition is recomputed every ``R``
steps and before any stop is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr

from .exceptions import InputError, InternalInvariantError
from .kernel_mmd import KernelConfig, PairwiseDistanceState
from .sequential import SeqConfig, SeqResult, StepRecord, gamma_statistic, threshold_value
from .spectral import (
    Clustering,
    build_affinity,
    build_normalized,
    cluster_embedding,
    fix_signs,
    full_eigen,
)
from .streams import draw_all, step_rng_seed

BLOCK_STRATEGIES = ("exhaustive_pairs", "greedy")
STRUCTURE_TOL = 1e-12


@dataclass
class IAConfig:
    """Block size ``p``, energy fraction ``q`` and exact-refresh period ``R``.

    ``residual_tol`` enables a per-step exact fallback when the part of
    ``U @ H`` outside the Ritz basis ``H`` exceeds it (off by default).
    """

    p: int = 4
    q: float = 0.7
    R: int = 50
    block_search: str = "exhaustive_pairs"
    residual_tol: float | None = None

    def __post_init__(self):
        if self.p < 2:
            raise InputError(f"p must be >= 2, got {self.p}")
        if not 0 < self.q <= 1:
            raise InputError(f"q must lie in (0, 1], got {self.q}")
        if self.R < 1:
            raise InputError(f"R must be >= 1, got {self.R}")
        if self.block_search not in BLOCK_STRATEGIES:
            raise InputError(f"block_search must be one of {BLOCK_STRATEGIES}")


@dataclass
class IncrementalEigenState:
    A_tilde: np.ndarray
    L_prev: np.ndarray
    Q: np.ndarray  # (M, m) orthonormal, columns by descending eigenvalue
    omega: np.ndarray  # (m,)
    rank: int
    steps_since_refresh: int = 0
    op_count: float = 0.0

    @classmethod
    def exact(cls, A, op_count: float = 0.0) -> "IncrementalEigenState":
        """Fresh state from a dense decomposition of the normalized matrix of ``A``."""
        L = build_normalized(A)
        w, V = full_eigen(L)
        return cls(A_tilde=np.array(A, copy=True), L_prev=L, Q=V, omega=w, rank=len(w),
                   op_count=op_count)


def block_mass(delta, S) -> float:
    S = list(S)
    return float(np.abs(np.asarray(delta)[np.ix_(S, S)]).sum())


def select_block(delta, p: int, strategy: str = "exhaustive_pairs") -> list[int]:
    """Indices of a symmetric ``p x p`` block of ``delta`` with large absolute sum.

    ``exhaustive_pairs`` finds the best pair over all pairs and, for
    ``p > 2``, extends it greedily one index at a time; ``greedy`` takes
    the ``p`` indices with the largest absolute row sums. Ties go to the
    smallest indices.
    """
    absd = np.abs(np.asarray(delta, dtype=float))
    M = absd.shape[0]
    if not 1 <= p <= M:
        raise InputError(f"block size p={p} must lie in [1, {M}]")
    if p == M:
        return list(range(M))
    if strategy == "greedy":
        order = np.argsort(-absd.sum(axis=1), kind="stable")
        return sorted(order[:p].tolist())
    if strategy != "exhaustive_pairs":
        raise InputError(f"unknown block strategy {strategy!r}")

    diag = np.diag(absd)
    pair = diag[:, None] + diag[None, :] + absd + absd.T
    iu = np.triu_indices(M, 1)
    best = int(np.argmax(pair[iu]))  # row-major order: first hit is lexicographically smallest
    S = [int(iu[0][best]), int(iu[1][best])]
    inside = np.zeros(M, dtype=bool)
    inside[S] = True
    while len(S) < p:
        gain = diag + 2.0 * absd[:, inside].sum(axis=1)
        gain[inside] = -np.inf
        k = int(np.argmax(gain))
        S.append(k)
        inside[k] = True
    return sorted(S)


def masked_delta(delta, S) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    out = np.zeros_like(delta)
    ix = np.ix_(list(S), list(S))
    out[ix] = delta[ix]
    return out


def lagrange_delta(A_new, A_old, S=None, L_old=None) -> np.ndarray:
    """Change of the normalized matrix between two affinities.

    With ``S`` given, checks that the change vanishes outside the rows and
    columns of ``S``.
    """
    L_new = build_normalized(A_new)
    if L_old is None:
        L_old = build_normalized(A_old)
    U = L_new - L_old
    if S is not None:
        _check_structure(U, S)
    return U


def select_rank(omega, q: float, total_energy: float | None = None) -> int:
    """Smallest ``l`` whose top-``l`` squared eigenvalues hold a fraction ``q`` of the energy.

    ``omega`` is sorted descending. ``total_energy`` defaults to the sum of
    squares of ``omega``; pass the squared Frobenius norm when only part of
    the spectrum is known. The result is clamped to ``[1, len(omega)]``.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.size == 0:
        raise InputError("empty spectrum")
    sq = omega**2
    total = float(sq.sum()) if total_energy is None else float(total_energy)
    if total <= 0:
        return 1
    frac = np.cumsum(sq) / total
    # tiny slack so that q = 1 is reached despite rounding in the cumulative sum
    hit = np.flatnonzero(frac >= q - 1e-12)
    l = int(hit[0]) + 1 if hit.size else omega.size
    return min(max(l, 1), omega.size)


def incremental_cost(M: int, l: int, p: int) -> float:
    return float((l * l + p * p) * (l + p) + M * p * (l + p))


def _ritz_basis(Ql, S, M):
    """Orthonormal completion of ``span(Ql)`` by the canonical vectors of ``S``."""
    E = np.zeros((M, len(S)))
    E[list(S), np.arange(len(S))] = 1.0
    W = E - Ql @ (Ql.T @ E)
    W -= Ql @ (Ql.T @ W)  # second pass keeps W orthogonal to Ql in floating point
    if W.size == 0:
        return Ql
    Qw, Rw, _ = qr(W, mode="economic", pivoting=True)
    keep = np.abs(np.diag(Rw)) > 1e-10
    return np.hstack([Ql, Qw[:, keep]])


def incremental_update(Q, omega, U, S, l: int):
    """Eigenpairs of ``Q_l diag(omega_l) Q_l^T + U`` restricted to a small Ritz basis.

    Returns ``(Q_new, omega_new, cost, residual)``. ``Q_new`` has at most
    ``l + len(S)`` columns, ordered by descending eigenvalue. ``residual``
    is the norm of the part of ``U H`` falling outside the basis ``H``.
    """
    Q = np.asarray(Q, dtype=float)
    omega = np.asarray(omega, dtype=float)
    M = Q.shape[0]
    l = min(int(l), Q.shape[1])
    Ql, wl = Q[:, :l], omega[:l]
    H = _ritz_basis(Ql, S, M)
    UH = U @ H
    small = H.T @ UH
    small[:l, :l] += np.diag(wl)
    small = 0.5 * (small + small.T)
    w, V = np.linalg.eigh(small)
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    residual = float(np.linalg.norm(UH - H @ (H.T @ UH)))
    return H @ V, w, incremental_cost(M, l, len(S)), residual


@dataclass
class _Eval:
    clustering: Clustering
    gamma: float


def _evaluate(Q, K, seed) -> _Eval:
    clustering, Y, degenerate = cluster_embedding(fix_signs(Q[:, :K]), K, seed)
    return _Eval(clustering, 0.0 if degenerate else gamma_statistic(Y, clustering))


def run_ia_seq_spec(streams, cfg: SeqConfig, ia: IAConfig) -> SeqResult:
    """Incremental approximate SEQ-SPEC.

    Trace records carry ``exact`` (the step's clustering came from an exact
    decomposition), ``rank``, ``block`` and ``verified`` (the stop was
    confirmed by an exact decomposition).
    """
    M = len(streams)
    if M < 2:
        raise InputError("need at least two streams")
    if ia.p > M:
        raise InputError(f"block size p={ia.p} exceeds M={M}")
    K = cfg.K
    cube = float(M) ** 3
    d_state = PairwiseDistanceState(M, KernelConfig(bandwidth=cfg.sigma_g))
    eig: IncrementalEigenState | None = None
    trace = [] if cfg.keep_trace else None
    total_ops = 0.0

    for t in range(1, cfg.max_t + 1):
        d_state.update(draw_all(streams))
        A_hat = build_affinity(d_state.d_hat, cfg.sigma_a)
        kseed = step_rng_seed(cfg.seed, t)
        step_ops = 0.0
        rank = block = None

        exact_now = eig is None or eig.steps_since_refresh + 1 >= ia.R
        if not exact_now:
            delta = A_hat - eig.A_tilde
            S = select_block(delta, ia.p, ia.block_search)
            A_new = eig.A_tilde + masked_delta(delta, S)
            L_new = build_normalized(A_new)
            U = L_new - eig.L_prev
            _check_structure(U, S)
            # energy fraction over the spectrum the state actually carries (all of it
            # right after an exact refresh, the top l + p pairs afterwards)
            rank = max(select_rank(eig.omega, ia.q), min(K, eig.omega.size))
            Q_new, w_new, cost, resid = incremental_update(eig.Q, eig.omega, U, S, rank)
            block = tuple(S)
            if Q_new.shape[1] < K or (ia.residual_tol is not None and resid > ia.residual_tol):
                exact_now = True  # basis too small or too lossy for this step
            else:
                step_ops += cost
                eig.A_tilde, eig.L_prev = A_new, L_new
                eig.Q, eig.omega, eig.rank = Q_new, w_new, rank
                eig.steps_since_refresh += 1
        if exact_now:
            eig = IncrementalEigenState.exact(A_hat, total_ops + step_ops)
            step_ops += cube

        thr = threshold_value(t, cfg.C, cfg.threshold)
        if trace is None and np.isinf(thr) and t < cfg.max_t:
            # no stop is possible yet; the clustering would go unused
            total_ops += step_ops
            eig.op_count = total_ops
            continue
        ev = _evaluate(eig.Q, K, kseed)
        stop = ev.gamma >= thr
        if stop and not exact_now:
            # the approximate state says stop: confirm with the exact decomposition
            eig = IncrementalEigenState.exact(A_hat, total_ops + step_ops)
            step_ops += cube
            exact_now = True
            ev = _evaluate(eig.Q, K, kseed)
            stop = ev.gamma >= thr
        total_ops += step_ops
        eig.op_count = total_ops
        if trace is not None:
            trace.append(StepRecord(t, ev.gamma, thr, stop, step_ops, exact_now, rank, block, verified=stop))
        if stop:
            return SeqResult(t, ev.clustering, False, total_ops, trace, "ia-seq-spec")
    return SeqResult(cfg.max_t, ev.clustering, True, total_ops, trace, "ia-seq-spec")


def _check_structure(U, S):
    out = np.ones(U.shape[0], dtype=bool)
    out[list(S)] = False
    if out.any() and np.max(np.abs(U[np.ix_(out, out)])) > STRUCTURE_TOL:
        raise InternalInvariantError("normalized-matrix change is nonzero outside the touched block")
