import itertools
import math

import numpy as np
import pytest

from seqspec.datagen import gen_circle_instance, gen_two_block_instance
from seqspec.diagnostics import (
    assumption_quantities,
    concentration_bound,
    conductance,
    deviation_frequency,
    diagnose,
    spectral_gap,
    spectral_separation,
    worst_pair,
)
from seqspec.exceptions import InputError
from seqspec.spectral import build_affinity


def block_affinity(sizes, within=1.0, across=0.0):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    A = np.where(labels[:, None] == labels[None, :], within, across).astype(float)
    np.fill_diagonal(A, 0.0)
    return A, labels


def brute_conductance(B):
    m = B.shape[0]
    deg = B.sum(axis=1)
    best = np.inf
    for r in range(1, m):
        for I in itertools.combinations(range(m), r):
            I = list(I)
            O = [k for k in range(m) if k not in I]
            cut = B[np.ix_(I, O)].sum()
            best = min(best, cut / min(deg[I].sum(), deg[O].sum()))
    return best


def test_two_member_cluster_has_conductance_one():
    A = np.array([[0, 0.3], [0.3, 0]])
    c = conductance(A, [0, 1])
    assert c.value == pytest.approx(1.0)
    assert c.exact and c.label == "exact"


def test_uniform_block_conductance():
    # complete graph on m nodes: the best split is the balanced one
    for m in (3, 4, 5, 6):
        A, _ = block_affinity([m])
        h = conductance(A, range(m)).value
        a = m // 2
        assert h == pytest.approx(a * (m - a) / (a * (m - 1)))


def test_conductance_matches_brute_force(rng):
    for _ in range(10):
        m = int(rng.integers(3, 8))
        B = rng.random((m, m))
        B = B + B.T
        np.fill_diagonal(B, 0.0)
        assert conductance(B, range(m)).value == pytest.approx(brute_conductance(B))


def test_conductance_scale_invariant(rng):
    B = rng.random((6, 6))
    B = B + B.T
    np.fill_diagonal(B, 0.0)
    assert conductance(3.7 * B, range(6)).value == pytest.approx(conductance(B, range(6)).value)


def test_conductance_sampled_for_large_clusters(rng):
    m = 24
    A, _ = block_affinity([m])
    c = conductance(A, range(m), n_samples=2000)
    assert not c.exact and c.label == "estimate"
    # sampling can only overestimate the exact minimum 12 * 12 / (12 * 23)
    assert c.value >= 144 / (12 * 23) - 1e-12


def test_conductance_needs_two_members():
    with pytest.raises(InputError):
        conductance(np.zeros((3, 3)), [1])


def test_block_diagonal_has_zero_cross_terms():
    A, labels = block_affinity([3, 4])
    q = assumption_quantities(A, labels)
    assert q["eps1"] == 0.0 and q["eps2"] == 0.0
    assert q["C_row"] == pytest.approx(1.0)


def test_assumption_quantities_brute_force(rng):
    M = 7
    A = rng.random((M, M))
    A = A + A.T
    np.fill_diagonal(A, 0.0)
    labels = np.array([0, 0, 0, 1, 1, 2, 2])
    d = np.array([sum(A[i, j] for j in range(M) if labels[j] == labels[i]) for i in range(M)])
    eps1 = 0.0
    for a in range(3):
        for b in range(3):
            if a == b:
                continue
            s = 0.0
            for i in range(M):
                for j in range(M):
                    if labels[i] == a and labels[j] == b:
                        s += A[i, j] ** 2 / (d[i] * d[j])
            eps1 = max(eps1, s)
    eps2 = 0.0
    for a in range(3):
        inner = math.sqrt(sum(A[i, j] ** 2 / (d[i] * d[j])
                              for i in range(M) for j in range(M) if labels[i] == labels[j] == a))
        for i in range(M):
            if labels[i] == a:
                out = sum(A[i, k] for k in range(M) if labels[k] != a) / d[i]
                eps2 = max(eps2, out * inner)
    C_row = max(np.mean(d[labels == labels[i]]) / d[i] for i in range(M))
    q = assumption_quantities(A, labels)
    assert q["eps1"] == pytest.approx(eps1)
    assert q["eps2"] == pytest.approx(eps2)
    assert q["C_row"] == pytest.approx(C_row)


def test_ideal_two_blocks_are_orthogonal():
    A, labels = block_affinity([3, 3])
    sep = spectral_separation(A, 2, labels)
    assert sep["d_H"] == pytest.approx(math.sqrt(2))
    assert sep["d_L"] == pytest.approx(0.0, abs=1e-7)
    assert sep["stop_ratio"] == pytest.approx(1 / math.sin(math.sqrt(2)) ** 2)


def test_separation_permutation_invariant(rng):
    inst = gen_circle_instance()
    A = build_affinity(inst.true_distances(), 0.1)
    base = spectral_separation(A, 2, inst.true_labels)
    perm = rng.permutation(inst.M)
    moved = spectral_separation(A[np.ix_(perm, perm)], 2, inst.true_labels[perm])
    for key in ("d_H", "d_L", "beta", "stop_ratio"):
        assert moved[key] == pytest.approx(base[key], rel=1e-9, abs=1e-12)


def test_separation_needs_two_clusters():
    A, _ = block_affinity([4])
    with pytest.raises(InputError):
        spectral_separation(A, 1, np.zeros(4, dtype=int))


def test_spectral_gap_skips_ties():
    assert spectral_gap([1.0, 1.0, 0.4, 0.1], 2) == pytest.approx(0.6)
    assert spectral_gap([1.0, 0.7, 0.4, 0.1], 2) == pytest.approx(0.3)
    with pytest.raises(InputError):
        spectral_gap([1.0, 0.5], 2)


def test_diagnose_circle():
    inst = gen_circle_instance()
    A = build_affinity(inst.true_distances(), 0.1)
    diag = diagnose(A, 2, inst.truth)
    assert diag.d_H == pytest.approx(1.41417, abs=1e-4)
    assert diag.stop_ratio == pytest.approx(1.0249, abs=1e-3)
    assert diag.conductance_exact  # both rings are small enough to enumerate
    assert set(diag.to_dict()) >= {"eps1", "eps2", "C_row", "d_H", "beta", "stop_ratio"}


def test_concentration_bound_values():
    assert concentration_bound(30, 0.3, 100) == pytest.approx(900 * math.exp(-0.5625))
    assert concentration_bound(2, 0.3, 300) < 1.0


def test_worst_pair_on_the_circle():
    i, j = worst_pair(gen_circle_instance())
    D = gen_circle_instance().true_distances()
    assert D[i, j] == D.max() and i < j


def test_deviation_frequency_point_masses_never_deviate():
    inst = gen_two_block_instance(cov_scale=0.0)
    assert deviation_frequency(inst, (0, 3), 0.01, 5, 10) == 0.0
