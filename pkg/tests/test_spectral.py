import math

import numpy as np
import pytest

from seqspec.datagen import gen_circle_instance
from seqspec.exceptions import DegenerateRowError, InputError
from seqspec.spectral import (
    Clustering,
    build_affinity,
    build_normalized,
    canonical_labels,
    cluster_embedding,
    fix_signs,
    kmeans,
    spec_cluster,
    spectral_points,
    top_k_eigen,
)


def block_distances(sizes, far=50.0):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    D = np.where(labels[:, None] == labels[None, :], 0.0, far)
    return D, labels


def test_affinity_formula(rng):
    D = rng.uniform(0, 2, size=(5, 5))
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0)
    A = build_affinity(D, 0.8)
    assert np.all(np.diag(A) == 0)
    off = ~np.eye(5, dtype=bool)
    assert np.allclose(A[off], np.exp(-D[off] ** 2 / (2 * 0.64)))
    assert build_affinity(np.zeros((2, 2)), 1.0)[0, 1] == 1.0
    with pytest.raises(InputError):
        build_affinity(D, 0.0)


def test_normalized_two_by_two():
    L = build_normalized(build_affinity(np.zeros((2, 2)), 1.0))
    assert np.array_equal(L, [[0, 1], [1, 0]])
    assert np.allclose(np.linalg.eigvalsh(L), [-1, 1])


def test_normalized_sqrt_degree_eigenvector(rng):
    D = rng.uniform(0, 1, size=(7, 7))
    D = (D + D.T) / 2
    A = build_affinity(D, 0.5)
    L = build_normalized(A)
    assert np.array_equal(L, L.T)
    v = np.sqrt(A.sum(axis=1))
    assert np.allclose(L @ v, v, atol=1e-12)


def test_block_diagonal_has_double_unit_eigenvalue():
    D, _ = block_distances([3, 4])
    emb = top_k_eigen(build_normalized(build_affinity(D, 1.0)), 2)
    assert np.allclose(emb.eigenvalues[:2], 1.0)
    assert emb.eigenvalues[2] < 1 - 1e-6


def test_top_k_eigen_contract(rng):
    B = rng.normal(size=(8, 8))
    L = (B + B.T) / 2
    emb = top_k_eigen(L, 3)
    assert np.all(np.diff(emb.eigenvalues) <= 0)
    assert np.max(np.abs(emb.Z.T @ emb.Z - np.eye(3))) < 1e-10
    for k in range(3):
        z = emb.Z[:, k]
        assert np.linalg.norm(L @ z - emb.eigenvalues[k] * z) < 1e-8
        i = np.argmax(np.abs(z))
        assert z[i] > 0
    assert np.allclose(top_k_eigen(np.eye(4), 2).eigenvalues[:2], 1)
    with pytest.raises(InputError):
        top_k_eigen(L, 0)


def test_fix_signs_ties_go_to_first_index():
    Z = np.array([[-1.0], [1.0]])
    assert np.array_equal(fix_signs(Z), [[1.0], [-1.0]])


def test_spectral_points():
    Z = np.array([[3.0, 4.0], [0.6, 0.8], [0.0, 2.0]])
    Y = spectral_points(Z)
    assert np.allclose(np.linalg.norm(Y, axis=1), 1)
    assert np.allclose(Y[0], Y[1])
    assert np.allclose(spectral_points(Y), Y)
    with pytest.raises(DegenerateRowError) as err:
        spectral_points(np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert err.value.rows == [1]


def test_ideal_blocks_give_orthogonal_points():
    D, labels = block_distances([3, 3])
    clustering, emb = spec_cluster(D, 2, 1.0)
    assert clustering.same_partition(Clustering(labels, 2))
    Y = emb.Y
    assert np.allclose(Y[0], Y[1]) and np.allclose(Y[3], Y[5])
    assert abs(Y[0] @ Y[3]) < 1e-10
    assert np.linalg.norm(Y[0] - Y[3]) == pytest.approx(math.sqrt(2))


def test_kmeans_edge_cases(rng):
    X = rng.normal(size=(6, 2))
    assert np.all(kmeans(X, 1).labels == 0)
    single = kmeans(X, 6)
    assert sorted(single.labels) == list(range(6))
    with pytest.raises(InputError):
        kmeans(X, 7)


def test_kmeans_recovers_blobs(rng):
    a = rng.normal(size=(15, 2)) * 0.1
    b = rng.normal(size=(15, 2)) * 0.1 + 5
    planted = np.r_[np.zeros(15), np.ones(15)]
    perm = rng.permutation(30)
    got = kmeans(np.vstack([a, b])[perm], 2, seed=3)
    assert got.same_partition(Clustering(planted[perm], 2))


def test_kmeans_no_empty_clusters_with_duplicates():
    X = np.zeros((5, 2))
    X[4] = 1.0
    got = kmeans(X, 3, seed=0)
    assert len(set(got.labels)) == 3


def test_kmeans_deterministic(rng):
    X = rng.normal(size=(20, 3))
    assert kmeans(X, 3, seed=5).same_partition(kmeans(X, 3, seed=5))


def test_canonical_labels():
    assert canonical_labels([2, 2, 0, 1, 0]).tolist() == [0, 0, 1, 2, 1]
    assert Clustering([1, 0, 1], 2).groups() == [[0, 2], [1]]


def test_degenerate_rows_fall_back_to_argmax():
    Z = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 0.0], [0.1, 0.9], [0.0, 1.0]])
    clustering, Y, degenerate = cluster_embedding(Z, 2, 0)
    assert degenerate
    assert np.all(Y[2] == 0)
    assert clustering.labels[0] == clustering.labels[1] != clustering.labels[3]


def test_singleton_partition_when_k_equals_m(rng):
    D = rng.uniform(0.5, 1, size=(4, 4))
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0)
    clustering, _ = spec_cluster(D, 4, 1.0)
    assert sorted(clustering.labels) == [0, 1, 2, 3]


def test_circle_true_distances_give_rings():
    inst = gen_circle_instance()
    clustering, _ = spec_cluster(inst.true_distances(), 2, inst.meta["sigma_a"])
    assert clustering.same_partition(inst.truth)


def test_scale_consistency(rng):
    D = rng.uniform(0, 1, size=(6, 6))
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0)
    a = build_affinity(D, 0.5)
    b = build_affinity(D * 4.0, 2.0)
    assert np.array_equal(a, b)
