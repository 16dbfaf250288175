import math

import numpy as np
import pytest

from seqspec.exceptions import InputError
from seqspec.kernel_mmd import (
    KernelConfig,
    PairwiseDistanceState,
    batch_mmd,
    batch_mmd_matrix,
    gaussian_mmd_closed_form,
    gaussian_mmd_matrix,
    h_combine,
    kernel_eval,
    mmd_update,
)


def brute_mmd(x, y, s=1.0):
    """Double-sum biased estimator written out term by term."""
    def k(a, b):
        return math.exp(-float(np.sum((a - b) ** 2)) / (2 * s * s))
    n = len(x)
    tot = 0.0
    for i in range(n):
        for j in range(n):
            tot += k(x[i], x[j]) + k(y[i], y[j]) - 2 * k(x[i], y[j])
    return math.sqrt(max(tot, 0.0)) / n


def test_kernel_values():
    assert kernel_eval([1.0, 2.0], [1.0, 2.0]) == 1.0
    cfg = KernelConfig(bandwidth=0.7)
    x, y = np.zeros(3), np.array([0.7 * math.sqrt(2), 0, 0])
    assert kernel_eval(x, y, cfg) == pytest.approx(math.exp(-1))
    vals = [kernel_eval([0.0], [r]) for r in (0.0, 0.5, 1.0, 3.0, 10.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-20


def test_kernel_dimension_mismatch():
    with pytest.raises(InputError):
        kernel_eval([0.0, 1.0], [0.0])


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_kernel_config_validation(bad):
    with pytest.raises(InputError):
        KernelConfig(bandwidth=bad)
    with pytest.raises(InputError):
        KernelConfig(bound=bad)


def test_h_combine(rng):
    x = rng.normal(size=2)
    assert h_combine(x, x, x, x) == 0.0
    y = x + 1.0
    assert h_combine(x, x, y, y) == pytest.approx(2 - 2 * kernel_eval(x, y))
    for _ in range(200):
        v = rng.normal(size=(4, 3)) * 3
        assert -2.0 <= h_combine(*v) <= 2.0


def test_identical_streams_stay_at_zero(rng):
    st = PairwiseDistanceState(2)
    for _ in range(50):
        x = rng.normal(size=3)
        st.update(np.stack([x, x]))
        assert st.d_hat[0, 1] == 0.0


def test_first_step_closed_form():
    st = mmd_update(PairwiseDistanceState(2), np.array([[0.0, 0.0], [1.0, 1.0]]))
    assert st.t == 1
    assert st.d_hat[0, 1] == pytest.approx(math.sqrt(2 - 2 * math.exp(-1.0)), abs=1e-15)


def test_recursion_matches_brute_force(rng):
    M, d, T = 3, 2, 25
    X = rng.normal(size=(M, T, d)) + np.arange(M)[:, None, None]
    st = PairwiseDistanceState(M, KernelConfig(bandwidth=1.3))
    for t in range(T):
        st.update(X[:, t])
        if t in (0, 4, 24):
            for i in range(M):
                for j in range(i + 1, M):
                    ref = brute_mmd(X[i, : t + 1], X[j, : t + 1], 1.3)
                    assert abs(st.d_hat[i, j] - ref) < 1e-12


def test_state_invariants(rng):
    M = 6
    st = PairwiseDistanceState(M)
    for _ in range(40):
        st.update(rng.normal(size=(M, 2)) * 2)
        D = st.d_hat
        assert np.array_equal(D, D.T)
        assert np.all(np.diag(D) == 0)
        assert D.min() >= 0 and D.max() <= 2.0
    assert st.history.shape == (M, 40, 2)


def test_batch_matrix_matches_recursion(rng):
    X = rng.normal(size=(4, 30, 2))
    st = PairwiseDistanceState(4)
    for t in range(30):
        st.update(X[:, t])
    assert np.max(np.abs(batch_mmd_matrix(X) - st.d_hat)) < 1e-10
    assert batch_mmd(X[0], X[1]) == pytest.approx(st.d_hat[0, 1], abs=1e-10)


def test_update_validation():
    st = PairwiseDistanceState(3)
    with pytest.raises(InputError):
        st.update(np.zeros((2, 2)))
    st.update(np.zeros((3, 2)))
    with pytest.raises(InputError):
        st.update(np.zeros((3, 3)))
    with pytest.raises(InputError):
        PairwiseDistanceState(1)


def test_closed_form_limits():
    assert gaussian_mmd_closed_form([1.0, 2.0], [1.0, 2.0], 0.4) == 0.0
    mu1, mu2 = np.array([0.0, 0.0]), np.array([1.5, 0.0])
    point = math.sqrt(2 - 2 * kernel_eval(mu1, mu2))
    assert gaussian_mmd_closed_form(mu1, mu2, 1e-12) == pytest.approx(point, rel=1e-9)
    assert gaussian_mmd_matrix(np.stack([mu1, mu2]), 0.0)[0, 1] == pytest.approx(point)
    with pytest.raises(InputError):
        gaussian_mmd_closed_form(mu1, mu2, 0.0)


def test_closed_form_against_monte_carlo():
    # E k(x, y) estimated from independent draws; the MMD^2 estimate is an
    # average of bounded terms so its standard error is easy to bound
    rng = np.random.default_rng(7)
    n = 1_000_000
    s = math.sqrt(0.4)
    mu2 = np.array([2.0, 0.0])
    x, x2 = rng.normal(size=(n, 2)) * s, rng.normal(size=(n, 2)) * s
    y, y2 = mu2 + rng.normal(size=(n, 2)) * s, mu2 + rng.normal(size=(n, 2)) * s
    k = lambda a, b: np.exp(-np.sum((a - b) ** 2, axis=1) / 2)
    terms = k(x, x2) + k(y, y2) - 2 * k(x, y)
    est, se = terms.mean(), terms.std() / math.sqrt(n)
    ref = gaussian_mmd_closed_form([0.0, 0.0], mu2, 0.4) ** 2
    assert abs(est - ref) < 3 * se
