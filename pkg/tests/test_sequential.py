import math

import numpy as np
import pytest

from seqspec.datagen import gen_circle_instance, gen_point_mass_instance
from seqspec.exceptions import InputError, StreamExhausted
from seqspec.sequential import (
    SeqConfig,
    SpecPath,
    default_max_t,
    gamma_statistic,
    run_path,
    run_seq_spec,
    stopping_rule,
    threshold_value,
)
from seqspec.streams import ArrayStream


def test_gamma_brute_force(rng):
    Y = rng.normal(size=(9, 3))
    labels = rng.integers(0, 3, size=9)
    labels[:3] = [0, 1, 2]
    ref = min(np.linalg.norm(Y[i] - Y[j]) for i in range(9) for j in range(9) if labels[i] != labels[j])
    assert gamma_statistic(Y, labels) == pytest.approx(ref, abs=1e-15)


def test_gamma_special_cases():
    assert gamma_statistic(np.eye(2), [0, 1]) == pytest.approx(math.sqrt(2))
    assert gamma_statistic(np.array([[1.0, 0], [1.0, 0]]), [0, 1]) == 0.0
    assert gamma_statistic(np.eye(3), [0, 0, 0]) == 0.0


def test_stopping_rule():
    C = 3.0
    for t in range(1, 9):
        assert not stopping_rule(2.0, t, C)
    assert stopping_rule(math.pi / 2, 9, C)
    first = math.ceil((C / math.sin(math.sqrt(2))) ** 2)
    assert stopping_rule(math.sqrt(2), first, C)
    assert not stopping_rule(math.sqrt(2), first - 1, C)
    with pytest.raises(InputError):
        stopping_rule(1.0, 0, C)


def test_threshold_forms_and_monotonicity():
    vals = [threshold_value(t, 4.0) for t in range(16, 200)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert math.isinf(threshold_value(15, 4.0))
    assert threshold_value(4, 4.0, "ratio") == 2.0


def test_config_validation():
    with pytest.raises(InputError):
        SeqConfig(K=2, C=0.0)
    with pytest.raises(InputError):
        SeqConfig(K=2, C=5.0, max_t=24)
    with pytest.raises(InputError):
        SeqConfig(K=2, C=5.0, threshold="log")
    assert SeqConfig(K=2, C=5.0).max_t == default_max_t(5.0) == 750


def test_point_masses_stop_at_first_admissible_step():
    inst = gen_point_mass_instance([[0.0, 0.0], [6.0, 6.0]], per_cluster=2)
    C = 3.0
    res = run_seq_spec(inst.streams(0), SeqConfig(K=2, C=C, seed=0))
    # gamma is sqrt(2) from t = 1 on (point masses, far apart)
    assert res.N == math.ceil((C / math.sin(math.sqrt(2))) ** 2)
    assert res.clustering.same_partition(inst.truth)
    assert not res.stopped_by_cap
    assert len(res.trace) == res.N
    assert res.eigen_op_count == res.N * 4**3


def test_cap_is_flagged():
    inst = gen_point_mass_instance([[0.0], [6.0]], per_cluster=2)
    res = run_seq_spec(inst.streams(0), SeqConfig(K=2, C=5.0, max_t=25))
    assert res.stopped_by_cap and res.N == 25


def test_exhausted_stream():
    streams = [ArrayStream(np.zeros(3)), ArrayStream(np.ones(3) * 5)]
    with pytest.raises(StreamExhausted):
        run_seq_spec(streams, SeqConfig(K=2, C=3.0))


def test_circle_run_respects_lower_bound_and_cost():
    inst = gen_circle_instance()
    for seed in range(5):
        cfg = SeqConfig(K=2, C=6.0, sigma_a=0.1, seed=seed)
        res = run_seq_spec(inst.streams(seed), cfg)
        assert res.N >= 36
        assert res.mean_eigen_ops == 27000
        assert res.trace[-1].stop and not any(s.stop for s in res.trace[:-1])


def test_trace_free_run_is_identical():
    inst = gen_circle_instance()
    a = run_seq_spec(inst.streams(3), SeqConfig(2, 7.0, 0.1, seed=3))
    b = run_seq_spec(inst.streams(3), SeqConfig(2, 7.0, 0.1, seed=3, keep_trace=False))
    assert a.N == b.N and a.eigen_op_count == b.eigen_op_count
    assert a.clustering.same_partition(b.clustering)


def test_one_path_serves_every_threshold():
    inst = gen_circle_instance()
    path = SpecPath(inst.streams(4), 2, 0.1, 1.0, seed=4)
    for C in (5.0, 6.0, 7.5):
        shared = run_path(path, 2, C, "arcsin", default_max_t(C), False, "seq-spec")
        alone = run_seq_spec(inst.streams(4), SeqConfig(2, C, 0.1, seed=4, keep_trace=False))
        assert shared.N == alone.N
        assert shared.clustering.same_partition(alone.clustering)


def test_ratio_threshold_variant():
    inst = gen_circle_instance()
    res = run_seq_spec(inst.streams(1), SeqConfig(2, 6.0, 0.1, seed=1, threshold="ratio"))
    assert all(s.threshold == 6.0 / math.sqrt(s.t) for s in res.trace)


def test_check_every_thins_evaluations():
    inst = gen_circle_instance()
    res = run_seq_spec(inst.streams(2), SeqConfig(2, 6.0, 0.1, seed=2, check_every=5))
    assert all(s.t % 5 == 0 for s in res.trace[:-1])
    assert res.eigen_op_count == len(res.trace) * 27000
