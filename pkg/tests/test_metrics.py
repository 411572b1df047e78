import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from multicert.metrics import (
    TrialLog,
    TrialRecord,
    aggregate,
    bucket_proportions,
    check_proportion,
    crossover,
    log_buckets,
    relative_runtime,
    relative_runtime_curve,
    scaled_runtime,
)


def rec(t_total, t_cc, i=10):
    return TrialRecord(i, 0.0, 1, t_total, t_cc)


def test_check_proportion_examples():
    assert check_proportion([1, 1 / 3, 0], 3) == pytest.approx([4 / 9])
    assert list(check_proportion([1.0] * 50, 10)) == [1.0] * 41
    assert list(check_proportion([0.0] * 5, 2)) == [0.0] * 4
    np.testing.assert_allclose(check_proportion([1, 0, 1, 0], 2), [0.5, 0.5, 0.5])


def test_check_proportion_rejects_bad_input():
    with pytest.raises(ValueError):
        check_proportion([], 1)
    with pytest.raises(ValueError):
        check_proportion([1.0], 2)


def test_scaled_runtime_examples():
    assert scaled_runtime(rec(10, 4), 100) == 406
    assert scaled_runtime(rec(10, 4), 1) == 10
    with pytest.raises(ValueError):
        scaled_runtime(rec(10, 4), 0.5)


def test_relative_runtime_examples():
    r = rec(7.5, 2.5)
    assert relative_runtime(r, r, 100) == 1.0
    base = rec(10, 4)
    free = rec(3, 0)
    vals = [relative_runtime(free, base, m) for m in (1e2, 1e4, 1e8)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] == pytest.approx(3 / (6 + 4e8))
    with pytest.raises(ValueError):
        relative_runtime(rec(1, 0, i=3), rec(1, 0, i=4), 1)
    with pytest.raises(ZeroDivisionError):
        relative_runtime(rec(1, 0), rec(0, 0), 1)


times = st.floats(0, 1e3, allow_nan=False)


@given(times, times, times, times, st.floats(1, 1e5), st.floats(1e-3, 1e3))
def test_relative_runtime_is_clock_scale_invariant(a, b, c, d, m, k):
    s = rec(max(a, b), min(a, b))
    base = rec(max(c, d), min(c, d))
    if scaled_runtime(base, m) == 0:
        return
    scaled = relative_runtime(rec(s.t_total * k, s.t_cc * k), rec(base.t_total * k, base.t_cc * k), m)
    assert scaled == pytest.approx(relative_runtime(s, base, m), rel=1e-12)


@given(times, times, st.floats(1, 1e4), st.floats(1, 1e4))
def test_scaled_runtime_is_linear_in_m(a, b, m1, m2):
    r = rec(max(a, b), min(a, b))
    lhs = scaled_runtime(r, m1) - scaled_runtime(r, m2)
    assert lhs == pytest.approx((m1 - m2) * r.t_cc, rel=1e-9, abs=1e-6)


def test_record_invariants():
    with pytest.raises(ValueError):
        TrialRecord(1, 0, 1, 1.0, 2.0)
    with pytest.raises(ValueError):
        TrialRecord(1, 0, 1, 1.0, -0.1)


def test_trial_log_cumulative_fields():
    log = TrialLog(4)
    for i, (f, acc) in enumerate([(1.0, True), (0.5, False), (0.0, True), (1 / 3, True)]):
        log.append(f, acc, i if acc else -1, 0.1 * (i + 1), 0.05 * (i + 1))
    np.testing.assert_allclose(log.cum_check_fraction, [1.0, 1.5, 1.5, 1.5 + 1 / 3])
    np.testing.assert_array_equal(log.cum_nodes, [2, 2, 3, 4])
    records = log.records()
    for prev, cur in zip(records, records[1:]):
        assert cur.cum_check_fraction >= prev.cum_check_fraction
        assert cur.cum_nodes >= prev.cum_nodes
        assert cur.t_total >= prev.t_total and cur.t_cc >= prev.t_cc
    assert all(r.cum_check_fraction <= r.iteration for r in records)
    assert log.record(3) == records[2]
    with pytest.raises(IndexError):
        log.record(0)


def test_log_buckets():
    b = log_buckets(10_000)
    assert b[0] == 1 and b[-1] == 10_000
    assert np.all(np.diff(b) > 0)
    assert 35 <= len(b) <= 41
    assert list(log_buckets(1)) == [1]


def test_bucket_proportions_cover_each_iteration_once():
    f = np.arange(100) % 2
    b = log_buckets(100)
    props = bucket_proportions(f, b)
    widths = np.diff(np.concatenate([[0], b]))
    assert math.fsum(props * widths) == f.sum()


def test_aggregate_single_trial():
    f = np.random.default_rng(0).random(1000)
    agg = aggregate([f])
    np.testing.assert_array_equal(agg.mean_prop, bucket_proportions(f, agg.bucket_iter))
    assert np.all(agg.std_prop == 0)


def test_aggregate_is_permutation_invariant():
    rng = np.random.default_rng(1)
    trials = [rng.random(500) for _ in range(7)]
    a = aggregate(trials)
    for perm in (rng.permutation(7) for _ in range(5)):
        b = aggregate([trials[i] for i in perm])
        np.testing.assert_array_equal(a.mean_prop, b.mean_prop)
        np.testing.assert_array_equal(a.std_prop, b.std_prop)


def test_aggregate_constant_streams():
    values = [k / 19 for k in range(20)]
    agg = aggregate([np.full(300, v) for v in values])
    assert np.all(agg.mean_prop == math.fsum(values) / 20)
    expected_std = np.std(values)
    np.testing.assert_allclose(agg.std_prop, expected_std, rtol=1e-12)


def test_aggregate_needs_a_trial():
    with pytest.raises(ValueError):
        aggregate([])


def _log(t_total, t_cc):
    log = TrialLog(len(t_total))
    for a, b in zip(t_total, t_cc):
        log.append(1.0, True, 0, a, b)
    return log


def test_relative_runtime_curve_identity():
    log = _log([1, 2, 3, 4], [0.5, 1, 1.5, 2])
    mean, std = relative_runtime_curve([log, log], [log, log], 100, [1, 2, 4])
    assert list(mean) == [1.0, 1.0, 1.0] and list(std) == [0, 0, 0]


def test_crossover():
    assert crossover([1, 10, 100], [0.5, 0.9, 0.99]) is None
    assert crossover([1, 10, 100], [1.2, 0.9, 1.1]) == 100
    assert crossover([1, 10, 100], [0.8, 1.1, 1.2]) == 10
