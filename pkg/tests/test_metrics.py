import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tbb.errors import EmptySampleSet
from tbb.metrics import (
    MetricSummary,
    SampleResult,
    aggregate,
    categorize,
    delta_long_short,
    early_late_split,
    mae,
    normalized_mad,
    summarize,
    tbi,
)


def sample(pred, gt, window=60.0, **kw):
    defaults = dict(stimulus_id=f"s{pred}:{gt}", gt_onset_s=gt, pred_onset_s=pred,
                    window_len_s=window, query_class=0)
    defaults.update(kw)
    return SampleResult(**defaults)


def from_biases(biases, window=60.0, **kw):
    return [sample(10.0 + b, 10.0, window, stimulus_id=f"b{i}", **kw)
            for i, b in enumerate(biases)]


class TestTbiMae:
    def test_identity_zero(self):
        s = [sample(g, g) for g in (0.0, 3.5, 59.0)]
        assert tbi(s) == 0.0
        assert mae(s) == 0.0

    def test_hand_values(self):
        s = [sample(3.0, 4.0), sample(5.0, 4.5)]
        assert tbi(s) == pytest.approx(-0.25)
        assert mae(s) == pytest.approx(0.75)

    def test_single_sample_mae(self):
        assert mae([sample(10.0, 4.0)]) == pytest.approx(6.0)

    def test_empty_raises(self):
        with pytest.raises(EmptySampleSet):
            tbi([])
        with pytest.raises(EmptySampleSet):
            mae([])

    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=60))
    @settings(max_examples=300, deadline=None)
    def test_mae_bounds_tbi(self, biases):
        s = from_biases(biases)
        assert mae(s) >= abs(tbi(s)) - 1e-12

    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=40), st.floats(-30, 30))
    @settings(max_examples=300, deadline=None)
    def test_joint_shift_invariance(self, biases, c):
        base = from_biases(biases)
        shifted = [sample(s.pred_onset_s + c, s.gt_onset_s + c, stimulus_id=s.stimulus_id)
                   for s in base]
        assert tbi(shifted) == pytest.approx(tbi(base), abs=1e-9)
        assert mae(shifted) == pytest.approx(mae(base), abs=1e-9)

    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=40), st.floats(-30, 30))
    @settings(max_examples=300, deadline=None)
    def test_pred_only_shift_moves_tbi_by_c(self, biases, c):
        base = from_biases(biases)
        shifted = [sample(s.pred_onset_s + c, s.gt_onset_s, stimulus_id=s.stimulus_id)
                   for s in base]
        assert tbi(shifted) == pytest.approx(tbi(base) + c, abs=1e-9)


class TestEarlyLateSplit:
    def test_hand_case_zeros_count_twice(self):
        s = from_biases([-2, -4, 0, 3])
        n_early, early_mean, n_late, late_mean = early_late_split(s)
        assert (n_early, n_late) == (3, 2)
        assert early_mean == pytest.approx(-2.0)
        assert late_mean == pytest.approx(1.5)

    def test_all_negative_blank_late(self):
        n_early, _, n_late, late_mean = early_late_split(from_biases([-1, -2]))
        assert (n_early, n_late) == (2, 0)
        assert late_mean is None

    def test_all_zero(self):
        n_early, early_mean, n_late, late_mean = early_late_split(from_biases([0, 0, 0]))
        assert n_early == n_late == 3
        assert early_mean == late_mean == 0.0

    @given(st.lists(st.floats(-20, 20), min_size=1, max_size=60))
    @settings(max_examples=300, deadline=None)
    def test_strict_partition_reconstructs_tbi(self, biases):
        s = from_biases(biases)
        neg = [x.bias_s for x in s if x.bias_s < 0]
        nonneg = [x.bias_s for x in s if x.bias_s >= 0]
        total = (len(neg) * (math.fsum(neg) / len(neg)) if neg else 0.0) + \
                (len(nonneg) * (math.fsum(nonneg) / len(nonneg)) if nonneg else 0.0)
        assert total / len(s) == pytest.approx(tbi(s), abs=1e-9)


class TestNormalizedMad:
    def test_hand_value(self):
        assert normalized_mad([sample(16.0, 10.0, window=20.0)]) == pytest.approx(0.30)

    def test_identity(self):
        assert normalized_mad([sample(4.0, 4.0)]) == 0.0

    def test_mean_over_windows(self):
        s = [sample(11.0, 10.0, window=20.0, stimulus_id="a"),
             sample(13.0, 10.0, window=20.0, stimulus_id="b")]
        assert normalized_mad(s) == pytest.approx(0.10)

    @given(st.lists(st.tuples(st.floats(0, 60), st.floats(0, 60)), min_size=1, max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_bounded_when_clamped(self, pairs):
        s = [sample(p, g, window=60.0, stimulus_id=str(i)) for i, (p, g) in enumerate(pairs)]
        assert 0.0 <= normalized_mad(s) <= 1.0


class TestCategorize:
    def test_membership(self):
        assert categorize(3, {3, 1}) == "correct"

    def test_non_membership(self):
        assert categorize(8, {3}) == "incorrect"

    def test_absent_detection(self):
        assert categorize(3, None) == "incorrect"


class TestAggregate:
    def test_single_group_hand_values(self):
        s = from_biases([-2, -4, 0, 3])
        out = aggregate(s, ["predictor"])
        summ = out[("",)]
        assert summ.tbi_s == pytest.approx(-0.75)
        assert summ.mae_s == pytest.approx(2.25)
        assert summ.n == 4

    def test_partition_consistency(self):
        s = from_biases([1, 2], window=5.0) + from_biases([5, 7], window=30.0)
        out = aggregate(s, ["window_len"])
        assert out[(5.0,)].tbi_s == pytest.approx(1.5)
        assert out[(30.0,)].tbi_s == pytest.approx(6.0)

    def test_singleton_group_std_zero(self):
        out = aggregate(from_biases([3.0]), ["predictor"])
        assert out[("",)].tbi_std_s == 0.0

    def test_order_independent(self):
        s = from_biases([1, -1, 2, -2], window=5.0) + from_biases([4, -4], window=30.0)
        a = aggregate(s, ["window_len"])
        b = aggregate(list(reversed(s)), ["window_len"])
        assert list(a.keys()) == list(b.keys())
        assert all(a[k] == b[k] for k in a)

    def test_invalid_counts_attached(self):
        s = from_biases([1.0], window=5.0)
        out = aggregate(s, ["window_len"], invalid_counts={(5.0,): 3})
        assert out[(5.0,)].n_invalid == 3

    @given(st.lists(st.tuples(st.sampled_from([5.0, 30.0, 60.0]), st.floats(-10, 10)),
                    min_size=1, max_size=60))
    @settings(max_examples=200, deadline=None)
    def test_weighted_group_means_reconstruct_total(self, rows):
        s = [sample(10.0 + b, 10.0, window=w, stimulus_id=str(i))
             for i, (w, b) in enumerate(rows)]
        out = aggregate(s, ["window_len"])
        weighted = sum(v.n * v.tbi_s for v in out.values()) / len(s)
        assert weighted == pytest.approx(tbi(s), abs=1e-9)


class TestDeltaLongShort:
    def _summary(self, mae_s, n=4):
        return MetricSummary(n, 0.0, 0.0, mae_s, 0.0, 0, None, n, 0.0, 0.0)

    def test_reference_values(self):
        assert delta_long_short(self._summary(3.237), self._summary(4.342)) == pytest.approx(1.105)
        assert delta_long_short(self._summary(4.987), self._summary(7.502)) == pytest.approx(2.515)

    def test_equal_summaries(self):
        assert delta_long_short(self._summary(2.0), self._summary(2.0)) == 0.0

    def test_empty_raises(self):
        with pytest.raises(EmptySampleSet):
            delta_long_short(self._summary(1.0, n=0), self._summary(2.0))


class TestSampleResultSerde:
    def test_round_trip(self):
        s = sample(3.5, 2.0, window=30.0, position_bucket=2, category="incorrect",
                   predictor_name="sim")
        back = SampleResult.from_json(s.to_json())
        assert back == s
        assert back.bias_s == pytest.approx(1.5)
