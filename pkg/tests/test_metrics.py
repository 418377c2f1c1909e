"""EER, AUC over iterations, sampling schedule, and report assembly."""

import csv
import io

import numpy as np
import pytest

from vexal import metrics as mx


def eer_by_enumeration(scores, labels):
    """Independent oracle: walk every unique threshold with plain loops,
    then interpolate the crossing linearly in (FPR, FNR) space."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == -1]
    thresholds = sorted(set(scores)) + [float("inf")]
    points = []
    for th in thresholds:
        fpr = sum(1 for s in neg if s >= th) / len(neg)
        fnr = sum(1 for s in pos if s < th) / len(pos)
        points.append((fpr, fnr))
    prev = points[0]
    for fpr, fnr in points:
        if fpr - fnr <= 0.0:
            if fpr == fnr:
                return fpr * 100.0
            d0 = prev[0] - prev[1]
            d1 = fpr - fnr
            t = d0 / (d0 - d1)
            return (prev[0] + t * (fpr - prev[0])) * 100.0
        prev = (fpr, fnr)
    raise AssertionError("no crossing found")


def _random_scoreset(rng, n=200):
    scores = rng.standard_normal(n)
    if rng.uniform() < 0.3:
        scores = np.round(scores, 1)  # force score ties
    labels = rng.choice([-1, 1], size=n)
    labels[0], labels[1] = 1, -1  # both classes present
    return scores, labels


class TestEer:
    def test_perfectly_separated_is_zero(self):
        scores = [-3.0, -2.0, -1.0, 1.0, 2.0]
        labels = [-1, -1, -1, 1, 1]
        assert mx.eer(scores, labels) == 0.0

    def test_identical_scores_are_chance_level(self):
        rng = np.random.default_rng(0)
        labels = rng.choice([-1, 1], size=50)
        labels[:2] = [1, -1]
        assert mx.eer(np.zeros(50), labels) == 50.0

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            scores, labels = _random_scoreset(rng)
            ours = mx.eer(scores, labels)
            ref = eer_by_enumeration(scores.tolist(), labels.tolist())
            assert abs(ours - ref) < 1e-9

    def test_invariant_under_monotone_transforms(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            scores, labels = _random_scoreset(rng, n=80)
            base = mx.eer(scores, labels)
            np.testing.assert_allclose(mx.eer(np.exp(scores), labels), base,
                                       atol=1e-9)
            np.testing.assert_allclose(mx.eer(2.0 * scores + 7.0, labels),
                                       base, atol=1e-9)

    def test_range(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            scores, labels = _random_scoreset(rng, n=30)
            value = mx.eer(scores, labels)
            assert 0.0 <= value <= 100.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            mx.eer([0.1, 0.2], [1, 1])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            mx.eer([0.1, 0.2], [1, -1, 1])


class TestAuc:
    def test_frozen_ten_iteration_mean(self):
        eers = [47.81, 32.56, 9.88, 4.54, 2.71, 2.00, 1.56, 1.21, 1.10, 1.08]
        value = mx.auc_over_iterations(eers)
        assert abs(value - 10.44) <= 0.01
        assert mx.format_2dp(value) == "10.44"

    def test_constant_list(self):
        assert mx.auc_over_iterations([5.0, 5.0, 5.0]) == 5.0

    def test_single_element_identity(self):
        assert mx.auc_over_iterations([3.25]) == 3.25

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mx.auc_over_iterations([])


class TestSamplingPercent:
    def test_frozen_schedule(self):
        expected = ["1.45", "2.90", "4.36", "5.81", "7.27",
                    "8.72", "10.18", "11.63", "13.09", "14.54"]
        got = [mx.format_2dp(mx.sampling_percent(t, 16, 2200))
               for t in range(1, 11)]
        assert got == expected

    def test_zero_iteration_convention(self):
        assert mx.sampling_percent(0, 16, 2200) == 0.0

    def test_degenerate_display_size(self):
        assert all(mx.sampling_percent(t, 0, 100) == 0.0 for t in range(5))

    def test_linear_in_t(self):
        one = mx.sampling_percent(1, 8, 400)
        for t in range(2, 12):
            np.testing.assert_allclose(mx.sampling_percent(t, 8, 400),
                                       t * one, rtol=1e-12)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            mx.sampling_percent(-1, 16, 2200)
        with pytest.raises(ValueError):
            mx.sampling_percent(1, 16, 0)


class TestFormat2dp:
    def test_truncates_toward_zero(self):
        assert mx.format_2dp(2.9090909) == "2.90"
        assert mx.format_2dp(14.545454) == "14.54"
        assert mx.format_2dp(10.445) == "10.44"
        assert mx.format_2dp(-1.239) == "-1.23"
        assert mx.format_2dp(5.0) == "5.00"

    def test_none_renders_empty(self):
        assert mx.format_2dp(None) == ""


class _Row:
    def __init__(self, label, variant, eers, T, K, n_total):
        self.report_label = label
        self.report_variant = variant
        self.T, self.K, self.n_total = T, K, n_total
        self.metrics = [
            mx.MetricRecord(t, mx.sampling_percent(t, K, n_total), e)
            for t, e in enumerate(eers, start=1)
        ]


class TestReportTable:
    def test_single_session_layout(self):
        text = mx.report_table([_Row("random", "", [30.0, 20.0, 10.0],
                                     T=3, K=4, n_total=100)])
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0][:6] == ["config", "variant", "iter1", "iter2",
                               "iter3", "auc"]
        assert len(rows) == 3  # header, data, samp footer
        assert rows[1][0] == "random"
        assert rows[2][0] == "samp"

    def test_auc_column_rederivable_from_full_columns(self):
        rng = np.random.default_rng(1)
        eers = rng.uniform(0, 50, size=4).tolist()
        text = mx.report_table([_Row("maxmin", "", eers, 4, 2, 60)])
        rows = list(csv.reader(io.StringIO(text)))
        header, data = rows[0], rows[1]
        full = [float(data[header.index(f"iter{t}_full")]) for t in range(1, 5)]
        assert float(data[header.index("auc_full")]) == \
            mx.auc_over_iterations(full)

    def test_samp_footer_matches_schedule(self):
        text = mx.report_table([_Row("x", "", [1.0, 2.0], 2, 16, 2200)])
        rows = list(csv.reader(io.StringIO(text)))
        footer = rows[-1]
        assert footer[2] == "1.45" and footer[3] == "2.90"
        assert float(footer[5]) == mx.sampling_percent(1, 16, 2200)

    def test_unavailable_eers_render_blank(self):
        text = mx.report_table([_Row("live", "", [None, 5.0], 2, 4, 40)])
        data = list(csv.reader(io.StringIO(text)))[1]
        assert data[2] == "" and data[3] == "5.00" and data[4] == ""

    def test_mismatched_t_rejected(self):
        rows = [_Row("a", "", [1.0], 1, 2, 10), _Row("b", "", [1.0, 2.0], 2, 2, 10)]
        with pytest.raises(ValueError):
            mx.report_table(rows)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mx.report_table([])
