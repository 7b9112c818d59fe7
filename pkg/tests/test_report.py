from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from ehrsynth.errors import EmptyScores, IncompleteChecks, MissingSubscore
from ehrsynth.report import (HistogramSpec, RecordChecks, ValidationRecord,
                             combined_anomaly_score, emit_histograms,
                             gate_record, read_validation_csv,
                             write_validation_csv)


def checks(**kw) -> RecordChecks:
    base = dict(
        record_id=1, coherence_avg=1.0, coherence_flagged=False,
        perplexity=20.0, plausibility_flagged=False,
        consistency_score=0.99, max_contradiction=0.0, consistency_flagged=False,
        reconstruction_error=0.0, anomaly_flagged=False,
        hard_range_flagged=False, soft_range_warnings=0,
    )
    base.update(kw)
    return RecordChecks(**base)


class TestCombinedScore:
    def test_perfect_record_equals_perplexity(self):
        assert combined_anomaly_score(checks(), anomaly_threshold=0.5) == 20.0

    def test_formula_hand_example(self):
        c = checks(perplexity=30.0, coherence_avg=0.9, max_contradiction=0.0,
                   reconstruction_error=0.04)
        score = combined_anomaly_score(c, anomaly_threshold=0.04)
        assert score == pytest.approx(30 + 5 + 0 + 50)

    def test_zero_weights_equal_perplexity(self):
        c = checks(perplexity=37.5, coherence_avg=0.2, max_contradiction=0.9,
                   reconstruction_error=5.0)
        score = combined_anomaly_score(c, anomaly_threshold=0.5,
                                       w_c=0.0, w_n=0.0, w_a=0.0)
        assert score == 37.5

    def test_recon_ratio_capped_at_1(self):
        c = checks(reconstruction_error=100.0)
        score = combined_anomaly_score(c, anomaly_threshold=0.1)
        assert score == pytest.approx(20.0 + 50.0)

    def test_missing_subscore_named(self):
        c = checks(perplexity=None)
        with pytest.raises(MissingSubscore, match="perplexity"):
            combined_anomaly_score(c, anomaly_threshold=0.5)

    @given(
        st.floats(1.0, 200.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
        st.floats(0.0, 10.0), st.floats(0.0, 10.0),
    )
    def test_monotone_in_each_penalty(self, perplexity, coherence, contradiction,
                                      error, bump):
        base = checks(perplexity=perplexity, coherence_avg=coherence,
                      max_contradiction=contradiction, reconstruction_error=error)
        threshold = 1.0
        score = combined_anomaly_score(base, threshold)
        worse_coherence = checks(perplexity=perplexity,
                                 coherence_avg=max(0.0, coherence - min(bump, coherence)),
                                 max_contradiction=contradiction,
                                 reconstruction_error=error)
        worse_error = checks(perplexity=perplexity, coherence_avg=coherence,
                             max_contradiction=contradiction,
                             reconstruction_error=error + bump)
        assert combined_anomaly_score(worse_coherence, threshold) >= score - 1e-9
        assert combined_anomaly_score(worse_error, threshold) >= score - 1e-9


class TestGate:
    def test_no_flags_pass(self):
        passed, reasons = gate_record(checks())
        assert passed and reasons == []

    def test_single_anomaly_flag(self):
        passed, reasons = gate_record(checks(anomaly_flagged=True))
        assert not passed and reasons == ["anomaly"]

    def test_multiple_flags_all_listed(self):
        passed, reasons = gate_record(checks(anomaly_flagged=True,
                                             hard_range_flagged=True))
        assert not passed
        assert reasons == ["anomaly", "hard_range"]

    def test_incomplete_checks_raise(self):
        with pytest.raises(IncompleteChecks):
            gate_record(checks(consistency_flagged=None))

    def test_verdict_is_conjunction(self):
        for flag in ("coherence_flagged", "plausibility_flagged",
                     "consistency_flagged", "anomaly_flagged", "hard_range_flagged"):
            passed, reasons = gate_record(checks(**{flag: True}))
            assert not passed
            assert len(reasons) == 1


class TestHistograms:
    def test_two_bins_hand_example(self):
        rows = emit_histograms([1, 2, 3, 4], HistogramSpec("m", bins=2))
        assert [(r.bin_start, r.bin_end, r.count) for r in rows] == [
            (1.0, 2.5, 2), (2.5, 4.0, 2)]

    def test_last_bin_right_inclusive(self):
        rows = emit_histograms([0.0, 10.0], HistogramSpec("m", bins=5))
        assert rows[-1].count == 1
        assert sum(r.count for r in rows) == 2

    def test_all_equal_single_unit_bin(self):
        rows = emit_histograms([3.0] * 7, HistogramSpec("m", bins=4))
        assert len(rows) == 1
        assert rows[0].count == 7
        assert rows[0].bin_end == rows[0].bin_start + 1.0

    def test_empty_raises(self):
        with pytest.raises(EmptyScores):
            emit_histograms([], HistogramSpec("m"))

    def test_explicit_edges(self):
        rows = emit_histograms([1, 2, 3], HistogramSpec("m", edges=(0.0, 2.0, 4.0)))
        assert [(r.count) for r in rows] == [1, 2]
        with pytest.raises(ValueError):
            emit_histograms([5], HistogramSpec("m", edges=(0.0, 4.0)))

    @given(st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=1, max_size=200),
           st.integers(1, 25))
    def test_counts_always_sum_to_n(self, values, bins):
        rows = emit_histograms(values, HistogramSpec("m", bins=bins))
        assert sum(r.count for r in rows) == len(values)
        for a, b in zip(rows, rows[1:]):
            assert a.bin_end == b.bin_start  # contiguous


class TestCsvRoundTrip:
    def test_write_then_read(self, tmp_path):
        records = [
            ValidationRecord(checks=checks(record_id=5, perplexity=21.25),
                             combined_score=33.5, gate_passed=True, reasons=[]),
            ValidationRecord(checks=checks(record_id=6, anomaly_flagged=True),
                             combined_score=99.125, gate_passed=False,
                             reasons=["anomaly", "hard_range"]),
        ]
        path = tmp_path / "validation.csv"
        write_validation_csv(path, records)
        restored = read_validation_csv(path)
        assert len(restored) == 2
        assert restored[0].checks.record_id == 5
        assert restored[0].checks.perplexity == 21.25
        assert restored[0].gate_passed is True
        assert restored[1].reasons == ["anomaly", "hard_range"]
        assert restored[1].combined_score == 99.125
