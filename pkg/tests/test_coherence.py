from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from ehrsynth.coherence import (LexicalCoherenceScorer, SentencePair,
                                assess_record_coherence, extract_sentence_pairs,
                                lexical_coherence_score)
from ehrsynth.views import RecordView


def make_view(**fields) -> RecordView:
    view = RecordView(record_id=1)
    view.vitals_summary = fields.get("vitals_summary", "")
    view.chronic_conditions = fields.get("chronic_conditions", "")
    view.past_surgeries = fields.get("past_surgeries", "")
    view.family_history = fields.get("family_history", "")
    view.diagnosis_text = fields.get("diagnosis", "")
    view.treatment_text = fields.get("treatment", "")
    view.admission_note = fields.get("admission_note", "")
    return view


FULL_FIELDS = dict(
    vitals_summary="Blood pressure 120 over 80 with heart rate 72.",
    chronic_conditions="History of hypertension and asthma.",
    past_surgeries="Appendectomy in childhood.",
    family_history="Family history of stroke.",
    diagnosis="Primary diagnosis is hypertension.",
    treatment="Treatment with lisinopril daily.",
    admission_note="Admitted with headache and elevated blood pressure.",
)


class TestExtractPairs:
    def test_all_schedule_fields_give_5_pairs(self):
        pairs = extract_sentence_pairs(make_view(**FULL_FIELDS))
        assert len(pairs) == 5
        assert [p.source_fields for p in pairs] == [
            ("vitals_summary", "chronic_conditions"),
            ("chronic_conditions", "past_surgeries"),
            ("family_history", "diagnosis"),
            ("diagnosis", "treatment"),
            ("treatment", "admission_note"),
        ]

    def test_single_field_gives_no_pairs(self):
        assert extract_sentence_pairs(make_view(diagnosis="Something.")) == []

    def test_diagnosis_treatment_pair_present_when_both_nonempty(self):
        view = make_view(diagnosis="Asthma confirmed.", treatment="Inhaler prescribed.")
        pairs = extract_sentence_pairs(view)
        assert [p.source_fields for p in pairs] == [("diagnosis", "treatment")]

    def test_empty_fields_skip_their_pairs(self):
        fields = dict(FULL_FIELDS)
        fields["chronic_conditions"] = ""
        pairs = extract_sentence_pairs(make_view(**fields))
        assert len(pairs) == 3


class TestLexicalScore:
    def test_identical_sentences_score_1(self):
        pair = SentencePair("chest pain noted", "chest pain noted", ("a", "b"))
        assert lexical_coherence_score(pair) == 1.0

    def test_disjoint_sentences_score_0(self):
        pair = SentencePair("alpha beta", "gamma delta", ("a", "b"))
        assert lexical_coherence_score(pair) == 0.0

    def test_chest_pain_worked_example(self):
        pair = SentencePair("patient reports chest pain",
                            "chest pain started yesterday", ("a", "b"))
        assert lexical_coherence_score(pair) == pytest.approx(0.5, abs=1e-15)

    def test_empty_side_is_neutral(self):
        assert lexical_coherence_score(SentencePair("", "words", ("a", "b"))) == 0.5
        assert lexical_coherence_score(SentencePair("!!!", "words", ("a", "b"))) == 0.5

    @given(st.text(max_size=60), st.text(max_size=60))
    def test_symmetric_and_bounded(self, a, b):
        one = lexical_coherence_score(SentencePair(a, b, ("x", "y")))
        two = lexical_coherence_score(SentencePair(b, a, ("y", "x")))
        assert one == two
        assert 0.0 <= one <= 1.0

    @given(st.text(min_size=1, max_size=60))
    def test_equals_1_iff_token_sets_equal_nonempty(self, a):
        from ehrsynth.textutil import token_set

        score = lexical_coherence_score(SentencePair(a, a, ("x", "y")))
        if token_set(a):
            assert score == 1.0
        else:
            assert score == 0.5


class _FixedScorer:
    def __init__(self, values):
        self.values = list(values)

    def score_pairs(self, pairs):
        return self.values[: len(pairs)]


class TestAssessCoherence:
    def test_perfect_scores_unflagged(self):
        view = make_view(**FULL_FIELDS)
        result = assess_record_coherence(view, _FixedScorer([1.0] * 5), 0.5)
        assert result.average_probability == 1.0
        assert not result.flagged

    def test_mean_is_arithmetic(self):
        view = make_view(diagnosis="a b", treatment="c d",
                         admission_note="elephant zoo")
        result = assess_record_coherence(view, _FixedScorer([0.998, 1.0]), 0.999)
        assert result.average_probability == pytest.approx(0.999, abs=1e-12)
        assert not result.flagged  # >= threshold

    def test_paper_minimum_unflagged_at_remote_default(self):
        view = make_view(diagnosis="a", treatment="b")
        result = assess_record_coherence(view, _FixedScorer([0.99800]), 0.99)
        assert result.average_probability == pytest.approx(0.998)
        assert not result.flagged

    def test_zero_pairs_average_1_unflagged(self):
        result = assess_record_coherence(make_view(), _FixedScorer([]), 0.99)
        assert result.average_probability == 1.0
        assert not result.flagged

    def test_threshold_range_checked(self):
        with pytest.raises(ValueError):
            assess_record_coherence(make_view(), _FixedScorer([]), 1.5)

    def test_bad_probability_rejected(self):
        view = make_view(diagnosis="a b", treatment="a c")
        with pytest.raises(ValueError):
            assess_record_coherence(view, _FixedScorer([1.7]), 0.5)

    @settings(max_examples=1000, deadline=None)
    @given(
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=5),
        st.floats(0.0, 1.0, allow_nan=False),
    )
    def test_flag_iff_average_below_threshold(self, scores, threshold):
        view = make_view(**FULL_FIELDS)
        pairs = extract_sentence_pairs(view)
        result = assess_record_coherence(
            view, _FixedScorer(scores * 5), threshold
        )
        expected_scores = (scores * 5)[: len(pairs)]
        average = sum(expected_scores) / len(expected_scores)
        assert result.flagged == (average < threshold)

    def test_batch_order_independence(self, small_cohort):
        from ehrsynth.views import build_record_view

        scorer = LexicalCoherenceScorer()
        views = [build_record_view(b) for b in small_cohort.bundles]
        forward = [assess_record_coherence(v, scorer, 0.5) for v in views]
        backward = [assess_record_coherence(v, scorer, 0.5) for v in reversed(views)]
        assert [r.record_id for r in reversed(backward)] == [r.record_id for r in forward]
        assert [r.average_probability for r in reversed(backward)] == \
            [r.average_probability for r in forward]
