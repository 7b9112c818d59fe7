from __future__ import annotations

import math
import re

import pytest
from hypothesis import given, settings, strategies as st

from ehrsynth.errors import EmptyScores
from ehrsynth.plausibility import (BOS, UNK, EmptyCorpus, Narrative, NgramLm,
                                   NgramPerplexityScorer, assess_plausibility,
                                   build_narrative, percentile_threshold,
                                   perplexity, train_ngram_lm)
from ehrsynth.views import RecordView

# ---------------------------------------------------------------------------
# Independent oracle: direct count arithmetic over the raw corpus
# ---------------------------------------------------------------------------

def oracle_perplexity(corpus: list[str], text: str, order: int, k: float) -> float:
    def toks(s):
        return re.findall(r"[a-z0-9]+", s.lower())

    vocab = {UNK}
    for sentence in corpus:
        vocab.update(toks(sentence))
    v = len(vocab)
    ngram_counts: dict[tuple, int] = {}
    context_counts: dict[tuple, int] = {}
    for sentence in corpus:
        padded = [BOS] * (order - 1) + toks(sentence)
        for i in range(order - 1, len(padded)):
            gram = tuple(padded[i - order + 1: i + 1])
            ngram_counts[gram] = ngram_counts.get(gram, 0) + 1
            context_counts[gram[:-1]] = context_counts.get(gram[:-1], 0) + 1

    tokens = [t if t in vocab else UNK for t in toks(text)]
    if not tokens:
        return 1.0
    padded = [BOS] * (order - 1) + tokens
    log_total = 0.0
    for i in range(order - 1, len(padded)):
        gram = tuple(padded[i - order + 1: i + 1])
        numerator = ngram_counts.get(gram, 0) + k
        denominator = context_counts.get(gram[:-1], 0) + k * v
        log_total += math.log(numerator / denominator)
    return math.exp(-log_total / len(tokens))


FIXTURE_CORPUS = [
    "the patient reports chest pain",
    "the patient reports shortness of breath",
    "chest pain started yesterday evening",
    "blood pressure was elevated on arrival",
    "the plan is to start lisinopril",
    "follow up arranged in two weeks",
]


class TestBuildNarrative:
    def _view(self, **kw):
        view = RecordView(record_id=9)
        view.admission_note = kw.get("admission_note", "")
        view.diagnosis_text = kw.get("diagnosis", "")
        view.chronic_conditions = kw.get("conditions", "")
        view.medication_lines = kw.get("medications", [])
        return view

    def test_four_fields_in_fixed_order(self):
        view = self._view(admission_note="Admitted with cough",
                          diagnosis="Diagnosis is pneumonia",
                          conditions="History of asthma",
                          medications=["amoxicillin 500 mg"])
        narrative = build_narrative(view)
        assert narrative.text == (
            "Admitted with cough. Diagnosis is pneumonia. History of asthma. "
            "Prescribed medications include amoxicillin 500 mg."
        )

    def test_missing_fields_skipped(self):
        view = self._view(diagnosis="Diagnosis is pneumonia")
        assert build_narrative(view).text == "Diagnosis is pneumonia"

    def test_all_empty_gives_empty_narrative(self):
        assert build_narrative(self._view()).text == ""

    def test_deterministic(self):
        view = self._view(admission_note="A", diagnosis="B")
        assert build_narrative(view).text == build_narrative(view).text


class TestTrainNgram:
    def test_empty_corpus_raises(self):
        with pytest.raises(EmptyCorpus):
            train_ngram_lm([])

    def test_repeated_bigram_is_maximal_continuation(self):
        lm = train_ngram_lm(["a b", "a b"], order=2, k=1.0)
        continuations = {t: lm.prob(t, ("a",)) for t in lm.vocabulary}
        assert max(continuations, key=continuations.get) == "b"
        # count-ratio oracle: (2 + 1) / (2 + 1 * V)
        assert continuations["b"] == pytest.approx((2 + 1) / (2 + len(lm.vocabulary)))

    def test_unseen_token_maps_to_unk_nonzero(self):
        lm = train_ngram_lm(["a b"], order=1, k=1.0)
        assert lm.prob("zzz", ()) > 0.0
        assert lm.prob("zzz", ()) == lm.prob(UNK, ())

    def test_probabilities_sum_to_1_per_context(self):
        lm = train_ngram_lm(FIXTURE_CORPUS, order=3, k=0.5)
        contexts = list(lm.counts.keys())[:20] + [("never", "seen")]
        for context in contexts:
            total = sum(lm.prob(t, context) for t in lm.vocabulary)
            assert abs(total - 1.0) < 1e-9, context

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            train_ngram_lm(["a"], order=0)
        with pytest.raises(ValueError):
            train_ngram_lm(["a"], k=0.0)


class TestPerplexity:
    def test_uniform_unigram_equals_vocabulary_size(self):
        vocab = {f"w{i}" for i in range(49)} | {UNK}
        lm = NgramLm(order=1, k=1.0, vocabulary=vocab,
                     counts={(): {t: 1 for t in vocab}},
                     context_totals={(): len(vocab)})
        assert len(lm.vocabulary) == 50
        assert perplexity(lm, "w1 w2 zebra") == pytest.approx(50.0, rel=1e-12)

    def test_empty_text_is_1(self):
        lm = train_ngram_lm(["a b"], order=2)
        assert perplexity(lm, "") == 1.0
        assert perplexity(lm, "...!!!") == 1.0

    def test_matches_brute_force_oracle_on_fixture(self):
        lm = train_ngram_lm(FIXTURE_CORPUS, order=3, k=1.0)
        for text in FIXTURE_CORPUS + ["the patient reports dizziness",
                                      "completely unseen words here"]:
            expected = oracle_perplexity(FIXTURE_CORPUS, text, order=3, k=1.0)
            assert perplexity(lm, text) == pytest.approx(expected, rel=1e-9)

    def test_perplexity_at_least_1(self):
        lm = train_ngram_lm(FIXTURE_CORPUS, order=2, k=1.0)
        for text in FIXTURE_CORPUS:
            assert perplexity(lm, text) >= 1.0

    def test_corpus_duplication_tracked_by_oracle(self):
        doubled = FIXTURE_CORPUS * 2
        lm = train_ngram_lm(doubled, order=3, k=1.0)
        text = "the patient reports chest pain"
        assert perplexity(lm, text) == pytest.approx(
            oracle_perplexity(doubled, text, order=3, k=1.0), rel=1e-9
        )


class TestPercentile:
    def test_1_to_20_q95(self):
        assert percentile_threshold(list(range(1, 21)), 95) == 19

    def test_four_scores_q95(self):
        assert percentile_threshold([10, 20, 30, 40], 95) == 40

    def test_single_score_any_q(self):
        for q in (1, 50, 95, 100):
            assert percentile_threshold([7.5], q) == 7.5

    def test_empty_raises(self):
        with pytest.raises(EmptyScores):
            percentile_threshold([], 95)

    def test_q_bounds(self):
        with pytest.raises(ValueError):
            percentile_threshold([1.0], 0)
        with pytest.raises(ValueError):
            percentile_threshold([1.0], 101)

    def test_q100_is_max(self):
        assert percentile_threshold([3, 1, 2], 100) == 3

    @given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=40),
           st.integers(1, 99))
    def test_monotone_in_q(self, scores, q):
        assert percentile_threshold(scores, q) <= percentile_threshold(scores, q + 1)


class _ListScorer:
    def __init__(self, values):
        self.values = values

    def score_texts(self, texts):
        return self.values[: len(texts)]


class TestAssessPlausibility:
    def test_100_distinct_scores_flags_exactly_5(self):
        narratives = [Narrative(i, f"text {i}") for i in range(100)]
        scores = [float(i + 1) for i in range(100)]
        results, threshold = assess_plausibility(narratives, _ListScorer(scores), q=95)
        assert threshold == 95.0
        assert sum(r.flagged for r in results) == 5

    def test_all_equal_scores_flag_none(self):
        narratives = [Narrative(i, "same") for i in range(10)]
        results, _ = assess_plausibility(narratives, _ListScorer([3.0] * 10), q=95)
        assert not any(r.flagged for r in results)

    def test_empty_batch_raises(self):
        with pytest.raises(EmptyScores):
            assess_plausibility([], _ListScorer([]), q=95)

    def test_empty_narrative_exempt_from_flagging(self):
        narratives = [Narrative(0, ""), Narrative(1, "words")]
        results, _ = assess_plausibility(narratives, _ListScorer([100.0, 1.0]), q=50)
        assert not results[0].flagged

    def test_flag_set_invariant_under_permutation(self):
        scores = [5.0, 50.0, 2.0, 9.0, 70.0, 3.0]
        narratives = [Narrative(i, f"t{i}") for i in range(len(scores))]
        results, _ = assess_plausibility(narratives, _ListScorer(scores), q=80)
        flagged = {r.record_id for r in results if r.flagged}
        order = [3, 0, 5, 1, 4, 2]
        permuted_results, _ = assess_plausibility(
            [narratives[i] for i in order],
            _ListScorer([scores[i] for i in order]), q=80)
        assert {r.record_id for r in permuted_results if r.flagged} == flagged

    @settings(deadline=None)
    @given(st.lists(st.floats(1.0, 1e4, allow_nan=False), min_size=1,
                    max_size=50, unique=True), st.integers(1, 100))
    def test_flag_count_bound_for_distinct_scores(self, scores, q):
        narratives = [Narrative(i, f"t{i}") for i in range(len(scores))]
        results, _ = assess_plausibility(narratives, _ListScorer(scores), q=q)
        n = len(scores)
        assert sum(r.flagged for r in results) <= n - math.ceil(q / 100 * n)

    def test_builtin_scorer_concentration(self, small_cohort):
        from ehrsynth.generation.corpus import build_reference_corpus
        from ehrsynth.views import build_record_view

        lm = train_ngram_lm(build_reference_corpus(1500, seed=4), order=3, k=1.0)
        scorer = NgramPerplexityScorer(lm)
        narratives = [build_narrative(build_record_view(b)) for b in small_cohort.bundles]
        results, threshold = assess_plausibility(narratives, scorer, q=95)
        assert all(r.perplexity >= 1.0 for r in results)
        assert threshold < 1000.0
