"""Sentence-pair coherence scoring over each record's textual fields.

Pairs follow a fixed pairing schedule across the record's narrative fields;
each pair is scored as the probability that the second sentence is a logical
continuation of the first. The built-in scorer is a lexical stand-in for a
next-sentence-prediction model; a remote scorer can replace it through the
wire protocol.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

from .textutil import token_set

# (first field, second field) in narrative order
PAIRING_SCHEDULE: tuple[tuple[str, str], ...] = (
    ("vitals_summary", "chronic_conditions"),
    ("chronic_conditions", "past_surgeries"),
    ("family_history", "diagnosis"),
    ("diagnosis", "treatment"),
    ("treatment", "admission_note"),
)


@dataclass(frozen=True)
class SentencePair:
    first: str
    second: str
    source_fields: tuple[str, str]


class CoherenceScorer(Protocol):
    def score_pairs(self, pairs: Sequence[SentencePair]) -> list[float]:
        ...


@dataclass(frozen=True)
class CoherenceResult:
    record_id: object
    probabilities: tuple[float, ...]
    average_probability: float
    flagged: bool


def extract_sentence_pairs(view) -> list[SentencePair]:
    """Apply the pairing schedule to a record view; empty fields skip pairs."""
    fields = view.text_fields()
    pairs = []
    for first_name, second_name in PAIRING_SCHEDULE:
        first = (fields.get(first_name) or "").strip()
        second = (fields.get(second_name) or "").strip()
        if first and second:
            pairs.append(SentencePair(first, second, (first_name, second_name)))
    return pairs


def lexical_coherence_score(pair: SentencePair) -> float:
    """|A ∩ B| / sqrt(|A|·|B|) over the two sentences' content-token sets.

    Neutral 0.5 when either token set is empty. Symmetric, bounded in [0,1],
    and exactly 1 iff the token sets are equal and nonempty.
    """
    a = token_set(pair.first)
    b = token_set(pair.second)
    if not a or not b:
        return 0.5
    return len(a & b) / math.sqrt(len(a) * len(b))


@dataclass
class LexicalCoherenceScorer:
    """Built-in scorer: token-overlap probability per pair."""

    def score_pairs(self, pairs: Sequence[SentencePair]) -> list[float]:
        return [lexical_coherence_score(p) for p in pairs]


def assess_record_coherence(
    view,
    scorer: CoherenceScorer,
    threshold: float,
) -> CoherenceResult:
    """Average the per-pair probabilities and flag iff average < threshold.

    Records with zero pairs average 1.0 and are never flagged: with nothing
    to contradict, there is no evidence of incoherence.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0,1], got {threshold}")
    pairs = extract_sentence_pairs(view)
    if not pairs:
        return CoherenceResult(view.record_id, (), 1.0, False)
    probs = scorer.score_pairs(pairs)
    if len(probs) != len(pairs):
        raise ValueError("scorer returned wrong number of probabilities")
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"scorer probability out of [0,1]: {p}")
    average = sum(probs) / len(probs)
    return CoherenceResult(
        record_id=view.record_id,
        probabilities=tuple(probs),
        average_probability=average,
        flagged=average < threshold,
    )
