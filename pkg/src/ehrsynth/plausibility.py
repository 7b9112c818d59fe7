"""Narrative plausibility via n-gram language-model perplexity.

Each record's narrative fields are concatenated in a fixed order and scored
with an add-k smoothed n-gram model trained on a deterministic reference
corpus; records whose perplexity exceeds the batch's 95th-percentile
threshold are flagged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .errors import EmptyScores
from .textutil import tokenize

UNK = "<unk>"
BOS = "<s>"

NARRATIVE_FIELDS = ("admission_note", "diagnosis", "chronic_conditions", "medications_text")


class EmptyCorpus(ValueError):
    """Cannot train a language model on an empty corpus."""


@dataclass(frozen=True)
class Narrative:
    record_id: object
    text: str


@dataclass(frozen=True)
class PlausibilityResult:
    record_id: object
    perplexity: float
    flagged: bool


class PerplexityScorer(Protocol):
    def score_texts(self, texts: Sequence[str]) -> list[float]:
        ...


def build_narrative(view) -> Narrative:
    """Concatenate the narrative fields in fixed order with '. ' separators."""
    fields = view.text_fields()
    parts = [fields[name].strip() for name in NARRATIVE_FIELDS if fields.get(name)]
    return Narrative(record_id=view.record_id, text=". ".join(p for p in parts if p))


@dataclass
class NgramLm:
    """Add-k smoothed n-gram model over the shared tokenizer's tokens.

    ``counts[context][token]`` and ``context_totals[context]`` stay in sync so
    conditional probabilities over the vocabulary sum to one for every
    context. Unseen tokens map to the reserved unknown token.
    """

    order: int = 3
    k: float = 1.0
    vocabulary: set[str] = field(default_factory=lambda: {UNK})
    counts: dict[tuple[str, ...], dict[str, int]] = field(default_factory=dict)
    context_totals: dict[tuple[str, ...], int] = field(default_factory=dict)

    def _map(self, token: str) -> str:
        return token if token in self.vocabulary else UNK

    def prob(self, token: str, context: tuple[str, ...]) -> float:
        """P(token | context) with add-k smoothing; always positive."""
        token = self._map(token)
        context = tuple(self._map(t) if t != BOS else t for t in context)
        v = len(self.vocabulary)
        ctx_counts = self.counts.get(context, {})
        total = self.context_totals.get(context, 0)
        return (ctx_counts.get(token, 0) + self.k) / (total + self.k * v)

    def logprob(self, tokens: Sequence[str]) -> float:
        """Sum of ln P over the token sequence with start-padding."""
        padded = [BOS] * (self.order - 1) + [self._map(t) for t in tokens]
        total = 0.0
        for i in range(self.order - 1, len(padded)):
            context = tuple(padded[i - self.order + 1:i])
            total += math.log(self.prob(padded[i], context))
        return total


def train_ngram_lm(corpus: Iterable[str], order: int = 3, k: float = 1.0) -> NgramLm:
    """Train a deterministic add-k n-gram model on the corpus texts."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if k <= 0:
        raise ValueError("smoothing constant k must be > 0")
    texts = list(corpus)
    if not texts:
        raise EmptyCorpus("training corpus is empty")
    tokenized = [tokenize(t) for t in texts]
    vocab: set[str] = {UNK}
    for toks in tokenized:
        vocab.update(toks)
    lm = NgramLm(order=order, k=k, vocabulary=vocab)
    for toks in tokenized:
        padded = [BOS] * (order - 1) + toks
        for i in range(order - 1, len(padded)):
            context = tuple(padded[i - order + 1:i])
            bucket = lm.counts.setdefault(context, {})
            bucket[padded[i]] = bucket.get(padded[i], 0) + 1
            lm.context_totals[context] = lm.context_totals.get(context, 0) + 1
    return lm


def perplexity(lm: NgramLm, text: str) -> float:
    """exp(-(1/N) * sum ln P(w_i | context)); empty text scores 1.0."""
    tokens = tokenize(text)
    if not tokens:
        return 1.0
    return math.exp(-lm.logprob(tokens) / len(tokens))


@dataclass
class NgramPerplexityScorer:
    """Built-in scorer wrapping a trained NgramLm."""

    lm: NgramLm

    def score_texts(self, texts: Sequence[str]) -> list[float]:
        return [perplexity(self.lm, t) for t in texts]


def percentile_threshold(scores: Sequence[float], q: float) -> float:
    """Nearest-rank percentile: element at rank ceil(q/100 * n), ascending."""
    if not scores:
        raise EmptyScores("cannot take a percentile of no scores")
    if not 0.0 < q <= 100.0:
        raise ValueError(f"percentile must be in (0, 100], got {q}")
    ordered = sorted(scores)
    rank = math.ceil(q / 100.0 * len(ordered))
    return ordered[rank - 1]


def assess_plausibility(
    narratives: Sequence[Narrative],
    scorer: PerplexityScorer,
    q: float = 95.0,
) -> tuple[list[PlausibilityResult], float]:
    """Score all narratives and flag those strictly above the q-th percentile.

    Empty narratives score perplexity 1.0 and are exempt from flagging.
    """
    if not narratives:
        raise EmptyScores("no narratives to assess")
    texts = [n.text for n in narratives]
    scores = scorer.score_texts(texts)
    if len(scores) != len(narratives):
        raise ValueError("scorer returned wrong number of perplexities")
    threshold = percentile_threshold(scores, q)
    results = [
        PlausibilityResult(
            record_id=n.record_id,
            perplexity=s,
            flagged=bool(n.text) and s > threshold,
        )
        for n, s in zip(narratives, scores)
    ]
    return results, threshold
