"""Deterministic reference corpus of clinical sentences.

Stands in for pretrained-model knowledge when scoring plausibility offline:
the built-in language model trains on these template-generated sentences, so
narratives produced by the same content grammars score in-distribution.
"""
from __future__ import annotations

import random

from . import content

DEFAULT_CORPUS_SENTENCES = 10000
DEFAULT_CORPUS_SEED = 813205


def _sentence(rng: random.Random) -> str:
    condition = rng.choice(content.CONDITION_NAMES)
    icd, complaint, meds, advice = content.CONDITIONS[condition]
    other = rng.choice(content.CONDITION_NAMES)
    med = rng.choice(meds)
    dose = rng.choice(content.DOSAGES)
    kind = rng.randrange(10)
    if kind == 0:
        return f"The patient reports {complaint}."
    if kind == 1:
        verb = rng.choice(("has a history of", "has long standing", "is managed for"))
        return f"The patient {verb} {condition} and {other}."
    if kind == 2:
        return f"Evaluation confirms {condition} presenting with {complaint}."
    if kind == 3:
        return (f"The patient was admitted with {complaint} attributed to "
                f"{condition} and requiring inpatient care.")
    if kind == 4:
        return (f"The plan for {condition} is to start {med} {dose}. "
                f"The patient should {advice}.")
    if kind == 5:
        opener = rng.choice(content.NOTE_OPENERS)
        plan = rng.choice(content.NOTE_PLANS)
        return f"{opener[0].upper()}{opener[1:]} for management of {condition}; {plan}."
    if kind == 6:
        outcome = rng.choice(("improved steadily", "responded well to treatment",
                              "remained stable"))
        return (f"The patient was admitted and treated for {condition}. "
                f"The patient {outcome} and was discharged with follow up arranged.")
    if kind == 7:
        second = rng.choice(content.ALL_MEDICATIONS)
        return (f"Prescribed medications include {med} {dose}, "
                f"{second} {rng.choice(content.DOSAGES)}.")
    if kind == 8:
        return f"The primary diagnosis is {condition}."
    surgery = rng.choice(content.SURGERIES)
    return f"The patient underwent {surgery} {rng.randint(1, 20)} years ago with good recovery."


def build_reference_corpus(
    n_sentences: int = DEFAULT_CORPUS_SENTENCES,
    seed: int = DEFAULT_CORPUS_SEED,
) -> list[str]:
    rng = random.Random(seed)
    return [_sentence(rng) for _ in range(n_sentences)]
