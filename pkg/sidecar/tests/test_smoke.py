"""Smoke tests: expected argmax labels and score directions on fixture inputs.

These assertions hold for both the heuristic stand-ins and the pretrained
checkpoints, so the same smoke suite validates whichever mode is serving.
"""
from __future__ import annotations

import pytest
import requests

CONTINUOUS_PAIR = {
    "first": "The patient reports chest pain and shortness of breath.",
    "second": "The chest pain began two days ago and is worsening.",
}
ALLERGY_CONTRADICTION = {
    "premise": "The patient is allergic to penicillin.",
    "hypothesis": "The patient is prescribed amoxicillin safely.",
}
ALLERGY_SAFE = {
    "premise": "The patient is allergic to penicillin.",
    "hypothesis": "The patient is prescribed azithromycin safely.",
}


def _argmax(label: dict) -> str:
    return max(("entailment", "neutral", "contradiction"), key=label.get)


class TestHeuristicSmoke:
    def test_continuous_pair_scores_above_half(self, heuristic_sidecar):
        resp = requests.post(heuristic_sidecar + "/v1/coherence",
                             json={"pairs": [CONTINUOUS_PAIR]}, timeout=10)
        assert resp.json()["probabilities"][0] > 0.5

    def test_allergy_conflict_is_contradiction(self, heuristic_sidecar):
        resp = requests.post(heuristic_sidecar + "/v1/nli",
                             json={"items": [ALLERGY_CONTRADICTION, ALLERGY_SAFE]},
                             timeout=10)
        labels = resp.json()["labels"]
        assert _argmax(labels[0]) == "contradiction"
        assert _argmax(labels[1]) != "contradiction"

    def test_clinical_text_scores_lower_than_gibberish(self, heuristic_sidecar):
        resp = requests.post(heuristic_sidecar + "/v1/perplexity", json={"texts": [
            "the patient was admitted with chest pain",
            "zxqv klmno brrt wug plf xyzzy",
        ]}, timeout=10)
        clinical, gibberish = resp.json()["perplexities"]
        assert 1.0 <= clinical < gibberish

    def test_empty_text_perplexity_is_1(self, heuristic_sidecar):
        resp = requests.post(heuristic_sidecar + "/v1/perplexity",
                             json={"texts": [""]}, timeout=10)
        assert resp.json()["perplexities"][0] == pytest.approx(1.0)


class TestPretrainedSmoke:
    def test_continuous_pair_scores_above_half(self, pretrained_sidecar):
        resp = requests.post(pretrained_sidecar + "/v1/coherence",
                             json={"pairs": [CONTINUOUS_PAIR]}, timeout=60)
        assert resp.json()["probabilities"][0] > 0.5

    def test_allergy_conflict_is_contradiction(self, pretrained_sidecar):
        resp = requests.post(pretrained_sidecar + "/v1/nli",
                             json={"items": [ALLERGY_CONTRADICTION]}, timeout=60)
        assert _argmax(resp.json()["labels"][0]) == "contradiction"
