"""Protocol conformance: the primary suite's checks, run against the sidecar."""
from __future__ import annotations

import requests

from ehrsynth.wire import run_protocol_checks


class TestConformance:
    def test_primary_protocol_suite_passes_unchanged(self, heuristic_sidecar):
        assert run_protocol_checks(heuristic_sidecar) == []

    def test_response_lengths_match_request_order(self, heuristic_sidecar):
        texts = [f"clinical note number {i}" for i in range(7)]
        resp = requests.post(heuristic_sidecar + "/v1/perplexity",
                             json={"texts": texts}, timeout=10)
        assert resp.status_code == 200
        assert len(resp.json()["perplexities"]) == 7

    def test_nli_triples_sum_to_one(self, heuristic_sidecar):
        items = [{"premise": "a b c", "hypothesis": "a b c d"}] * 3
        resp = requests.post(heuristic_sidecar + "/v1/nli",
                             json={"items": items}, timeout=10)
        for label in resp.json()["labels"]:
            total = label["entailment"] + label["neutral"] + label["contradiction"]
            assert abs(total - 1.0) < 1e-6
            assert all(0.0 <= label[k] <= 1.0 for k in label)

    def test_oversized_batch_rejected(self, heuristic_sidecar):
        resp = requests.post(heuristic_sidecar + "/v1/perplexity",
                             json={"texts": ["x"] * 129}, timeout=10)
        assert resp.status_code == 400

    def test_malformed_body_rejected(self, heuristic_sidecar):
        resp = requests.post(heuristic_sidecar + "/v1/coherence",
                             json={"pairs": [{"first": "only one side"}]}, timeout=10)
        assert resp.status_code == 400

    def test_healthz_reports_mode(self, heuristic_sidecar):
        body = requests.get(heuristic_sidecar + "/healthz", timeout=5).json()
        assert body["status"] == "ok"
        assert body["models"] in ("heuristic", "pretrained")

    def test_primary_remote_clients_work_against_sidecar(self, heuristic_sidecar):
        from ehrsynth.coherence import SentencePair
        from ehrsynth.consistency import PremiseHypothesis
        from ehrsynth.wire import (JsonHttpClient, RemoteCoherenceScorer,
                                   RemoteNliClassifier, RemotePerplexityScorer)

        client = JsonHttpClient(heuristic_sidecar)
        probs = RemoteCoherenceScorer(client).score_pairs(
            [SentencePair("chest pain noted", "chest pain improving", ("a", "b"))])
        assert len(probs) == 1 and 0.0 <= probs[0] <= 1.0
        scores = RemotePerplexityScorer(client).score_texts(["the patient was seen"])
        assert scores[0] >= 1.0
        labels = RemoteNliClassifier(client).classify_pairs(
            [PremiseHypothesis("the patient is allergic to penicillin",
                               "the medication list includes amoxicillin", "r1")])
        assert labels[0].argmax == "contradiction"


class TestConformancePretrained:
    def test_protocol_suite_against_pretrained(self, pretrained_sidecar):
        assert run_protocol_checks(pretrained_sidecar) == []
