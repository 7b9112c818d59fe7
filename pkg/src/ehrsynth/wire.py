"""HTTP wire protocol: remote scorer clients and protocol conformance checks.

Endpoints (JSON bodies, UTF-8):

    POST /v1/complete   {"prompt": str, "max_tokens": int, "temperature": num,
                         "seed": int}                  -> {"text": str}
    POST /v1/coherence  {"pairs": [{"first": s, "second": s}, ...]}
                                                       -> {"probabilities": [p, ...]}
    POST /v1/perplexity {"texts": [s, ...]}            -> {"perplexities": [x, ...]}
    POST /v1/nli        {"items": [{"premise": s, "hypothesis": s}, ...]}
                        -> {"labels": [{"entailment": p, "neutral": p,
                                        "contradiction": p}, ...]}
    GET  /healthz                                      -> 200 when ready

Requests are batched at most MAX_BATCH items; bearer-token auth comes from an
environment variable, never from config files.
"""
from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import requests

from .coherence import SentencePair
from .consistency import NliLabelDistribution, PremiseHypothesis

MAX_BATCH = 128
DEFAULT_TIMEOUT = 30.0
AUTH_ENV = "EHRSYNTH_API_TOKEN"


class ScorerError(RuntimeError):
    """A remote scorer failed or violated the wire protocol."""


@dataclass
class JsonHttpClient:
    """Small JSON-over-HTTP client with bounded retries and optional auth."""

    base_url: str
    timeout: float = DEFAULT_TIMEOUT
    retry_limit: int = 2
    auth_env: str = AUTH_ENV
    session: Optional[requests.Session] = None
    request_count: int = 0

    def _session(self) -> requests.Session:
        if self.session is None:
            self.session = requests.Session()
        return self.session

    def post_json(self, path: str, payload: dict) -> dict:
        url = self.base_url.rstrip("/") + path
        headers = {}
        token = os.environ.get(self.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_error: Exception | None = None
        for _ in range(self.retry_limit + 1):
            self.request_count += 1
            try:
                resp = self._session().post(
                    url, json=payload, headers=headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code >= 500:
                last_error = ScorerError(f"{url} returned {resp.status_code}: {resp.text[:200]}")
                continue
            if resp.status_code >= 400:
                raise ScorerError(f"{url} rejected request ({resp.status_code}): {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise ScorerError(f"{url} returned non-JSON body") from exc
        raise ScorerError(f"{url} failed after {self.retry_limit + 1} attempts: {last_error}")


def _batched(items: Sequence, size: int):
    for i in range(0, len(items), size):
        yield items[i:i + size]


def _check_probability(p, where: str) -> float:
    if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0.0 <= p <= 1.0:
        raise ScorerError(f"{where}: probability out of [0,1]: {p!r}")
    return float(p)


@dataclass
class RemoteCoherenceScorer:
    """Client for POST /v1/coherence; conforms to the CoherenceScorer contract."""

    client: JsonHttpClient
    batch_size: int = MAX_BATCH

    def score_pairs(self, pairs: Sequence[SentencePair]) -> list[float]:
        out: list[float] = []
        for batch in _batched(pairs, min(self.batch_size, MAX_BATCH)):
            body = {"pairs": [{"first": p.first, "second": p.second} for p in batch]}
            data = self.client.post_json("/v1/coherence", body)
            probs = data.get("probabilities")
            if not isinstance(probs, list) or len(probs) != len(batch):
                raise ScorerError("coherence response length mismatch")
            out.extend(_check_probability(p, "coherence") for p in probs)
        return out


@dataclass
class RemotePerplexityScorer:
    """Client for POST /v1/perplexity; conforms to the PerplexityScorer contract."""

    client: JsonHttpClient
    batch_size: int = MAX_BATCH

    def score_texts(self, texts: Sequence[str]) -> list[float]:
        out: list[float] = []
        for batch in _batched(texts, min(self.batch_size, MAX_BATCH)):
            data = self.client.post_json("/v1/perplexity", {"texts": list(batch)})
            scores = data.get("perplexities")
            if not isinstance(scores, list) or len(scores) != len(batch):
                raise ScorerError("perplexity response length mismatch")
            for s in scores:
                if not isinstance(s, (int, float)) or isinstance(s, bool) or s < 1.0:
                    raise ScorerError(f"perplexity out of range: {s!r}")
            out.extend(float(s) for s in scores)
        return out


@dataclass
class RemoteNliClassifier:
    """Client for POST /v1/nli; conforms to the NliClassifier contract."""

    client: JsonHttpClient
    batch_size: int = MAX_BATCH

    def classify_pairs(self, pairs: Sequence[PremiseHypothesis]) -> list[NliLabelDistribution]:
        out: list[NliLabelDistribution] = []
        for batch in _batched(pairs, min(self.batch_size, MAX_BATCH)):
            body = {"items": [{"premise": p.premise, "hypothesis": p.hypothesis} for p in batch]}
            data = self.client.post_json("/v1/nli", body)
            labels = data.get("labels")
            if not isinstance(labels, list) or len(labels) != len(batch):
                raise ScorerError("nli response length mismatch")
            for item in labels:
                if not isinstance(item, dict):
                    raise ScorerError(f"nli label is not an object: {item!r}")
                try:
                    out.append(NliLabelDistribution(
                        entailment=_check_probability(item.get("entailment"), "nli"),
                        neutral=_check_probability(item.get("neutral"), "nli"),
                        contradiction=_check_probability(item.get("contradiction"), "nli"),
                    ))
                except ValueError as exc:
                    raise ScorerError(f"nli label distribution invalid: {exc}") from exc
        return out


# ---------------------------------------------------------------------------
# Protocol conformance checks (run against the mock server or the sidecar)
# ---------------------------------------------------------------------------

def run_protocol_checks(base_url: str, timeout: float = 15.0) -> list[str]:
    """Exercise the scorer wire protocol; returns a list of violations.

    An empty list means the server at base_url conforms. Checks are
    model-agnostic: shapes, lengths, bounds, and error statuses only.
    """
    base = base_url.rstrip("/")
    violations: list[str] = []
    session = requests.Session()

    def post(path: str, body) -> requests.Response:
        return session.post(base + path, json=body, timeout=timeout)

    try:
        resp = session.get(base + "/healthz", timeout=timeout)
        if resp.status_code != 200:
            violations.append(f"healthz returned {resp.status_code}")
    except requests.RequestException as exc:
        return [f"healthz unreachable: {exc}"]

    # coherence
    pairs = [
        {"first": "The patient reports chest pain.", "second": "Chest pain started yesterday."},
        {"first": "Blood pressure is stable.", "second": "Completely unrelated words here."},
        {"first": "Follow up in two weeks.", "second": "Follow up in two weeks."},
    ]
    resp = post("/v1/coherence", {"pairs": pairs})
    if resp.status_code != 200:
        violations.append(f"coherence returned {resp.status_code}")
    else:
        probs = resp.json().get("probabilities")
        if not isinstance(probs, list) or len(probs) != len(pairs):
            violations.append("coherence: probabilities length mismatch")
        elif not all(isinstance(p, (int, float)) and 0.0 <= p <= 1.0 for p in probs):
            violations.append("coherence: probability out of [0,1]")
    if post("/v1/coherence", {"pairs": "bogus"}).status_code != 400:
        violations.append("coherence: malformed body not rejected with 400")
    oversized = {"pairs": [pairs[0]] * (MAX_BATCH + 1)}
    if post("/v1/coherence", oversized).status_code != 400:
        violations.append("coherence: oversized batch not rejected with 400")

    # perplexity
    texts = ["The patient was admitted with chest pain.", "Medication reviewed at discharge."]
    resp = post("/v1/perplexity", {"texts": texts})
    if resp.status_code != 200:
        violations.append(f"perplexity returned {resp.status_code}")
    else:
        scores = resp.json().get("perplexities")
        if not isinstance(scores, list) or len(scores) != len(texts):
            violations.append("perplexity: length mismatch")
        elif not all(isinstance(s, (int, float)) and s >= 1.0 for s in scores):
            violations.append("perplexity: score below 1")
    if post("/v1/perplexity", {"nope": []}).status_code != 400:
        violations.append("perplexity: malformed body not rejected with 400")
    if post("/v1/perplexity", {"texts": ["x"] * (MAX_BATCH + 1)}).status_code != 400:
        violations.append("perplexity: oversized batch not rejected with 400")

    # nli
    items = [
        {"premise": "The patient has a documented allergy to penicillin.",
         "hypothesis": "The medication list includes amoxicillin."},
        {"premise": "Blood pressure measured at 118 over 76.",
         "hypothesis": "Blood pressure is in the normal range."},
    ]
    resp = post("/v1/nli", {"items": items})
    if resp.status_code != 200:
        violations.append(f"nli returned {resp.status_code}")
    else:
        labels = resp.json().get("labels")
        if not isinstance(labels, list) or len(labels) != len(items):
            violations.append("nli: labels length mismatch")
        else:
            for i, label in enumerate(labels):
                if not isinstance(label, dict):
                    violations.append(f"nli: label {i} not an object")
                    continue
                values = [label.get(k) for k in ("entailment", "neutral", "contradiction")]
                if not all(isinstance(v, (int, float)) and 0.0 <= v <= 1.0 for v in values):
                    violations.append(f"nli: label {i} probabilities out of [0,1]")
                elif abs(sum(values) - 1.0) > 1e-6:
                    violations.append(f"nli: label {i} probabilities sum to {sum(values)}")
    if post("/v1/nli", {"items": [{"premise": "x"}]}).status_code != 400:
        violations.append("nli: malformed item not rejected with 400")
    if post("/v1/nli", {"items": [items[0]] * (MAX_BATCH + 1)}).status_code != 400:
        violations.append("nli: oversized batch not rejected with 400")

    return violations
