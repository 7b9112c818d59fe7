"""In-process mock scorer server speaking the full wire protocol.

Backs the remote-scorer code paths in tests and offline runs: completions
come from the grammar backend, coherence from the lexical scorer, perplexity
from a small built-in language model, and NLI from text heuristics that
mirror the rule decisions. Run standalone with `python -m ehrsynth.mockserver`.
"""
from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .coherence import SentencePair, lexical_coherence_score
from .consistency import LABELS, bp_band, drug_class, mentioned_band
from .generation.backends import GrammarBackend
from .generation.corpus import build_reference_corpus
from .plausibility import NgramLm, perplexity, train_ngram_lm
from .textutil import token_set
from .wire import MAX_BATCH

_MOCK_EPSILON = 0.02

_ALLERGY_RE = re.compile(r"allerg\w*\s+to\s+([a-z][a-z\- ]*)", re.IGNORECASE)
_MEDICATION_RE = re.compile(r"includes\s+([a-z][a-z\-]*)", re.IGNORECASE)
_BP_RE = re.compile(r"(\d+(?:\.\d+)?)\s+over\s+(\d+(?:\.\d+)?)")

_lm_lock = threading.Lock()
_lm: NgramLm | None = None


def _mock_lm() -> NgramLm:
    global _lm
    with _lm_lock:
        if _lm is None:
            _lm = train_ngram_lm(build_reference_corpus(1500, seed=99), order=3, k=1.0)
    return _lm


def heuristic_nli(premise: str, hypothesis: str) -> dict[str, float]:
    """Text-level stand-in for an NLI model, shaped like the rule decisions."""
    label = "neutral"
    allergy = _ALLERGY_RE.search(premise)
    medication = _MEDICATION_RE.search(hypothesis)
    bp = _BP_RE.search(premise)
    if allergy and medication:
        a_cls = drug_class(allergy.group(1).strip().rstrip("."))
        m_cls = drug_class(medication.group(1).strip().rstrip("."))
        label = "contradiction" if (a_cls is not None and a_cls == m_cls) else "entailment"
    elif bp:
        expected = bp_band(float(bp.group(1)), float(bp.group(2)))
        mentioned = mentioned_band(hypothesis)
        if mentioned is None:
            label = "neutral"
        else:
            label = "entailment" if mentioned == expected else "contradiction"
    else:
        overlap = token_set(premise) & token_set(hypothesis)
        label = "entailment" if len(overlap) >= 3 else "neutral"
    probs = {name: _MOCK_EPSILON for name in LABELS}
    probs[label] = 1.0 - 2.0 * _MOCK_EPSILON
    return probs


class _BadRequest(ValueError):
    pass


def _require_list(body: dict, key: str) -> list:
    items = body.get(key)
    if not isinstance(items, list):
        raise _BadRequest(f"body must carry a {key!r} array")
    if len(items) > MAX_BATCH:
        raise _BadRequest(f"batch too large: {len(items)} > {MAX_BATCH}")
    return items


def _handle(path: str, body: dict, backend: GrammarBackend) -> dict:
    if path == "/v1/complete":
        prompt = body.get("prompt")
        if not isinstance(prompt, str):
            raise _BadRequest("prompt must be a string")
        seed = body.get("seed", 0)
        if not isinstance(seed, int):
            raise _BadRequest("seed must be an integer")
        max_tokens = body.get("max_tokens", 2048)
        if not isinstance(max_tokens, int) or max_tokens < 1:
            raise _BadRequest("max_tokens must be a positive integer")
        return {"text": backend.complete(prompt, seed, max_len=max(max_tokens * 8, 512))}
    if path == "/v1/coherence":
        pairs = _require_list(body, "pairs")
        probs = []
        for item in pairs:
            if not isinstance(item, dict) or not isinstance(item.get("first"), str) \
                    or not isinstance(item.get("second"), str):
                raise _BadRequest("each pair needs string fields first and second")
            probs.append(lexical_coherence_score(
                SentencePair(item["first"], item["second"], ("", ""))))
        return {"probabilities": probs}
    if path == "/v1/perplexity":
        texts = _require_list(body, "texts")
        if not all(isinstance(t, str) for t in texts):
            raise _BadRequest("texts must be strings")
        lm = _mock_lm()
        return {"perplexities": [perplexity(lm, t) for t in texts]}
    if path == "/v1/nli":
        items = _require_list(body, "items")
        labels = []
        for item in items:
            if not isinstance(item, dict) or not isinstance(item.get("premise"), str) \
                    or not isinstance(item.get("hypothesis"), str):
                raise _BadRequest("each item needs string fields premise and hypothesis")
            labels.append(heuristic_nli(item["premise"], item["hypothesis"]))
        return {"labels": labels}
    raise KeyError(path)


class MockScorerHandler(BaseHTTPRequestHandler):
    def _send(self, status: int, payload: dict) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self) -> None:  # noqa: N802 (stdlib casing)
        if self.path == "/healthz":
            self._send(200, {"status": "ok"})
        else:
            self._send(404, {"error": f"unknown path {self.path}"})

    def do_POST(self) -> None:  # noqa: N802
        length = int(self.headers.get("Content-Length") or 0)
        try:
            body = json.loads(self.rfile.read(length).decode("utf-8"))
            if not isinstance(body, dict):
                raise _BadRequest("body must be a JSON object")
        except (ValueError, UnicodeDecodeError):
            self._send(400, {"error": "body is not valid JSON"})
            return
        try:
            payload = _handle(self.path, body, self.server.backend)  # type: ignore[attr-defined]
        except _BadRequest as exc:
            self._send(400, {"error": str(exc)})
        except KeyError:
            self._send(404, {"error": f"unknown path {self.path}"})
        except Exception as exc:  # pragma: no cover - defensive 500
            self._send(500, {"error": f"inference failure: {exc}"})
        else:
            self._send(200, payload)

    def log_message(self, *args) -> None:  # keep test output quiet
        pass


class MockScorerServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), MockScorerHandler)
        self.backend = GrammarBackend()

    @property
    def base_url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


def start_mock_server(host: str = "127.0.0.1", port: int = 0) -> MockScorerServer:
    server = MockScorerServer(host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Run the mock scorer server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8099)
    args = parser.parse_args(argv)
    server = MockScorerServer(args.host, args.port)
    print(f"mock scorer listening on {server.base_url}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
