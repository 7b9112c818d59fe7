"""Model roles behind the scorer endpoints.

Each role has a pretrained implementation (transformers) and a deterministic
heuristic stand-in for environments without model weights. Inference is
serialized per model instance; the app may handle requests concurrently.
"""
from __future__ import annotations

import math
import re
import threading
from typing import Protocol, Sequence

DEFAULT_NSP_MODEL = "bert-base-uncased"
DEFAULT_LM_MODEL = "gpt2"
DEFAULT_NLI_MODEL = "roberta-large-mnli"


class ModelUnavailable(RuntimeError):
    """Weights are missing and cannot be downloaded."""


class NextSentenceModel(Protocol):
    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        ...


class PerplexityModel(Protocol):
    def score_texts(self, texts: Sequence[str]) -> list[float]:
        ...


class NliModel(Protocol):
    def classify(self, items: Sequence[tuple[str, str]]) -> list[dict[str, float]]:
        ...


# ---------------------------------------------------------------------------
# Pretrained implementations (lazy transformers/torch imports)
# ---------------------------------------------------------------------------

def _load_transformers():
    try:
        import torch  # noqa: F401
        from transformers import (AutoModelForSequenceClassification,
                                  AutoTokenizer, BertForNextSentencePrediction,
                                  GPT2LMHeadModel)
    except ImportError as exc:
        raise ModelUnavailable(
            "pretrained mode needs the 'models' extra (transformers + torch)"
        ) from exc
    return (torch, AutoTokenizer, BertForNextSentencePrediction, GPT2LMHeadModel,
            AutoModelForSequenceClassification)


class PretrainedNextSentence:
    def __init__(self, model_name: str = DEFAULT_NSP_MODEL):
        torch, AutoTokenizer, BertNSP, _, _ = _load_transformers()
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.model = BertNSP.from_pretrained(model_name)
        except OSError as exc:
            raise ModelUnavailable(f"cannot load {model_name}: {exc}") from exc
        self.model.eval()
        self._torch = torch
        self._lock = threading.Lock()

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        torch = self._torch
        out: list[float] = []
        with self._lock, torch.no_grad():
            for first, second in pairs:
                encoded = self.tokenizer(first, second, return_tensors="pt",
                                         truncation=True, max_length=512)
                logits = self.model(**encoded).logits
                # label 0 is "IsNext" for the BERT NSP head
                out.append(float(torch.softmax(logits, dim=1)[0, 0]))
        return out


class PretrainedPerplexity:
    def __init__(self, model_name: str = DEFAULT_LM_MODEL):
        torch, AutoTokenizer, _, GPT2LMHeadModel, _ = _load_transformers()
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.model = GPT2LMHeadModel.from_pretrained(model_name)
        except OSError as exc:
            raise ModelUnavailable(f"cannot load {model_name}: {exc}") from exc
        self.model.eval()
        self._torch = torch
        self._lock = threading.Lock()

    def score_texts(self, texts: Sequence[str]) -> list[float]:
        torch = self._torch
        out: list[float] = []
        with self._lock, torch.no_grad():
            for text in texts:
                if not text.strip():
                    out.append(1.0)
                    continue
                encoded = self.tokenizer(text, return_tensors="pt",
                                         truncation=True, max_length=1024)
                loss = self.model(**encoded, labels=encoded["input_ids"]).loss
                out.append(max(float(torch.exp(loss)), 1.0))
        return out


class PretrainedNli:
    def __init__(self, model_name: str = DEFAULT_NLI_MODEL):
        torch, AutoTokenizer, _, _, AutoModel = _load_transformers()
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.model = AutoModel.from_pretrained(model_name)
        except OSError as exc:
            raise ModelUnavailable(f"cannot load {model_name}: {exc}") from exc
        self.model.eval()
        self._torch = torch
        self._lock = threading.Lock()
        self._labels = {i: str(name).lower()
                        for i, name in self.model.config.id2label.items()}

    def classify(self, items: Sequence[tuple[str, str]]) -> list[dict[str, float]]:
        torch = self._torch
        out: list[dict[str, float]] = []
        with self._lock, torch.no_grad():
            for premise, hypothesis in items:
                encoded = self.tokenizer(premise, hypothesis, return_tensors="pt",
                                         truncation=True, max_length=512)
                probs = torch.softmax(self.model(**encoded).logits, dim=1)[0]
                dist = {"entailment": 0.0, "neutral": 0.0, "contradiction": 0.0}
                for index, label in self._labels.items():
                    if label in dist:
                        dist[label] = float(probs[index])
                total = sum(dist.values()) or 1.0
                out.append({k: v / total for k, v in dist.items()})
        return out


# ---------------------------------------------------------------------------
# Heuristic stand-ins (no weights required, fully deterministic)
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class HeuristicNextSentence:
    """Continuation prior plus lexical overlap between the two sentences."""

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        out = []
        for first, second in pairs:
            a, b = set(_tokens(first)), set(_tokens(second))
            if not a or not b:
                out.append(0.5)
                continue
            overlap = len(a & b) / math.sqrt(len(a) * len(b))
            out.append(min(1.0, 0.3 + 0.7 * overlap))
        return out


_SEED_SENTENCES = (
    "the patient was admitted with chest pain and shortness of breath",
    "the patient reports worsening headache over two days",
    "blood pressure was elevated on arrival and rechecked",
    "the primary diagnosis is community acquired pneumonia",
    "treatment started with antibiotics and supportive care",
    "the patient has a history of hypertension and diabetes",
    "medication list includes lisinopril and metformin daily",
    "laboratory panel shows potassium and sodium within range",
    "follow up visit arranged in two weeks with primary care",
    "the patient was discharged home in stable condition",
    "no known drug allergies were recorded at intake",
    "vital signs remained stable throughout the hospital stay",
    "the plan is to continue current medication and monitor",
    "family history includes stroke and coronary artery disease",
    "the wound is healing well with no signs of infection",
    "patient tolerated the procedure without complication",
)


class HeuristicPerplexity:
    """Add-one word-bigram model over a small embedded clinical corpus."""

    def __init__(self) -> None:
        self.vocab: set[str] = {"<unk>"}
        self.bigrams: dict[tuple[str, str], int] = {}
        self.context: dict[str, int] = {}
        for sentence in _SEED_SENTENCES:
            tokens = ["<s>"] + _tokens(sentence)
            self.vocab.update(tokens[1:])
            for prev, token in zip(tokens, tokens[1:]):
                self.bigrams[(prev, token)] = self.bigrams.get((prev, token), 0) + 1
                self.context[prev] = self.context.get(prev, 0) + 1

    def score_texts(self, texts: Sequence[str]) -> list[float]:
        v = len(self.vocab)
        out = []
        for text in texts:
            tokens = [t if t in self.vocab else "<unk>" for t in _tokens(text)]
            if not tokens:
                out.append(1.0)
                continue
            log_total = 0.0
            prev = "<s>"
            for token in tokens:
                count = self.bigrams.get((prev, token), 0) + 1
                total = self.context.get(prev, 0) + v
                log_total += math.log(count / total)
                prev = token
            out.append(math.exp(-log_total / len(tokens)))
        return out


_DRUG_CLASSES = {
    "penicillins": ("penicillin", "amoxicillin", "ampicillin", "piperacillin",
                    "oxacillin", "nafcillin", "dicloxacillin"),
    "cephalosporins": ("cephalexin", "cefazolin", "ceftriaxone", "cefuroxime",
                       "cefepime", "cefdinir"),
    "macrolides": ("azithromycin", "erythromycin", "clarithromycin"),
    "nsaids": ("ibuprofen", "naproxen", "aspirin", "ketorolac", "celecoxib",
               "diclofenac", "meloxicam"),
    "sulfonamides": ("sulfamethoxazole", "sulfadiazine", "sulfasalazine"),
}
_CLASS_BY_DRUG = {d: c for c, drugs in _DRUG_CLASSES.items() for d in drugs}
_ALLERGY_RE = re.compile(r"allerg\w*\s+to\s+([a-z][a-z\-]*)", re.IGNORECASE)
_MEDICATION_RE = re.compile(
    r"(?:includes|prescribed|taking|receives|given)\s+([a-z][a-z\-]*)", re.IGNORECASE)


class HeuristicNli:
    """Drug-conflict and lexical-overlap stand-in for an NLI classifier."""

    epsilon = 0.02

    def classify(self, items: Sequence[tuple[str, str]]) -> list[dict[str, float]]:
        out = []
        for premise, hypothesis in items:
            label = self._label(premise, hypothesis)
            dist = {name: self.epsilon
                    for name in ("entailment", "neutral", "contradiction")}
            dist[label] = 1.0 - 2.0 * self.epsilon
            out.append(dist)
        return out

    def _label(self, premise: str, hypothesis: str) -> str:
        allergy = _ALLERGY_RE.search(premise)
        medication = _MEDICATION_RE.search(hypothesis)
        if allergy and medication:
            a_cls = _CLASS_BY_DRUG.get(allergy.group(1).lower())
            m_cls = _CLASS_BY_DRUG.get(medication.group(1).lower())
            if a_cls is not None and a_cls == m_cls:
                return "contradiction"
            return "entailment"
        a, b = set(_tokens(premise)), set(_tokens(hypothesis))
        return "entailment" if len(a & b) >= 3 else "neutral"


# ---------------------------------------------------------------------------
# Role bundle
# ---------------------------------------------------------------------------

class ScorerModels:
    def __init__(self, nsp: NextSentenceModel, lm: PerplexityModel, nli: NliModel,
                 mode: str):
        self.nsp = nsp
        self.lm = lm
        self.nli = nli
        self.mode = mode


def load_models(
    mode: str = "pretrained",
    nsp_model: str = DEFAULT_NSP_MODEL,
    lm_model: str = DEFAULT_LM_MODEL,
    nli_model: str = DEFAULT_NLI_MODEL,
) -> ScorerModels:
    """mode: pretrained (fail on missing weights), heuristic, or auto."""
    if mode not in ("pretrained", "heuristic", "auto"):
        raise ValueError(f"unknown model mode {mode!r}")
    if mode in ("pretrained", "auto"):
        try:
            return ScorerModels(
                PretrainedNextSentence(nsp_model),
                PretrainedPerplexity(lm_model),
                PretrainedNli(nli_model),
                mode="pretrained",
            )
        except ModelUnavailable:
            if mode == "pretrained":
                raise
    return ScorerModels(HeuristicNextSentence(), HeuristicPerplexity(),
                        HeuristicNli(), mode="heuristic")
