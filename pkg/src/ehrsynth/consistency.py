"""Rule-driven consistency checks over premise/hypothesis pairs.

Four built-in rules turn structured fields into premise/hypothesis pairs and
classify each pair as entailment, neutral, or contradiction. The built-in
classifier is deterministic; a remote NLI scorer can replace it through the
wire protocol.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Protocol, Sequence

from .textutil import token_set

# ---------------------------------------------------------------------------
# Reference data
# ---------------------------------------------------------------------------

# Documented fixture (~40 drugs in five disjoint classes), not clinical truth.
DRUG_CLASSES: dict[str, tuple[str, ...]] = {
    "penicillins": (
        "penicillin", "amoxicillin", "ampicillin", "piperacillin", "oxacillin",
        "nafcillin", "dicloxacillin", "amoxicillin-clavulanate", "mezlocillin",
    ),
    "cephalosporins": (
        "cephalexin", "cefazolin", "ceftriaxone", "cefuroxime", "cefepime",
        "cefdinir", "cefpodoxime", "cefotaxime", "ceftazidime", "ceftaroline",
    ),
    "macrolides": (
        "azithromycin", "erythromycin", "clarithromycin", "fidaxomicin",
        "dirithromycin",
    ),
    "nsaids": (
        "ibuprofen", "naproxen", "aspirin", "ketorolac", "indomethacin",
        "celecoxib", "diclofenac", "meloxicam", "etodolac", "piroxicam",
    ),
    "sulfonamides": (
        "sulfamethoxazole", "sulfadiazine", "sulfasalazine", "sulfisoxazole",
        "sulfacetamide",
    ),
}

_CLASS_BY_DRUG = {
    drug: cls for cls, drugs in DRUG_CLASSES.items() for drug in drugs
}
# class names themselves resolve too ("penicillin allergy" recorded as class)
_CLASS_ALIASES = {
    "penicillins": "penicillins",
    "cephalosporins": "cephalosporins",
    "macrolides": "macrolides",
    "nsaids": "nsaids",
    "sulfonamides": "sulfonamides",
    "sulfa drugs": "sulfonamides",
}


def drug_class(name: str) -> str | None:
    """Resolve a drug or class name to its class; None for unknown substances."""
    key = name.strip().lower()
    if key in _CLASS_BY_DRUG:
        return _CLASS_BY_DRUG[key]
    return _CLASS_ALIASES.get(key)


# Blood-pressure severity bands, most severe first. Config-overridable.
BP_BANDS: tuple[tuple[str, float, float], ...] = (
    ("hypertensive crisis", 180.0, 120.0),
    ("elevated", 130.0, 85.0),
)
BP_NORMAL = "normal"


def bp_band(systolic: float, diastolic: float,
            bands: Sequence[tuple[str, float, float]] = BP_BANDS) -> str:
    for name, sys_cut, dia_cut in bands:
        if systolic >= sys_cut or diastolic >= dia_cut:
            return name
    return BP_NORMAL


def mentioned_band(text: str,
                   bands: Sequence[tuple[str, float, float]] = BP_BANDS) -> str | None:
    lowered = text.lower()
    for name, _, _ in bands:
        if name in lowered:
            return name
    if BP_NORMAL in lowered:
        return BP_NORMAL
    return None


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

LABELS = ("entailment", "neutral", "contradiction")


@dataclass(frozen=True)
class PremiseHypothesis:
    premise: str
    hypothesis: str
    rule_id: str
    payload: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class NliLabelDistribution:
    entailment: float
    neutral: float
    contradiction: float

    def __post_init__(self) -> None:
        probs = (self.entailment, self.neutral, self.contradiction)
        if any(p < 0 or p > 1 for p in probs):
            raise ValueError(f"probabilities out of [0,1]: {probs}")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {sum(probs)!r}")

    @property
    def argmax(self) -> str:
        probs = (self.entailment, self.neutral, self.contradiction)
        return LABELS[max(range(3), key=probs.__getitem__)]


class UnknownRule(KeyError):
    """Pair produced by a rule this classifier does not know."""


class NliClassifier(Protocol):
    def classify_pairs(self, pairs: Sequence[PremiseHypothesis]) -> list[NliLabelDistribution]:
        ...


@dataclass(frozen=True)
class ConsistencyResult:
    record_id: object
    labels: tuple[NliLabelDistribution, ...]
    rule_ids: tuple[str, ...]
    consistency_score: float
    flagged: bool

    @property
    def max_contradiction(self) -> float:
        return max((d.contradiction for d in self.labels), default=0.0)


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConsistencyRule:
    rule_id: str
    premise_fields: tuple[str, ...]
    build: Callable[[object], list[PremiseHypothesis]]
    decide: Callable[[Mapping[str, object]], str]


def _build_allergy_medication(view) -> list[PremiseHypothesis]:
    pairs = []
    for allergen in view.allergens:
        for med in view.medication_names:
            pairs.append(PremiseHypothesis(
                premise=f"The patient has a documented allergy to {allergen}.",
                hypothesis=f"The medication list includes {med}.",
                rule_id="allergy_medication",
                payload={"allergen": allergen, "medication": med},
            ))
    return pairs


def _decide_allergy_medication(payload: Mapping[str, object]) -> str:
    allergy_cls = drug_class(str(payload["allergen"]))
    med_cls = drug_class(str(payload["medication"]))
    if allergy_cls is not None and allergy_cls == med_cls:
        return "contradiction"
    return "entailment"


def _build_vitals_severity(view) -> list[PremiseHypothesis]:
    pairs = []
    for row in view.vitals_rows:
        systolic = row.get("systolic_bp_mmhg")
        diastolic = row.get("diastolic_bp_mmhg")
        assessment = row.get("assessment")
        if systolic is None or diastolic is None or not assessment:
            continue
        pairs.append(PremiseHypothesis(
            premise=f"Blood pressure measured at {systolic} over {diastolic}.",
            hypothesis=str(assessment),
            rule_id="vitals_severity",
            payload={"systolic": systolic, "diastolic": diastolic,
                     "assessment": assessment},
        ))
    return pairs


def _decide_vitals_severity(payload: Mapping[str, object]) -> str:
    expected = bp_band(float(payload["systolic"]), float(payload["diastolic"]))
    mentioned = mentioned_band(str(payload["assessment"]))
    if mentioned is None:
        return "neutral"
    return "entailment" if mentioned == expected else "contradiction"


def _build_diagnosis_treatment(view) -> list[PremiseHypothesis]:
    pairs = []
    for diag, treatment in view.diagnosis_treatments:
        pairs.append(PremiseHypothesis(
            premise=f"The patient was diagnosed with {diag}.",
            hypothesis=f"The treatment plan is: {treatment}",
            rule_id="diagnosis_treatment",
            payload={"diagnosis": diag, "treatment": treatment},
        ))
    return pairs


def _decide_diagnosis_treatment(payload: Mapping[str, object]) -> str:
    from .generation.content import CONDITIONS

    diag = str(payload["diagnosis"]).lower()
    text = str(payload["treatment"]).lower()
    known = CONDITIONS.get(diag)
    if known is not None:
        meds = known[2]
        if any(m in text for m in meds):
            return "entailment"
    if token_set(diag) & token_set(text):
        return "entailment"
    return "neutral"


def _build_discharge_admission(view) -> list[PremiseHypothesis]:
    pairs = []
    for summary in view.discharge_summaries:
        if not view.admission_note:
            continue
        pairs.append(PremiseHypothesis(
            premise=f"The admission note reads: {view.admission_note}",
            hypothesis=str(summary),
            rule_id="discharge_admission",
            payload={"admission_note": view.admission_note,
                     "diagnosis": view.primary_diagnosis or "",
                     "summary": summary},
        ))
    return pairs


def _decide_discharge_admission(payload: Mapping[str, object]) -> str:
    summary_tokens = token_set(str(payload["summary"]))
    diag_tokens = token_set(str(payload["diagnosis"]))
    if diag_tokens and diag_tokens <= summary_tokens:
        return "entailment"
    overlap = token_set(str(payload["admission_note"])) & summary_tokens
    if len(overlap) >= 3:
        return "entailment"
    return "neutral"


def builtin_rules() -> tuple[ConsistencyRule, ...]:
    return (
        ConsistencyRule("allergy_medication", ("allergens", "medication_names"),
                        _build_allergy_medication, _decide_allergy_medication),
        ConsistencyRule("vitals_severity", ("vitals_rows",),
                        _build_vitals_severity, _decide_vitals_severity),
        ConsistencyRule("diagnosis_treatment", ("diagnosis_treatments",),
                        _build_diagnosis_treatment, _decide_diagnosis_treatment),
        ConsistencyRule("discharge_admission", ("discharge_summaries", "admission_note"),
                        _build_discharge_admission, _decide_discharge_admission),
    )


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def build_premise_hypothesis_pairs(
    view, rules: Sequence[ConsistencyRule]
) -> list[PremiseHypothesis]:
    """One pair per applicable rule instance; rules with missing fields skip."""
    if not rules:
        raise ValueError("rules must be nonempty")
    pairs: list[PremiseHypothesis] = []
    for rule in rules:
        pairs.extend(rule.build(view))
    return pairs


DEFAULT_EPSILON = 0.005


def rule_based_nli(
    pair: PremiseHypothesis,
    rules: Sequence[ConsistencyRule],
    epsilon: float = DEFAULT_EPSILON,
) -> NliLabelDistribution:
    """Deterministic label distribution: the decided label gets 1 - 2*epsilon."""
    by_id = {r.rule_id: r for r in rules}
    rule = by_id.get(pair.rule_id)
    if rule is None:
        raise UnknownRule(pair.rule_id)
    label = rule.decide(pair.payload)
    probs = {name: epsilon for name in LABELS}
    probs[label] = 1.0 - 2.0 * epsilon
    return NliLabelDistribution(**probs)


@dataclass
class RuleNliClassifier:
    """Built-in classifier applying the deterministic rule decisions."""

    rules: Sequence[ConsistencyRule] = field(default_factory=builtin_rules)
    epsilon: float = DEFAULT_EPSILON

    def classify_pairs(self, pairs: Sequence[PremiseHypothesis]) -> list[NliLabelDistribution]:
        return [rule_based_nli(p, self.rules, self.epsilon) for p in pairs]


def assess_consistency(
    view,
    classifier: NliClassifier,
    rules: Sequence[ConsistencyRule] | None = None,
) -> ConsistencyResult:
    """Flag iff any pair's argmax label is contradiction.

    The consistency score is the mean entailment probability; records with no
    applicable pairs score 1.0 and are never flagged.
    """
    rules = builtin_rules() if rules is None else tuple(rules)
    pairs = build_premise_hypothesis_pairs(view, rules)
    if not pairs:
        return ConsistencyResult(view.record_id, (), (), 1.0, False)
    labels = tuple(classifier.classify_pairs(pairs))
    if len(labels) != len(pairs):
        raise ValueError("classifier returned wrong number of labels")
    score = sum(d.entailment for d in labels) / len(labels)
    flagged = any(d.argmax == "contradiction" for d in labels)
    return ConsistencyResult(
        record_id=view.record_id,
        labels=labels,
        rule_ids=tuple(p.rule_id for p in pairs),
        consistency_score=score,
        flagged=flagged,
    )
