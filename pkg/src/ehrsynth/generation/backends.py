"""Completion backends: a deterministic grammar expander and a remote LLM client.

The grammar backend is a pure function of (prompt, seed): it re-reads the
table name, context block, and field list from the rendered prompt, then
expands weighted content grammars per field. It deliberately ignores the
prompt's allergy warnings and occasionally writes out-of-band values, so the
downstream validators have realistic errors to catch.
"""
from __future__ import annotations

import hashlib
import random
import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Callable, Optional, Protocol

from ..consistency import BP_BANDS, BP_NORMAL, bp_band
from ..schema import RANGES, PhysiologicRange
from . import content
from .templates import context_from_prompt, fields_from_prompt, table_from_prompt

ANCHOR_DATE = date(2024, 6, 1)
ANCHOR_TS = datetime(2024, 6, 1, 8, 0, 0)

SOFT_BREACH_RATE = 0.02
HARD_BREACH_RATE = 0.004
WRONG_BAND_RATE = 0.03
OFF_TOPIC_MED_RATE = 0.15
GENERIC_SUMMARY_RATE = 0.04


class GenerationFailed(RuntimeError):
    """A row could not be generated within the retry budget."""

    def __init__(self, message: str, table: Optional[str] = None):
        super().__init__(message)
        self.table = table


class GenerationBackend(Protocol):
    id: str

    def complete(self, prompt: str, seed: int, max_len: int = 2048) -> str:
        ...


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed from arbitrary parts (no process-salted hashing)."""
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _wchoice(rng: random.Random, options: list[tuple[object, float]]) -> object:
    total = sum(w for _, w in options)
    u = rng.random() * total
    acc = 0.0
    for value, w in options:
        acc += w
        if u < acc:
            return value
    return options[-1][0]


def _past_date(rng: random.Random, max_days: int = 1095, min_days: int = 0) -> str:
    return (ANCHOR_DATE - timedelta(days=rng.randint(min_days, max_days))).isoformat()


def _ts(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%d %H:%M:%S")


def _near_visit_ts(rng: random.Random, context: dict, max_hours: int = 48) -> str:
    base = context.get("visit_started_at")
    if base:
        try:
            start = datetime.fromisoformat(base)
            return _ts(start + timedelta(minutes=rng.randint(10, max_hours * 60)))
        except ValueError:
            pass
    return _ts(ANCHOR_TS - timedelta(hours=rng.randint(0, 24 * 365)))


def _ranged_value(rng: random.Random, rng_def: PhysiologicRange, digits: int = 0) -> str:
    """Sample mostly inside the soft range, with rare soft and hard breaches."""
    u = rng.random()
    lo_room = rng_def.soft_min > rng_def.hard_min
    hi_room = rng_def.soft_max < rng_def.hard_max
    span = rng_def.hard_max - rng_def.hard_min
    value: float
    if u < HARD_BREACH_RATE and (lo_room or hi_room):
        high = rng.random() < 0.5 if (lo_room and hi_room) else hi_room
        if high:
            value = rng_def.hard_max + rng.uniform(0.05, 0.6) * span
        else:
            value = max(0.0, rng_def.hard_min - rng.uniform(0.05, 0.6) * span)
    elif u < HARD_BREACH_RATE + SOFT_BREACH_RATE and (lo_room or hi_room):
        if hi_room and (not lo_room or rng.random() < 0.5):
            value = rng.uniform(rng_def.soft_max, rng_def.hard_max)
        else:
            value = rng.uniform(rng_def.hard_min, rng_def.soft_min)
    else:
        mid = (rng_def.soft_min + rng_def.soft_max) / 2.0
        sigma = (rng_def.soft_max - rng_def.soft_min) / 6.0
        value = min(max(rng.gauss(mid, sigma), rng_def.soft_min), rng_def.soft_max)
    if digits == 0:
        return str(int(round(value)))
    return f"{value:.{digits}f}"


def _phone(rng: random.Random) -> str:
    return f"({rng.randint(200, 989)}) {rng.randint(200, 999)}-{rng.randint(1000, 9999)}"


def _person(rng: random.Random) -> tuple[str, str]:
    return rng.choice(content.FIRST_NAMES), rng.choice(content.LAST_NAMES)


BAND_PHRASES = {
    BP_NORMAL: (
        "Blood pressure is in the normal range.",
        "Readings show blood pressure in the normal range today.",
    ),
    "elevated": (
        "Readings show elevated blood pressure.",
        "Blood pressure is elevated and should be rechecked.",
    ),
    "hypertensive crisis": (
        "Readings are consistent with hypertensive crisis.",
        "Blood pressure meets criteria for hypertensive crisis.",
    ),
}

_BAND_NAMES = (BP_NORMAL,) + tuple(name for name, _, _ in BP_BANDS)


def _gen_assessment(rng: random.Random, context: dict, sofar: dict) -> str:
    try:
        systolic = float(sofar.get("systolic_bp_mmhg", ""))
        diastolic = float(sofar.get("diastolic_bp_mmhg", ""))
        band = bp_band(systolic, diastolic)
    except ValueError:
        band = BP_NORMAL
    if rng.random() < WRONG_BAND_RATE:
        band = rng.choice([b for b in _BAND_NAMES if b != band])
    return rng.choice(BAND_PHRASES[band])


def _gen_medication_name(rng: random.Random, context: dict, sofar: dict) -> str:
    diagnosis = context.get("diagnosis_name", "").lower()
    known = content.CONDITIONS.get(diagnosis)
    if known and rng.random() > OFF_TOPIC_MED_RATE:
        return rng.choice(known[2])
    return rng.choice(content.ALL_MEDICATIONS)


def _gen_primary_treatment(rng: random.Random, context: dict, sofar: dict) -> str:
    diagnosis = context.get("diagnosis_name", "").lower()
    known = content.CONDITIONS.get(diagnosis)
    if known and rng.random() > 0.1:
        return rng.choice(known[2])
    return rng.choice(content.ALL_MEDICATIONS)


def _gen_plan_description(rng: random.Random, context: dict, sofar: dict) -> str:
    treatment = sofar.get("primary_treatment") or rng.choice(content.ALL_MEDICATIONS)
    diagnosis = context.get("diagnosis_name", "").lower()
    known = content.CONDITIONS.get(diagnosis)
    advice = known[3] if known else "follow the written instructions and return if symptoms worsen"
    dose = rng.choice(content.DOSAGES)
    return (
        f"The plan for {diagnosis or 'the presenting problem'} is to start "
        f"{treatment} {dose}. The patient should {advice}."
    )


def _gen_summary_text(rng: random.Random, context: dict, sofar: dict) -> str:
    if rng.random() < GENERIC_SUMMARY_RATE:
        return ("The hospital stay concluded without complication and routine "
                "follow up was arranged.")
    diagnosis = context.get("diagnosis_name", "the admitting condition")
    outcome = rng.choice(("improved steadily", "responded well to treatment",
                          "remained stable"))
    return (
        f"The patient was admitted and treated for {diagnosis}. The patient "
        f"{outcome} and was discharged with follow up arranged."
    )


def _gen_note_text(rng: random.Random, context: dict, sofar: dict) -> str:
    opener = rng.choice(content.NOTE_OPENERS)
    plan = rng.choice(content.NOTE_PLANS)
    diagnosis = context.get("diagnosis_name", "ongoing care")
    return f"{opener[0].upper()}{opener[1:]} for management of {diagnosis}; {plan}."


def _gen_chronic_conditions(rng: random.Random, context: dict, sofar: dict) -> str:
    primary = context.get("primary_condition", rng.choice(content.CONDITION_NAMES))
    secondary = context.get("secondary_condition", rng.choice(content.CONDITION_NAMES))
    verb = rng.choice(("has a history of", "has long standing", "is managed for"))
    return f"The patient {verb} {primary} and {secondary}."


def _gen_past_surgeries(rng: random.Random, context: dict, sofar: dict) -> str:
    if rng.random() < 0.2:
        return "The patient reports no prior surgeries."
    surgery = rng.choice(content.SURGERIES)
    years = rng.randint(1, 20)
    return f"The patient underwent {surgery} {years} years ago with good recovery."


def _gen_family_history(rng: random.Random, context: dict, sofar: dict) -> str:
    first = rng.choice(content.FAMILY_CONDITIONS)
    second = rng.choice([c for c in content.FAMILY_CONDITIONS if c != first])
    return f"Family history includes {first} in a parent and {second} in a sibling."


def _gen_admission_reason(rng: random.Random, context: dict, sofar: dict) -> str:
    complaint = context.get("primary_complaint", "an acute complaint")
    condition = context.get("primary_condition", "the presenting illness")
    return (f"The patient was admitted with {complaint} attributed to "
            f"{condition} and requiring inpatient care.")


def _gen_chief_complaint(rng: random.Random, context: dict, sofar: dict) -> str:
    complaint = context.get("primary_complaint", "general discomfort")
    return f"The patient reports {complaint}."


def _gen_lab_summary(rng: random.Random, context: dict, sofar: dict) -> str:
    k = sofar.get("potassium_mmol_l", "?")
    na = sofar.get("sodium_mmol_l", "?")
    return f"Laboratory panel reviewed with potassium {k} and sodium {na} noted."


def _gen_allergen(rng: random.Random, context: dict, sofar: dict) -> str:
    if rng.random() < 0.45:
        return rng.choice(content.DRUG_ALLERGENS)
    return rng.choice(content.ENVIRONMENTAL_ALLERGENS)


def _gen_address(rng: random.Random, context: dict, sofar: dict) -> str:
    region = context.get("region", "")
    cities = content.CITIES_BY_REGION.get(
        region, tuple(c for group in content.CITIES_BY_REGION.values() for c in group)
    )
    return f"{rng.randint(10, 9900)} {rng.choice(content.STREETS)}, {rng.choice(cities)}"


def _gen_department_name(rng: random.Random, context: dict, sofar: dict) -> str:
    return content.DEPARTMENT_NAMES.get(context.get("specialty", ""), "General Medicine")


def _gen_visit_started(rng: random.Random, context: dict, sofar: dict) -> str:
    return _ts(ANCHOR_TS - timedelta(hours=rng.randint(0, 24 * 365),
                                     minutes=rng.randint(0, 59)))


def _gen_visit_ended(rng: random.Random, context: dict, sofar: dict) -> str:
    try:
        start = datetime.fromisoformat(sofar.get("started_at", ""))
    except ValueError:
        start = ANCHOR_TS
    return _ts(start + timedelta(hours=rng.randint(1, 72)))


def _gen_admitted_at(rng: random.Random, context: dict, sofar: dict) -> str:
    return _near_visit_ts(rng, context, max_hours=6)


def _gen_discharged_at(rng: random.Random, context: dict, sofar: dict) -> str:
    try:
        start = datetime.fromisoformat(sofar.get("admitted_at", ""))
    except ValueError:
        start = ANCHOR_TS
    return _ts(start + timedelta(days=rng.randint(2, 10), hours=rng.randint(0, 12)))


def _gen_log_detail(rng: random.Random, context: dict, sofar: dict) -> str:
    return content.LOG_DETAILS.get(sofar.get("event", ""), "event recorded in the visit log")


def _gen_referral_reason(rng: random.Random, context: dict, sofar: dict) -> str:
    condition = context.get("primary_condition", "continuing symptoms")
    return f"Specialist evaluation requested for {condition}."


def _gen_appointment_reason(rng: random.Random, context: dict, sofar: dict) -> str:
    condition = context.get("primary_condition", "routine review")
    return f"Follow up visit for {condition}."


Generator = Callable[[random.Random, dict, dict], str]

# keyed by (table, field); None table = any table
FIELD_GENERATORS: dict[tuple[Optional[str], str], Generator] = {
    (None, "first_name"): lambda rng, c, s: _person(rng)[0],
    (None, "last_name"): lambda rng, c, s: _person(rng)[1],
    (None, "phone"): lambda rng, c, s: _phone(rng),
    (None, "phone_extension"): lambda rng, c, s: f"x{rng.randint(1000, 9999)}",
    (None, "address"): _gen_address,
    ("departments", "name"): _gen_department_name,
    ("departments", "floor"): lambda rng, c, s: str(rng.randint(1, 8)),
    ("staff", "role"): lambda rng, c, s: str(_wchoice(rng, [
        ("physician", 0.35), ("nurse", 0.35), ("technician", 0.1),
        ("administrator", 0.1), ("pharmacist", 0.1)])),
    ("staff", "hire_date"): lambda rng, c, s: _past_date(rng, 15 * 365, 30),
    ("staff", "license_number"): lambda rng, c, s: f"LIC-{rng.randint(100000, 999999)}",
    ("wards", "name"): lambda rng, c, s: f"{rng.choice(content.WARD_NAMES)} {rng.choice('ABC')}",
    ("wards", "capacity"): lambda rng, c, s: str(rng.randint(6, 30)),
    ("beds", "bed_number"): lambda rng, c, s: f"{rng.randint(1, 40):03d}{rng.choice('AB')}",
    ("emergency_contacts", "name"): lambda rng, c, s: " ".join(_person(rng)),
    ("hospital_visits", "visit_type"): lambda rng, c, s: str(_wchoice(rng, [
        ("outpatient", 0.5), ("follow_up", 0.2), ("emergency", 0.15), ("inpatient", 0.15)])),
    ("hospital_visits", "started_at"): _gen_visit_started,
    ("hospital_visits", "ended_at"): _gen_visit_ended,
    ("hospital_visits", "chief_complaint"): _gen_chief_complaint,
    ("vital_signs", "recorded_at"): lambda rng, c, s: _near_visit_ts(rng, c),
    ("vital_signs", "assessment"): _gen_assessment,
    ("test_results", "collected_at"): lambda rng, c, s: _near_visit_ts(rng, c),
    ("test_results", "summary"): _gen_lab_summary,
    ("immunizations", "dose_number"): lambda rng, c, s: str(rng.randint(1, 3)),
    ("immunizations", "administered_on"): lambda rng, c, s: _past_date(rng, 5 * 365),
    ("allergies", "allergen"): _gen_allergen,
    ("allergies", "noted_on"): lambda rng, c, s: _past_date(rng, 10 * 365),
    ("medical_histories", "chronic_conditions"): _gen_chronic_conditions,
    ("medical_histories", "past_surgeries"): _gen_past_surgeries,
    ("medical_histories", "family_history"): _gen_family_history,
    ("medical_histories", "recorded_on"): lambda rng, c, s: _past_date(rng, 365),
    ("appointments", "scheduled_for"): lambda rng, c, s: _ts(
        ANCHOR_TS + timedelta(days=rng.randint(1, 90), hours=rng.randint(0, 9))),
    ("appointments", "reason"): _gen_appointment_reason,
    ("diagnoses", "diagnosis_name"): lambda rng, c, s: c.get(
        "diagnosis_condition", rng.choice(content.CONDITION_NAMES)),
    ("diagnoses", "icd_code"): lambda rng, c, s: content.CONDITIONS.get(
        s.get("diagnosis_name", ""), (f"R{rng.randint(10, 99)}.9",))[0],
    ("diagnoses", "severity"): lambda rng, c, s: str(_wchoice(rng, [
        ("mild", 0.4), ("moderate", 0.4), ("severe", 0.15), ("critical", 0.05)])),
    ("diagnoses", "description"): lambda rng, c, s: (
        f"Evaluation confirms {s.get('diagnosis_name', 'the working diagnosis')} "
        f"presenting with "
        f"{content.CONDITIONS.get(s.get('diagnosis_name', ''), ('', 'nonspecific symptoms'))[1]}."),
    ("diagnoses", "diagnosed_on"): lambda rng, c, s: _past_date(rng, 365),
    ("admissions", "admitted_at"): _gen_admitted_at,
    ("admissions", "discharged_at"): _gen_discharged_at,
    ("admissions", "admission_reason"): _gen_admission_reason,
    ("treatment_plans", "primary_treatment"): _gen_primary_treatment,
    ("treatment_plans", "description"): _gen_plan_description,
    ("treatment_plans", "started_on"): lambda rng, c, s: _past_date(rng, 365),
    ("treatment_plans", "status"): lambda rng, c, s: str(_wchoice(rng, [
        ("active", 0.7), ("completed", 0.2), ("discontinued", 0.1)])),
    ("medications", "medication_name"): _gen_medication_name,
    ("medications", "dosage"): lambda rng, c, s: rng.choice(content.DOSAGES),
    ("medications", "started_on"): lambda rng, c, s: _past_date(rng, 365),
    ("clinical_notes", "note_text"): _gen_note_text,
    ("clinical_notes", "written_at"): lambda rng, c, s: _near_visit_ts(rng, c),
    ("visit_logs", "logged_at"): lambda rng, c, s: _near_visit_ts(rng, c),
    ("visit_logs", "detail"): _gen_log_detail,
    ("discharge_summaries", "summary_text"): _gen_summary_text,
    ("discharge_summaries", "discharge_condition"): lambda rng, c, s: str(_wchoice(rng, [
        ("improved", 0.6), ("stable", 0.3), ("unchanged", 0.07), ("deteriorated", 0.03)])),
    ("discharge_summaries", "discharged_on"): lambda rng, c, s: _past_date(rng, 365),
    ("referrals", "reason"): _gen_referral_reason,
    ("referrals", "referred_on"): lambda rng, c, s: _past_date(rng, 365),
    ("billing", "amount_usd"): lambda rng, c, s: f"{rng.uniform(75, 9500):.2f}",
    ("billing", "issued_on"): lambda rng, c, s: _past_date(rng, 365),
    ("billing", "insurance_provider"): lambda rng, c, s: (
        rng.choice(content.INSURANCE_PROVIDERS) if rng.random() < 0.85 else ""),
}

_RANGED_DIGITS = {
    "temperature_c": 1, "oxygen_saturation_pct": 1, "height_cm": 1, "weight_kg": 1,
    "potassium_mmol_l": 1, "sodium_mmol_l": 0, "glucose_mg_dl": 0,
    "hemoglobin_g_dl": 1, "wbc_10e9_l": 1, "creatinine_mg_dl": 2,
}


def _fallback(rng: random.Random, name: str, kind_label: str) -> str:
    if name in RANGES:
        return _ranged_value(rng, RANGES[name], _RANGED_DIGITS.get(name, 0))
    if kind_label.startswith("one of:"):
        values = [v.strip() for v in kind_label[len("one of:"):].split("|")]
        return rng.choice(values)
    if kind_label.startswith("date"):
        return _past_date(rng)
    if kind_label.startswith("timestamp"):
        return _ts(ANCHOR_TS - timedelta(hours=rng.randint(0, 24 * 365)))
    if kind_label.startswith("boolean"):
        return rng.choice(("true", "false"))
    if kind_label == "integer":
        return str(rng.randint(1, 100))
    if kind_label == "decimal":
        return f"{rng.uniform(1, 100):.1f}"
    return "Routine entry recorded for the synthetic chart."


@dataclass
class GrammarBackend:
    """Deterministic weighted-choice expansion seeded by (prompt, seed)."""

    id: str = "grammar"

    def complete(self, prompt: str, seed: int, max_len: int = 4096) -> str:
        rng = random.Random(f"{derive_seed(prompt)}:{seed}")
        table = table_from_prompt(prompt)
        context = context_from_prompt(prompt)
        lines = []
        sofar: dict[str, str] = {}
        for name, kind_label in fields_from_prompt(prompt):
            gen = FIELD_GENERATORS.get((table, name)) or FIELD_GENERATORS.get((None, name))
            value = gen(rng, context, sofar) if gen else _fallback(rng, name, kind_label)
            sofar[name] = value
            lines.append(f"{name}: {value}")
        block = "\n".join(lines)
        text = f"Here is the requested record.\n```record\n{block}\n```\n"
        return text[:max_len] if len(text) > max_len else text


@dataclass
class RemoteLlmBackend:
    """Wire client for POST /v1/complete with a bound on in-flight requests."""

    client: "object"  # ehrsynth.wire.JsonHttpClient
    temperature: float = 0.7
    max_in_flight: int = 4
    id: str = "remote"
    _gate: threading.BoundedSemaphore = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._gate = threading.BoundedSemaphore(self.max_in_flight)

    def complete(self, prompt: str, seed: int, max_len: int = 2048) -> str:
        body = {
            "prompt": prompt,
            "max_tokens": max_len,
            "temperature": self.temperature,
            "seed": seed,
        }
        with self._gate:
            data = self.client.post_json("/v1/complete", body)
        text = data.get("text")
        if not isinstance(text, str):
            raise GenerationFailed("completion endpoint returned no text")
        return text
