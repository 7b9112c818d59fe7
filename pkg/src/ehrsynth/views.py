"""Per-record (per-patient) views over bundles for the validation stages.

A record is one patient bundle. The view renders the textual fields the
coherence/plausibility/consistency checks consume and exposes the structured
slices (allergies, medications, vitals) the rules need.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence


@dataclass
class RecordView:
    record_id: object
    vitals_rows: list[dict] = field(default_factory=list)
    lab_rows: list[dict] = field(default_factory=list)
    allergens: list[str] = field(default_factory=list)
    medication_names: list[str] = field(default_factory=list)
    medication_lines: list[str] = field(default_factory=list)
    diagnosis_treatments: list[tuple[str, str]] = field(default_factory=list)
    discharge_summaries: list[str] = field(default_factory=list)
    admission_note: str = ""
    primary_diagnosis: Optional[str] = None
    vitals_summary: str = ""
    chronic_conditions: str = ""
    past_surgeries: str = ""
    family_history: str = ""
    diagnosis_text: str = ""
    treatment_text: str = ""
    demographics: dict = field(default_factory=dict)

    def text_fields(self) -> dict[str, str]:
        return {
            "vitals_summary": self.vitals_summary,
            "chronic_conditions": self.chronic_conditions,
            "past_surgeries": self.past_surgeries,
            "family_history": self.family_history,
            "diagnosis": self.diagnosis_text,
            "treatment": self.treatment_text,
            "admission_note": self.admission_note,
            "medications_text": self.medications_text,
        }

    @property
    def medications_text(self) -> str:
        if not self.medication_lines:
            return ""
        return "Prescribed medications include " + ", ".join(self.medication_lines) + "."


def _fmt(value: object) -> str:
    if isinstance(value, float) and value == int(value):
        return str(int(value))
    return str(value)


def render_vitals_summary(row: Mapping[str, object]) -> str:
    parts = []
    if row.get("systolic_bp_mmhg") is not None and row.get("diastolic_bp_mmhg") is not None:
        parts.append(
            f"blood pressure {_fmt(row['systolic_bp_mmhg'])} over "
            f"{_fmt(row['diastolic_bp_mmhg'])}"
        )
    if row.get("heart_rate_bpm") is not None:
        parts.append(f"heart rate {_fmt(row['heart_rate_bpm'])}")
    if row.get("weight_kg") is not None and row.get("height_cm") is not None:
        parts.append(
            f"body weight {_fmt(row['weight_kg'])} kilograms at height "
            f"{_fmt(row['height_cm'])} centimeters"
        )
    if not parts:
        return ""
    return "The patient has " + ", ".join(parts) + "."


def build_record_view(bundle, reference: Mapping[str, Sequence[dict]] | None = None) -> RecordView:
    """Assemble the validation view for one patient bundle."""
    rows = bundle.rows
    view = RecordView(record_id=bundle.patient_id)

    details = rows.get("patient_details", [])
    if details:
        view.demographics = dict(details[0])

    view.vitals_rows = list(rows.get("vital_signs", []))
    view.lab_rows = list(rows.get("test_results", []))
    if view.vitals_rows:
        view.vitals_summary = render_vitals_summary(view.vitals_rows[0])

    histories = rows.get("medical_histories", [])
    if histories:
        view.chronic_conditions = str(histories[0].get("chronic_conditions") or "")
        view.past_surgeries = str(histories[0].get("past_surgeries") or "")
        view.family_history = str(histories[0].get("family_history") or "")

    diagnoses = rows.get("diagnoses", [])
    if diagnoses:
        first = diagnoses[0]
        view.primary_diagnosis = str(first.get("diagnosis_name") or "") or None
        name = first.get("diagnosis_name")
        description = str(first.get("description") or "").strip()
        if name:
            view.diagnosis_text = f"The primary diagnosis is {name}. {description}".strip()

    plans = rows.get("treatment_plans", [])
    if plans:
        view.treatment_text = str(plans[0].get("description") or "")
    diag_by_id = {d.get("diagnosis_id"): d for d in diagnoses}
    for plan in plans:
        diagnosis = diag_by_id.get(plan.get("diagnosis_id"))
        if diagnosis and diagnosis.get("diagnosis_name") and plan.get("description"):
            view.diagnosis_treatments.append(
                (str(diagnosis["diagnosis_name"]), str(plan["description"]))
            )

    admissions = rows.get("admissions", [])
    if admissions:
        view.admission_note = str(admissions[0].get("admission_reason") or "")

    view.allergens = [str(r.get("allergen") or "") for r in rows.get("allergies", [])
                      if r.get("allergen")]
    for med in rows.get("medications", []):
        name = str(med.get("medication_name") or "")
        if not name:
            continue
        view.medication_names.append(name)
        dosage = str(med.get("dosage") or "").strip()
        view.medication_lines.append(f"{name} {dosage}".strip())

    view.discharge_summaries = [str(r.get("summary_text") or "")
                                for r in rows.get("discharge_summaries", [])
                                if r.get("summary_text")]
    return view


# ---------------------------------------------------------------------------
# Anomaly feature extraction: one feature row per record
# ---------------------------------------------------------------------------

DEFAULT_NUMERIC_FEATURES = (
    "patient_details.age_years",
    "vital_signs.heart_rate_bpm",
    "vital_signs.systolic_bp_mmhg",
    "vital_signs.diastolic_bp_mmhg",
    "vital_signs.temperature_c",
    "vital_signs.respiratory_rate_bpm",
    "vital_signs.oxygen_saturation_pct",
    "vital_signs.height_cm",
    "vital_signs.weight_kg",
    "test_results.potassium_mmol_l",
    "test_results.sodium_mmol_l",
    "test_results.glucose_mg_dl",
    "test_results.hemoglobin_g_dl",
    "test_results.wbc_10e9_l",
    "test_results.creatinine_mg_dl",
)

DEFAULT_CATEGORICAL_FEATURES = (
    "patient_details.gender",
    "patient_details.blood_group",
)


def feature_row(bundle, numeric: Sequence[str] = DEFAULT_NUMERIC_FEATURES,
                categorical: Sequence[str] = DEFAULT_CATEGORICAL_FEATURES) -> dict:
    """Flatten a bundle into one feature record (first row per source table)."""
    out: dict[str, object] = {}
    for spec in tuple(numeric) + tuple(categorical):
        table, _, column = spec.partition(".")
        rows = bundle.rows.get(table, [])
        out[spec] = rows[0].get(column) if rows else None
    return out
