"""Per-table prompt templates and deterministic prompt rendering.

Each of the 22 tables gets a customized prompt. A rendered prompt carries
three parts: the table guidance (with placeholders substituted), a structured
context block, and output-format instructions listing the fields the backend
must return inside a fenced ``record`` block.
"""
from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..schema import SchemaDef, TableDef
from .demographics import DiversityParams


class MissingPlaceholder(KeyError):
    """A template placeholder could not be resolved from the context."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:  # default KeyError repr-quotes the message
        return self.name


@dataclass(frozen=True)
class PromptTemplate:
    table: str
    template: str
    output_spec: tuple[str, ...]
    context_fields: tuple[str, ...] = ()
    diversity_params: Optional[DiversityParams] = None

    def placeholders(self) -> set[str]:
        return {
            name
            for _, name, _, _ in string.Formatter().parse(self.template)
            if name
        }


FENCE_TAG = "record"


def _kind_label(table: TableDef, column_name: str) -> str:
    col = table.column(column_name)
    if col.kind == "enum":
        return "one of: " + " | ".join(col.enum_values)
    if col.kind == "date":
        return "date, YYYY-MM-DD"
    if col.kind == "timestamp":
        return "timestamp, YYYY-MM-DD HH:MM:SS"
    if col.kind == "boolean":
        return "boolean, true or false"
    return col.kind


def format_instructions(table: TableDef, output_spec: tuple[str, ...]) -> str:
    lines = [
        f"Return exactly one fenced block that starts with ```{FENCE_TAG} and ends with ```.",
        "Inside the block, write one `name: value` line for each of these fields, in order:",
    ]
    for name in output_spec:
        lines.append(f"- {name} ({_kind_label(table, name)})")
    return "\n".join(lines)


def render_prompt(
    template: PromptTemplate,
    context: Mapping[str, object],
    table: Optional[TableDef] = None,
) -> str:
    """Deterministic prompt text for a fixed (template, context).

    Raises MissingPlaceholder naming the first unresolved placeholder.
    """
    try:
        guidance = template.template.format_map(dict(context))
    except KeyError as exc:
        raise MissingPlaceholder(str(exc.args[0])) from None
    parts = [guidance]
    visible = [(k, context[k]) for k in template.context_fields if k in context]
    if visible:
        ctx_lines = "\n".join(f"  {k}: {v}" for k, v in visible)
        parts.append(f"Known context:\n{ctx_lines}")
    if template.output_spec:
        if table is None:
            raise ValueError("output_spec present but no table definition given")
        parts.append(format_instructions(table, template.output_spec))
    return "\n\n".join(parts)


_HEADER_RE = re.compile(r"row for the (\w+) table")


def table_from_prompt(prompt: str) -> Optional[str]:
    m = _HEADER_RE.search(prompt)
    return m.group(1) if m else None


def context_from_prompt(prompt: str) -> dict[str, str]:
    """Recover the structured context block from a rendered prompt."""
    out: dict[str, str] = {}
    lines = prompt.splitlines()
    try:
        start = lines.index("Known context:")
    except ValueError:
        return out
    for line in lines[start + 1:]:
        if not line.startswith("  ") or ":" not in line:
            break
        key, _, value = line.strip().partition(":")
        out[key.strip()] = value.strip()
    return out


def fields_from_prompt(prompt: str) -> list[tuple[str, str]]:
    """Recover (field, kind label) pairs from a rendered prompt's instructions."""
    out = []
    for line in prompt.splitlines():
        m = re.match(r"- (\w+) \((.+)\)$", line)
        if m:
            out.append((m.group(1), m.group(2)))
    return out


def _tmpl(table: str, guidance: str, output_spec: tuple[str, ...],
          context_fields: tuple[str, ...] = (),
          diversity_params: Optional[DiversityParams] = None) -> PromptTemplate:
    text = (
        f"Generate one realistic row for the {table} table of a synthetic "
        f"hospital record system. {guidance}"
    )
    return PromptTemplate(
        table=table,
        template=text,
        output_spec=output_spec,
        context_fields=context_fields,
        diversity_params=diversity_params,
    )


def default_templates(diversity: Optional[DiversityParams] = None) -> dict[str, PromptTemplate]:
    """Customized prompt templates for every table of the default schema."""
    diversity = diversity or DiversityParams()
    return {
        "departments": _tmpl(
            "departments",
            "The department specialty is {specialty}.",
            ("name", "floor", "phone_extension"),
            ("specialty",),
        ),
        "staff": _tmpl(
            "staff",
            "The staff member works in the {department_name} department.",
            ("first_name", "last_name", "role", "hire_date", "license_number"),
            ("department_name",),
        ),
        "wards": _tmpl(
            "wards",
            "The ward belongs to the {department_name} department.",
            ("name", "capacity", "ward_type"),
            ("department_name",),
        ),
        "beds": _tmpl(
            "beds",
            "The bed is located in ward {ward_name}.",
            ("bed_number", "is_occupied"),
            ("ward_name",),
        ),
        "patient_details": _tmpl(
            "patient_details",
            "Create contact details for a synthetic patient aged {age_years}, "
            "gender {gender}, ethnicity {ethnicity}, living in the {region} "
            "region of the United States.",
            ("first_name", "last_name", "phone", "address"),
            ("age_years", "gender", "ethnicity", "region"),
            diversity_params=diversity,
        ),
        "emergency_contacts": _tmpl(
            "emergency_contacts",
            "The contact belongs to patient {first_name} {last_name}.",
            ("name", "relationship", "phone"),
            ("first_name", "last_name"),
        ),
        "hospital_visits": _tmpl(
            "hospital_visits",
            "Patient {first_name} {last_name}, a {age_years} year old {gender}, "
            "presents with a complaint related to {primary_condition}.",
            ("visit_type", "started_at", "ended_at", "chief_complaint"),
            ("first_name", "last_name", "age_years", "gender",
             "primary_condition", "primary_complaint"),
        ),
        "vital_signs": _tmpl(
            "vital_signs",
            "Record vital signs for a {age_years} year old patient. The "
            "assessment must describe the blood pressure band: normal below "
            "130 over 85, elevated from 130 over 85, hypertensive crisis at "
            "180 over 120 or above.",
            ("recorded_at", "heart_rate_bpm", "systolic_bp_mmhg",
             "diastolic_bp_mmhg", "temperature_c", "respiratory_rate_bpm",
             "oxygen_saturation_pct", "height_cm", "weight_kg", "assessment"),
            ("age_years", "visit_started_at"),
        ),
        "immunizations": _tmpl(
            "immunizations",
            "Record an immunization appropriate for a {age_years} year old patient.",
            ("vaccine", "dose_number", "administered_on"),
            ("age_years",),
        ),
        "allergies": _tmpl(
            "allergies",
            "Record one documented allergy for the patient.",
            ("allergen", "reaction", "severity", "noted_on"),
            (),
        ),
        "medical_histories": _tmpl(
            "medical_histories",
            "Summarize the medical history of a patient whose long-standing "
            "problems include {primary_condition} and {secondary_condition}.",
            ("chronic_conditions", "past_surgeries", "family_history", "recorded_on"),
            ("primary_condition", "secondary_condition"),
        ),
        "appointments": _tmpl(
            "appointments",
            "Schedule an appointment for follow up of {primary_condition}.",
            ("scheduled_for", "status", "reason"),
            ("primary_condition",),
        ),
        "test_results": _tmpl(
            "test_results",
            "Report a basic laboratory panel drawn during the current visit.",
            ("collected_at", "potassium_mmol_l", "sodium_mmol_l", "glucose_mg_dl",
             "hemoglobin_g_dl", "wbc_10e9_l", "creatinine_mg_dl", "summary"),
            ("visit_started_at",),
        ),
        "diagnoses": _tmpl(
            "diagnoses",
            "Document the diagnosis of {diagnosis_condition} made during this visit.",
            ("diagnosis_name", "icd_code", "severity", "description", "diagnosed_on"),
            ("diagnosis_condition",),
        ),
        "admissions": _tmpl(
            "admissions",
            "Admit the patient, whose presenting problem is {primary_condition}.",
            ("admitted_at", "discharged_at", "admission_reason"),
            ("primary_condition", "primary_complaint", "visit_started_at"),
        ),
        "treatment_plans": _tmpl(
            "treatment_plans",
            "Write a treatment plan for the diagnosis of {diagnosis_name}.",
            ("primary_treatment", "description", "started_on", "status"),
            ("diagnosis_name",),
        ),
        "medications": _tmpl(
            "medications",
            "Prescribe one medication for the treatment of {diagnosis_name}. "
            "Known allergies: {allergy_list}.",
            ("medication_name", "dosage", "frequency", "started_on"),
            ("diagnosis_name", "allergy_list"),
        ),
        "clinical_notes": _tmpl(
            "clinical_notes",
            "Write a short clinical note about the patient, a {age_years} year "
            "old {gender} managed for {diagnosis_name}.",
            ("note_text", "written_at"),
            ("age_years", "gender", "diagnosis_name", "visit_started_at"),
        ),
        "visit_logs": _tmpl(
            "visit_logs",
            "Log one workflow event for the current hospital visit.",
            ("event", "logged_at", "detail"),
            ("visit_started_at",),
        ),
        "discharge_summaries": _tmpl(
            "discharge_summaries",
            "Summarize the hospital stay. The admission reason was: "
            "{admission_reason} The main diagnosis was {diagnosis_name}.",
            ("summary_text", "discharge_condition", "discharged_on"),
            ("admission_reason", "diagnosis_name"),
        ),
        "referrals": _tmpl(
            "referrals",
            "Refer the patient for specialist follow up of {primary_condition}.",
            ("reason", "referred_on", "urgency"),
            ("primary_condition",),
        ),
        "billing": _tmpl(
            "billing",
            "Issue a bill for the current hospital visit.",
            ("amount_usd", "status", "issued_on", "insurance_provider"),
            (),
        ),
    }


def validate_templates(templates: Mapping[str, PromptTemplate], schema: SchemaDef) -> None:
    """Check output_spec fields against table columns for every template."""
    for name, tmpl in templates.items():
        if tmpl.table not in schema.table_names:
            raise ValueError(f"template {name!r} targets unknown table {tmpl.table!r}")
        table = schema.table(tmpl.table)
        unknown = [f for f in tmpl.output_spec if f not in table.column_names]
        if unknown:
            raise ValueError(f"template {name!r}: output fields {unknown} not in {tmpl.table}")
