"""Patient-bundle assembly: prompts, completions, and FK wiring.

The assembler owns every key: primary keys, foreign keys, and denormalized
demographics are filled in from context after parsing, so referential closure
and demographic agreement hold by construction regardless of backend. Content
fields come from the backend's completion.

Row ids are block-allocated per patient ((index+1)*1000 + row), which keeps
ids deterministic even when bundles are generated concurrently.
"""
from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Mapping, Optional, Sequence

from ..schema import REFERENCE_TABLES, SchemaDef, topological_order
from .backends import ANCHOR_DATE, GenerationBackend, GenerationFailed, derive_seed
from .demographics import (ClinicalProfile, Demographics, DiversityParams,
                           sample_clinical_profile, sample_demographics)
from .parsing import ParseError, columns_for_spec, parse_structured_output
from .templates import PromptTemplate, render_prompt

RETRY_SEED_OFFSET = 1000003
DEFAULT_RETRY_LIMIT = 3

# rows per patient, drawn uniformly from [lo, hi]
DEFAULT_COUNTS: dict[str, tuple[int, int]] = {
    "emergency_contacts": (1, 2),
    "hospital_visits": (2, 4),
    "vital_signs": (2, 4),
    "immunizations": (2, 4),
    "allergies": (1, 2),
    "medical_histories": (1, 1),
    "appointments": (2, 4),
    "test_results": (3, 5),
    "diagnoses": (2, 3),
    "admissions": (1, 1),
    "treatment_plans": (1, 3),
    "medications": (2, 4),
    "clinical_notes": (3, 5),
    "visit_logs": (5, 9),
    "discharge_summaries": (1, 1),
    "referrals": (1, 2),
    "billing": (2, 3),
}

REFERENCE_COUNTS = {"departments": 8, "staff": 12, "wards": 6, "beds": 14}


@dataclass
class PatientBundle:
    patient_id: int
    rows: dict[str, list[dict]]
    provenance: dict[str, list[dict]]


@dataclass
class Cohort:
    base_seed: int
    backend_id: str
    reference: dict[str, list[dict]]
    bundles: list[PatientBundle]

    def dataset(self) -> dict[str, list[dict]]:
        """Reference rows plus all bundle rows, merged per table."""
        merged: dict[str, list[dict]] = {t: [dict(r) for r in rows]
                                         for t, rows in self.reference.items()}
        for bundle in self.bundles:
            for table, rows in bundle.rows.items():
                merged.setdefault(table, []).extend(dict(r) for r in rows)
        return merged


def _generate_row(
    schema: SchemaDef,
    templates: Mapping[str, PromptTemplate],
    backend: GenerationBackend,
    table_name: str,
    context: Mapping[str, object],
    row_seed: int,
    retry_limit: int,
) -> tuple[dict, dict]:
    """One completion round-trip with parse retries; returns (record, provenance)."""
    table = schema.table(table_name)
    template = templates[table_name]
    prompt = render_prompt(template, context, table)
    spec = columns_for_spec(table.columns, template.output_spec)
    last_error: Exception | None = None
    for attempt in range(retry_limit + 1):
        seed = row_seed + attempt * RETRY_SEED_OFFSET
        completion = backend.complete(prompt, seed)
        try:
            record = parse_structured_output(completion, spec)
        except ParseError as exc:
            last_error = exc
            continue
        return record, {"backend": backend.id, "seed": seed}
    raise GenerationFailed(
        f"table {table_name!r}: no parseable completion after {retry_limit + 1} attempts "
        f"(last error: {last_error})",
        table=table_name,
    )


def seed_reference_data(
    schema: SchemaDef,
    templates: Mapping[str, PromptTemplate],
    backend: GenerationBackend,
    base_seed: int,
    retry_limit: int = DEFAULT_RETRY_LIMIT,
) -> dict[str, list[dict]]:
    """Seed departments, staff, wards, and beds once per cohort."""
    departments_table = schema.table("departments")
    specialties = departments_table.column("specialty").enum_values
    reference: dict[str, list[dict]] = {t: [] for t in REFERENCE_TABLES}

    for i in range(REFERENCE_COUNTS["departments"]):
        specialty = specialties[i % len(specialties)]
        row, _ = _generate_row(
            schema, templates, backend, "departments",
            {"specialty": specialty},
            derive_seed(base_seed, "reference", "departments", i), retry_limit,
        )
        row.update(department_id=i + 1, specialty=specialty)
        reference["departments"].append(row)

    for i in range(REFERENCE_COUNTS["staff"]):
        dept = reference["departments"][i % len(reference["departments"])]
        row, _ = _generate_row(
            schema, templates, backend, "staff",
            {"department_name": dept["name"]},
            derive_seed(base_seed, "reference", "staff", i), retry_limit,
        )
        row.update(staff_id=i + 1, department_id=dept["department_id"])
        reference["staff"].append(row)

    for i in range(REFERENCE_COUNTS["wards"]):
        dept = reference["departments"][i % len(reference["departments"])]
        row, _ = _generate_row(
            schema, templates, backend, "wards",
            {"department_name": dept["name"]},
            derive_seed(base_seed, "reference", "wards", i), retry_limit,
        )
        row.update(ward_id=i + 1, department_id=dept["department_id"])
        reference["wards"].append(row)

    for i in range(REFERENCE_COUNTS["beds"]):
        ward = reference["wards"][i % len(reference["wards"])]
        row, _ = _generate_row(
            schema, templates, backend, "beds",
            {"ward_name": ward["name"]},
            derive_seed(base_seed, "reference", "beds", i), retry_limit,
        )
        row.update(bed_id=i + 1, ward_id=ward["ward_id"])
        reference["beds"].append(row)

    return reference


def _row_counts(counts: Mapping[str, tuple[int, int]], rng: random.Random) -> dict[str, int]:
    return {table: rng.randint(lo, hi) for table, (lo, hi) in counts.items()}


def _date_of_birth(age_years: int, rng: random.Random) -> date:
    return ANCHOR_DATE.replace(year=ANCHOR_DATE.year - age_years) - timedelta(
        days=rng.randint(0, 364)
    )


def _ts_str(value: object) -> str:
    if isinstance(value, datetime):
        return value.strftime("%Y-%m-%d %H:%M:%S")
    return str(value)


def generate_bundle(
    schema: SchemaDef,
    templates: Mapping[str, PromptTemplate],
    backend: GenerationBackend,
    patient_seed: int,
    reference: Mapping[str, Sequence[dict]],
    patient_index: int = 0,
    counts: Optional[Mapping[str, tuple[int, int]]] = None,
    retry_limit: int = DEFAULT_RETRY_LIMIT,
) -> PatientBundle:
    """Generate one internally-consistent patient bundle.

    Tables are visited in FK-safe topological order so link targets exist
    before their sources; all FK values point into this bundle or the seeded
    reference data.
    """
    counts = dict(DEFAULT_COUNTS if counts is None else counts)
    diversity = templates["patient_details"].diversity_params or DiversityParams()
    demo = sample_demographics(diversity, random.Random(f"{patient_seed}/demographics"))
    profile = sample_clinical_profile(random.Random(f"{patient_seed}/profile"))
    counts_rng = random.Random(f"{patient_seed}/counts")
    link_rng = random.Random(f"{patient_seed}/links")
    n_rows = _row_counts(counts, counts_rng)

    def rid(j: int) -> int:
        return (patient_index + 1) * 1000 + j

    base_context: dict[str, object] = {
        "age_years": demo.age_years,
        "gender": demo.gender,
        "ethnicity": demo.ethnicity,
        "region": demo.region,
        "primary_condition": profile.primary_condition,
        "secondary_condition": profile.secondary_condition,
        "primary_complaint": profile.primary_complaint,
    }

    rows: dict[str, list[dict]] = {}
    provenance: dict[str, list[dict]] = {}
    staff_ids = [r["staff_id"] for r in reference["staff"]]
    department_ids = [r["department_id"] for r in reference["departments"]]
    ward_ids = [r["ward_id"] for r in reference["wards"]]
    bed_ids = [r["bed_id"] for r in reference["beds"]]

    def make_rows(table: str, n: int, per_row) -> None:
        rows[table] = []
        provenance[table] = []
        for j in range(n):
            context, fill = per_row(j)
            record, prov = _generate_row(
                schema, templates, backend, table,
                {**base_context, **context},
                derive_seed(patient_seed, table, j), retry_limit,
            )
            record.update(fill(j, record) if callable(fill) else fill)
            rows[table].append(record)
            provenance[table].append(prov)

    patient_id = rid(0)
    make_rows("patient_details", 1, lambda j: ({}, {
        "patient_id": patient_id,
        "date_of_birth": _date_of_birth(demo.age_years, link_rng),
        "age_years": demo.age_years,
        "gender": demo.gender,
        "ethnicity": demo.ethnicity,
        "region": demo.region,
        "blood_group": demo.blood_group,
    }))
    patient_row = rows["patient_details"][0]
    base_context["first_name"] = patient_row["first_name"]
    base_context["last_name"] = patient_row["last_name"]

    make_rows("emergency_contacts", n_rows["emergency_contacts"], lambda j: (
        {}, {"contact_id": rid(j), "patient_id": patient_id}))

    # visits anchor most clinical events; visit 0 covers the primary condition
    visit_conditions: list[str] = []
    def visit_row(j):
        condition = (profile.primary_condition if j == 0
                     else profile.secondary_condition if j == 1
                     else link_rng.choice([profile.primary_condition,
                                           profile.secondary_condition]))
        visit_conditions.append(condition)
        return ({}, {
            "visit_id": rid(j),
            "patient_id": patient_id,
            "department_id": link_rng.choice(department_ids),
            "attending_staff_id": link_rng.choice(staff_ids),
        })
    make_rows("hospital_visits", n_rows["hospital_visits"], visit_row)
    visits = rows["hospital_visits"]

    def visit_for(j: int) -> dict:
        return visits[j % len(visits)]

    make_rows("vital_signs", n_rows["vital_signs"], lambda j: (
        {"visit_started_at": _ts_str(visit_for(j)["started_at"])},
        {"vital_id": rid(j), "patient_id": patient_id,
         "visit_id": visit_for(j)["visit_id"]}))

    make_rows("immunizations", n_rows["immunizations"], lambda j: (
        {}, {"immunization_id": rid(j), "patient_id": patient_id,
             "administered_by": link_rng.choice(staff_ids)}))

    make_rows("allergies", n_rows["allergies"], lambda j: (
        {}, {"allergy_id": rid(j), "patient_id": patient_id}))
    allergy_list = ", ".join(r["allergen"] for r in rows["allergies"]) or "none recorded"

    make_rows("medical_histories", n_rows["medical_histories"], lambda j: (
        {}, {"history_id": rid(j), "patient_id": patient_id}))

    make_rows("appointments", n_rows["appointments"], lambda j: (
        {}, {"appointment_id": rid(j), "patient_id": patient_id,
             "staff_id": link_rng.choice(staff_ids),
             "department_id": link_rng.choice(department_ids)}))

    make_rows("test_results", n_rows["test_results"], lambda j: (
        {"visit_started_at": _ts_str(visit_for(j)["started_at"])},
        {"result_id": rid(j), "patient_id": patient_id,
         "visit_id": visit_for(j)["visit_id"],
         "ordered_by": link_rng.choice(staff_ids)}))

    make_rows("diagnoses", n_rows["diagnoses"], lambda j: (
        {"diagnosis_condition": visit_conditions[j % len(visits)]},
        {"diagnosis_id": rid(j), "patient_id": patient_id,
         "visit_id": visit_for(j)["visit_id"],
         "diagnosed_by": link_rng.choice(staff_ids)}))
    diagnoses = rows["diagnoses"]
    primary_diagnosis = diagnoses[0]["diagnosis_name"]

    make_rows("admissions", n_rows["admissions"], lambda j: (
        {"visit_started_at": _ts_str(visits[0]["started_at"])},
        {"admission_id": rid(j), "patient_id": patient_id,
         "visit_id": visits[0]["visit_id"],
         "ward_id": link_rng.choice(ward_ids),
         "bed_id": link_rng.choice(bed_ids),
         "admitting_staff_id": link_rng.choice(staff_ids)}))
    admission = rows["admissions"][0]

    def plan_row(j):
        diagnosis = diagnoses[j % len(diagnoses)]
        return ({"diagnosis_name": diagnosis["diagnosis_name"]},
                {"plan_id": rid(j), "patient_id": patient_id,
                 "diagnosis_id": diagnosis["diagnosis_id"],
                 "prescribed_by": link_rng.choice(staff_ids)})
    make_rows("treatment_plans", n_rows["treatment_plans"], plan_row)
    plans = rows["treatment_plans"]

    def medication_row(j):
        plan = plans[j % len(plans)]
        diagnosis = next(d for d in diagnoses if d["diagnosis_id"] == plan["diagnosis_id"])
        return ({"diagnosis_name": diagnosis["diagnosis_name"],
                 "allergy_list": allergy_list},
                {"medication_id": rid(j), "patient_id": patient_id,
                 "plan_id": plan["plan_id"],
                 "prescribed_by": plan["prescribed_by"]})
    make_rows("medications", n_rows["medications"], medication_row)

    make_rows("clinical_notes", n_rows["clinical_notes"], lambda j: (
        {"diagnosis_name": primary_diagnosis,
         "visit_started_at": _ts_str(visit_for(j)["started_at"])},
        {"note_id": rid(j), "patient_id": patient_id,
         "visit_id": visit_for(j)["visit_id"],
         "author_staff_id": link_rng.choice(staff_ids),
         "patient_age": demo.age_years,
         "patient_gender": demo.gender}))

    make_rows("visit_logs", n_rows["visit_logs"], lambda j: (
        {"visit_started_at": _ts_str(visit_for(j)["started_at"])},
        {"log_id": rid(j), "visit_id": visit_for(j)["visit_id"],
         "staff_id": link_rng.choice(staff_ids)}))

    make_rows("discharge_summaries", n_rows["discharge_summaries"], lambda j: (
        {"admission_reason": admission["admission_reason"],
         "diagnosis_name": primary_diagnosis},
        {"summary_id": rid(j), "patient_id": patient_id,
         "admission_id": admission["admission_id"],
         "prepared_by": link_rng.choice(staff_ids)}))

    make_rows("referrals", n_rows["referrals"], lambda j: (
        {}, {"referral_id": rid(j), "patient_id": patient_id,
             "referred_by": link_rng.choice(staff_ids),
             "referred_to_department_id": link_rng.choice(department_ids)}))

    make_rows("billing", n_rows["billing"], lambda j: (
        {}, {"bill_id": rid(j), "patient_id": patient_id,
             "visit_id": visit_for(j)["visit_id"]}))

    # emit tables in FK-safe order for readability and load friendliness
    order = [t for t in topological_order(schema) if t in rows]
    return PatientBundle(
        patient_id=patient_id,
        rows={t: rows[t] for t in order},
        provenance={t: provenance[t] for t in order},
    )


def generate_cohort(
    schema: SchemaDef,
    templates: Mapping[str, PromptTemplate],
    backend: GenerationBackend,
    n: int,
    base_seed: int,
    counts: Optional[Mapping[str, tuple[int, int]]] = None,
    retry_limit: int = DEFAULT_RETRY_LIMIT,
    workers: int = 1,
) -> Cohort:
    """Generate n patient bundles with per-patient seed base_seed + index."""
    if n < 1:
        raise ValueError("cohort size must be >= 1")
    reference = seed_reference_data(schema, templates, backend, base_seed, retry_limit)

    def one(i: int) -> PatientBundle:
        try:
            return generate_bundle(
                schema, templates, backend, base_seed + i, reference,
                patient_index=i, counts=counts, retry_limit=retry_limit,
            )
        except GenerationFailed as exc:
            raise GenerationFailed(f"patient {i}: {exc}", table=exc.table) from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            bundles = list(pool.map(one, range(n)))
    else:
        bundles = [one(i) for i in range(n)]
    return Cohort(base_seed=base_seed, backend_id=backend.id,
                  reference=reference, bundles=bundles)


# ---------------------------------------------------------------------------
# JSON round-trip (cohort files)
# ---------------------------------------------------------------------------

def _value_to_json(value: object) -> object:
    if isinstance(value, datetime):
        return value.strftime("%Y-%m-%d %H:%M:%S")
    if isinstance(value, date):
        return value.isoformat()
    return value


def _value_from_json(value: object, kind: str) -> object:
    if value is None:
        return None
    if kind == "date":
        return date.fromisoformat(str(value))
    if kind == "timestamp":
        return datetime.fromisoformat(str(value))
    return value


def _rows_to_json(rows: Sequence[dict]) -> list[dict]:
    return [{k: _value_to_json(v) for k, v in row.items()} for row in rows]


def _rows_from_json(rows: Sequence[dict], schema: SchemaDef, table: str) -> list[dict]:
    kinds = {c.name: c.kind for c in schema.table(table).columns}
    return [{k: _value_from_json(v, kinds.get(k, "text")) for k, v in row.items()}
            for row in rows]


def cohort_to_dict(cohort: Cohort) -> dict:
    return {
        "base_seed": cohort.base_seed,
        "backend_id": cohort.backend_id,
        "reference": {t: _rows_to_json(rows) for t, rows in cohort.reference.items()},
        "bundles": [
            {
                "patient_id": b.patient_id,
                "rows": {t: _rows_to_json(rows) for t, rows in b.rows.items()},
                "provenance": b.provenance,
            }
            for b in cohort.bundles
        ],
    }


def cohort_from_dict(data: Mapping, schema: SchemaDef) -> Cohort:
    return Cohort(
        base_seed=data["base_seed"],
        backend_id=data["backend_id"],
        reference={t: _rows_from_json(rows, schema, t)
                   for t, rows in data["reference"].items()},
        bundles=[
            PatientBundle(
                patient_id=b["patient_id"],
                rows={t: _rows_from_json(rows, schema, t)
                      for t, rows in b["rows"].items()},
                provenance={t: list(p) for t, p in b["provenance"].items()},
            )
            for b in data["bundles"]
        ],
    )
