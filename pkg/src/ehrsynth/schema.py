"""Relational EHR schema: 22 interlinked tables, DDL emission, and range checks.

The schema is immutable after construction; every operation here is a pure
function, so SchemaDef values can be shared freely across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence


class SchemaError(ValueError):
    """Invalid schema definition."""


class CycleError(SchemaError):
    """The foreign-key graph contains a cycle."""


class SchemaMismatch(ValueError):
    """A row's shape does not match its table definition."""


@dataclass(frozen=True)
class PhysiologicRange:
    """Plausible (soft) and physiologically possible (hard) bounds for a value.

    Soft breaches are merely implausible and warn; hard breaches are
    incompatible with life and flag the record.
    """

    soft_min: float
    soft_max: float
    hard_min: float
    hard_max: float

    def __post_init__(self) -> None:
        if not (self.hard_min <= self.soft_min <= self.soft_max <= self.hard_max):
            raise SchemaError(
                f"range ordering violated: hard_min <= soft_min <= soft_max <= hard_max "
                f"required, got {self.hard_min}, {self.soft_min}, {self.soft_max}, {self.hard_max}"
            )


KINDS = ("integer", "decimal", "text", "date", "timestamp", "boolean", "enum")


@dataclass(frozen=True)
class ColumnDef:
    name: str
    kind: str
    nullable: bool = False
    enum_values: tuple[str, ...] = ()
    range: Optional[PhysiologicRange] = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("column name must be nonempty")
        if self.kind not in KINDS:
            raise SchemaError(f"unknown column kind {self.kind!r}")
        if self.kind == "enum" and not self.enum_values:
            raise SchemaError(f"enum column {self.name!r} needs at least one value")
        if self.kind != "enum" and self.enum_values:
            raise SchemaError(f"non-enum column {self.name!r} carries enum values")


@dataclass(frozen=True)
class ForeignKey:
    column: str
    target_table: str
    target_column: str


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple[ColumnDef, ...]
    primary_key: str
    foreign_keys: tuple[ForeignKey, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("table name must be nonempty")
        names = [c.name for c in self.columns]
        if len(names) != len(set(names)):
            raise SchemaError(f"duplicate column names in table {self.name!r}")
        if self.primary_key not in names:
            raise SchemaError(f"primary key {self.primary_key!r} not a column of {self.name!r}")
        for fk in self.foreign_keys:
            if fk.column not in names:
                raise SchemaError(f"FK column {fk.column!r} not a column of {self.name!r}")

    def column(self, name: str) -> ColumnDef:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)


@dataclass(frozen=True)
class SchemaDef:
    tables: tuple[TableDef, ...]

    def __post_init__(self) -> None:
        names = [t.name for t in self.tables]
        if len(names) != len(set(names)):
            raise SchemaError("duplicate table names")
        by_name = {t.name: t for t in self.tables}
        for t in self.tables:
            for fk in t.foreign_keys:
                target = by_name.get(fk.target_table)
                if target is None:
                    raise SchemaError(f"{t.name}.{fk.column}: FK target table {fk.target_table!r} missing")
                if fk.target_column not in target.column_names:
                    raise SchemaError(
                        f"{t.name}.{fk.column}: FK target column "
                        f"{fk.target_table}.{fk.target_column} missing"
                    )
        # acyclicity is part of the schema contract
        topological_order(self)

    def table(self, name: str) -> TableDef:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def table_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tables)


@dataclass(frozen=True)
class RangeViolation:
    column: str
    value: float
    bound: str  # "hard_min" | "hard_max" | "soft_min" | "soft_max"
    limit: float
    severity: str  # "hard" | "soft"


def topological_order(schema: SchemaDef | Sequence[TableDef]) -> list[str]:
    """FK-safe load order: every FK target precedes its source table.

    Deterministic: ties broken by original table order. Raises CycleError on
    cyclic FK graphs, naming the tables stuck in the cycle.
    """
    tables = schema.tables if isinstance(schema, SchemaDef) else tuple(schema)
    order_index = {t.name: i for i, t in enumerate(tables)}
    deps: dict[str, set[str]] = {
        t.name: {fk.target_table for fk in t.foreign_keys if fk.target_table != t.name}
        for t in tables
    }
    out: list[str] = []
    placed: set[str] = set()
    remaining = [t.name for t in tables]
    while remaining:
        ready = [n for n in remaining if deps[n] <= placed]
        if not ready:
            cyclic = ", ".join(sorted(remaining))
            raise CycleError(f"foreign-key graph is cyclic among: {cyclic}")
        ready.sort(key=order_index.__getitem__)
        nxt = ready[0]
        out.append(nxt)
        placed.add(nxt)
        remaining.remove(nxt)
    return out


_SQL_TYPES = {
    "integer": "INTEGER",
    "decimal": "NUMERIC",
    "text": "TEXT",
    "date": "DATE",
    "timestamp": "TIMESTAMP",
    "boolean": "BOOLEAN",
}


def _quote_sql_string(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


def emit_ddl(schema: SchemaDef) -> str:
    """Portable standard-SQL CREATE TABLE statements in FK-safe order.

    Byte-deterministic for a fixed schema. Enum columns become TEXT with a
    CHECK constraint; hard physiologic ranges become CHECK constraints too
    (NULLs pass, matching SQL three-valued logic).
    """
    order = topological_order(schema)
    statements = []
    for name in order:
        table = schema.table(name)
        lines = []
        for col in table.columns:
            sql_type = "TEXT" if col.kind == "enum" else _SQL_TYPES[col.kind]
            parts = [f"    {col.name} {sql_type}"]
            if col.name == table.primary_key:
                parts.append("PRIMARY KEY")
            elif not col.nullable:
                parts.append("NOT NULL")
            if col.kind == "enum":
                allowed = ", ".join(_quote_sql_string(v) for v in col.enum_values)
                parts.append(f"CHECK ({col.name} IN ({allowed}))")
            if col.range is not None:
                parts.append(
                    f"CHECK ({col.name} BETWEEN {col.range.hard_min} AND {col.range.hard_max})"
                )
            lines.append(" ".join(parts))
        for fk in table.foreign_keys:
            lines.append(
                f"    FOREIGN KEY ({fk.column}) REFERENCES {fk.target_table} ({fk.target_column})"
            )
        body = ",\n".join(lines)
        statements.append(f"CREATE TABLE {name} (\n{body}\n);")
    return "\n\n".join(statements) + ("\n" if statements else "")


def check_value_ranges(table: TableDef, row: Mapping[str, object]) -> list[RangeViolation]:
    """Range-check one row. Hard breaches flag, soft breaches warn.

    A value outside its hard range yields exactly one hard violation; a value
    inside the hard range but outside the soft range yields one soft violation.
    NULLs are skipped.
    """
    expected = set(table.column_names)
    got = set(row)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise SchemaMismatch(
            f"row shape differs from table {table.name!r}: missing={missing} extra={extra}"
        )
    violations: list[RangeViolation] = []
    for col in table.columns:
        rng = col.range
        if rng is None:
            continue
        value = row[col.name]
        if value is None:
            continue
        v = float(value)
        if v < rng.hard_min:
            violations.append(RangeViolation(col.name, v, "hard_min", rng.hard_min, "hard"))
        elif v > rng.hard_max:
            violations.append(RangeViolation(col.name, v, "hard_max", rng.hard_max, "hard"))
        elif v < rng.soft_min:
            violations.append(RangeViolation(col.name, v, "soft_min", rng.soft_min, "soft"))
        elif v > rng.soft_max:
            violations.append(RangeViolation(col.name, v, "soft_max", rng.soft_max, "soft"))
    return violations


# ---------------------------------------------------------------------------
# Default 22-table schema
# ---------------------------------------------------------------------------

GENDERS = ("female", "male", "nonbinary", "unknown")
ETHNICITIES = (
    "american_indian_or_alaska_native",
    "asian",
    "black_or_african_american",
    "hispanic_or_latino",
    "native_hawaiian_or_pacific_islander",
    "multiracial",
    "white",
)
REGIONS = ("midwest", "northeast", "south", "west")
BLOOD_GROUPS = ("A+", "A-", "AB+", "AB-", "B+", "B-", "O+", "O-")

# Hard bounds are "physiologically impossible beyond this"; soft bounds are
# "clinically implausible beyond this". Only the potassium and diastolic
# anecdotes are literature-anchored; the rest are documented defaults and can
# be overridden through a schema file.
RANGES = {
    "age_years": PhysiologicRange(0, 100, 0, 120),
    "heart_rate_bpm": PhysiologicRange(40, 180, 20, 260),
    "systolic_bp_mmhg": PhysiologicRange(80, 200, 50, 260),
    "diastolic_bp_mmhg": PhysiologicRange(40, 120, 20, 150),
    "temperature_c": PhysiologicRange(35.0, 41.0, 30.0, 44.0),
    "respiratory_rate_bpm": PhysiologicRange(8, 30, 4, 60),
    "oxygen_saturation_pct": PhysiologicRange(88, 100, 40, 100),
    "height_cm": PhysiologicRange(45, 210, 30, 250),
    "weight_kg": PhysiologicRange(2.0, 250.0, 0.5, 400.0),
    "potassium_mmol_l": PhysiologicRange(3.0, 6.0, 1.0, 10.0),
    "sodium_mmol_l": PhysiologicRange(130, 150, 100, 200),
    "glucose_mg_dl": PhysiologicRange(60, 200, 10, 2000),
    "hemoglobin_g_dl": PhysiologicRange(10, 18, 1, 25),
    "wbc_10e9_l": PhysiologicRange(3.5, 12.0, 0.1, 200.0),
    "creatinine_mg_dl": PhysiologicRange(0.5, 1.5, 0.05, 40.0),
}


def _col(name: str, kind: str, nullable: bool = False, enum: Iterable[str] = (),
         ranged: bool = False) -> ColumnDef:
    return ColumnDef(
        name=name,
        kind=kind,
        nullable=nullable,
        enum_values=tuple(enum),
        range=RANGES[name] if ranged else None,
    )


def build_default_schema() -> SchemaDef:
    """The default 22-table hospital schema with an acyclic FK graph.

    Reference tables (departments, staff, wards, beds) are seeded once per
    cohort; every patient-facing table links back to patient_details, and
    clinical-event tables link to hospital_visits or admissions.
    """
    tables = (
        TableDef(
            "departments",
            (
                _col("department_id", "integer"),
                _col("name", "text"),
                _col("specialty", "enum", enum=(
                    "cardiology", "emergency", "general_medicine", "neurology",
                    "oncology", "orthopedics", "pediatrics", "surgery",
                )),
                _col("floor", "integer"),
                _col("phone_extension", "text"),
            ),
            primary_key="department_id",
        ),
        TableDef(
            "staff",
            (
                _col("staff_id", "integer"),
                _col("department_id", "integer"),
                _col("first_name", "text"),
                _col("last_name", "text"),
                _col("role", "enum", enum=(
                    "administrator", "nurse", "pharmacist", "physician", "technician",
                )),
                _col("hire_date", "date"),
                _col("license_number", "text", nullable=True),
            ),
            primary_key="staff_id",
            foreign_keys=(ForeignKey("department_id", "departments", "department_id"),),
        ),
        TableDef(
            "wards",
            (
                _col("ward_id", "integer"),
                _col("department_id", "integer"),
                _col("name", "text"),
                _col("capacity", "integer"),
                _col("ward_type", "enum", enum=(
                    "general", "intensive_care", "maternity", "pediatric", "surgical",
                )),
            ),
            primary_key="ward_id",
            foreign_keys=(ForeignKey("department_id", "departments", "department_id"),),
        ),
        TableDef(
            "beds",
            (
                _col("bed_id", "integer"),
                _col("ward_id", "integer"),
                _col("bed_number", "text"),
                _col("is_occupied", "boolean"),
            ),
            primary_key="bed_id",
            foreign_keys=(ForeignKey("ward_id", "wards", "ward_id"),),
        ),
        TableDef(
            "patient_details",
            (
                _col("patient_id", "integer"),
                _col("first_name", "text"),
                _col("last_name", "text"),
                _col("date_of_birth", "date"),
                _col("age_years", "integer", ranged=True),
                _col("gender", "enum", enum=GENDERS),
                _col("ethnicity", "enum", enum=ETHNICITIES),
                _col("region", "enum", enum=REGIONS),
                _col("blood_group", "enum", enum=BLOOD_GROUPS),
                _col("phone", "text"),
                _col("address", "text"),
            ),
            primary_key="patient_id",
        ),
        TableDef(
            "emergency_contacts",
            (
                _col("contact_id", "integer"),
                _col("patient_id", "integer"),
                _col("name", "text"),
                _col("relationship", "enum", enum=(
                    "child", "friend", "guardian", "parent", "sibling", "spouse",
                )),
                _col("phone", "text"),
            ),
            primary_key="contact_id",
            foreign_keys=(ForeignKey("patient_id", "patient_details", "patient_id"),),
        ),
        TableDef(
            "hospital_visits",
            (
                _col("visit_id", "integer"),
                _col("patient_id", "integer"),
                _col("department_id", "integer"),
                _col("attending_staff_id", "integer"),
                _col("visit_type", "enum", enum=(
                    "emergency", "follow_up", "inpatient", "outpatient",
                )),
                _col("started_at", "timestamp"),
                _col("ended_at", "timestamp", nullable=True),
                _col("chief_complaint", "text"),
            ),
            primary_key="visit_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("department_id", "departments", "department_id"),
                ForeignKey("attending_staff_id", "staff", "staff_id"),
            ),
        ),
        TableDef(
            "vital_signs",
            (
                _col("vital_id", "integer"),
                _col("patient_id", "integer"),
                _col("visit_id", "integer"),
                _col("recorded_at", "timestamp"),
                _col("heart_rate_bpm", "integer", ranged=True),
                _col("systolic_bp_mmhg", "integer", ranged=True),
                _col("diastolic_bp_mmhg", "integer", ranged=True),
                _col("temperature_c", "decimal", ranged=True),
                _col("respiratory_rate_bpm", "integer", ranged=True),
                _col("oxygen_saturation_pct", "decimal", ranged=True),
                _col("height_cm", "decimal", ranged=True),
                _col("weight_kg", "decimal", ranged=True),
                _col("assessment", "text"),
            ),
            primary_key="vital_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("visit_id", "hospital_visits", "visit_id"),
            ),
        ),
        TableDef(
            "immunizations",
            (
                _col("immunization_id", "integer"),
                _col("patient_id", "integer"),
                _col("administered_by", "integer", nullable=True),
                _col("vaccine", "enum", enum=(
                    "covid19", "hepatitis_b", "influenza", "mmr",
                    "pneumococcal", "tetanus", "varicella",
                )),
                _col("dose_number", "integer"),
                _col("administered_on", "date"),
            ),
            primary_key="immunization_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("administered_by", "staff", "staff_id"),
            ),
        ),
        TableDef(
            "allergies",
            (
                _col("allergy_id", "integer"),
                _col("patient_id", "integer"),
                _col("allergen", "text"),
                _col("reaction", "enum", enum=(
                    "anaphylaxis", "hives", "nausea", "rash",
                    "respiratory_distress", "swelling",
                )),
                _col("severity", "enum", enum=("mild", "moderate", "severe")),
                _col("noted_on", "date"),
            ),
            primary_key="allergy_id",
            foreign_keys=(ForeignKey("patient_id", "patient_details", "patient_id"),),
        ),
        TableDef(
            "medical_histories",
            (
                _col("history_id", "integer"),
                _col("patient_id", "integer"),
                _col("chronic_conditions", "text"),
                _col("past_surgeries", "text"),
                _col("family_history", "text"),
                _col("recorded_on", "date"),
            ),
            primary_key="history_id",
            foreign_keys=(ForeignKey("patient_id", "patient_details", "patient_id"),),
        ),
        TableDef(
            "appointments",
            (
                _col("appointment_id", "integer"),
                _col("patient_id", "integer"),
                _col("staff_id", "integer"),
                _col("department_id", "integer"),
                _col("scheduled_for", "timestamp"),
                _col("status", "enum", enum=(
                    "cancelled", "completed", "no_show", "scheduled",
                )),
                _col("reason", "text"),
            ),
            primary_key="appointment_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("staff_id", "staff", "staff_id"),
                ForeignKey("department_id", "departments", "department_id"),
            ),
        ),
        TableDef(
            "test_results",
            (
                _col("result_id", "integer"),
                _col("patient_id", "integer"),
                _col("visit_id", "integer"),
                _col("ordered_by", "integer", nullable=True),
                _col("collected_at", "timestamp"),
                _col("potassium_mmol_l", "decimal", ranged=True),
                _col("sodium_mmol_l", "decimal", ranged=True),
                _col("glucose_mg_dl", "decimal", ranged=True),
                _col("hemoglobin_g_dl", "decimal", ranged=True),
                _col("wbc_10e9_l", "decimal", ranged=True),
                _col("creatinine_mg_dl", "decimal", ranged=True),
                _col("summary", "text"),
            ),
            primary_key="result_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("visit_id", "hospital_visits", "visit_id"),
                ForeignKey("ordered_by", "staff", "staff_id"),
            ),
        ),
        TableDef(
            "diagnoses",
            (
                _col("diagnosis_id", "integer"),
                _col("patient_id", "integer"),
                _col("visit_id", "integer"),
                _col("diagnosed_by", "integer"),
                _col("diagnosis_name", "text"),
                _col("icd_code", "text"),
                _col("severity", "enum", enum=("critical", "mild", "moderate", "severe")),
                _col("description", "text"),
                _col("diagnosed_on", "date"),
            ),
            primary_key="diagnosis_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("visit_id", "hospital_visits", "visit_id"),
                ForeignKey("diagnosed_by", "staff", "staff_id"),
            ),
        ),
        TableDef(
            "admissions",
            (
                _col("admission_id", "integer"),
                _col("patient_id", "integer"),
                _col("visit_id", "integer"),
                _col("ward_id", "integer"),
                _col("bed_id", "integer"),
                _col("admitting_staff_id", "integer"),
                _col("admitted_at", "timestamp"),
                _col("discharged_at", "timestamp", nullable=True),
                _col("admission_reason", "text"),
            ),
            primary_key="admission_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("visit_id", "hospital_visits", "visit_id"),
                ForeignKey("ward_id", "wards", "ward_id"),
                ForeignKey("bed_id", "beds", "bed_id"),
                ForeignKey("admitting_staff_id", "staff", "staff_id"),
            ),
        ),
        TableDef(
            "treatment_plans",
            (
                _col("plan_id", "integer"),
                _col("patient_id", "integer"),
                _col("diagnosis_id", "integer"),
                _col("prescribed_by", "integer"),
                _col("primary_treatment", "text"),
                _col("description", "text"),
                _col("started_on", "date"),
                _col("status", "enum", enum=("active", "completed", "discontinued")),
            ),
            primary_key="plan_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("diagnosis_id", "diagnoses", "diagnosis_id"),
                ForeignKey("prescribed_by", "staff", "staff_id"),
            ),
        ),
        TableDef(
            "medications",
            (
                _col("medication_id", "integer"),
                _col("patient_id", "integer"),
                _col("plan_id", "integer", nullable=True),
                _col("prescribed_by", "integer", nullable=True),
                _col("medication_name", "text"),
                _col("dosage", "text"),
                _col("frequency", "enum", enum=(
                    "as_needed", "once_daily", "three_times_daily", "twice_daily", "weekly",
                )),
                _col("started_on", "date"),
            ),
            primary_key="medication_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("plan_id", "treatment_plans", "plan_id"),
                ForeignKey("prescribed_by", "staff", "staff_id"),
            ),
        ),
        TableDef(
            "clinical_notes",
            (
                _col("note_id", "integer"),
                _col("patient_id", "integer"),
                _col("visit_id", "integer"),
                _col("author_staff_id", "integer"),
                _col("patient_age", "integer"),
                _col("patient_gender", "enum", enum=GENDERS),
                _col("note_text", "text"),
                _col("written_at", "timestamp"),
            ),
            primary_key="note_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("visit_id", "hospital_visits", "visit_id"),
                ForeignKey("author_staff_id", "staff", "staff_id"),
            ),
        ),
        TableDef(
            "visit_logs",
            (
                _col("log_id", "integer"),
                _col("visit_id", "integer"),
                _col("staff_id", "integer"),
                _col("event", "enum", enum=(
                    "check_in", "check_out", "consultation", "procedure", "transfer", "triage",
                )),
                _col("logged_at", "timestamp"),
                _col("detail", "text"),
            ),
            primary_key="log_id",
            foreign_keys=(
                ForeignKey("visit_id", "hospital_visits", "visit_id"),
                ForeignKey("staff_id", "staff", "staff_id"),
            ),
        ),
        TableDef(
            "discharge_summaries",
            (
                _col("summary_id", "integer"),
                _col("patient_id", "integer"),
                _col("admission_id", "integer"),
                _col("prepared_by", "integer"),
                _col("summary_text", "text"),
                _col("discharge_condition", "enum", enum=(
                    "deteriorated", "improved", "stable", "unchanged",
                )),
                _col("discharged_on", "date"),
            ),
            primary_key="summary_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("admission_id", "admissions", "admission_id"),
                ForeignKey("prepared_by", "staff", "staff_id"),
            ),
        ),
        TableDef(
            "referrals",
            (
                _col("referral_id", "integer"),
                _col("patient_id", "integer"),
                _col("referred_by", "integer"),
                _col("referred_to_department_id", "integer"),
                _col("reason", "text"),
                _col("referred_on", "date"),
                _col("urgency", "enum", enum=("emergency", "routine", "urgent")),
            ),
            primary_key="referral_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("referred_by", "staff", "staff_id"),
                ForeignKey("referred_to_department_id", "departments", "department_id"),
            ),
        ),
        TableDef(
            "billing",
            (
                _col("bill_id", "integer"),
                _col("patient_id", "integer"),
                _col("visit_id", "integer"),
                _col("amount_usd", "decimal"),
                _col("status", "enum", enum=("denied", "paid", "partially_paid", "pending")),
                _col("issued_on", "date"),
                _col("insurance_provider", "text", nullable=True),
            ),
            primary_key="bill_id",
            foreign_keys=(
                ForeignKey("patient_id", "patient_details", "patient_id"),
                ForeignKey("visit_id", "hospital_visits", "visit_id"),
            ),
        ),
    )
    return SchemaDef(tables=tables)


REFERENCE_TABLES = ("departments", "staff", "wards", "beds")


# ---------------------------------------------------------------------------
# Serialization: JSON schema files let users customize without recompiling
# ---------------------------------------------------------------------------

def schema_to_dict(schema: SchemaDef) -> dict:
    return {
        "tables": [
            {
                "name": t.name,
                "primary_key": t.primary_key,
                "columns": [
                    {
                        "name": c.name,
                        "kind": c.kind,
                        "nullable": c.nullable,
                        **({"enum_values": list(c.enum_values)} if c.enum_values else {}),
                        **(
                            {
                                "range": {
                                    "soft_min": c.range.soft_min,
                                    "soft_max": c.range.soft_max,
                                    "hard_min": c.range.hard_min,
                                    "hard_max": c.range.hard_max,
                                }
                            }
                            if c.range
                            else {}
                        ),
                    }
                    for c in t.columns
                ],
                "foreign_keys": [
                    {"column": fk.column, "target_table": fk.target_table,
                     "target_column": fk.target_column}
                    for fk in t.foreign_keys
                ],
            }
            for t in schema.tables
        ]
    }


def schema_from_dict(data: Mapping) -> SchemaDef:
    tables = []
    for t in data["tables"]:
        columns = tuple(
            ColumnDef(
                name=c["name"],
                kind=c["kind"],
                nullable=c.get("nullable", False),
                enum_values=tuple(c.get("enum_values", ())),
                range=PhysiologicRange(**c["range"]) if "range" in c else None,
            )
            for c in t["columns"]
        )
        fks = tuple(
            ForeignKey(fk["column"], fk["target_table"], fk["target_column"])
            for fk in t.get("foreign_keys", ())
        )
        tables.append(TableDef(t["name"], columns, t["primary_key"], fks))
    return SchemaDef(tables=tuple(tables))


def save_schema(schema: SchemaDef, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schema_to_dict(schema), indent=2) + "\n", encoding="utf-8")


def load_schema(path: str | Path) -> SchemaDef:
    return schema_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
