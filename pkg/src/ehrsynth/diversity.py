"""Shannon diversity and category-coverage analysis over cohort columns."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence


class EmptyCounts(ValueError):
    """Shannon index of an all-zero or empty count vector is undefined."""


class EmptyExpected(ValueError):
    """Coverage against an empty expected set is undefined."""


class UnknownColumn(KeyError):
    """An analyzed column does not exist in the dataset."""


DEFAULT_AGE_CUTS = (18, 65)
AGE_BANDS = ("pediatric", "adult", "geriatric")
DEFAULT_COVERAGE_FLOOR = 0.8


def shannon_index(counts: Iterable[int]) -> float:
    """H = -sum p_i ln p_i in nats, skipping zero counts."""
    values = [c for c in counts if c != 0]
    if any(c < 0 for c in values):
        raise ValueError("counts must be nonnegative")
    total = sum(values)
    if total <= 0:
        raise EmptyCounts("no observations")
    h = 0.0
    for c in values:
        p = c / total
        h -= p * math.log(p)
    return h


def category_coverage(observed: Iterable[str], expected: Iterable[str]) -> float:
    """|observed ∩ expected| / |expected|."""
    expected_set = set(expected)
    if not expected_set:
        raise EmptyExpected("expected category set is empty")
    return len(set(observed) & expected_set) / len(expected_set)


def age_band(age: float, cuts: Sequence[int] = DEFAULT_AGE_CUTS) -> str:
    if age < cuts[0]:
        return AGE_BANDS[0]
    if age < cuts[1]:
        return AGE_BANDS[1]
    return AGE_BANDS[2]


@dataclass(frozen=True)
class ColumnSpec:
    """One analyzed column: where it lives and what categories are expected."""

    name: str
    table: str
    column: str
    expected: tuple[str, ...] = ()
    bucket_ages: bool = False


@dataclass(frozen=True)
class ColumnDiversity:
    name: str
    shannon: float
    counts: dict[str, int]
    coverage: Optional[float]
    underrepresented: bool


@dataclass(frozen=True)
class DiversityReport:
    columns: tuple[ColumnDiversity, ...]
    coverage_floor: float

    @property
    def underrepresented(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns if c.underrepresented)


def _column_values(dataset: Mapping[str, Sequence[Mapping]], spec: ColumnSpec,
                   age_cuts: Sequence[int]) -> list[str]:
    if spec.table not in dataset:
        raise UnknownColumn(f"table {spec.table!r} not in dataset")
    rows = dataset[spec.table]
    if rows and spec.column not in rows[0]:
        raise UnknownColumn(f"column {spec.table}.{spec.column} not in dataset")
    values = []
    for row in rows:
        v = row.get(spec.column)
        if v is None:
            continue
        values.append(age_band(float(v), age_cuts) if spec.bucket_ages else str(v))
    return values


def default_column_specs() -> tuple[ColumnSpec, ...]:
    from .generation.content import ALL_MEDICATIONS, CONDITION_NAMES
    from .schema import ETHNICITIES, GENDERS, REGIONS

    return (
        ColumnSpec("age", "patient_details", "age_years", AGE_BANDS, bucket_ages=True),
        ColumnSpec("gender", "patient_details", "gender", GENDERS),
        ColumnSpec("ethnicity", "patient_details", "ethnicity", ETHNICITIES),
        ColumnSpec("region", "patient_details", "region", REGIONS),
        ColumnSpec("diagnoses", "diagnoses", "diagnosis_name", CONDITION_NAMES),
        ColumnSpec("treatments", "treatment_plans", "primary_treatment", ALL_MEDICATIONS),
        ColumnSpec("medications", "medications", "medication_name", ALL_MEDICATIONS),
    )


def diversity_report(
    dataset: Mapping[str, Sequence[Mapping]],
    specs: Sequence[ColumnSpec] | None = None,
    coverage_floor: float = DEFAULT_COVERAGE_FLOOR,
    age_cuts: Sequence[int] = DEFAULT_AGE_CUTS,
) -> DiversityReport:
    """Per-column Shannon index and coverage against expected category sets."""
    specs = default_column_specs() if specs is None else tuple(specs)
    columns = []
    for spec in specs:
        values = _column_values(dataset, spec, age_cuts)
        counts = dict(sorted(Counter(values).items()))
        h = shannon_index(counts.values()) if counts else 0.0
        coverage = None
        under = False
        if spec.expected:
            coverage = category_coverage(counts.keys(), spec.expected)
            under = coverage < coverage_floor
        columns.append(ColumnDiversity(
            name=spec.name, shannon=h, counts=counts,
            coverage=coverage, underrepresented=under,
        ))
    return DiversityReport(columns=tuple(columns), coverage_floor=coverage_floor)
