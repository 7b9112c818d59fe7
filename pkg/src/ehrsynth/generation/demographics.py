"""Seeded demographic and clinical-profile sampling for patient bundles.

Sampling is inverse-CDF over configured distributions, driven by a
``random.Random`` derived from the patient seed, so cohorts are fully
reproducible.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..schema import BLOOD_GROUPS, ETHNICITIES, GENDERS, REGIONS
from .content import CONDITION_NAMES, CONDITIONS


def _uniform(categories: tuple[str, ...]) -> dict[str, float]:
    return {c: 1.0 for c in categories}


@dataclass(frozen=True)
class DiversityParams:
    """Target distributions for sampled demographics."""

    gender_weights: dict[str, float] = field(default_factory=lambda: _uniform(GENDERS))
    ethnicity_weights: dict[str, float] = field(default_factory=lambda: _uniform(ETHNICITIES))
    region_weights: dict[str, float] = field(default_factory=lambda: _uniform(REGIONS))
    age_min: int = 1
    age_max: int = 99


@dataclass(frozen=True)
class Demographics:
    age_years: int
    gender: str
    ethnicity: str
    region: str
    blood_group: str


@dataclass(frozen=True)
class ClinicalProfile:
    """Patient-level clinical anchor used to keep narratives on one topic."""

    primary_condition: str
    secondary_condition: str
    primary_complaint: str


def sample_categorical(rng: random.Random, weights: dict[str, float]) -> str:
    """Inverse-CDF draw over a weighted categorical distribution."""
    items = list(weights.items())
    total = sum(w for _, w in items)
    if total <= 0:
        raise ValueError("categorical weights must sum to a positive value")
    u = rng.random() * total
    acc = 0.0
    for value, w in items:
        acc += w
        if u < acc:
            return value
    return items[-1][0]


def sample_demographics(params: DiversityParams, rng: random.Random) -> Demographics:
    age = params.age_min + int(rng.random() * (params.age_max - params.age_min + 1))
    age = min(age, params.age_max)
    return Demographics(
        age_years=age,
        gender=sample_categorical(rng, params.gender_weights),
        ethnicity=sample_categorical(rng, params.ethnicity_weights),
        region=sample_categorical(rng, params.region_weights),
        blood_group=rng.choice(BLOOD_GROUPS),
    )


def sample_clinical_profile(rng: random.Random) -> ClinicalProfile:
    primary = rng.choice(CONDITION_NAMES)
    others = [c for c in CONDITION_NAMES if c != primary]
    secondary = rng.choice(others)
    complaint = CONDITIONS[primary][1]
    return ClinicalProfile(
        primary_condition=primary,
        secondary_condition=secondary,
        primary_complaint=complaint,
    )
