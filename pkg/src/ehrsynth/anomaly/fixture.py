"""Synthetic low-rank fixture for anomaly-detection evaluation.

1,000 normal rows generated from three latent factors (body size, cardiac
stress, metabolic state) plus small noise, clamped well inside the hard
physiologic ranges; and 20 injected rows whose values break hard bounds,
including the canonical potassium 15 mmol/L and diastolic 0 mmHg errors.

Sigmas are sized so each injected row sits at a moderate standardized
distance (per-row squared z total roughly 35-120). Far more extreme spikes
dominate the training loss and get memorized by the autoencoder, which is
not the regime a reconstruction-error detector is meant for.
"""
from __future__ import annotations

import random

from ..views import DEFAULT_NUMERIC_FEATURES
from .preprocess import FeaturePlan

# column -> (mean, sigma, clamp_lo, clamp_hi, latent factor)
_FEATURE_MODEL = {
    "patient_details.age_years": (45.0, 15.0, 1.0, 95.0, "body"),
    "vital_signs.heart_rate_bpm": (78.0, 22.0, 35.0, 190.0, "cardio"),
    "vital_signs.systolic_bp_mmhg": (124.0, 20.0, 70.0, 240.0, "cardio"),
    "vital_signs.diastolic_bp_mmhg": (78.0, 10.0, 35.0, 140.0, "cardio"),
    "vital_signs.temperature_c": (36.8, 1.3, 33.0, 43.0, "metabolic"),
    "vital_signs.respiratory_rate_bpm": (16.0, 6.0, 6.0, 50.0, "cardio"),
    "vital_signs.oxygen_saturation_pct": (95.0, 6.0, 60.0, 100.0, "anticardio"),
    "vital_signs.height_cm": (168.0, 12.0, 120.0, 210.0, "body"),
    "vital_signs.weight_kg": (75.0, 35.0, 30.0, 190.0, "body"),
    "test_results.potassium_mmol_l": (4.2, 1.5, 1.5, 9.2, "metabolic"),
    "test_results.sodium_mmol_l": (140.0, 9.0, 110.0, 185.0, "metabolic"),
    "test_results.glucose_mg_dl": (105.0, 30.0, 20.0, 450.0, "metabolic"),
    "test_results.hemoglobin_g_dl": (14.0, 1.8, 4.0, 24.0, "body"),
    "test_results.wbc_10e9_l": (7.0, 3.0, 0.5, 25.0, "metabolic"),
    "test_results.creatinine_mg_dl": (1.0, 0.3, 0.1, 5.0, "body"),
}

# per injected row: {column: hard-range-violating value}
_OUTLIER_INJECTIONS: tuple[dict[str, float], ...] = (
    {"test_results.potassium_mmol_l": 15.0},
    {"vital_signs.diastolic_bp_mmhg": 0.0},
    {"vital_signs.heart_rate_bpm": 275.0},
    {"vital_signs.temperature_c": 28.0, "vital_signs.respiratory_rate_bpm": 2.0},
    {"vital_signs.weight_kg": 415.0},
    {"vital_signs.height_cm": 262.0},
    {"test_results.sodium_mmol_l": 215.0},
    {"test_results.hemoglobin_g_dl": 0.5},
    {"vital_signs.oxygen_saturation_pct": 32.0, "test_results.potassium_mmol_l": 13.0},
    {"test_results.potassium_mmol_l": 0.4, "vital_signs.temperature_c": 45.5},
    {"vital_signs.diastolic_bp_mmhg": 160.0, "vital_signs.systolic_bp_mmhg": 280.0},
    {"vital_signs.temperature_c": 46.5},
    {"vital_signs.heart_rate_bpm": 10.0, "vital_signs.oxygen_saturation_pct": 39.0,
     "test_results.sodium_mmol_l": 204.0},
    {"vital_signs.respiratory_rate_bpm": 63.0},
    {"vital_signs.systolic_bp_mmhg": 268.0},
    {"vital_signs.weight_kg": 0.4, "vital_signs.heart_rate_bpm": 265.0},
    {"test_results.sodium_mmol_l": 88.0},
    {"vital_signs.diastolic_bp_mmhg": 5.0},
    {"vital_signs.temperature_c": 45.2},
    {"test_results.hemoglobin_g_dl": 28.0},
)


def fixture_plan() -> FeaturePlan:
    return FeaturePlan(numeric=DEFAULT_NUMERIC_FEATURES, categorical=())


def make_anomaly_fixture(
    n_normal: int = 1000,
    seed: int = 20240601,
) -> tuple[list[dict], list[int], FeaturePlan]:
    """Returns (rows, injected outlier indices, feature plan)."""
    rng = random.Random(seed)
    rows: list[dict] = []
    for _ in range(n_normal):
        factors = {
            "body": rng.gauss(0.0, 1.0),
            "cardio": rng.gauss(0.0, 1.0),
            "metabolic": rng.gauss(0.0, 1.0),
        }
        factors["anticardio"] = -factors["cardio"]
        row: dict[str, float] = {}
        for column, (mean, sigma, lo, hi, factor) in _FEATURE_MODEL.items():
            value = mean + sigma * (factors[factor] + rng.gauss(0.0, 0.15))
            row[column] = round(min(max(value, lo), hi), 2)
        rows.append(row)

    outlier_indices: list[int] = []
    for injection in _OUTLIER_INJECTIONS:
        base = dict(rows[rng.randrange(n_normal)])
        base.update(injection)
        outlier_indices.append(len(rows))
        rows.append(base)
    return rows, outlier_indices, fixture_plan()
