"""Mixed-feature preprocessing: z-score standardization plus one-hot encoding.

Rows with any missing selected value are removed first. Numeric columns are
standardized with the population standard deviation; zero-variance columns
map to all-zeros. Categorical columns get dense one-hot encodings in
lexicographic category order.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np


class NoRowsRemaining(ValueError):
    """Every row was dropped by missing-value removal."""


@dataclass(frozen=True)
class FeaturePlan:
    numeric: tuple[str, ...]
    categorical: tuple[str, ...]
    dropped_rows: int = 0

    def __post_init__(self) -> None:
        overlap = set(self.numeric) & set(self.categorical)
        if overlap:
            raise ValueError(f"columns cannot be both numeric and categorical: {sorted(overlap)}")


@dataclass(frozen=True)
class ScalerParams:
    means: dict[str, float]
    stds: dict[str, float]  # population standard deviation


@dataclass(frozen=True)
class OneHotMap:
    categories: dict[str, tuple[str, ...]]

    def index(self, column: str, value: str) -> int | None:
        cats = self.categories[column]
        try:
            return cats.index(value)
        except ValueError:
            return None

    @property
    def width(self) -> int:
        return sum(len(c) for c in self.categories.values())


@dataclass(frozen=True)
class PreprocessResult:
    matrix: np.ndarray
    scaler: ScalerParams
    onehot: OneHotMap
    plan: FeaturePlan
    kept: tuple[int, ...]  # indices into the original row list


def _complete(row: Mapping, columns: Sequence[str]) -> bool:
    return all(row.get(c) is not None for c in columns)


def _encode(rows: Sequence[Mapping], plan: FeaturePlan, scaler: ScalerParams,
            onehot: OneHotMap, warn_unseen: bool) -> np.ndarray:
    n = len(rows)
    width = len(plan.numeric) + onehot.width
    matrix = np.zeros((n, width), dtype=np.float64)
    for i, row in enumerate(rows):
        for j, col in enumerate(plan.numeric):
            sigma = scaler.stds[col]
            if sigma > 0.0:
                matrix[i, j] = (float(row[col]) - scaler.means[col]) / sigma
        offset = len(plan.numeric)
        for col in plan.categorical:
            cats = onehot.categories[col]
            idx = onehot.index(col, str(row[col]))
            if idx is None:
                if warn_unseen:
                    warnings.warn(
                        f"unseen category {row[col]!r} in column {col!r}; encoded as all-zeros",
                        stacklevel=3,
                    )
            else:
                matrix[i, offset + idx] = 1.0
            offset += len(cats)
    return matrix


def preprocess(rows: Sequence[Mapping], plan: FeaturePlan) -> PreprocessResult:
    """Fit scaler and one-hot map on the rows and return the feature matrix."""
    selected = plan.numeric + plan.categorical
    kept = tuple(i for i, row in enumerate(rows) if _complete(row, selected))
    dropped = len(rows) - len(kept)
    if not kept:
        raise NoRowsRemaining(f"all {len(rows)} rows dropped by missing-value removal")
    usable = [rows[i] for i in kept]

    means: dict[str, float] = {}
    stds: dict[str, float] = {}
    for col in plan.numeric:
        values = np.array([float(r[col]) for r in usable], dtype=np.float64)
        means[col] = float(values.mean())
        stds[col] = float(values.std())  # population (ddof=0)
    scaler = ScalerParams(means=means, stds=stds)

    categories = {
        col: tuple(sorted({str(r[col]) for r in usable}))
        for col in plan.categorical
    }
    onehot = OneHotMap(categories=categories)

    matrix = _encode(usable, plan, scaler, onehot, warn_unseen=False)
    return PreprocessResult(
        matrix=matrix,
        scaler=scaler,
        onehot=onehot,
        plan=replace(plan, dropped_rows=dropped),
        kept=kept,
    )


def apply_preprocessor(
    rows: Sequence[Mapping],
    plan: FeaturePlan,
    scaler: ScalerParams,
    onehot: OneHotMap,
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Encode new rows with fitted parameters; unseen categories warn, not fail."""
    selected = plan.numeric + plan.categorical
    kept = tuple(i for i, row in enumerate(rows) if _complete(row, selected))
    usable = [rows[i] for i in kept]
    if not usable:
        width = len(plan.numeric) + onehot.width
        return np.zeros((0, width), dtype=np.float64), kept
    return _encode(usable, plan, scaler, onehot, warn_unseen=True), kept
