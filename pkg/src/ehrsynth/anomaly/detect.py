"""Dynamic anomaly thresholding over reconstruction errors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import EmptyScores


@dataclass(frozen=True)
class AnomalyReport:
    errors: tuple[float, ...]
    threshold: float
    flags: tuple[bool, ...]

    @property
    def flagged_indices(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.flags) if f)


def threshold_and_flag(errors: Sequence[float]) -> AnomalyReport:
    """threshold = mean + 2 * population std; flag errors strictly above it."""
    values = np.asarray(list(errors), dtype=np.float64)
    if values.size == 0:
        raise EmptyScores("no reconstruction errors to threshold")
    threshold = float(values.mean() + 2.0 * values.std())  # population std
    flags = tuple(bool(e > threshold) for e in values)
    return AnomalyReport(errors=tuple(float(e) for e in values),
                         threshold=threshold, flags=flags)
