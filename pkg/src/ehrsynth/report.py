"""Combined scoring, the validation gate, and histogram emission.

A record passes the gate iff every check is unflagged: coherence,
plausibility, consistency, anomaly, and hard physiologic ranges. The combined
anomaly score folds the non-perplexity checks into penalty terms on top of
the perplexity, so batches land in a perplexity-dominated band.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

from .errors import EmptyScores, IncompleteChecks, MissingSubscore

GATE_CHECKS = ("coherence", "plausibility", "consistency", "anomaly", "hard_range")

DEFAULT_WEIGHTS = {"w_c": 0.5, "w_n": 0.5, "w_a": 0.5}


@dataclass
class RecordChecks:
    """Per-record validation outcomes; None marks a check that never ran."""

    record_id: object
    coherence_avg: Optional[float] = None
    coherence_flagged: Optional[bool] = None
    perplexity: Optional[float] = None
    plausibility_flagged: Optional[bool] = None
    consistency_score: Optional[float] = None
    max_contradiction: Optional[float] = None
    consistency_flagged: Optional[bool] = None
    reconstruction_error: Optional[float] = None
    anomaly_flagged: Optional[bool] = None
    hard_range_flagged: Optional[bool] = None
    soft_range_warnings: int = 0


def combined_anomaly_score(
    checks: RecordChecks,
    anomaly_threshold: float,
    w_c: float = 0.5,
    w_n: float = 0.5,
    w_a: float = 0.5,
) -> float:
    """perplexity + weighted 0-100 penalties for the other three checks.

    score = perplexity
          + w_c * 100 * (1 - coherence_avg)
          + w_n * 100 * max contradiction probability
          + w_a * 100 * min(reconstruction_error / threshold, 1)
    """
    for name in ("perplexity", "coherence_avg", "max_contradiction", "reconstruction_error"):
        if getattr(checks, name) is None:
            raise MissingSubscore(name)
    if anomaly_threshold > 0:
        anomaly_ratio = min(checks.reconstruction_error / anomaly_threshold, 1.0)
    else:
        anomaly_ratio = 0.0 if checks.reconstruction_error == 0 else 1.0
    return (
        checks.perplexity
        + w_c * 100.0 * (1.0 - checks.coherence_avg)
        + w_n * 100.0 * checks.max_contradiction
        + w_a * 100.0 * anomaly_ratio
    )


def gate_record(checks: RecordChecks) -> tuple[bool, list[str]]:
    """Pass iff every check is unflagged; failures list every tripped check."""
    flags = {
        "coherence": checks.coherence_flagged,
        "plausibility": checks.plausibility_flagged,
        "consistency": checks.consistency_flagged,
        "anomaly": checks.anomaly_flagged,
        "hard_range": checks.hard_range_flagged,
    }
    missing = [name for name, value in flags.items() if value is None]
    if missing:
        raise IncompleteChecks(f"checks never ran for record {checks.record_id}: {missing}")
    reasons = [name for name in GATE_CHECKS if flags[name]]
    return (not reasons, reasons)


@dataclass(frozen=True)
class HistogramSpec:
    metric: str
    bins: int = 20
    edges: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.edges and self.bins < 1:
            raise ValueError("histogram needs at least one bin")
        if self.edges and len(self.edges) < 2:
            raise ValueError("explicit edges need at least two values")
        if any(a >= b for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("explicit edges must be strictly increasing")


@dataclass(frozen=True)
class HistogramRow:
    bin_start: float
    bin_end: float
    count: int


def emit_histograms(values: Sequence[float], spec: HistogramSpec) -> list[HistogramRow]:
    """Equal-width bins over [min, max]; the last bin includes its right edge.

    A degenerate range (all values equal) falls back to one unit-width bin.
    Counts always sum to len(values).
    """
    if not values:
        raise EmptyScores(f"no values for histogram {spec.metric!r}")
    if spec.edges:
        edges = list(spec.edges)
        if min(values) < edges[0] or max(values) > edges[-1]:
            raise ValueError(f"values outside explicit edges for {spec.metric!r}")
    else:
        lo, hi = min(values), max(values)
        if lo == hi:
            edges = [lo, lo + 1.0]
        else:
            width = (hi - lo) / spec.bins
            edges = [lo + i * width for i in range(spec.bins)] + [hi]
    counts = [0] * (len(edges) - 1)
    last = len(counts) - 1
    for v in values:
        for i in range(len(counts)):
            if v < edges[i + 1] or i == last:
                counts[i] += 1
                break
    return [HistogramRow(edges[i], edges[i + 1], counts[i]) for i in range(len(counts))]


# ---------------------------------------------------------------------------
# Report rows and CSV emission
# ---------------------------------------------------------------------------

@dataclass
class ValidationRecord:
    """One ValidationReport row: checks plus combined score and gate verdict."""

    checks: RecordChecks
    combined_score: float
    gate_passed: bool
    reasons: list[str] = field(default_factory=list)


VALIDATION_CSV_COLUMNS = (
    "record_id", "coherence_avg", "coherence_flagged", "perplexity",
    "plausibility_flagged", "consistency_score", "max_contradiction",
    "consistency_flagged", "reconstruction_error", "anomaly_flagged",
    "hard_range_flagged", "soft_range_warnings", "combined_score",
    "gate", "reasons",
)


def _cell(value: object) -> object:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return value


def write_validation_csv(path: str | Path, records: Sequence[ValidationRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(VALIDATION_CSV_COLUMNS)
        for rec in records:
            c = rec.checks
            writer.writerow([
                _cell(c.record_id), _cell(c.coherence_avg), _cell(c.coherence_flagged),
                _cell(c.perplexity), _cell(c.plausibility_flagged),
                _cell(c.consistency_score), _cell(c.max_contradiction),
                _cell(c.consistency_flagged), _cell(c.reconstruction_error),
                _cell(c.anomaly_flagged), _cell(c.hard_range_flagged),
                c.soft_range_warnings, _cell(rec.combined_score),
                "pass" if rec.gate_passed else "fail", ";".join(rec.reasons),
            ])


def write_histogram_csv(path: str | Path, rows: Sequence[HistogramRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_start", "bin_end", "count"])
        for row in rows:
            writer.writerow([repr(row.bin_start), repr(row.bin_end), row.count])


def read_validation_csv(path: str | Path) -> list[ValidationRecord]:
    """Parse a ValidationReport CSV back into records (floats via repr round-trip)."""

    def _opt_float(cell: str) -> Optional[float]:
        return None if cell == "" else float(cell)

    def _opt_bool(cell: str) -> Optional[bool]:
        return None if cell == "" else cell == "true"

    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            checks = RecordChecks(
                record_id=int(row["record_id"]),
                coherence_avg=_opt_float(row["coherence_avg"]),
                coherence_flagged=_opt_bool(row["coherence_flagged"]),
                perplexity=_opt_float(row["perplexity"]),
                plausibility_flagged=_opt_bool(row["plausibility_flagged"]),
                consistency_score=_opt_float(row["consistency_score"]),
                max_contradiction=_opt_float(row["max_contradiction"]),
                consistency_flagged=_opt_bool(row["consistency_flagged"]),
                reconstruction_error=_opt_float(row["reconstruction_error"]),
                anomaly_flagged=_opt_bool(row["anomaly_flagged"]),
                hard_range_flagged=_opt_bool(row["hard_range_flagged"]),
                soft_range_warnings=int(row["soft_range_warnings"]),
            )
            records.append(ValidationRecord(
                checks=checks,
                combined_score=float(row["combined_score"]),
                gate_passed=row["gate"] == "pass",
                reasons=[r for r in row["reasons"].split(";") if r],
            ))
    return records


HISTOGRAM_METRICS = ("nsp_avg", "perplexity", "recon_error", "consistency", "combined")


def histogram_values(records: Sequence[ValidationRecord]) -> dict[str, list[float]]:
    """The five per-record metric series behind the report's distribution files."""
    return {
        "nsp_avg": [r.checks.coherence_avg for r in records],
        "perplexity": [r.checks.perplexity for r in records],
        "recon_error": [r.checks.reconstruction_error for r in records],
        "consistency": [r.checks.consistency_score for r in records],
        "combined": [r.combined_score for r in records],
    }
