"""Stage orchestration: generate, validate, report, emit SQL, load.

Each stage reads and writes persisted intermediates, so any stage can rerun
from disk without regenerating. Artifacts carry no timestamps; a fixed config
and seed reproduce them byte for byte with the grammar backend.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import wire
from .anomaly import (FeaturePlan, default_widths, preprocess,
                      reconstruction_errors, threshold_and_flag,
                      train_autoencoder)
from .coherence import LexicalCoherenceScorer, assess_record_coherence
from .config import PipelineConfig
from .consistency import RuleNliClassifier, assess_consistency, builtin_rules
from .diversity import DiversityReport, diversity_report
from .errors import MissingSubscore
from .generation import (Cohort, GrammarBackend, RemoteLlmBackend,
                         cohort_from_dict, cohort_to_dict, default_templates,
                         generate_cohort, validate_templates)
from .generation.bundles import _rows_to_json
from .generation.corpus import build_reference_corpus
from .load import LoadSummary, emit_inserts, load_database
from .plausibility import (NgramPerplexityScorer, assess_plausibility,
                           build_narrative, train_ngram_lm)
from .report import (HISTOGRAM_METRICS, HistogramSpec, RecordChecks,
                     ValidationRecord, combined_anomaly_score, emit_histograms,
                     gate_record, histogram_values, write_histogram_csv,
                     write_validation_csv)
from .schema import SchemaDef, build_default_schema, check_value_ranges, emit_ddl
from .views import build_record_view, feature_row

ARTIFACTS = {
    "cohort": "cohort.json",
    "validation": "validation.csv",
    "validation_meta": "validation_meta.json",
    "summary": "summary.txt",
    "diversity_csv": "diversity.csv",
    "diversity_txt": "diversity.txt",
    "schema_sql": "schema.sql",
    "gated_sql": "gated.sql",
    "quarantine": "quarantine.json",
}


class StageError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


@dataclass
class ValidationOutput:
    records: list[ValidationRecord]
    anomaly_threshold: float
    perplexity_threshold: float
    coherence_threshold: float
    diversity: DiversityReport
    anomaly_dropped: int = 0

    @property
    def gated_ids(self) -> set:
        return {r.checks.record_id for r in self.records if r.gate_passed}


def make_backend(config: PipelineConfig):
    gen = config.generation
    if gen.backend == "grammar":
        return GrammarBackend()
    if gen.backend == "remote":
        if not gen.remote_url:
            raise StageError("generate: remote backend needs [generation] remote_url")
        client = wire.JsonHttpClient(gen.remote_url, timeout=gen.remote_timeout,
                                     retry_limit=gen.retry_limit)
        return RemoteLlmBackend(client=client)
    raise StageError(f"generate: unknown backend {gen.backend!r}")


def make_scorers(config: PipelineConfig):
    """Returns (coherence scorer, perplexity scorer, NLI classifier)."""
    val = config.validation
    if val.scorers == "remote":
        if not val.remote_url:
            raise StageError("validate: remote scorers need [validation] remote_url")
        client = wire.JsonHttpClient(val.remote_url, timeout=val.remote_timeout)
        return (
            wire.RemoteCoherenceScorer(client, batch_size=val.batch_size),
            wire.RemotePerplexityScorer(client, batch_size=val.batch_size),
            wire.RemoteNliClassifier(client, batch_size=val.batch_size),
        )
    lm = train_ngram_lm(
        build_reference_corpus(val.corpus_sentences),
        order=val.lm_order,
        k=val.lm_k,
    )
    return (
        LexicalCoherenceScorer(),
        NgramPerplexityScorer(lm),
        RuleNliClassifier(epsilon=val.nli_epsilon),
    )


def stage_generate(config: PipelineConfig, schema: SchemaDef) -> Cohort:
    templates = default_templates()
    validate_templates(templates, schema)
    backend = make_backend(config)
    gen = config.generation
    return generate_cohort(
        schema, templates, backend,
        n=gen.patients, base_seed=gen.base_seed, counts=gen.counts,
        retry_limit=gen.retry_limit, workers=gen.workers,
    )


def stage_validate(config: PipelineConfig, schema: SchemaDef, cohort: Cohort) -> ValidationOutput:
    coherence_scorer, perplexity_scorer, nli_classifier = make_scorers(config)
    rules = builtin_rules()
    coherence_threshold = config.validation.effective_coherence_threshold()
    views = [build_record_view(b, cohort.reference) for b in cohort.bundles]

    coherence_results = [
        assess_record_coherence(v, coherence_scorer, coherence_threshold) for v in views
    ]
    narratives = [build_narrative(v) for v in views]
    plaus_results, perplexity_threshold = assess_plausibility(
        narratives, perplexity_scorer, q=config.validation.perplexity_percentile
    )
    consistency_results = [assess_consistency(v, nli_classifier, rules) for v in views]

    # physiologic range scan over every row of every bundle
    hard_flags: list[bool] = []
    soft_counts: list[int] = []
    for bundle in cohort.bundles:
        hard = 0
        soft = 0
        for table_name, rows in bundle.rows.items():
            table = schema.table(table_name)
            for row in rows:
                for violation in check_value_ranges(table, row):
                    if violation.severity == "hard":
                        hard += 1
                    else:
                        soft += 1
        hard_flags.append(hard > 0)
        soft_counts.append(soft)

    # one anomaly feature row per record
    ano = config.anomaly
    plan = FeaturePlan(numeric=ano.numeric_features, categorical=ano.categorical_features)
    features = [feature_row(b, ano.numeric_features, ano.categorical_features)
                for b in cohort.bundles]
    prep = preprocess(features, plan)
    widths = ano.widths or default_widths(prep.matrix.shape[1])
    model = train_autoencoder(
        prep.matrix, widths=widths, epochs=ano.epochs, lr=ano.learning_rate,
        batch_size=ano.batch_size, seed=ano.seed,
    )
    errors = reconstruction_errors(model, prep.matrix)
    anomaly = threshold_and_flag(errors)
    error_by_record: dict[int, tuple[float, bool]] = {
        kept_index: (anomaly.errors[pos], anomaly.flags[pos])
        for pos, kept_index in enumerate(prep.kept)
    }

    records: list[ValidationRecord] = []
    for i, bundle in enumerate(cohort.bundles):
        checks = RecordChecks(
            record_id=bundle.patient_id,
            coherence_avg=coherence_results[i].average_probability,
            coherence_flagged=coherence_results[i].flagged,
            perplexity=plaus_results[i].perplexity,
            plausibility_flagged=plaus_results[i].flagged,
            consistency_score=consistency_results[i].consistency_score,
            max_contradiction=consistency_results[i].max_contradiction,
            consistency_flagged=consistency_results[i].flagged,
            hard_range_flagged=hard_flags[i],
            soft_range_warnings=soft_counts[i],
        )
        if i in error_by_record:
            checks.reconstruction_error, checks.anomaly_flagged = error_by_record[i]
        else:
            # dropped by missing-value removal: cannot be validated, send to review
            checks.anomaly_flagged = True
        try:
            combined = combined_anomaly_score(
                checks, anomaly.threshold,
                w_c=config.scoring.w_c, w_n=config.scoring.w_n, w_a=config.scoring.w_a,
            )
        except MissingSubscore:
            combined = math.nan
        passed, reasons = gate_record(checks)
        if i not in error_by_record:
            reasons = [*reasons, "incomplete_features"]
            passed = False
        records.append(ValidationRecord(
            checks=checks, combined_score=combined,
            gate_passed=passed, reasons=reasons,
        ))

    diversity = diversity_report(
        cohort.dataset(),
        coverage_floor=config.diversity.coverage_floor,
        age_cuts=config.diversity.age_cuts,
    )
    return ValidationOutput(
        records=records,
        anomaly_threshold=anomaly.threshold,
        perplexity_threshold=perplexity_threshold,
        coherence_threshold=coherence_threshold,
        diversity=diversity,
        anomaly_dropped=prep.plan.dropped_rows,
    )


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------

def write_cohort(path: Path, cohort: Cohort) -> None:
    path.write_text(json.dumps(cohort_to_dict(cohort), indent=2) + "\n", encoding="utf-8")


def write_validation_meta(path: Path, validation: ValidationOutput) -> None:
    meta = {
        "coherence_threshold": validation.coherence_threshold,
        "perplexity_threshold": validation.perplexity_threshold,
        "anomaly_threshold": validation.anomaly_threshold,
        "anomaly_dropped": validation.anomaly_dropped,
    }
    path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def read_cohort(path: Path, schema: SchemaDef) -> Cohort:
    if not path.exists():
        raise StageError(f"validate: cohort file not found: {path}")
    return cohort_from_dict(json.loads(path.read_text(encoding="utf-8")), schema)


def write_histograms(outdir: Path, records: Sequence[ValidationRecord], bins: int) -> list[Path]:
    paths = []
    series = histogram_values(records)
    for metric in HISTOGRAM_METRICS:
        values = [v for v in series[metric] if v is not None and not math.isnan(v)]
        rows = emit_histograms(values, HistogramSpec(metric=metric, bins=bins))
        path = outdir / f"hist_{metric}.csv"
        write_histogram_csv(path, rows)
        paths.append(path)
    return paths


def write_diversity(outdir: Path, report: DiversityReport) -> None:
    import csv

    with open(outdir / ARTIFACTS["diversity_csv"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["column", "shannon_index", "categories", "coverage",
                         "underrepresented"])
        for col in report.columns:
            writer.writerow([
                col.name, repr(col.shannon), len(col.counts),
                "" if col.coverage is None else repr(col.coverage),
                "true" if col.underrepresented else "false",
            ])
    lines = ["Diversity report", "================", ""]
    for col in report.columns:
        coverage = "n/a" if col.coverage is None else f"{col.coverage:.3f}"
        lines.append(f"{col.name}: H={col.shannon:.4f} nats, "
                     f"{len(col.counts)} categories, coverage {coverage}")
        for category, count in col.counts.items():
            lines.append(f"    {category}: {count}")
    under = ", ".join(report.underrepresented) or "none"
    lines += ["", f"coverage floor: {report.coverage_floor}",
              f"underrepresented columns: {under}", ""]
    (outdir / ARTIFACTS["diversity_txt"]).write_text("\n".join(lines), encoding="utf-8")


def write_summary(outdir: Path, config: PipelineConfig, cohort: Cohort,
                  validation: ValidationOutput) -> None:
    records = validation.records
    n = len(records)
    flags = {
        "coherence": sum(bool(r.checks.coherence_flagged) for r in records),
        "plausibility": sum(bool(r.checks.plausibility_flagged) for r in records),
        "consistency": sum(bool(r.checks.consistency_flagged) for r in records),
        "anomaly": sum(bool(r.checks.anomaly_flagged) for r in records),
        "hard_range": sum(bool(r.checks.hard_range_flagged) for r in records),
    }
    passed = sum(r.gate_passed for r in records)
    total_rows = sum(len(rows) for rows in cohort.dataset().values())
    lines = [
        "Validation summary",
        "==================",
        f"records (patients): {n}",
        f"dataset rows: {total_rows}",
        f"backend: {cohort.backend_id}  base_seed: {cohort.base_seed}",
        "",
        f"coherence threshold: {validation.coherence_threshold}",
        f"perplexity threshold (p{config.validation.perplexity_percentile:g}): "
        f"{validation.perplexity_threshold!r}",
        f"anomaly threshold (mean + 2*std): {validation.anomaly_threshold!r}",
        "",
        "flagged records per check:",
    ]
    lines += [f"    {name}: {count}" for name, count in flags.items()]
    lines += [
        f"anomaly rows dropped for missing values: {validation.anomaly_dropped}",
        "",
        f"gate passed: {passed}/{n}",
        f"underrepresented diversity columns: "
        f"{', '.join(validation.diversity.underrepresented) or 'none'}",
        "",
    ]
    (outdir / ARTIFACTS["summary"]).write_text("\n".join(lines), encoding="utf-8")


def gated_dataset(cohort: Cohort,
                  records: Sequence[ValidationRecord]) -> dict[str, list[dict]]:
    """Reference rows plus the rows of every record that passed the gate."""
    gated = {t: [dict(r) for r in rows] for t, rows in cohort.reference.items()}
    passed = {r.checks.record_id for r in records if r.gate_passed}
    for bundle in cohort.bundles:
        if bundle.patient_id not in passed:
            continue
        for table, rows in bundle.rows.items():
            gated.setdefault(table, []).extend(dict(r) for r in rows)
    return gated


def write_quarantine(path: Path, cohort: Cohort,
                     records: Sequence[ValidationRecord]) -> int:
    """Failed records with reasons, persisted for review. Returns the count."""
    failed_by_id = {r.checks.record_id: r for r in records if not r.gate_passed}
    entries = []
    for bundle in cohort.bundles:
        record = failed_by_id.get(bundle.patient_id)
        if record is None:
            continue
        entries.append({
            "record_id": bundle.patient_id,
            "reasons": record.reasons,
            "rows": {t: _rows_to_json(rows) for t, rows in bundle.rows.items()},
        })
    path.write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")
    return len(entries)


def stage_emit_sql(outdir: Path, schema: SchemaDef, cohort: Cohort,
                   records: Sequence[ValidationRecord],
                   batch_rows: int = 500) -> tuple[Path, Path]:
    schema_path = outdir / ARTIFACTS["schema_sql"]
    schema_path.write_text(emit_ddl(schema), encoding="utf-8")
    gated_path = outdir / ARTIFACTS["gated_sql"]
    gated_path.write_text(
        emit_inserts(gated_dataset(cohort, records), schema, batch_rows=batch_rows),
        encoding="utf-8",
    )
    return schema_path, gated_path


def stage_load(config: PipelineConfig, schema: SchemaDef,
               dataset: dict[str, list[dict]], init: bool = True) -> LoadSummary:
    import os

    url = config.load.database_url or os.environ.get("EHRSYNTH_DATABASE_URL", "")
    if not url:
        raise StageError(
            "load: no database URL ([load] database_url or EHRSYNTH_DATABASE_URL)"
        )
    return load_database(url, schema, dataset=dataset, init=init)


@dataclass
class PipelineResult:
    outdir: Path
    records: int
    gate_passed: int
    quarantined: int
    load_summary: Optional[LoadSummary] = None
    artifacts: dict[str, Path] = field(default_factory=dict)


def run_pipeline(
    config: PipelineConfig,
    outdir: str | Path,
    schema: Optional[SchemaDef] = None,
    do_load: bool = False,
    write_quarantine_file: bool = True,
) -> PipelineResult:
    """All stages end to end, writing the full artifact set into outdir."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    schema = schema or build_default_schema()

    cohort = stage_generate(config, schema)
    write_cohort(outdir / ARTIFACTS["cohort"], cohort)

    validation = stage_validate(config, schema, cohort)
    write_validation_csv(outdir / ARTIFACTS["validation"], validation.records)
    write_validation_meta(outdir / ARTIFACTS["validation_meta"], validation)
    write_histograms(outdir, validation.records, config.scoring.histogram_bins)
    write_diversity(outdir, validation.diversity)
    write_summary(outdir, config, cohort, validation)

    stage_emit_sql(outdir, schema, cohort, validation.records,
                   batch_rows=config.load.batch_rows)
    quarantined = 0
    if write_quarantine_file:
        quarantined = write_quarantine(outdir / ARTIFACTS["quarantine"], cohort,
                                       validation.records)

    load_summary = None
    if do_load:
        load_summary = stage_load(config, schema, gated_dataset(cohort, validation.records))

    artifacts = {name: outdir / fname for name, fname in ARTIFACTS.items()}
    for metric in HISTOGRAM_METRICS:
        artifacts[f"hist_{metric}"] = outdir / f"hist_{metric}.csv"
    return PipelineResult(
        outdir=outdir,
        records=len(validation.records),
        gate_passed=sum(r.gate_passed for r in validation.records),
        quarantined=quarantined,
        load_summary=load_summary,
        artifacts=artifacts,
    )
