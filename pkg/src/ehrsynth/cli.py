"""Command-line interface: generate, validate, report, emit-sql, load, pipeline.

Flags mirror config keys and win over the config file. Exit codes: 0 success,
1 validation-gate failures under --strict (or a failed stage), 2 configuration
errors.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, PipelineConfig, load_config
from .errors import EmptyScores
from .generation.backends import GenerationFailed
from .load import ConstraintViolation, DatabaseError, load_database
from .pipeline import (ARTIFACTS, StageError, read_cohort, run_pipeline,
                       stage_emit_sql, stage_generate, stage_validate,
                       write_cohort, write_diversity, write_histograms,
                       write_quarantine, write_summary, write_validation_meta)
from .report import read_validation_csv, write_validation_csv
from .schema import build_default_schema, load_schema


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--out", default="out", help="artifact directory (default: out)")
    parser.add_argument("--schema-file", help="JSON schema file overriding the default schema")


def _add_generation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--patients", type=int)
    parser.add_argument("--seed", type=int, help="base seed (per-patient seed is base + index)")
    parser.add_argument("--backend", choices=("grammar", "remote"))
    parser.add_argument("--workers", type=int)
    parser.add_argument("--remote-url", help="completion endpoint base URL")


def _add_validation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scorers", choices=("builtin", "remote"))
    parser.add_argument("--scorer-url", help="remote scorer base URL")
    parser.add_argument("--coherence-threshold", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehrsynth",
        description="Synthetic EHR generation, validation gates, and SQL loading",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a cohort file")
    _add_common(p)
    _add_generation_flags(p)

    p = sub.add_parser("validate", help="validate a cohort file")
    _add_common(p)
    _add_validation_flags(p)
    p.add_argument("--strict", action="store_true",
                   help="exit 1 when any record fails the gate")

    p = sub.add_parser("report", help="emit histograms, diversity, and summary")
    _add_common(p)

    p = sub.add_parser("emit-sql", help="emit schema.sql and gated.sql")
    _add_common(p)
    p.add_argument("--batch-rows", type=int)
    p.add_argument("--quarantine", dest="quarantine", action="store_true", default=True)
    p.add_argument("--no-quarantine", dest="quarantine", action="store_false")

    p = sub.add_parser("load", help="load emitted SQL into a live database")
    _add_common(p)
    p.add_argument("--database-url", help="sqlite:///... or postgresql://...")
    p.add_argument("--init", dest="init", action="store_true", default=True,
                   help="apply schema DDL before inserting (default)")
    p.add_argument("--no-init", dest="init", action="store_false")

    p = sub.add_parser("pipeline", help="run every stage end to end")
    _add_common(p)
    _add_generation_flags(p)
    _add_validation_flags(p)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--load", dest="do_load", action="store_true",
                   help="also load the gated cohort into the configured database")
    p.add_argument("--database-url")
    p.add_argument("--batch-rows", type=int)
    p.add_argument("--quarantine", dest="quarantine", action="store_true", default=True)
    p.add_argument("--no-quarantine", dest="quarantine", action="store_false")

    return parser


def apply_overrides(config: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    gen, val, lod = config.generation, config.validation, config.load
    if getattr(args, "patients", None) is not None:
        gen = replace(gen, patients=args.patients)
    if getattr(args, "seed", None) is not None:
        gen = replace(gen, base_seed=args.seed)
    if getattr(args, "backend", None):
        gen = replace(gen, backend=args.backend)
    if getattr(args, "workers", None) is not None:
        gen = replace(gen, workers=args.workers)
    if getattr(args, "remote_url", None):
        gen = replace(gen, remote_url=args.remote_url)
    if getattr(args, "scorers", None):
        val = replace(val, scorers=args.scorers)
    if getattr(args, "scorer_url", None):
        val = replace(val, remote_url=args.scorer_url)
    if getattr(args, "coherence_threshold", None) is not None:
        val = replace(val, coherence_threshold=args.coherence_threshold)
    if getattr(args, "database_url", None):
        lod = replace(lod, database_url=args.database_url)
    if getattr(args, "batch_rows", None) is not None:
        lod = replace(lod, batch_rows=args.batch_rows)
    return replace(config, generation=gen, validation=val, load=lod)


def _schema(args: argparse.Namespace):
    if getattr(args, "schema_file", None):
        path = Path(args.schema_file)
        if not path.exists():
            raise ConfigError(f"schema file not found: {path}")
        return load_schema(path)
    return build_default_schema()


def _write_meta(outdir: Path, validation) -> None:
    write_validation_meta(outdir / ARTIFACTS["validation_meta"], validation)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = apply_overrides(load_config(args.config), args)
        schema = _schema(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "generate":
            cohort = stage_generate(config, schema)
            write_cohort(outdir / ARTIFACTS["cohort"], cohort)
            rows = sum(len(r) for r in cohort.dataset().values())
            print(f"generated {len(cohort.bundles)} patients, {rows} rows "
                  f"-> {outdir / ARTIFACTS['cohort']}")
            return 0

        if args.command == "validate":
            cohort = read_cohort(outdir / ARTIFACTS["cohort"], schema)
            validation = stage_validate(config, schema, cohort)
            write_validation_csv(outdir / ARTIFACTS["validation"], validation.records)
            _write_meta(outdir, validation)
            passed = sum(r.gate_passed for r in validation.records)
            print(f"validated {len(validation.records)} records, gate passed {passed}")
            if args.strict and passed < len(validation.records):
                return 1
            return 0

        if args.command == "report":
            cohort = read_cohort(outdir / ARTIFACTS["cohort"], schema)
            validation = stage_validate(config, schema, cohort)
            write_histograms(outdir, validation.records, config.scoring.histogram_bins)
            write_diversity(outdir, validation.diversity)
            write_summary(outdir, config, cohort, validation)
            _write_meta(outdir, validation)
            print(f"report artifacts written to {outdir}")
            return 0

        if args.command == "emit-sql":
            cohort = read_cohort(outdir / ARTIFACTS["cohort"], schema)
            csv_path = outdir / ARTIFACTS["validation"]
            if csv_path.exists():
                records = read_validation_csv(csv_path)
            else:
                validation = stage_validate(config, schema, cohort)
                write_validation_csv(csv_path, validation.records)
                _write_meta(outdir, validation)
                records = validation.records
            schema_path, gated_path = stage_emit_sql(
                outdir, schema, cohort, records, batch_rows=config.load.batch_rows)
            if args.quarantine:
                n = write_quarantine(outdir / ARTIFACTS["quarantine"], cohort, records)
                print(f"quarantined {n} records -> {outdir / ARTIFACTS['quarantine']}")
            print(f"wrote {schema_path} and {gated_path}")
            return 0

        if args.command == "load":
            import os

            url = (getattr(args, "database_url", None) or config.load.database_url
                   or os.environ.get("EHRSYNTH_DATABASE_URL", ""))
            if not url:
                raise ConfigError(
                    "load needs --database-url, [load] database_url, "
                    "or EHRSYNTH_DATABASE_URL"
                )
            schema_sql = (outdir / ARTIFACTS["schema_sql"])
            gated_sql = (outdir / ARTIFACTS["gated_sql"])
            if not gated_sql.exists():
                raise StageError(f"load: {gated_sql} not found (run emit-sql first)")
            summary = load_database(
                url, schema,
                sql=gated_sql.read_text(encoding="utf-8"),
                init=args.init,
                ddl=schema_sql.read_text(encoding="utf-8") if schema_sql.exists() else None,
            )
            print(f"loaded {summary.total_rows} rows into {url}")
            for table, count in sorted(summary.rows_per_table.items()):
                print(f"    {table}: {count}")
            return 0

        if args.command == "pipeline":
            result = run_pipeline(
                config, outdir, schema=schema,
                do_load=args.do_load,
                write_quarantine_file=args.quarantine,
            )
            print(f"pipeline complete: {result.records} records, "
                  f"{result.gate_passed} passed the gate, "
                  f"{result.quarantined} quarantined -> {outdir}")
            if result.load_summary is not None:
                print(f"loaded {result.load_summary.total_rows} rows")
            if args.strict and result.gate_passed < result.records:
                return 1
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (StageError, GenerationFailed, EmptyScores) as exc:
        print(f"stage failed: {exc}", file=sys.stderr)
        return 1
    except ConstraintViolation as exc:
        print(f"load failed (rolled back): {exc}", file=sys.stderr)
        if exc.statement:
            print(f"offending statement: {exc.statement[:200]}", file=sys.stderr)
        return 1
    except DatabaseError as exc:
        print(f"database error: {exc}", file=sys.stderr)
        return 1

    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
