from __future__ import annotations

import csv
import json
import sqlite3
from pathlib import Path

import pytest

from ehrsynth.cli import main
from ehrsynth.config import ConfigError, load_config
from ehrsynth.pipeline import run_pipeline
from ehrsynth.report import read_validation_csv


def run_cli(*args) -> int:
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipeline")
    code = run_cli("pipeline", "--patients", 8, "--seed", 5,
                   "--backend", "grammar", "--out", out)
    assert code == 0
    return out


EXPECTED_FILES = (
    "cohort.json", "validation.csv", "summary.txt", "diversity.csv",
    "diversity.txt", "schema.sql", "gated.sql", "quarantine.json",
    "hist_nsp_avg.csv", "hist_perplexity.csv", "hist_recon_error.csv",
    "hist_consistency.csv", "hist_combined.csv",
)


class TestPipelineCommand:
    def test_artifacts_exist(self, pipeline_dir):
        for name in EXPECTED_FILES:
            assert (pipeline_dir / name).exists(), name

    def test_histogram_counts_sum_to_records(self, pipeline_dir):
        records = read_validation_csv(pipeline_dir / "validation.csv")
        for name in EXPECTED_FILES:
            if not name.startswith("hist_"):
                continue
            with open(pipeline_dir / name, newline="") as fh:
                rows = list(csv.DictReader(fh))
            assert sum(int(r["count"]) for r in rows) == len(records), name

    def test_validation_row_per_record(self, pipeline_dir):
        records = read_validation_csv(pipeline_dir / "validation.csv")
        assert len(records) == 8
        ids = [r.checks.record_id for r in records]
        assert len(set(ids)) == 8

    def test_gate_matches_flag_conjunction(self, pipeline_dir):
        for record in read_validation_csv(pipeline_dir / "validation.csv"):
            c = record.checks
            should_pass = not any([c.coherence_flagged, c.plausibility_flagged,
                                   c.consistency_flagged, c.anomaly_flagged,
                                   c.hard_range_flagged])
            assert record.gate_passed == should_pass

    def test_quarantine_holds_every_failed_record(self, pipeline_dir):
        records = read_validation_csv(pipeline_dir / "validation.csv")
        failed = {r.checks.record_id for r in records if not r.gate_passed}
        entries = json.loads((pipeline_dir / "quarantine.json").read_text())
        assert {e["record_id"] for e in entries} == failed
        for entry in entries:
            assert entry["reasons"]

    def test_gated_sql_excludes_failed_records(self, pipeline_dir):
        records = read_validation_csv(pipeline_dir / "validation.csv")
        failed = {r.checks.record_id for r in records if not r.gate_passed}
        sql = (pipeline_dir / "gated.sql").read_text()
        if failed:
            sample = next(iter(failed))
            assert f"({sample}," not in sql  # patient_details tuple starts with the id


class TestStagedCommands:
    def test_stages_rerun_from_intermediates(self, tmp_path):
        out = tmp_path / "staged"
        assert run_cli("generate", "--patients", 5, "--seed", 3, "--out", out) == 0
        assert (out / "cohort.json").exists()
        assert run_cli("validate", "--out", out) == 0
        assert (out / "validation.csv").exists()
        assert run_cli("report", "--out", out) == 0
        assert (out / "hist_combined.csv").exists()
        assert (out / "summary.txt").exists()
        assert run_cli("emit-sql", "--out", out) == 0
        assert (out / "gated.sql").exists()
        db = out / "ehr.db"
        assert run_cli("load", "--out", out, "--database-url", f"sqlite:///{db}") == 0
        conn = sqlite3.connect(str(db))
        count = conn.execute("SELECT COUNT(*) FROM patient_details").fetchone()[0]
        assert count >= 1

    def test_staged_outputs_match_pipeline(self, tmp_path, pipeline_dir):
        out = tmp_path / "staged_match"
        assert run_cli("generate", "--patients", 8, "--seed", 5, "--out", out) == 0
        assert run_cli("validate", "--out", out) == 0
        assert run_cli("emit-sql", "--out", out) == 0
        assert (out / "cohort.json").read_bytes() == \
            (pipeline_dir / "cohort.json").read_bytes()
        assert (out / "validation.csv").read_bytes() == \
            (pipeline_dir / "validation.csv").read_bytes()
        assert (out / "gated.sql").read_bytes() == \
            (pipeline_dir / "gated.sql").read_bytes()

    def test_validate_without_cohort_fails(self, tmp_path):
        assert run_cli("validate", "--out", tmp_path / "nothing") == 1


class TestExitCodes:
    def test_missing_config_exit_2(self, tmp_path, capsys):
        code = run_cli("pipeline", "--config", tmp_path / "absent.ini",
                       "--out", tmp_path / "o")
        assert code == 2
        assert "absent.ini" in capsys.readouterr().err

    def test_bad_config_key_exit_2(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[generation]\nfrobnicate = 7\n")
        assert run_cli("generate", "--config", bad, "--out", tmp_path / "o") == 2

    def test_strict_gate_failures_exit_1(self, tmp_path):
        # seed 5 with 8 patients has at least one gate failure
        code = run_cli("pipeline", "--patients", 8, "--seed", 5,
                       "--out", tmp_path / "strict", "--strict")
        assert code == 1

    def test_remote_backend_without_url_exit_1(self, tmp_path):
        assert run_cli("generate", "--backend", "remote",
                       "--out", tmp_path / "o") == 1


class TestConfigFile:
    def test_values_applied_and_flags_win(self, tmp_path):
        ini = tmp_path / "pipe.ini"
        ini.write_text(
            "[generation]\npatients = 3\nbase_seed = 77\n"
            "[validation]\nperplexity_percentile = 90\n"
            "[scoring]\nw_c = 0.25\n"
            "[anomaly]\nepochs = 50\n"
        )
        config = load_config(ini)
        assert config.generation.patients == 3
        assert config.generation.base_seed == 77
        assert config.validation.perplexity_percentile == 90.0
        assert config.scoring.w_c == 0.25
        assert config.anomaly.epochs == 50
        out = tmp_path / "cfg_out"
        assert run_cli("pipeline", "--config", ini, "--patients", 4, "--out", out) == 0
        cohort = json.loads((out / "cohort.json").read_text())
        assert len(cohort["bundles"]) == 4  # flag wins over config
        assert cohort["base_seed"] == 77  # config applies where no flag given

    def test_unknown_section_rejected(self, tmp_path):
        ini = tmp_path / "bad.ini"
        ini.write_text("[wat]\nx = 1\n")
        with pytest.raises(ConfigError):
            load_config(ini)

    def test_count_overrides(self, tmp_path):
        ini = tmp_path / "counts.ini"
        ini.write_text("[generation]\ncount_hospital_visits = 1,1\n")
        config = load_config(ini)
        assert config.generation.counts["hospital_visits"] == (1, 1)
        ini.write_text("[generation]\ncount_bogus_table = 1,1\n")
        with pytest.raises(ConfigError):
            load_config(ini)


class TestRemoteScorersEndToEnd:
    def test_pipeline_with_mock_remote_scorers(self, tmp_path, mock_server):
        out = tmp_path / "remote"
        code = run_cli(
            "pipeline", "--patients", 4, "--seed", 2, "--out", out,
            "--scorers", "remote", "--scorer-url", mock_server.base_url,
        )
        assert code == 0
        records = read_validation_csv(out / "validation.csv")
        assert len(records) == 4
        # remote lexical scorer plus the remote default threshold 0.99 flags
        # every record; the builtin default threshold would not
        assert all(r.checks.coherence_flagged for r in records)

    def test_pipeline_with_remote_completion_backend(self, tmp_path, mock_server):
        out = tmp_path / "remote_gen"
        code = run_cli(
            "pipeline", "--patients", 2, "--seed", 4, "--out", out,
            "--backend", "remote", "--remote-url", mock_server.base_url,
        )
        assert code == 0
        cohort = json.loads((out / "cohort.json").read_text())
        assert cohort["backend_id"] == "remote"
        assert len(cohort["bundles"]) == 2


class TestRunPipelineApi:
    def test_do_load_into_sqlite(self, tmp_path):
        from dataclasses import replace

        config = load_config(None)
        config = replace(
            config,
            generation=replace(config.generation, patients=3, base_seed=6),
            load=replace(config.load,
                         database_url=f"sqlite:///{tmp_path / 'direct.db'}"),
        )
        result = run_pipeline(config, tmp_path / "api_out", do_load=True)
        assert result.load_summary is not None
        assert result.load_summary.committed
        assert result.records == 3
