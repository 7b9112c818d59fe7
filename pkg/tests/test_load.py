from __future__ import annotations

import copy
import sqlite3

import pytest

from ehrsynth.load import (ConnectionFailed, ConstraintViolation, connect,
                           emit_inserts, load_database, read_dataset,
                           split_sql_statements, sql_literal,
                           verify_referential_integrity)
from ehrsynth.pipeline import gated_dataset
from ehrsynth.schema import SchemaMismatch, emit_ddl, topological_order


@pytest.fixture()
def dataset(small_cohort):
    return small_cohort.dataset()


class TestSqlLiteral:
    def test_quote_escaping(self):
        assert sql_literal("O'Brien; DROP") == "'O''Brien; DROP'"

    def test_null_and_bool(self):
        assert sql_literal(None) == "NULL"
        assert sql_literal(True) == "TRUE"
        assert sql_literal(False) == "FALSE"

    def test_dates(self):
        from datetime import date, datetime

        assert sql_literal(date(2024, 1, 2)) == "'2024-01-02'"
        assert sql_literal(datetime(2024, 1, 2, 3, 4, 5)) == "'2024-01-02 03:04:05'"


class TestEmitInserts:
    def test_empty_dataset_empty_text(self, schema):
        assert emit_inserts({}, schema) == ""

    def test_insert_order_respects_fk_edges(self, schema, dataset):
        sql = emit_inserts(dataset, schema)
        order = topological_order(schema)
        positions = {}
        for name in order:
            idx = sql.find(f"INSERT INTO {name} ")
            if idx != -1:
                positions[name] = idx
        for table in schema.tables:
            if table.name not in positions:
                continue
            for fk in table.foreign_keys:
                assert positions[fk.target_table] < positions[table.name]

    def test_deterministic_bytes(self, schema, dataset):
        assert emit_inserts(dataset, schema) == emit_inserts(dataset, schema)

    def test_schema_mismatch_detected(self, schema, dataset):
        broken = copy.deepcopy(dataset)
        broken["allergies"][0].pop("allergen")
        with pytest.raises(SchemaMismatch):
            emit_inserts(broken, schema)

    def test_batching_splits_statements(self, schema, dataset):
        sql = emit_inserts(dataset, schema, batch_rows=2)
        biggest = max(len(rows) for rows in dataset.values())
        assert sql.count("INSERT INTO visit_logs") == -(-len(dataset["visit_logs"]) // 2)
        assert biggest > 2  # the batching path is actually exercised


class TestSplitStatements:
    def test_semicolon_inside_literal_preserved(self):
        sql = "INSERT INTO t (x) VALUES ('a;b');\nINSERT INTO t (x) VALUES ('c''d;');"
        statements = split_sql_statements(sql)
        assert len(statements) == 2
        assert "a;b" in statements[0]
        assert "c''d;" in statements[1]

    def test_trailing_statement_without_semicolon(self):
        assert split_sql_statements("SELECT 1") == ["SELECT 1"]


class TestVerifyIntegrity:
    def test_gated_cohort_is_closed(self, schema, dataset):
        assert verify_referential_integrity(dataset, schema) == []

    def test_single_mutated_fk_caught_exactly_once(self, schema, dataset):
        broken = copy.deepcopy(dataset)
        broken["allergies"][0]["patient_id"] = 999999
        violations = verify_referential_integrity(broken, schema)
        assert len(violations) == 1
        v = violations[0]
        assert (v.table, v.column, v.value) == ("allergies", "patient_id", 999999)

    def test_empty_dataset_clean(self, schema):
        assert verify_referential_integrity({}, schema) == []

    def test_null_fk_not_a_violation(self, schema, dataset):
        relaxed = copy.deepcopy(dataset)
        relaxed["immunizations"][0]["administered_by"] = None
        assert verify_referential_integrity(relaxed, schema) == []


class TestLoadDatabase:
    def test_unsupported_url(self, schema):
        with pytest.raises(ConnectionFailed):
            connect("mysql://nope")

    def test_dataset_load_and_round_trip(self, schema, dataset, tmp_path):
        url = f"sqlite:///{tmp_path / 'ehr.db'}"
        summary = load_database(url, schema, dataset=dataset, init=True)
        assert summary.committed
        assert summary.total_rows == sum(len(r) for r in dataset.values())
        restored = read_dataset(url, schema)
        for table, rows in dataset.items():
            key = schema.table(table).primary_key
            by_id = {r[key]: r for r in restored[table]}
            assert len(by_id) == len(rows)
            for row in rows:
                loaded = by_id[row[key]]
                for column, value in row.items():
                    if isinstance(value, float):
                        assert loaded[column] == pytest.approx(value)
                    else:
                        assert loaded[column] == value, (table, column)

    def test_sql_load_matches_dataset_load(self, schema, dataset, tmp_path):
        sql = emit_inserts(dataset, schema)
        url = f"sqlite:///{tmp_path / 'from_sql.db'}"
        summary = load_database(url, schema, sql=sql, init=True)
        assert summary.committed
        assert summary.total_rows == sum(len(r) for r in dataset.values())
        conn = sqlite3.connect(str(tmp_path / "from_sql.db"))
        conn.execute("PRAGMA foreign_keys = ON")
        assert conn.execute("PRAGMA foreign_key_check").fetchall() == []

    def test_fk_violation_rolls_back_completely(self, schema, dataset, tmp_path):
        broken = copy.deepcopy(dataset)
        broken["allergies"][0]["patient_id"] = 999999
        db_path = tmp_path / "broken.db"
        url = f"sqlite:///{db_path}"
        with pytest.raises(ConstraintViolation) as err:
            load_database(url, schema, dataset=broken, init=True)
        assert "allergies" in str(err.value)
        conn = sqlite3.connect(str(db_path))
        for table in schema.table_names:
            count = conn.execute(f"SELECT COUNT(*) FROM {table}").fetchone()[0]
            assert count == 0, f"{table} kept rows after rollback"

    def test_verifier_equivalent_to_database_enforcement(self, schema, dataset, tmp_path):
        # verifier passes -> database load commits cleanly
        assert verify_referential_integrity(dataset, schema) == []
        url = f"sqlite:///{tmp_path / 'clean.db'}"
        assert load_database(url, schema, dataset=dataset, init=True).committed
        # injected violation -> both the verifier and the database reject
        broken = copy.deepcopy(dataset)
        broken["medications"][0]["plan_id"] = 424242
        assert len(verify_referential_integrity(broken, schema)) == 1
        with pytest.raises(ConstraintViolation):
            load_database(f"sqlite:///{tmp_path / 'dirty.db'}", schema,
                          dataset=broken, init=True)

    def test_exactly_one_of_dataset_or_sql(self, schema):
        with pytest.raises(ValueError):
            load_database("sqlite:///:memory:", schema)

    def test_empty_input_trivially_succeeds(self, schema, tmp_path):
        url = f"sqlite:///{tmp_path / 'empty.db'}"
        summary = load_database(url, schema, dataset={}, init=True)
        assert summary.committed
        assert summary.total_rows == 0

    def test_hard_range_check_constraint_enforced(self, schema, tmp_path):
        # the emitted DDL carries hard-range CHECKs: potassium 15 must bounce
        url = f"sqlite:///{tmp_path / 'check.db'}"
        conn = connect(url)
        for statement in split_sql_statements(emit_ddl(schema)):
            conn.execute(statement)
        conn.commit()
        with pytest.raises(Exception):
            conn.execute(
                "INSERT INTO patient_details (patient_id, first_name, last_name, "
                "date_of_birth, age_years, gender, ethnicity, region, blood_group, "
                "phone, address) VALUES (1, 'A', 'B', '1990-01-01', 200, 'female', "
                "'asian', 'west', 'A+', 'x', 'y')"
            )
        conn.close()
