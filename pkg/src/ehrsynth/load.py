"""SQL emission, referential-integrity verification, and live database loads.

SQL files are the portable artifact: portable standard SQL, multi-row INSERT
batches, FK-safe statement order. Live loading speaks to SQLite through the
stdlib driver and to PostgreSQL-wire databases through psycopg2 when that
driver is installed; either way all rows go in one transaction that rolls
back completely on any failure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Mapping, Optional, Sequence

from .schema import SchemaDef, SchemaMismatch, topological_order

DEFAULT_BATCH_ROWS = 500


class DatabaseError(RuntimeError):
    pass


class ConnectionFailed(DatabaseError):
    pass


class ConstraintViolation(DatabaseError):
    """A statement was rejected; the transaction has been rolled back."""

    def __init__(self, message: str, statement: str = ""):
        super().__init__(message)
        self.statement = statement


@dataclass(frozen=True)
class FkViolation:
    table: str
    column: str
    value: object

    def __str__(self) -> str:
        return f"{self.table}.{self.column} -> {self.value!r} has no target row"


@dataclass
class LoadSummary:
    rows_per_table: dict[str, int] = field(default_factory=dict)
    committed: bool = False

    @property
    def total_rows(self) -> int:
        return sum(self.rows_per_table.values())


def sql_literal(value: object) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, datetime):
        return "'" + value.strftime("%Y-%m-%d %H:%M:%S") + "'"
    if isinstance(value, date):
        return "'" + value.isoformat() + "'"
    return "'" + str(value).replace("'", "''") + "'"


def emit_inserts(
    dataset: Mapping[str, Sequence[Mapping]],
    schema: SchemaDef,
    batch_rows: int = DEFAULT_BATCH_ROWS,
) -> str:
    """Multi-row INSERT statements grouped per table in FK-safe order.

    Byte-deterministic for fixed input. Raises SchemaMismatch when a row's
    keys disagree with its table's columns.
    """
    statements = []
    for table_name in topological_order(schema):
        rows = dataset.get(table_name, ())
        if not rows:
            continue
        table = schema.table(table_name)
        columns = table.column_names
        expected = set(columns)
        for start in range(0, len(rows), batch_rows):
            chunk = rows[start:start + batch_rows]
            tuples = []
            for row in chunk:
                if set(row) != expected:
                    raise SchemaMismatch(
                        f"row for {table_name!r} has columns {sorted(row)}, "
                        f"expected {sorted(expected)}"
                    )
                tuples.append("(" + ", ".join(sql_literal(row[c]) for c in columns) + ")")
            body = ",\n".join(tuples)
            statements.append(
                f"INSERT INTO {table_name} ({', '.join(columns)}) VALUES\n{body};"
            )
    return "\n\n".join(statements) + ("\n" if statements else "")


def verify_referential_integrity(
    dataset: Mapping[str, Sequence[Mapping]],
    schema: SchemaDef,
) -> list[FkViolation]:
    """One violation per FK value with no matching target row; empty iff closed."""
    violations: list[FkViolation] = []
    targets: dict[tuple[str, str], set] = {}
    for table in schema.tables:
        for fk in table.foreign_keys:
            key = (fk.target_table, fk.target_column)
            if key not in targets:
                targets[key] = {
                    row.get(fk.target_column)
                    for row in dataset.get(fk.target_table, ())
                }
    for table in schema.tables:
        if not table.foreign_keys:
            continue
        for row in dataset.get(table.name, ()):
            for fk in table.foreign_keys:
                value = row.get(fk.column)
                if value is None:
                    continue
                if value not in targets[(fk.target_table, fk.target_column)]:
                    violations.append(FkViolation(table.name, fk.column, value))
    return violations


def split_sql_statements(sql: str) -> list[str]:
    """Split on top-level semicolons, respecting single-quoted literals."""
    statements = []
    current = []
    in_string = False
    i = 0
    while i < len(sql):
        ch = sql[i]
        if in_string:
            if ch == "'":
                if i + 1 < len(sql) and sql[i + 1] == "'":
                    current.append("''")
                    i += 2
                    continue
                in_string = False
            current.append(ch)
        elif ch == "'":
            in_string = True
            current.append(ch)
        elif ch == ";":
            stmt = "".join(current).strip()
            if stmt:
                statements.append(stmt)
            current = []
        else:
            current.append(ch)
        i += 1
    tail = "".join(current).strip()
    if tail:
        statements.append(tail)
    return statements


# ---------------------------------------------------------------------------
# Live database connections
# ---------------------------------------------------------------------------

class _Connection:
    """Thin driver adapter: execute/commit/rollback plus parameter formatting."""

    def __init__(self, raw, placeholder: str):
        self.raw = raw
        self.placeholder = placeholder

    def execute(self, sql: str, params: Optional[Sequence] = None):
        cur = self.raw.cursor()
        cur.execute(sql, params or ())
        return cur

    def executemany(self, sql: str, rows: Sequence[Sequence]):
        cur = self.raw.cursor()
        cur.executemany(sql, rows)
        return cur

    def commit(self) -> None:
        self.raw.commit()

    def rollback(self) -> None:
        self.raw.rollback()

    def close(self) -> None:
        self.raw.close()


def connect(url: str) -> _Connection:
    """Open a connection from a URL-style string.

    sqlite:///path/to.db or sqlite:///:memory: use the stdlib driver with FK
    enforcement on; postgresql://... requires psycopg2 at runtime.
    """
    if url.startswith("sqlite:///"):
        import sqlite3

        path = url[len("sqlite:///"):]
        try:
            raw = sqlite3.connect(path)
        except sqlite3.Error as exc:
            raise ConnectionFailed(f"cannot open {url}: {exc}") from exc
        raw.execute("PRAGMA foreign_keys = ON")
        return _Connection(raw, "?")
    if url.startswith(("postgresql://", "postgres://")):
        try:
            import psycopg2  # optional dependency, never required for SQL emission
        except ImportError as exc:
            raise ConnectionFailed(
                "postgresql URLs require the psycopg2 driver to be installed"
            ) from exc
        try:
            raw = psycopg2.connect(url)
        except Exception as exc:
            raise ConnectionFailed(f"cannot connect to {url}: {exc}") from exc
        return _Connection(raw, "%s")
    raise ConnectionFailed(f"unsupported database URL: {url!r}")


def _param_value(value: object) -> object:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, datetime):
        return value.strftime("%Y-%m-%d %H:%M:%S")
    if isinstance(value, date):
        return value.isoformat()
    return value


def apply_ddl(conn: _Connection, ddl: str) -> None:
    for statement in split_sql_statements(ddl):
        try:
            conn.execute(statement)
        except Exception as exc:
            conn.rollback()
            raise ConstraintViolation(f"DDL rejected: {exc}", statement=statement) from exc
    conn.commit()


def load_database(
    url: str,
    schema: SchemaDef,
    dataset: Optional[Mapping[str, Sequence[Mapping]]] = None,
    sql: Optional[str] = None,
    init: bool = False,
    ddl: Optional[str] = None,
) -> LoadSummary:
    """Insert a dataset (or raw SQL) in one transaction; rollback on failure.

    Exactly one of dataset/sql must be given. With init=True the schema DDL
    is applied (and committed) before the data transaction starts.
    """
    if (dataset is None) == (sql is None):
        raise ValueError("provide exactly one of dataset or sql")
    conn = connect(url)
    summary = LoadSummary()
    try:
        if init:
            from .schema import emit_ddl

            apply_ddl(conn, ddl if ddl is not None else emit_ddl(schema))
        if dataset is not None:
            for table_name in topological_order(schema):
                rows = dataset.get(table_name, ())
                if not rows:
                    continue
                columns = schema.table(table_name).column_names
                placeholders = ", ".join([conn.placeholder] * len(columns))
                statement = (
                    f"INSERT INTO {table_name} ({', '.join(columns)}) "
                    f"VALUES ({placeholders})"
                )
                params = [
                    tuple(_param_value(row.get(c)) for c in columns) for row in rows
                ]
                try:
                    conn.executemany(statement, params)
                except Exception as exc:
                    conn.rollback()
                    raise ConstraintViolation(
                        f"insert into {table_name} rejected: {exc}", statement=statement
                    ) from exc
                summary.rows_per_table[table_name] = len(rows)
        else:
            counts: dict[str, int] = {}
            for statement in split_sql_statements(sql or ""):
                try:
                    conn.execute(statement)
                except Exception as exc:
                    conn.rollback()
                    raise ConstraintViolation(
                        f"statement rejected: {exc}",
                        statement=statement[:400],
                    ) from exc
                if statement.upper().startswith("INSERT INTO "):
                    table_name = statement.split()[2]
                    counts[table_name] = counts.get(table_name, 0) + statement.count("\n(")
            summary.rows_per_table = counts
        conn.commit()
        summary.committed = True
        return summary
    finally:
        conn.close()


def read_dataset(url: str, schema: SchemaDef) -> dict[str, list[dict]]:
    """Read every table back with values re-typed per the schema's kinds."""
    conn = connect(url)
    try:
        out: dict[str, list[dict]] = {}
        for table in schema.tables:
            cur = conn.execute(
                f"SELECT {', '.join(table.column_names)} FROM {table.name} "
                f"ORDER BY {table.primary_key}"
            )
            rows = []
            for values in cur.fetchall():
                row = {}
                for col, value in zip(table.columns, values):
                    if value is None:
                        row[col.name] = None
                    elif col.kind == "date":
                        row[col.name] = date.fromisoformat(str(value))
                    elif col.kind == "timestamp":
                        row[col.name] = datetime.fromisoformat(str(value))
                    elif col.kind == "boolean":
                        row[col.name] = bool(int(value)) if not isinstance(value, bool) else value
                    elif col.kind == "integer":
                        row[col.name] = int(value)
                    elif col.kind == "decimal":
                        row[col.name] = float(value)
                    else:
                        row[col.name] = value
                rows.append(row)
            out[table.name] = rows
        return out
    finally:
        conn.close()
