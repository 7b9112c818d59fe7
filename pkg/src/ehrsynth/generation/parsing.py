"""Parsing of structured completions into typed records.

Completions carry one fenced ``record`` block of ``field: value`` lines; any
prose around the block is tolerated, and the first well-formed block wins.
"""
from __future__ import annotations

import re
from datetime import date, datetime
from typing import Mapping, Sequence

from ..schema import ColumnDef

_BLOCK_RE = re.compile(r"```(?:record)?[ \t]*\n(.*?)```", re.DOTALL)
_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")


class ParseError(ValueError):
    """The completion lacks a usable record block or a required field."""


def extract_block(text: str) -> dict[str, str]:
    """Pull raw field/value strings out of the first fenced block."""
    m = _BLOCK_RE.search(text)
    if not m:
        raise ParseError("no fenced record block found in completion")
    fields: dict[str, str] = {}
    for line in m.group(1).splitlines():
        line = line.strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ParseError(f"malformed record line (no colon): {line!r}")
        fields[key.strip()] = value.strip()
    if not fields:
        raise ParseError("record block is empty")
    return fields


def _coerce(raw: str, col: ColumnDef) -> object:
    if raw == "" or raw.lower() in ("null", "none"):
        if col.nullable:
            return None
        raise ParseError(f"field {col.name!r} is empty but not nullable")
    kind = col.kind
    if kind == "integer":
        m = _NUMBER_RE.search(raw)
        if not m or "." in m.group(0):
            raise ParseError(f"field {col.name!r}: expected integer, got {raw!r}")
        return int(m.group(0))
    if kind == "decimal":
        m = _NUMBER_RE.search(raw)
        if not m:
            raise ParseError(f"field {col.name!r}: expected number, got {raw!r}")
        return float(m.group(0))  # units like "172 cm" are stripped
    if kind == "boolean":
        lowered = raw.lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise ParseError(f"field {col.name!r}: expected boolean, got {raw!r}")
    if kind == "date":
        try:
            return date.fromisoformat(raw[:10])
        except ValueError:
            raise ParseError(f"field {col.name!r}: expected YYYY-MM-DD, got {raw!r}") from None
    if kind == "timestamp":
        try:
            return datetime.fromisoformat(raw.replace("T", " ")[:19])
        except ValueError:
            raise ParseError(f"field {col.name!r}: expected timestamp, got {raw!r}") from None
    if kind == "enum":
        if raw in col.enum_values:
            return raw
        lowered = raw.lower()
        for v in col.enum_values:
            if v.lower() == lowered:
                return v
        raise ParseError(
            f"field {col.name!r}: {raw!r} not one of {list(col.enum_values)}"
        )
    return raw  # text


def parse_structured_output(text: str, spec: Sequence[ColumnDef]) -> dict[str, object]:
    """Parse a completion into a record with exactly the spec's fields, typed."""
    raw = extract_block(text)
    record: dict[str, object] = {}
    for col in spec:
        if col.name not in raw:
            raise ParseError(f"required field {col.name!r} missing from completion")
        record[col.name] = _coerce(raw[col.name], col)
    return record


def columns_for_spec(table_columns: Mapping[str, ColumnDef] | Sequence[ColumnDef],
                     names: Sequence[str]) -> list[ColumnDef]:
    if isinstance(table_columns, Mapping):
        lookup = table_columns
    else:
        lookup = {c.name: c for c in table_columns}
    return [lookup[n] for n in names]
