"""Record persistence: JSON-lines documents, RFC 4180 CSV, portable SQL scripts.

Each sink also has a reader so records can be recovered for analytics;
``read_records`` picks the reader from the file extension.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import sqlite3
from decimal import Decimal
from pathlib import Path
from typing import Iterator, List, Optional

from .errors import SinkClosedError, UnsupportedSchemaError
from .records import (DATE, DECIMAL, HASH, HEX, INTEGER, NESTED, RECORD_TYPES, SCHEMAS,
                      STRING, ViewSchema, to_row)

log = logging.getLogger(__name__)

SQL_BATCH_SIZE = 500
SQL_TYPES = {
    HASH: "CHAR(64)",
    DATE: "DATE",
    INTEGER: "BIGINT",
    DECIMAL: "DECIMAL(16,8)",
    STRING: "TEXT",
    HEX: "TEXT",
    NESTED: "TEXT",
}


def _decimal_text(value) -> str:
    return format(Decimal(value), "f")


def _json_compact(value) -> str:
    return json.dumps(value, ensure_ascii=False, separators=(",", ":"))


class RecordSink:
    """open(schema) -> write(record)* -> close(). Usable as a context manager
    once opened: ``with sink.open(schema): ...``."""

    def __init__(self, path):
        self.path = Path(path)
        self.schema: Optional[ViewSchema] = None
        self.records_written = 0
        self._fh = None
        self._closed = False

    def open(self, schema: ViewSchema) -> "RecordSink":
        self.check_schema(schema)
        self.schema = schema
        self._fh = open(self.path, "w", encoding="utf-8", newline="")
        self._begin()
        return self

    def check_schema(self, schema: ViewSchema) -> None:
        pass

    def write(self, record) -> None:
        if self._fh is None or self._closed:
            raise SinkClosedError(f"write to {'closed' if self._closed else 'unopened'} sink")
        self._write_row(to_row(record))
        self.records_written += 1

    def close(self) -> None:
        if self._closed or self._fh is None:
            self._closed = True
            return
        self._finish()
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._fh.close()
        self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _begin(self):
        pass

    def _finish(self):
        pass

    def _write_row(self, row):
        raise NotImplementedError


class DocumentSink(RecordSink):
    def _write_row(self, row):
        parts = []
        for (name, kind), value in zip(self.schema.fields, row):
            text = _decimal_text(value) if kind == DECIMAL else _json_compact(value)
            parts.append(f"{_json_compact(name)}:{text}")
        self._fh.write("{" + ",".join(parts) + "}\n")


class CsvSink(RecordSink):
    def check_schema(self, schema):
        if schema.has_nested():
            raise UnsupportedSchemaError(f"view {schema.view!r} has nested-list fields")

    def _begin(self):
        self._writer = csv.writer(self._fh, lineterminator="\r\n")
        self._writer.writerow(self.schema.names)

    def _write_row(self, row):
        self._writer.writerow([_decimal_text(v) if kind == DECIMAL else v
                               for (_, kind), v in zip(self.schema.fields, row)])


def sql_literal(value, kind: str) -> str:
    if value is None:
        return "NULL"
    if kind == INTEGER:
        return str(int(value))
    if kind == DECIMAL:
        return _decimal_text(value)
    if kind == NESTED:
        value = _json_compact(value)
    return "'" + str(value).replace("'", "''") + "'"


class SqlSink(RecordSink):
    """Writes a CREATE TABLE followed by multi-row INSERT batches."""

    def __init__(self, path, dialect: str = "generic", batch_size: int = SQL_BATCH_SIZE):
        super().__init__(path)
        if dialect != "generic":
            raise ValueError(f"unsupported SQL dialect {dialect!r}")
        self.dialect = dialect
        self.batch_size = batch_size
        self._batch: List[str] = []
        self.statements = 0

    def _begin(self):
        cols = ",\n  ".join(f"{name} {SQL_TYPES[kind]}" for name, kind in self.schema.fields)
        self._fh.write(f"CREATE TABLE {self.schema.table} (\n  {cols}\n);\n")
        self.statements = 1

    def _write_row(self, row):
        values = ", ".join(sql_literal(v, kind) for (_, kind), v in zip(self.schema.fields, row))
        self._batch.append(f"({values})")
        if len(self._batch) >= self.batch_size:
            self._flush()

    def _flush(self):
        if not self._batch:
            return
        cols = ", ".join(self.schema.names)
        self._fh.write(f"INSERT INTO {self.schema.table} ({cols}) VALUES\n"
                       + ",\n".join(self._batch) + ";\n")
        self._batch.clear()
        self.statements += 1

    def _finish(self):
        self._flush()


def document_sink(path) -> DocumentSink:
    return DocumentSink(path)


def csv_sink(path) -> CsvSink:
    return CsvSink(path)


def sql_sink(path, dialect: str = "generic") -> SqlSink:
    return SqlSink(path, dialect)


SINKS = {"jsonl": document_sink, "csv": csv_sink, "sql": sql_sink}
SINK_SUFFIX = {"jsonl": ".jsonl", "csv": ".csv", "sql": ".sql"}


def make_sink(kind: str, path) -> RecordSink:
    try:
        return SINKS[kind](path)
    except KeyError:
        raise ValueError(f"unknown sink {kind!r}; choose from {sorted(SINKS)}") from None


# -- readers -----------------------------------------------------------------

def _coerce(value, kind):
    if kind == INTEGER:
        return int(value)
    if kind == DECIMAL:
        if isinstance(value, float):
            return Decimal(repr(value))
        return Decimal(str(value))
    if kind == NESTED:
        return json.loads(value) if isinstance(value, str) else value
    return str(value)


def _build(schema: ViewSchema, values):
    cls = RECORD_TYPES[schema.view]
    return cls(*(_coerce(v, kind) for (_, kind), v in zip(schema.fields, values)))


def read_jsonl(path, schema: ViewSchema) -> Iterator:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                doc = json.loads(line, parse_float=Decimal)
                yield _build(schema, [doc[name] for name in schema.names])


def read_csv(path, schema: ViewSchema) -> Iterator:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return
        if header != schema.names:
            raise UnsupportedSchemaError(f"CSV header {header} does not match {schema.view}")
        for row in reader:
            yield _build(schema, row)


def load_sql(path, conn: Optional[sqlite3.Connection] = None) -> sqlite3.Connection:
    """Execute an emitted SQL script in SQLite (in memory unless ``conn`` given)."""
    conn = conn or sqlite3.connect(":memory:")
    with open(path, encoding="utf-8") as fh:
        conn.executescript(fh.read())
    return conn


def read_sql(path, schema: ViewSchema) -> Iterator:
    conn = load_sql(path)
    try:
        cols = ", ".join(schema.names)
        for row in conn.execute(f"SELECT {cols} FROM {schema.table} ORDER BY rowid"):
            yield _build(schema, row)
    finally:
        conn.close()


def read_records(path, view: Optional[str] = None) -> List:
    """Recover typed records from any sink's output."""
    path = Path(path)
    suffix = path.suffix.lower()
    if view is None:
        view = detect_view(path)
    schema = SCHEMAS[view]
    if suffix in (".jsonl", ".json", ".ndjson"):
        return list(read_jsonl(path, schema))
    if suffix == ".csv":
        return list(read_csv(path, schema))
    if suffix == ".sql":
        return list(read_sql(path, schema))
    raise ValueError(f"cannot infer sink format from {path.name}")


def detect_view(path) -> str:
    """Guess the view of a sink file from its first line / header / table name."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    suffix = path.suffix.lower()
    if suffix == ".sql":
        for view, schema in SCHEMAS.items():
            if first.startswith(f"CREATE TABLE {schema.table} "):
                return view
    elif suffix == ".csv":
        names = next(csv.reader([first]), [])
        for view, schema in SCHEMAS.items():
            if names == schema.names:
                return view
    elif first:
        keys = list(json.loads(first, parse_float=Decimal))
        for view, schema in SCHEMAS.items():
            if keys == schema.names:
                return view
    raise ValueError(f"cannot tell which view {path.name} holds; pass the view explicitly")
