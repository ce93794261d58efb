"""Record shapes of the five views and their declared schemas.

Field names are the on-disk column/key names, hence camelCase.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from decimal import Decimal
from typing import Dict, List, Tuple

HASH, DATE, INTEGER, DECIMAL, STRING, HEX, NESTED = (
    "hash", "date", "integer", "decimal", "string", "hex", "nested-list")


@dataclass(frozen=True)
class ViewSchema:
    view: str
    table: str
    fields: Tuple[Tuple[str, str], ...]

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.fields]

    def has_nested(self) -> bool:
        return any(kind == NESTED for _, kind in self.fields)


@dataclass(frozen=True)
class BasicRecord:
    txHash: str
    blockHash: str
    date: str
    inputs: list
    outputs: list

    def __hash__(self):
        return hash((self.txHash, self.blockHash))


@dataclass(frozen=True)
class OpReturnRecord:
    txHash: str
    date: str
    protocol: str
    metadata: str


@dataclass(frozen=True)
class RatesRecord:
    txHash: str
    date: str
    outputSum: int
    rate: Decimal


@dataclass(frozen=True)
class FeesRecord:
    blockHash: str
    txHash: str
    fee: int
    date: str
    rate: Decimal


@dataclass(frozen=True)
class TagsRecord:
    txHash: str
    date: str
    value: int
    address: str
    tag: str


SCHEMAS: Dict[str, ViewSchema] = {
    "basic": ViewSchema("basic", "myblockchain", (
        ("txHash", HASH), ("blockHash", HASH), ("date", DATE),
        ("inputs", NESTED), ("outputs", NESTED))),
    "opreturn": ViewSchema("opreturn", "opreturnoutputs", (
        ("txHash", HASH), ("date", DATE), ("protocol", STRING), ("metadata", HEX))),
    "rates": ViewSchema("rates", "txwithrates", (
        ("txHash", HASH), ("date", DATE), ("outputSum", INTEGER), ("rate", DECIMAL))),
    "fees": ViewSchema("fees", "txfees", (
        ("blockHash", HASH), ("txHash", HASH), ("fee", INTEGER), ("date", DATE),
        ("rate", DECIMAL))),
    "tags": ViewSchema("tags", "tagsoutputs", (
        ("txHash", HASH), ("date", DATE), ("value", INTEGER), ("address", STRING),
        ("tag", STRING))),
}

RECORD_TYPES = {
    "basic": BasicRecord,
    "opreturn": OpReturnRecord,
    "rates": RatesRecord,
    "fees": FeesRecord,
    "tags": TagsRecord,
}

for _view, _cls in RECORD_TYPES.items():
    assert [f.name for f in fields(_cls)] == SCHEMAS[_view].names, _view


def schema_for(record) -> ViewSchema:
    for view, cls in RECORD_TYPES.items():
        if isinstance(record, cls):
            return SCHEMAS[view]
    raise TypeError(f"not a view record: {type(record).__name__}")


def to_row(record) -> tuple:
    return tuple(getattr(record, f.name) for f in fields(record))
