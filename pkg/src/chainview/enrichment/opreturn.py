"""OP_RETURN detection, metadata extraction and table-driven protocol naming."""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from importlib import resources
from typing import Sequence, Tuple

from ..errors import MalformedPushError

OP_RETURN = 0x6A
OP_PUSHDATA1 = 0x4C
OP_PUSHDATA2 = 0x4D
OP_PUSHDATA4 = 0x4E

UNKNOWN = "unknown"


def is_op_return(script: bytes) -> bool:
    return len(script) > 0 and script[0] == OP_RETURN


def extract_metadata(script: bytes) -> bytes:
    """Concatenate every data push that follows the leading OP_RETURN.

    Non-push opcodes after OP_RETURN end the scan.
    """
    if not is_op_return(script):
        return b""
    out = []
    i, n = 1, len(script)
    while i < n:
        op = script[i]
        i += 1
        if 0x01 <= op <= 0x4B:
            size = op
        elif op == OP_PUSHDATA1:
            if i + 1 > n:
                raise MalformedPushError("OP_PUSHDATA1 without length", i)
            size = script[i]
            i += 1
        elif op == OP_PUSHDATA2:
            if i + 2 > n:
                raise MalformedPushError("OP_PUSHDATA2 without length", i)
            (size,) = struct.unpack_from("<H", script, i)
            i += 2
        elif op == OP_PUSHDATA4:
            if i + 4 > n:
                raise MalformedPushError("OP_PUSHDATA4 without length", i)
            (size,) = struct.unpack_from("<I", script, i)
            i += 4
        elif op == 0x00:
            continue
        else:
            break
        if i + size > n:
            raise MalformedPushError(f"push of {size} bytes overruns script", i)
        out.append(script[i:i + size])
        i += size
    return b"".join(out)


@dataclass(frozen=True)
class ProtocolTable:
    rules: Tuple[Tuple[bytes, str], ...]

    @classmethod
    def from_csv(cls, text: str) -> "ProtocolTable":
        rules = []
        for row in csv.reader(io.StringIO(text)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if row[0].strip().lower() == "hex_prefix":
                continue
            rules.append((bytes.fromhex(row[0].strip()), row[1].strip()))
        return cls(tuple(rules))

    @classmethod
    def load(cls, path) -> "ProtocolTable":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read())

    @classmethod
    def default(cls) -> "ProtocolTable":
        text = resources.files("chainview.data").joinpath("protocols.csv").read_text("utf-8")
        return cls.from_csv(text)

    def classify(self, metadata: bytes) -> str:
        for prefix, name in self.rules:
            if prefix and metadata.startswith(prefix):
                return name
        return UNKNOWN


def classify_protocol(table: ProtocolTable, metadata: bytes) -> str:
    return table.classify(metadata)


def rules_from_pairs(pairs: Sequence[Tuple[bytes, str]]) -> ProtocolTable:
    return ProtocolTable(tuple((bytes(p), n) for p, n in pairs))
