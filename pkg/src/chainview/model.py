"""Consensus data types and their canonical serialization.

Amounts are integer satoshi throughout. Hashes are stored in internal
(wire) byte order and rendered byte-reversed, the way block explorers
display them.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import cached_property, lru_cache
from typing import NamedTuple, Optional, Tuple

COIN = 100_000_000
MAX_MONEY = 21_000_000 * COIN
MAX_SCRIPT_SIZE = 10_000


class Hash256(bytes):
    """32 raw bytes in internal order; ``str()`` gives display-order hex."""

    def __new__(cls, value=b"\x00" * 32):
        if len(value) != 32:
            raise ValueError(f"Hash256 needs 32 bytes, got {len(value)}")
        return super().__new__(cls, value)

    @classmethod
    def from_hex(cls, text: str) -> "Hash256":
        raw = bytes.fromhex(text)
        if len(raw) != 32:
            raise ValueError(f"expected 64 hex chars, got {len(text)}")
        return cls(raw[::-1])

    def to_hex(self) -> str:
        return self[::-1].hex()

    __str__ = to_hex

    def __repr__(self):
        return f"Hash256({self.to_hex()!r})"


ZERO_HASH = Hash256()


def double_sha256(data: bytes) -> Hash256:
    return Hash256(hashlib.sha256(hashlib.sha256(data).digest()).digest())


class OutPoint(NamedTuple):
    txid: Hash256
    vout: int

    def is_null(self) -> bool:
        return self.vout == 0xFFFFFFFF and self.txid == ZERO_HASH

    def __str__(self):
        return f"{self.txid}:{self.vout}"


COINBASE_PREVOUT = OutPoint(ZERO_HASH, 0xFFFFFFFF)


def encode_varint(n: int) -> bytes:
    if n < 0xFD:
        return bytes((n,))
    if n <= 0xFFFF:
        return b"\xfd" + struct.pack("<H", n)
    if n <= 0xFFFFFFFF:
        return b"\xfe" + struct.pack("<I", n)
    return b"\xff" + struct.pack("<Q", n)


def _var_bytes(b: bytes) -> bytes:
    return encode_varint(len(b)) + b


@dataclass(frozen=True)
class TxInput:
    prevout: OutPoint
    script_sig: bytes = b""
    sequence: int = 0xFFFFFFFF
    witness: Tuple[bytes, ...] = ()

    def is_coinbase(self) -> bool:
        return self.prevout.is_null()

    def serialize(self) -> bytes:
        return (self.prevout.txid + struct.pack("<I", self.prevout.vout)
                + _var_bytes(self.script_sig) + struct.pack("<I", self.sequence))


@dataclass(frozen=True)
class TxOutput:
    value: int
    script_pubkey: bytes

    def serialize(self) -> bytes:
        return struct.pack("<q", self.value) + _var_bytes(self.script_pubkey)


@dataclass(frozen=True)
class Transaction:
    version: int
    inputs: Tuple[TxInput, ...]
    outputs: Tuple[TxOutput, ...]
    locktime: int = 0

    @property
    def has_witness(self) -> bool:
        return any(i.witness for i in self.inputs)

    def is_coinbase(self) -> bool:
        return len(self.inputs) == 1 and self.inputs[0].is_coinbase()

    def serialize(self, include_witness: bool = True) -> bytes:
        segwit = include_witness and self.has_witness
        parts = [struct.pack("<i", self.version)]
        if segwit:
            parts.append(b"\x00\x01")
        parts.append(encode_varint(len(self.inputs)))
        parts.extend(i.serialize() for i in self.inputs)
        parts.append(encode_varint(len(self.outputs)))
        parts.extend(o.serialize() for o in self.outputs)
        if segwit:
            for i in self.inputs:
                parts.append(encode_varint(len(i.witness)))
                parts.extend(_var_bytes(item) for item in i.witness)
        parts.append(struct.pack("<I", self.locktime))
        return b"".join(parts)

    @cached_property
    def txid(self) -> Hash256:
        return double_sha256(self.serialize(include_witness=False))

    @cached_property
    def size_bytes(self) -> int:
        return len(self.serialize())


@dataclass(frozen=True)
class BlockHeader:
    version: int
    prev_hash: Hash256
    merkle_root: Hash256
    time: int
    bits: int
    nonce: int

    def serialize(self) -> bytes:
        return (struct.pack("<i", self.version) + self.prev_hash + self.merkle_root
                + struct.pack("<III", self.time, self.bits, self.nonce))

    @cached_property
    def hash(self) -> Hash256:
        return double_sha256(self.serialize())


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    txs: Tuple[Transaction, ...]
    height: Optional[int] = field(default=None, compare=False)

    @property
    def hash(self) -> Hash256:
        return self.header.hash

    @property
    def date(self) -> str:
        return date_of(self.header.time)

    def serialize(self) -> bytes:
        return b"".join([self.header.serialize(), encode_varint(len(self.txs))]
                        + [tx.serialize() for tx in self.txs])


def block_hash(header: BlockHeader) -> Hash256:
    return header.hash


def tx_id(tx: Transaction) -> Hash256:
    return tx.txid


def merkle_root(txids) -> Hash256:
    """Merkle root over txids (internal order), duplicating odd tails."""
    level = list(txids)
    if not level:
        return ZERO_HASH
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [double_sha256(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return Hash256(level[0])


def date_of(time: int) -> str:
    """UTC calendar date (YYYY-MM-DD) of a header timestamp."""
    return _day_string(time // 86400)


@lru_cache(maxsize=8192)
def _day_string(day: int) -> str:
    return datetime.fromtimestamp(day * 86400, tz=timezone.utc).date().isoformat()
