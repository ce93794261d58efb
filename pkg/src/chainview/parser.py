"""Decoder for the Bitcoin consensus wire format and blk*.dat files.

Every declared count is checked against the bytes still available before
anything is allocated, so hostile input fails fast with a ParseError.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterator, List, Optional, Tuple

from .errors import (BadMagicError, MalformedSegwitError, TrailingBytesError,
                     TruncatedError, ZeroInputsError, ZeroOutputsError)
from .model import (MAX_SCRIPT_SIZE, Block, BlockHeader, Hash256, OutPoint,
                    Transaction, TxInput, TxOutput)

log = logging.getLogger(__name__)

NETWORK_MAGIC = {
    "mainnet": bytes.fromhex("f9beb4d9"),
    "testnet": bytes.fromhex("0b110907"),
    "regtest": bytes.fromhex("fabfb5da"),
}

# smallest possible encodings, used to bound declared counts
MIN_INPUT_SIZE = 32 + 4 + 1 + 4
MIN_OUTPUT_SIZE = 8 + 1
MIN_TX_SIZE = 4 + 1 + MIN_INPUT_SIZE + 1 + MIN_OUTPUT_SIZE + 4

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_I32 = struct.Struct("<i")
_U64 = struct.Struct("<Q")
_I64 = struct.Struct("<q")
_HEADER = struct.Struct("<i32s32sIII")


@dataclass
class ByteCursor:
    buffer: bytes
    offset: int = 0
    warnings: List[str] = field(default_factory=list)

    @property
    def remaining(self) -> int:
        return len(self.buffer) - self.offset

    def read(self, n: int) -> bytes:
        if n > self.remaining:
            raise TruncatedError(f"need {n} bytes, {self.remaining} left", self.offset)
        start = self.offset
        self.offset += n
        return self.buffer[start:self.offset]

    def unpack(self, st: struct.Struct):
        if st.size > self.remaining:
            raise TruncatedError(f"need {st.size} bytes, {self.remaining} left", self.offset)
        values = st.unpack_from(self.buffer, self.offset)
        self.offset += st.size
        return values

    def warn(self, message: str) -> None:
        self.warnings.append(f"{message} at byte {self.offset}")


def read_varint(cursor: ByteCursor) -> int:
    """Decode a CompactSize integer. Non-canonical encodings are accepted
    but recorded in ``cursor.warnings``."""
    start = cursor.offset
    prefix = cursor.read(1)[0]
    if prefix < 0xFD:
        return prefix
    if prefix == 0xFD:
        (value,), floor = cursor.unpack(_U16), 0xFD
    elif prefix == 0xFE:
        (value,), floor = cursor.unpack(_U32), 0x10000
    else:
        (value,), floor = cursor.unpack(_U64), 0x100000000
    if value < floor:
        cursor.warnings.append(f"non-canonical varint {value} at byte {start}")
    return value


def _read_count(cursor: ByteCursor, min_item_size: int, what: str) -> int:
    start = cursor.offset
    n = read_varint(cursor)
    if n * min_item_size > cursor.remaining:
        raise TruncatedError(f"{what} count {n} exceeds remaining data", start)
    return n


def _read_var_bytes(cursor: ByteCursor, what: str = "script") -> bytes:
    start = cursor.offset
    n = read_varint(cursor)
    if n > cursor.remaining:
        raise TruncatedError(f"{what} length {n} exceeds remaining data", start)
    if n > MAX_SCRIPT_SIZE and what == "script":
        cursor.warnings.append(f"oversized script ({n} bytes) at byte {start}")
    return cursor.read(n)


def parse_header(cursor: ByteCursor) -> BlockHeader:
    version, prev, merkle, time, bits, nonce = cursor.unpack(_HEADER)
    return BlockHeader(version, Hash256(prev), Hash256(merkle), time, bits, nonce)


def _parse_input(cursor: ByteCursor) -> TxInput:
    txid = Hash256(cursor.read(32))
    (vout,) = cursor.unpack(_U32)
    script = _read_var_bytes(cursor)
    (sequence,) = cursor.unpack(_U32)
    return TxInput(OutPoint(txid, vout), script, sequence)


def _parse_output(cursor: ByteCursor) -> TxOutput:
    (value,) = cursor.unpack(_I64)
    if value < 0:
        cursor.warn(f"negative output value {value}")
    return TxOutput(value, _read_var_bytes(cursor))


def parse_transaction(cursor: ByteCursor) -> Transaction:
    start = cursor.offset
    (version,) = cursor.unpack(_I32)
    segwit = False
    if cursor.remaining >= 2 and cursor.buffer[cursor.offset] == 0:
        flag = cursor.buffer[cursor.offset + 1]
        if flag != 0x01:
            raise MalformedSegwitError(f"segwit marker followed by flag {flag:#04x}",
                                       cursor.offset)
        cursor.offset += 2
        segwit = True

    n_in = _read_count(cursor, MIN_INPUT_SIZE, "input")
    if n_in == 0:
        raise ZeroInputsError("transaction has no inputs", cursor.offset)
    inputs = [_parse_input(cursor) for _ in range(n_in)]

    n_out = _read_count(cursor, MIN_OUTPUT_SIZE, "output")
    if n_out == 0:
        raise ZeroOutputsError("transaction has no outputs", cursor.offset)
    outputs = tuple(_parse_output(cursor) for _ in range(n_out))

    if segwit:
        for idx, txin in enumerate(inputs):
            n_items = _read_count(cursor, 1, "witness item")
            stack = tuple(_read_var_bytes(cursor, "witness") for _ in range(n_items))
            inputs[idx] = TxInput(txin.prevout, txin.script_sig, txin.sequence, stack)
        if not any(i.witness for i in inputs):
            cursor.warn("segwit serialization with empty witness")

    (locktime,) = cursor.unpack(_U32)
    tx = Transaction(version, tuple(inputs), outputs, locktime)
    # prime the cached size; consumed bytes are authoritative
    tx.__dict__["size_bytes"] = cursor.offset - start
    return tx


def parse_block(data: bytes, warnings: Optional[list] = None) -> Block:
    """Decode a complete serialized block; every byte must be consumed."""
    cursor = ByteCursor(data)
    header = parse_header(cursor)
    n_tx = _read_count(cursor, MIN_TX_SIZE, "transaction")
    txs = tuple(parse_transaction(cursor) for _ in range(n_tx))
    if cursor.remaining:
        raise TrailingBytesError(f"{cursor.remaining} unconsumed bytes", cursor.offset)
    if warnings is not None:
        warnings.extend(cursor.warnings)
    return Block(header, txs)


def serialize_block_record(payload: bytes, magic: bytes) -> bytes:
    return magic + _U32.pack(len(payload)) + payload


def iter_block_records(stream: BinaryIO, magic: bytes) -> Iterator[Tuple[int, bytes]]:
    """Yield ``(payload_offset, payload)`` for each record of a seekable blk-style stream.

    Runs of zero bytes between records (pre-allocated file tails) are skipped.
    """
    pos = stream.tell()
    while True:
        head = stream.read(4)
        if not head:
            return
        if head[0] == 0:
            stream.seek(pos)
            while True:
                chunk = stream.read(1 << 16)
                if not chunk:
                    return
                stripped = chunk.lstrip(b"\x00")
                pos += len(chunk) - len(stripped)
                if stripped:
                    break
            stream.seek(pos)
            continue
        if head != magic:
            raise BadMagicError(f"expected magic {magic.hex()}, found {head.hex()}", pos)
        size_raw = stream.read(4)
        if len(size_raw) < 4:
            raise TruncatedError("record length cut short", pos + 4)
        (size,) = _U32.unpack(size_raw)
        payload = stream.read(size)
        if len(payload) < size:
            raise TruncatedError(f"record declares {size} bytes, {len(payload)} present",
                                 pos + 8)
        yield pos + 8, payload
        pos += 8 + size


def iter_block_file(path, magic: bytes = NETWORK_MAGIC["mainnet"]) -> Iterator[Block]:
    with open(path, "rb") as fh:
        for offset, payload in iter_block_records(fh, magic):
            try:
                yield parse_block(payload)
            except TruncatedError as exc:
                raise TruncatedError(f"{path}: block record at byte {offset}: {exc}") from exc
