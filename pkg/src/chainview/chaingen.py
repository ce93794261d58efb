"""Deterministic synthetic blockchain generator.

Produces a structurally valid chain (linked headers, real merkle roots,
coinbases claiming subsidy + fees) together with the ground truth the
generator knows by construction: every fee, every coinbase claim, the
live-output count per height, planted OP_RETURN payloads and tagged
payments. Scripts are never executed, so signatures are random bytes.

The PRNG is Python's ``random.Random`` (MT19937) seeded from the spec;
identical specs give byte-identical chains.
"""
from __future__ import annotations

import hashlib
import json
import random
import struct
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from typing import Dict, List, Optional, Tuple

from .enrichment.address import address_of, p2pk_script, p2pkh_script, p2sh_script
from .errors import InvalidSpecError
from .model import (COINBASE_PREVOUT, Block, BlockHeader, Hash256, OutPoint, Transaction,
                    TxInput, TxOutput, date_of, merkle_root)
from .navigator import block_subsidy
from .parser import NETWORK_MAGIC, serialize_block_record

PRNG_ALGORITHM = "mt19937 (python random.Random)"

DEFAULT_PROTOCOLS = (
    ("omni", b"omni"),
    ("colu", b"CC"),
    ("openassets", b"OA"),
    ("blockstore", b"id"),
    ("factom", b"Factom!!"),
)
DEFAULT_TAGS = (
    "SatoshiDICE 48%",
    "SatoshiDICE 64%",
    "SatoshiDICE 97%",
    "Linux Mint Donations",
    "Wikileaks",
)
# outputs below this value are left unspent so fees always fit
MIN_SPENDABLE = 100_000
REGTEST_BITS = 0x207FFFFF


@dataclass(frozen=True)
class GenSpec:
    seed: int = 42
    n_blocks: int = 10
    txs_per_block: Tuple[int, int] = (0, 20)
    fee_range: Tuple[int, int] = (500, 5_000)
    opreturn_rate: float = 0.05
    tagged_payment_rate: float = 0.05
    fork_at: Optional[int] = None
    intra_block_spend_rate: float = 0.1
    segwit_rate: float = 0.1
    quiet_until: int = 0
    start_time: int = 1_483_228_800
    block_interval: int = 600
    network: str = "regtest"
    protocols: Tuple[Tuple[str, bytes], ...] = DEFAULT_PROTOCOLS
    tags: Tuple[str, ...] = DEFAULT_TAGS

    def validate(self) -> None:
        lo, hi = self.txs_per_block
        if self.n_blocks < 1:
            raise InvalidSpecError("n_blocks must be >= 1")
        if not 0 <= lo <= hi:
            raise InvalidSpecError(f"bad txs_per_block {self.txs_per_block}")
        flo, fhi = self.fee_range
        if not 0 <= flo <= fhi < MIN_SPENDABLE:
            raise InvalidSpecError(f"fee_range must lie in [0, {MIN_SPENDABLE})")
        for name in ("opreturn_rate", "tagged_payment_rate", "intra_block_spend_rate",
                     "segwit_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidSpecError(f"{name} must be a probability")
        if self.fork_at is not None and not 1 <= self.fork_at < self.n_blocks:
            raise InvalidSpecError("fork_at must be in 1..n_blocks-1")
        if self.network not in NETWORK_MAGIC:
            raise InvalidSpecError(f"unknown network {self.network}")
        if self.block_interval < 0 or not 0 <= self.start_time < 2 ** 32:
            raise InvalidSpecError("bad timestamps")
        if self.opreturn_rate and not self.protocols:
            raise InvalidSpecError("opreturn_rate > 0 needs at least one protocol")
        if self.tagged_payment_rate and not self.tags:
            raise InvalidSpecError("tagged_payment_rate > 0 needs at least one tag")


@dataclass
class GroundTruth:
    prng: str
    spec: dict
    block_hashes: List[str] = field(default_factory=list)
    orphan_hashes: List[str] = field(default_factory=list)
    tx_heights: Dict[str, int] = field(default_factory=dict)
    fees: Dict[str, int] = field(default_factory=dict)
    coinbases: List[dict] = field(default_factory=list)
    live_utxos: List[int] = field(default_factory=list)
    opreturns: List[dict] = field(default_factory=list)
    tagged_outputs: List[dict] = field(default_factory=list)
    tags: Dict[str, str] = field(default_factory=dict)
    per_date: Dict[str, dict] = field(default_factory=dict)

    @property
    def tx_count(self) -> int:
        return len(self.tx_heights)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        return cls(**json.loads(text))


@dataclass
class SyntheticChain:
    spec: GenSpec
    blocks: List[bytes]          # file order, fork blocks included
    main_chain: List[int]        # indices into ``blocks`` by height
    truth: GroundTruth

    def main_chain_payloads(self) -> List[bytes]:
        return [self.blocks[i] for i in self.main_chain]

    def file_bytes(self) -> bytes:
        magic = NETWORK_MAGIC[self.spec.network]
        return b"".join(serialize_block_record(p, magic) for p in self.blocks)

    def write(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.file_bytes())


def tag_address(seed: int, tag: str, network: str) -> Tuple[bytes, str]:
    """Deterministic P2PKH script and address standing in for a tagged service."""
    pkh = hashlib.sha256(f"chaingen-tag:{seed}:{tag}".encode()).digest()[:20]
    script = p2pkh_script(pkh)
    return script, address_of(script, network)


class _Generator:
    def __init__(self, spec: GenSpec):
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.truth = GroundTruth(PRNG_ALGORITHM, _spec_dict(spec))
        self.pool: List[Tuple[OutPoint, int]] = []
        self.live = 0
        self.tag_scripts = []
        for tag in spec.tags:
            script, addr = tag_address(spec.seed, tag, spec.network)
            self.tag_scripts.append((script, addr, tag))
            self.truth.tags[addr] = tag

    # -- random material -------------------------------------------------
    def _bytes(self, n: int) -> bytes:
        return self.rng.getrandbits(8 * n).to_bytes(n, "little")

    def _pubkey(self) -> bytes:
        return bytes((2 + self.rng.getrandbits(1),)) + self._bytes(32)

    def _payment_script(self) -> bytes:
        r = self.rng.random()
        if r < 0.6:
            return p2pkh_script(self._bytes(20))
        if r < 0.8:
            return p2sh_script(self._bytes(20))
        if r < 0.95:
            return p2pk_script(self._pubkey())
        return p2pk_script(b"\x04" + self._bytes(64))

    def _coinbase(self, height: int, value: int, extra: bytes = b"") -> Transaction:
        script_sig = b"\x04" + struct.pack("<I", height) + b"\x08" + self._bytes(8) + extra
        n_out = 1 + self.rng.getrandbits(1)
        first = value if n_out == 1 else self.rng.randint(0, value)
        values = [first] if n_out == 1 else [first, value - first]
        outputs = tuple(TxOutput(v, self._payment_script()) for v in values)
        return Transaction(1, (TxInput(COINBASE_PREVOUT, script_sig),), outputs, 0)

    def _pick(self, fresh: List[Tuple[OutPoint, int]]) -> Optional[Tuple[OutPoint, int]]:
        """Remove and return a spendable output, sometimes from this block's ``fresh`` ones."""
        sources = [self.pool]
        if fresh and self.rng.random() < self.spec.intra_block_spend_rate:
            sources.insert(0, fresh)
        for source in sources:
            for _ in range(8):
                if not source:
                    break
                i = self.rng.randrange(len(source))
                if source[i][1] >= MIN_SPENDABLE:
                    source[i], source[-1] = source[-1], source[i]
                    return source.pop()
        return None

    def _make_tx(self, height: int, date: str, fresh) -> Optional[Tuple[Transaction, int]]:
        spec, rng = self.spec, self.rng
        n_in = rng.randint(1, 3)
        picked = []
        for _ in range(n_in):
            got = self._pick(fresh)
            if got is None:
                break
            picked.append(got)
        if not picked:
            return None
        total_in = sum(v for _, v in picked)
        fee = rng.randint(*spec.fee_range)
        spendable = total_in - fee

        n_pay = min(rng.randint(1, 3), spendable)
        cuts = sorted(rng.randint(1, spendable - 1) for _ in range(n_pay - 1)) if n_pay > 1 else []
        bounds = [0] + cuts + [spendable]
        values = [bounds[i + 1] - bounds[i] for i in range(n_pay)]
        # degenerate cuts can produce zero-value parts; merge them away
        values = [v for v in values if v > 0] or [spendable]

        outputs = []
        tagged = []
        for v in values:
            if spec.tags and rng.random() < spec.tagged_payment_rate:
                script, addr, tag = self.tag_scripts[rng.randrange(len(self.tag_scripts))]
                tagged.append((len(outputs), addr, tag, v))
                outputs.append(TxOutput(v, script))
            else:
                outputs.append(TxOutput(v, self._payment_script()))

        planted = None
        if spec.protocols and rng.random() < spec.opreturn_rate:
            name, prefix = spec.protocols[rng.randrange(len(spec.protocols))]
            metadata = prefix + self._bytes(rng.randint(0, 20))
            script = b"\x6a" + _push(metadata)
            planted = (rng.randrange(len(outputs) + 1), name, metadata)
            outputs.insert(planted[0], TxOutput(0, script))
            tagged = [(i + (i >= planted[0]), a, t, v) for i, a, t, v in tagged]

        segwit = rng.random() < spec.segwit_rate
        inputs = []
        for outpoint, _ in picked:
            sig, pub = self._bytes(71), self._pubkey()
            if segwit:
                inputs.append(TxInput(outpoint, b"", 0xFFFFFFFF, (sig, pub)))
            else:
                inputs.append(TxInput(outpoint, _push(sig) + _push(pub), 0xFFFFFFFF))
        tx = Transaction(rng.choice((1, 2)), tuple(inputs), tuple(outputs), 0)
        txid = tx.txid

        t = self.truth
        t.fees[txid.to_hex()] = fee
        t.tx_heights[txid.to_hex()] = height
        if planted is not None:
            t.opreturns.append({"height": height, "txid": txid.to_hex(), "vout": planted[0],
                                "protocol": planted[1], "metadata": planted[2].hex(),
                                "date": date})
        for vout, addr, tag, v in tagged:
            t.tagged_outputs.append({"height": height, "txid": txid.to_hex(), "vout": vout,
                                     "address": addr, "tag": tag, "value": v, "date": date})
        for vout, out in enumerate(outputs):
            if out.value >= MIN_SPENDABLE and out.script_pubkey[:1] != b"\x6a":
                fresh.append((OutPoint(txid, vout), out.value))
        self.live += len(outputs) - len(inputs)
        return tx, fee

    def block(self, height: int, prev: Hash256, time: int, extra: bytes = b"",
              with_txs: bool = True):
        """Build one block; returns ``(block, fresh spendable outputs, total fees)``."""
        spec = self.spec
        date = date_of(time)
        fresh: List[Tuple[OutPoint, int]] = []
        txs, fees = [], 0
        if with_txs and height >= spec.quiet_until:
            for _ in range(self.rng.randint(*spec.txs_per_block)):
                made = self._make_tx(height, date, fresh)
                if made is None:
                    break
                txs.append(made[0])
                fees += made[1]
        coinbase = self._coinbase(height, block_subsidy(height) + fees, extra)
        txs.insert(0, coinbase)
        header = BlockHeader(0x20000000, prev, merkle_root(tx.txid for tx in txs), time,
                             REGTEST_BITS, self.rng.getrandbits(32))
        return Block(header, tuple(txs)), fresh, fees


def _push(data: bytes) -> bytes:
    n = len(data)
    if n <= 0x4B:
        return bytes((n,)) + data
    if n <= 0xFF:
        return b"\x4c" + bytes((n,)) + data
    return b"\x4d" + struct.pack("<H", n) + data


def _spec_dict(spec: GenSpec) -> dict:
    d = asdict(spec)
    d["protocols"] = [[name, prefix.hex()] for name, prefix in spec.protocols]
    d["tags"] = list(spec.tags)
    return json.loads(json.dumps(d))  # tuples become lists, as after a JSON round trip


def synthesize(spec: GenSpec) -> SyntheticChain:
    spec.validate()
    gen = _Generator(spec)
    truth = gen.truth
    blocks: List[bytes] = []
    main_chain: List[int] = []
    prev = Hash256()
    for height in range(spec.n_blocks):
        time = spec.start_time + height * spec.block_interval
        block, fresh, fees = gen.block(height, prev, time)
        gen.pool.extend(fresh)
        cb = block.txs[0]
        for out_index, out in enumerate(cb.outputs):
            if out.value >= MIN_SPENDABLE:
                gen.pool.append((OutPoint(cb.txid, out_index), out.value))
        gen.live += len(cb.outputs)

        subsidy = block_subsidy(height)
        truth.coinbases.append({"height": height, "txid": cb.txid.to_hex(), "subsidy": subsidy,
                                "fees": fees, "input_sum": subsidy + fees})
        truth.tx_heights[cb.txid.to_hex()] = height
        truth.live_utxos.append(gen.live)
        truth.block_hashes.append(block.hash.to_hex())
        day = truth.per_date.setdefault(date_of(time), {"txs": 0, "inputs": 0, "outputs": 0})
        day["txs"] += len(block.txs)
        day["inputs"] += sum(len(tx.inputs) for tx in block.txs)
        day["outputs"] += sum(len(tx.outputs) for tx in block.txs)

        main_chain.append(len(blocks))
        blocks.append(block.serialize())

        if spec.fork_at == height:
            # a stale sibling of this block; coinbase-only so no funds move
            stale, _, _ = gen.block(height, prev, time + 1, extra=b"stale", with_txs=False)
            truth.orphan_hashes.append(stale.hash.to_hex())
            blocks.append(stale.serialize())
        prev = block.hash
    return SyntheticChain(spec, blocks, main_chain, truth)


def generate(spec: GenSpec) -> Tuple[bytes, GroundTruth]:
    chain = synthesize(spec)
    return chain.file_bytes(), chain.truth


def synthetic_rates(truth: GroundTruth, seed: Optional[int] = None,
                    low: float = 50.0, high: float = 2050.0) -> Dict[str, Decimal]:
    """A rate per generated date spread across [low, high) USD."""
    rng = random.Random(f"rates:{truth.spec['seed'] if seed is None else seed}")
    return {day: Decimal(str(round(rng.uniform(low, high), 2))) for day in sorted(truth.per_date)}
