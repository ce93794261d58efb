"""Deep scan: a forward pass that keeps an outpoint -> value map so every
input can be priced, yielding exact per-transaction fees.

Coinbase inputs have no prevout to look up; their value is the block
subsidy plus the fees collected from the rest of the block.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from .errors import MissingPrevoutError, RangeError, ScanError
from .model import COIN, Block, Hash256, OutPoint, Transaction
from .sources import ChainSource, iterate

log = logging.getLogger(__name__)

INITIAL_SUBSIDY = 50 * COIN
HALVING_INTERVAL = 210_000


def block_subsidy(height: int) -> int:
    if height < 0:
        raise ValueError("height must be non-negative")
    halvings = height // HALVING_INTERVAL
    if halvings >= 64:
        return 0
    return INITIAL_SUBSIDY >> halvings


@dataclass
class UtxoStats:
    inserts: int = 0
    removals: int = 0
    peak_size: int = 0


class UtxoMap:
    """Unspent outputs keyed by outpoint; spent entries are dropped."""

    def __init__(self):
        self.entries: Dict[OutPoint, int] = {}
        self.stats = UtxoStats()

    def __len__(self):
        return len(self.entries)

    def __contains__(self, outpoint):
        return outpoint in self.entries

    def add_outputs(self, tx: Transaction) -> None:
        txid = tx.txid
        for vout, out in enumerate(tx.outputs):
            self.entries[OutPoint(txid, vout)] = out.value
        self.stats.inserts += len(tx.outputs)
        if len(self.entries) > self.stats.peak_size:
            self.stats.peak_size = len(self.entries)

    def spend(self, outpoint: OutPoint) -> int:
        try:
            value = self.entries.pop(outpoint)
        except KeyError:
            raise MissingPrevoutError(outpoint) from None
        self.stats.removals += 1
        return value


@dataclass(frozen=True)
class TxValuation:
    txid: Hash256
    input_sum: int
    output_sum: int
    fee: int
    is_coinbase: bool = False
    negative_fee: bool = False


def output_sum(tx: Transaction) -> int:
    return sum(o.value for o in tx.outputs)


def input_sum(tx: Transaction, utxo: UtxoMap) -> int:
    """Sum of prevout values; does not modify ``utxo``."""
    total = 0
    for txin in tx.inputs:
        try:
            total += utxo.entries[txin.prevout]
        except KeyError:
            raise MissingPrevoutError(txin.prevout) from None
    return total


def valuate_block(block: Block, height: int, utxo: UtxoMap,
                  warnings: Optional[list] = None) -> List[TxValuation]:
    """Price every transaction of ``block`` and advance ``utxo`` past it.

    Results are in block order; the coinbase entry is filled in after the
    other transactions because its input value depends on their fees.
    """
    valuations: List[Optional[TxValuation]] = []
    fees = 0
    coinbase_at = None
    for idx, tx in enumerate(block.txs):
        if idx == 0 and tx.is_coinbase():
            coinbase_at = idx
            valuations.append(None)
            utxo.add_outputs(tx)
            continue
        ins = 0
        for txin in tx.inputs:
            ins += utxo.spend(txin.prevout)
        outs = output_sum(tx)
        fee = ins - outs
        negative = fee < 0
        if negative:
            msg = f"negative fee {fee} in {tx.txid} at height {height}"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
        fees += fee
        valuations.append(TxValuation(tx.txid, ins, outs, fee, False, negative))
        utxo.add_outputs(tx)
    if coinbase_at is not None:
        cb = block.txs[coinbase_at]
        valuations[coinbase_at] = TxValuation(
            cb.txid, block_subsidy(height) + fees, output_sum(cb), 0, True)
    return valuations


@dataclass
class ScanReport:
    blocks: int = 0
    txs: int = 0
    utxo_peak: int = 0
    warnings: List[str] = field(default_factory=list)
    utxo_stats: UtxoStats = field(default_factory=UtxoStats)

    def as_dict(self) -> dict:
        return {"blocks": self.blocks, "txs": self.txs, "utxo_peak": self.utxo_peak,
                "warnings": list(self.warnings)}


Visitor = Callable[[int, Block, List[TxValuation]], None]


def deep_scan(source: ChainSource, start: int = 0, end: Optional[int] = None,
              visitor: Optional[Visitor] = None, utxo: Optional[UtxoMap] = None,
              prefetch: int = 0) -> ScanReport:
    """Value every transaction from genesis up to ``end``.

    Input values are only knowable when every earlier output has been seen,
    hence ``start`` must be 0. Pass ``utxo`` to inspect the map from the
    visitor.
    """
    if start != 0:
        raise RangeError(f"deep scan must start at height 0, not {start}")
    utxo = UtxoMap() if utxo is None else utxo
    report = ScanReport(utxo_stats=utxo.stats)
    for height, block in iterate(source, start, end, prefetch=prefetch):
        try:
            valuations = valuate_block(block, height, utxo, report.warnings)
            if visitor is not None:
                visitor(height, block, valuations)
        except ScanError:
            raise
        except Exception as exc:
            raise ScanError(height, exc) from exc
        report.blocks += 1
        report.txs += len(block.txs)
    report.utxo_peak = utxo.stats.peak_size
    return report
