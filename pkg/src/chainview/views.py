"""Builders for the five views. Each streams records straight into a sink."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

from .enrichment.address import address_of
from .enrichment.opreturn import ProtocolTable, extract_metadata, is_op_return
from .enrichment.rates import RateTable
from .enrichment.tags import TagMap
from .errors import MalformedPushError
from .navigator import deep_scan, output_sum
from .records import (SCHEMAS, BasicRecord, FeesRecord, OpReturnRecord, RatesRecord,
                      TagsRecord)
from .sinks import RecordSink
from .sources import ChainSource, iterate

log = logging.getLogger(__name__)

OPRETURN_START_HEIGHT = 290_000


@dataclass
class ViewReport:
    view: str
    start: int
    end: int
    blocks: int = 0
    txs: int = 0
    records: int = 0
    warnings: List[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"view": self.view, "start": self.start, "end": self.end, "blocks": self.blocks,
                "txs": self.txs, "records": self.records, "warnings": list(self.warnings)}


def _resolve(source: ChainSource, start: Optional[int], end: Optional[int]):
    return (0 if start is None else start), (source.best_height() if end is None else end)


def build_basic(source: ChainSource, sink: RecordSink, start=None, end=None,
                prefetch: int = 0) -> ViewReport:
    start, end = _resolve(source, start, end)
    report = ViewReport("basic", start, end)
    with sink.open(SCHEMAS["basic"]):
        for _, block in iterate(source, start, end, prefetch=prefetch):
            block_hash, date = block.hash.to_hex(), block.date
            for tx in block.txs:
                inputs = [{"prevTxHash": i.prevout.txid.to_hex(), "prevVout": i.prevout.vout,
                           "scriptSig": i.script_sig.hex()} for i in tx.inputs]
                outputs = [{"value": o.value, "scriptPubKey": o.script_pubkey.hex()}
                           for o in tx.outputs]
                sink.write(BasicRecord(tx.txid.to_hex(), block_hash, date, inputs, outputs))
            report.blocks += 1
            report.txs += len(block.txs)
    report.records = sink.records_written
    return report


def build_opreturn(source: ChainSource, sink: RecordSink, protocols: Optional[ProtocolTable] = None,
                   start=None, end=None, prefetch: int = 0) -> ViewReport:
    """One record per OP_RETURN output. Without ``start`` the scan begins at
    height 290,000, clamped to the chain tip on shorter chains."""
    protocols = protocols or ProtocolTable.default()
    warnings = []
    best = source.best_height()
    if start is None:
        start = OPRETURN_START_HEIGHT
        if start > best:
            msg = f"default start {OPRETURN_START_HEIGHT} beyond chain tip; clamped to {best}"
            log.warning(msg)
            warnings.append(msg)
            start = best
    end = best if end is None else end
    report = ViewReport("opreturn", start, end, warnings=warnings)
    with sink.open(SCHEMAS["opreturn"]):
        for height, block in iterate(source, start, end, prefetch=prefetch):
            date = block.date
            for tx in block.txs:
                for vout, out in enumerate(tx.outputs):
                    if not is_op_return(out.script_pubkey):
                        continue
                    try:
                        metadata = extract_metadata(out.script_pubkey)
                    except MalformedPushError as exc:
                        report.warnings.append(f"{tx.txid}:{vout} at height {height}: {exc}")
                        metadata = out.script_pubkey[1:]
                    sink.write(OpReturnRecord(tx.txid.to_hex(), date,
                                              protocols.classify(metadata), metadata.hex()))
            report.blocks += 1
            report.txs += len(block.txs)
    report.records = sink.records_written
    return report


def build_rates(source: ChainSource, sink: RecordSink, rates: RateTable, start=None, end=None,
                prefetch: int = 0) -> ViewReport:
    start, end = _resolve(source, start, end)
    report = ViewReport("rates", start, end)
    with sink.open(SCHEMAS["rates"]):
        for _, block in iterate(source, start, end, prefetch=prefetch):
            date = block.date
            rate = rates.get(date)
            for tx in block.txs:
                sink.write(RatesRecord(tx.txid.to_hex(), date, output_sum(tx), rate))
            report.blocks += 1
            report.txs += len(block.txs)
    report.records = sink.records_written
    return report


def build_fees(source: ChainSource, sink: RecordSink, rates: RateTable, start: int = 0,
               end=None, prefetch: int = 0) -> ViewReport:
    """Fee per transaction via a deep scan; must start from genesis."""
    _, end = _resolve(source, start, end)
    report = ViewReport("fees", start, end)

    def visit(height, block, valuations):
        block_hash, date = block.hash.to_hex(), block.date
        rate = rates.get(date)
        for v in valuations:
            sink.write(FeesRecord(block_hash, v.txid.to_hex(), v.fee, date, rate))

    with sink.open(SCHEMAS["fees"]):
        scan = deep_scan(source, start, end, visit, prefetch=prefetch)
    report.blocks, report.txs = scan.blocks, scan.txs
    report.warnings.extend(scan.warnings)
    report.records = sink.records_written
    return report


def build_tags(source: ChainSource, sink: RecordSink, tags: TagMap, start=None, end=None,
               network: str = "mainnet", prefetch: int = 0) -> ViewReport:
    start, end = _resolve(source, start, end)
    report = ViewReport("tags", start, end)
    with sink.open(SCHEMAS["tags"]):
        for _, block in iterate(source, start, end, prefetch=prefetch):
            date = block.date
            for tx in block.txs:
                txid = None
                for out in tx.outputs:
                    address = address_of(out.script_pubkey, network)
                    tag = tags.get(address) if address is not None else None
                    if tag is None:
                        continue
                    txid = txid or tx.txid.to_hex()
                    sink.write(TagsRecord(txid, date, out.value, address, tag))
            report.blocks += 1
            report.txs += len(block.txs)
    report.records = sink.records_written
    return report


VIEW_BUILDERS = {
    "basic": build_basic,
    "opreturn": build_opreturn,
    "rates": build_rates,
    "fees": build_fees,
    "tags": build_tags,
}
