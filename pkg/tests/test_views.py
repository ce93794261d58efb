from collections import Counter

import pytest

from chainview.chaingen import GenSpec, synthesize, synthetic_rates
from chainview.enrichment.opreturn import ProtocolTable
from chainview.enrichment.rates import RateTable
from chainview.enrichment.tags import TagMap
from chainview.errors import DateNotCoveredError, ScanError
from chainview.records import BasicRecord, FeesRecord
from chainview.sinks import document_sink, read_records
from chainview.sources import synthetic_source
from chainview.views import (OPRETURN_START_HEIGHT, build_basic, build_fees, build_opreturn,
                             build_rates, build_tags)


@pytest.fixture(scope="module")
def source(fee_chain):
    return synthetic_source(fee_chain)


@pytest.fixture(scope="module")
def rates(fee_chain):
    return RateTable(synthetic_rates(fee_chain.truth))


def test_basic_view(tmp_path, fee_chain, source):
    report = build_basic(source, document_sink(tmp_path / "b.jsonl"))
    assert report.records == fee_chain.truth.tx_count == report.txs
    records = read_records(tmp_path / "b.jsonl")
    assert all(isinstance(r, BasicRecord) for r in records)
    by_tx = {r.txHash: r for r in records}
    assert {t: fee_chain.truth.block_hashes[h] for t, h in fee_chain.truth.tx_heights.items()} \
        == {t: r.blockHash for t, r in by_tx.items()}
    per_date = Counter()
    for r in records:
        per_date[(r.date, "inputs")] += len(r.inputs)
        per_date[(r.date, "outputs")] += len(r.outputs)
    for day, counts in fee_chain.truth.per_date.items():
        assert per_date[(day, "inputs")] == counts["inputs"]
        assert per_date[(day, "outputs")] == counts["outputs"]
    assert set(records[1].inputs[0]) == {"prevTxHash", "prevVout", "scriptSig"}
    assert set(records[1].outputs[0]) == {"value", "scriptPubKey"}


def test_basic_view_range(tmp_path, fee_chain, source):
    report = build_basic(source, document_sink(tmp_path / "b.jsonl"), start=10, end=19)
    expected = sum(1 for h in fee_chain.truth.tx_heights.values() if 10 <= h <= 19)
    assert report.records == expected and report.blocks == 10


def test_opreturn_view_matches_truth(tmp_path, fee_chain, source):
    report = build_opreturn(source, document_sink(tmp_path / "o.jsonl"), start=0)
    records = read_records(tmp_path / "o.jsonl")
    assert report.records == len(fee_chain.truth.opreturns) > 0
    got = sorted((r.txHash, r.protocol, r.metadata, r.date) for r in records)
    want = sorted((o["txid"], o["protocol"], o["metadata"], o["date"])
                  for o in fee_chain.truth.opreturns)
    assert got == want


def test_opreturn_default_start_clamped(tmp_path, source):
    report = build_opreturn(source, document_sink(tmp_path / "o.jsonl"))
    assert OPRETURN_START_HEIGHT == 290_000
    assert report.start == report.end == source.best_height()
    assert report.blocks == 1
    assert any("clamped" in w for w in report.warnings)


def test_opreturn_custom_protocols(tmp_path, fee_chain, source):
    table = ProtocolTable.from_csv("hex_prefix,name\n6f6d6e69,OMNI\n")
    build_opreturn(source, document_sink(tmp_path / "o.jsonl"), table, start=0)
    protocols = Counter(r.protocol for r in read_records(tmp_path / "o.jsonl"))
    truth = Counter(o["protocol"] for o in fee_chain.truth.opreturns)
    assert protocols["OMNI"] == truth["omni"]
    assert protocols["unknown"] == sum(truth.values()) - truth["omni"]


def test_rates_view(tmp_path, fee_chain, source, rates):
    report = build_rates(source, document_sink(tmp_path / "r.jsonl"), rates)
    records = read_records(tmp_path / "r.jsonl")
    assert report.records == fee_chain.truth.tx_count
    assert all(r.rate == rates.get(r.date) for r in records)
    assert all(r.outputSum > 0 for r in records)


def test_rates_view_missing_date(tmp_path, source):
    with pytest.raises(DateNotCoveredError):
        build_rates(source, document_sink(tmp_path / "r.jsonl"), RateTable({"2000-01-01": 1}))


def test_fees_view(tmp_path, fee_chain, source, rates):
    report = build_fees(source, document_sink(tmp_path / "f.jsonl"), rates)
    records = read_records(tmp_path / "f.jsonl")
    assert all(isinstance(r, FeesRecord) for r in records)
    assert report.records == fee_chain.truth.tx_count
    fees = {r.txHash: r.fee for r in records}
    coinbases = {c["txid"] for c in fee_chain.truth.coinbases}
    assert {t: f for t, f in fees.items() if t not in coinbases} == fee_chain.truth.fees
    assert all(fees[t] == 0 for t in coinbases)


def test_fees_view_missing_rate(tmp_path, source):
    with pytest.raises(ScanError) as info:
        build_fees(source, document_sink(tmp_path / "f.jsonl"), RateTable())
    assert isinstance(info.value.cause, DateNotCoveredError)
    assert info.value.height == 0


def test_tags_view(tmp_path, fee_chain, source):
    tags = TagMap(fee_chain.truth.tags)
    report = build_tags(source, document_sink(tmp_path / "t.jsonl"), tags, network="regtest")
    records = read_records(tmp_path / "t.jsonl")
    assert report.records == len(fee_chain.truth.tagged_outputs) > 0
    got = sorted((r.txHash, r.address, r.tag, r.value, r.date) for r in records)
    want = sorted((o["txid"], o["address"], o["tag"], o["value"], o["date"])
                  for o in fee_chain.truth.tagged_outputs)
    assert got == want


def test_tags_view_wrong_network_finds_nothing(tmp_path, fee_chain, source):
    tags = TagMap(fee_chain.truth.tags)
    report = build_tags(source, document_sink(tmp_path / "t.jsonl"), tags, network="mainnet")
    assert report.records == 0


def test_views_on_forked_chain_skip_orphan(tmp_path):
    chain = synthesize(GenSpec(seed=12, n_blocks=20, fork_at=10))
    report = build_basic(synthetic_source(chain), document_sink(tmp_path / "b.jsonl"))
    assert report.records == chain.truth.tx_count
    blocks = {r.blockHash for r in read_records(tmp_path / "b.jsonl")}
    assert not blocks & set(chain.truth.orphan_hashes)
