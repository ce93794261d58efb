from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import GENESIS_ADDRESS, TESTDATA
from chainview.enrichment.address import (address_of, b58decode, b58encode, base58check_decode,
                                          base58check_encode, hash160, p2pk_script, p2pkh_script,
                                          p2sh_script)
from chainview.enrichment.opreturn import (ProtocolTable, classify_protocol, extract_metadata,
                                           is_op_return, rules_from_pairs)
from chainview.enrichment.rates import RateTable, read_rates_csv
from chainview.enrichment.tags import TagMap, load_tags
from chainview.errors import (DateNotCoveredError, FetchFailedError, MalformedLineError,
                              MalformedPushError)
from chainview.stubs import StubRateServer


# -- addresses -------------------------------------------------------------------

def test_genesis_p2pk_address(genesis_block):
    script = genesis_block.txs[0].outputs[0].script_pubkey
    assert len(script) == 67
    assert address_of(script) == GENESIS_ADDRESS
    assert oracles.base58check(0x00, oracles.hash160(script[1:66])) == GENESIS_ADDRESS


def test_zero_payload_p2pkh():
    assert address_of(p2pkh_script(b"\x00" * 20)) == "1111111111111111111114oLvT2"


@given(st.binary(min_size=20, max_size=20))
def test_p2pkh_p2sh_match_oracle(h):
    assert address_of(p2pkh_script(h)) == oracles.base58check(0x00, h)
    assert address_of(p2sh_script(h)) == oracles.base58check(0x05, h)
    assert address_of(p2pkh_script(h), "testnet") == oracles.base58check(0x6F, h)
    assert address_of(p2sh_script(h), "regtest") == oracles.base58check(0xC4, h)


@given(st.binary(min_size=32, max_size=32), st.sampled_from([2, 3]))
def test_compressed_p2pk_matches_oracle(x, prefix):
    pub = bytes([prefix]) + x
    assert address_of(p2pk_script(pub)) == oracles.base58check(0x00, oracles.hash160(pub))


@given(st.binary(max_size=64))
def test_hash160_matches_oracle(data):
    assert hash160(data) == oracles.hash160(data)


def test_p2sh_starts_with_3():
    assert address_of(p2sh_script(bytes(range(20)))).startswith("3")


@pytest.mark.parametrize("script", [
    b"",
    b"\x6a\x04abcd",
    bytes([0x00, 0x14]) + b"\x11" * 20,  # P2WPKH not handled
    p2pkh_script(b"\x00" * 20)[:-1],
    p2pk_script(b"\x05" + b"\x00" * 32),
])
def test_unrecognised_scripts(script):
    assert address_of(script) is None


@given(st.binary(max_size=40))
def test_base58_round_trip(data):
    assert b58decode(b58encode(data)) == data


def test_base58check_detects_single_char_flip():
    addr = base58check_encode(0x00, bytes(range(20)))
    assert base58check_decode(addr) == (0x00, bytes(range(20)))
    alphabet = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"
    for i in range(1, len(addr)):
        for c in alphabet[:8]:
            if c == addr[i]:
                continue
            bad = addr[:i] + c + addr[i + 1:]
            with pytest.raises(ValueError):
                base58check_decode(bad)


# -- OP_RETURN -------------------------------------------------------------------

@pytest.mark.parametrize("script, expected", [
    (b"\x6a", b""),
    (b"\x6a\x04abcd", b"abcd"),
    (b"\x6a\x02ab\x03cde", b"abcde"),
    (b"\x6a\x4c\x03xyz", b"xyz"),
    (b"\x6a\x4d\x02\x00hi", b"hi"),
    (b"\x6a\x4e\x01\x00\x00\x00z", b"z"),
    (b"\x6a\x00\x01q", b"q"),
    (b"\x6a\x01a\x51\x01b", b"a"),
    (b"\x76\x01a", b""),
])
def test_extract_metadata(script, expected):
    assert extract_metadata(script) == expected


def test_extract_metadata_large_push():
    data = bytes(range(256)) * 2
    assert extract_metadata(b"\x6a\x4d" + len(data).to_bytes(2, "little") + data) == data


@pytest.mark.parametrize("script", [b"\x6a\x05abc", b"\x6a\x4c", b"\x6a\x4d\x01", b"\x6a\x4e\x00"])
def test_extract_metadata_malformed(script):
    with pytest.raises(MalformedPushError):
        extract_metadata(script)


def test_is_op_return():
    assert is_op_return(b"\x6a")
    assert not is_op_return(b"")
    assert not is_op_return(b"\x76\xa9")


def test_classify_first_match_wins():
    table = rules_from_pairs([(b"ab", "first"), (b"a", "second"), (b"abc", "third")])
    assert classify_protocol(table, b"abcd") == "first"
    assert classify_protocol(table, b"az") == "second"
    assert classify_protocol(table, b"zz") == "unknown"
    assert classify_protocol(table, b"") == "unknown"


def test_protocol_csv(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("# comment\nhex_prefix,name\n6f6d6e69,omni\n4343,colu\n")
    table = ProtocolTable.load(path)
    assert table.classify(b"omni\x00\x00") == "omni"
    assert table.classify(b"CC\x01") == "colu"
    assert table.classify(b"C") == "unknown"


def test_default_protocols_table():
    table = ProtocolTable.default()
    assert table.classify(b"DOCPROOF" + b"\x00" * 32) == "proofofexistence"
    assert table.classify(b"omni" + b"\x00" * 16) == "omni"
    assert table.classify(b"\xff\xfe") == "unknown"


# -- rates -----------------------------------------------------------------------

def test_rates_from_csv():
    table = RateTable.from_csv(TESTDATA / "rates.csv")
    assert table.source == "file"
    assert table.get("2017-01-01") == Decimal("997.75")
    with pytest.raises(DateNotCoveredError):
        table.get("2017-01-05")


def test_rates_http_and_cache_replay(tmp_path):
    truth = read_rates_csv(TESTDATA / "rates.csv")
    cache = tmp_path / "cache.csv"
    with StubRateServer(truth) as server:
        online = RateTable.from_http(cache, url=server.url)
        assert online.source == "http-endpoint"
        got = {d: online.get(d) for d in sorted(truth)}
        online.get("2017-01-01")
        assert server.requests == len(truth)
        with pytest.raises(DateNotCoveredError):
            online.get("2018-01-01")
    assert got == truth
    offline = RateTable.from_csv(cache)
    assert {d: offline.get(d) for d in sorted(truth)} == got


def test_rates_http_unreachable():
    table = RateTable(url="http://127.0.0.1:9/", timeout=1)
    with pytest.raises(FetchFailedError):
        table.get("2017-01-01")


def test_rates_csv_malformed(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("date,rate\n2017-01-01,abc\n")
    with pytest.raises(MalformedLineError):
        read_rates_csv(path)


# -- tags ------------------------------------------------------------------------

def test_load_tags():
    tags = load_tags(TESTDATA / "tags.tsv")
    assert len(tags) == 2
    assert tags.get("1dice8EMZmqKvrGE4Qc9bUFf9PX3xaYDp") == "SatoshiDICE 48%"
    assert tags.get("1A1zP1eP5QGefi2DMPTfTL5SLmv7DivfNa") is None


def test_load_tags_duplicate_keeps_first(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("addr1\tFirst\naddr1\tSecond\n\naddr2\tOther tag\n")
    tags = load_tags(path)
    assert tags.get("addr1") == "First"
    assert len(tags) == 2 and len(tags.warnings) == 1


def test_load_tags_malformed(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("addr1\tFirst\nno-tab-here\n")
    with pytest.raises(MalformedLineError) as info:
        load_tags(path)
    assert info.value.line_number == 2


def test_tags_write_round_trip(tmp_path):
    tags = TagMap({"a": "x y", "b": "z"})
    tags.write(tmp_path / "t.tsv")
    assert load_tags(tmp_path / "t.tsv").tags == tags.tags
