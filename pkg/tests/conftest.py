import sys
from pathlib import Path

import pytest

from chainview.chaingen import GenSpec, synthesize
from chainview.parser import parse_block

TESTDATA = Path(__file__).parent / "testdata"
sys.path.insert(0, str(Path(__file__).parent))

GENESIS_HASH = "000000000019d6689c085ae165831e934ff763ae46a2a6c172b3f1b60a8ce26f"
GENESIS_TXID = "4a5e1e4baab89f3a32518a88c31bc87f618f76673e2cc77ab2127b7afdeda33b"
GENESIS_ADDRESS = "1A1zP1eP5QGefi2DMPTfTL5SLmv7DivfNa"


@pytest.fixture(scope="session")
def genesis_bytes():
    return (TESTDATA / "genesis.bin").read_bytes()


@pytest.fixture(scope="session")
def genesis_block(genesis_bytes):
    return parse_block(genesis_bytes)


@pytest.fixture(scope="session")
def small_chain():
    return synthesize(GenSpec(seed=7, n_blocks=10))


@pytest.fixture(scope="session")
def fee_chain():
    return synthesize(GenSpec(seed=2024, n_blocks=200))


@pytest.fixture(scope="session")
def fork_chain():
    return synthesize(GenSpec(seed=11, n_blocks=10, fork_at=5))


_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance")
    for name, outcome in _acceptance:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
