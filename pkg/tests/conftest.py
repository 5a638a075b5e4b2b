import zlib

import numpy as np
import pytest

from mulsan import get_params, kgen_sanit, kgen_sign

TOY = get_params("uov-toy")


def poly_oracle_mul(a, b):
    """Carry-less product of two nibbles reduced by x^4 + x + 1, bit by bit."""
    a, b, prod = int(a), int(b), 0
    for i in range(4):
        if (b >> i) & 1:
            prod ^= a << i
    for shift in range(3, -1, -1):
        if prod & (1 << (4 + shift)):
            prod ^= 0b10011 << shift
    return prod


@pytest.fixture(scope="session")
def toy():
    return TOY


@pytest.fixture(scope="session")
def signer():
    return kgen_sign(TOY, np.random.default_rng(1001))


@pytest.fixture(scope="session")
def sanitizer():
    return kgen_sanit(TOY, np.random.default_rng(2002))


@pytest.fixture
def rng(request):
    return np.random.default_rng(zlib.crc32(request.node.name.encode()))


def build_two_block_chain(signer, sanitizer, seed=99):
    """Block 0: two sign events.  Block 1: a sanitize event for the first."""
    from mulsan import ledger, sss

    rng = np.random.default_rng(seed)
    ad = sss.AdmissibleDescription(3, {2})
    chain = ledger.Chain()
    msgs = [sss.BlockMessage((b"ts=%d" % i, b"actor=a", b"detail=d%d" % i)) for i in range(2)]
    sigs = [sss.sss_sign(m, signer, sanitizer.public, ad, rng) for m in msgs]
    for m, s in zip(msgs, sigs):
        ledger.append_record(chain, ledger.LedgerRecord.for_signature(
            ledger.RecordKind.SIGN, m, s, signer.public, sanitizer.public, 1_700_000_000))
    ledger.seal_block(chain, 1_700_000_001)
    new_msg, new_sig = sss.sss_sanitize(msgs[0], sss.Modification({2: b"detail=-"}), sigs[0],
                                        signer.public, sanitizer, rng)
    ledger.append_record(chain, ledger.LedgerRecord.for_signature(
        ledger.RecordKind.SANITIZE, new_msg, new_sig, signer.public, sanitizer.public, 1_700_000_100))
    ledger.seal_block(chain, 1_700_000_101)
    return chain, sigs


@pytest.fixture
def chain2(signer, sanitizer):
    return build_two_block_chain(signer, sanitizer)


_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and (report.when == "call" or report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        if report.when == "call" or name not in _acceptance:
            _acceptance[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance.items(), key=lambda kv: int(kv[0].split("_")[1][2:])):
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
