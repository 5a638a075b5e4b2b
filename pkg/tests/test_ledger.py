import hashlib

import numpy as np
import pytest

from conftest import build_two_block_chain
from mulsan import ledger, sss
from mulsan.errors import DanglingSanitizeEvent, FormatError, NothingPending, UnknownRecord
from mulsan.ledger import Chain, LedgerRecord, RecordKind


def H(data):
    return hashlib.sha3_256(data).digest()


def sign_record(signer, sanitizer, rng, text=b"x"):
    msg = sss.BlockMessage((text, b"detail"))
    sig = sss.sss_sign(msg, signer, sanitizer.public, sss.AdmissibleDescription(2, {1}), rng)
    return msg, sig, LedgerRecord.for_signature(RecordKind.SIGN, msg, sig, signer.public, sanitizer.public, 10)


def test_merkle_rules():
    a, b, c = H(b"a"), H(b"b"), H(b"c")
    assert ledger.merkle_root([a]) == H(a + a)
    assert ledger.merkle_root([a, b]) == H(a + b)
    assert ledger.merkle_root([a, b, c]) == H(H(a + b) + H(c + c))
    leaves = [H(bytes([i])) for i in range(7)]
    root = ledger.merkle_root(leaves)
    for pos, leaf in enumerate(leaves):
        assert ledger.merkle_fold(leaf, pos, ledger.merkle_path(leaves, pos)) == root


def test_append_ids_and_dangling(signer, sanitizer, rng):
    chain = Chain()
    _, sig, rec = sign_record(signer, sanitizer, rng)
    assert ledger.append_record(chain, rec) == (0, 0)
    assert ledger.append_record(chain, sign_record(signer, sanitizer, rng, b"y")[2]) == (0, 1)

    _, other, _ = sign_record(signer, sanitizer, rng, b"z")
    stray = LedgerRecord.for_signature(RecordKind.SANITIZE, sss.BlockMessage((b"z", b"-")), other,
                                       signer.public, sanitizer.public, 11)
    with pytest.raises(DanglingSanitizeEvent):
        ledger.append_record(chain, stray)


def test_seal(signer, sanitizer, rng):
    chain = Chain()
    with pytest.raises(NothingPending):
        ledger.seal_block(chain, 1)
    _, _, rec = sign_record(signer, sanitizer, rng)
    ledger.append_record(chain, rec)
    genesis = ledger.seal_block(chain, 5)
    assert genesis.prev_hash == bytes(32)
    assert genesis.records_root == H(rec.leaf() + rec.leaf())
    assert chain.pending == []
    ledger.append_record(chain, sign_record(signer, sanitizer, rng, b"y")[2])
    second = ledger.seal_block(chain, 6)
    assert second.prev_hash == genesis.hash() == H(genesis.header_bytes())
    assert ledger.append_record(chain, sign_record(signer, sanitizer, rng, b"z")[2]) == (2, 0)


def test_verify_fresh_and_swapped(signer, sanitizer, rng):
    chain = Chain()
    for i in range(3):
        ledger.append_record(chain, sign_record(signer, sanitizer, rng, b"%d" % i)[2])
        ledger.seal_block(chain, 100 + i)
    assert ledger.verify_chain(chain)
    swapped = Chain([chain.blocks[0], chain.blocks[2], chain.blocks[1]], [], chain.head)
    verdict = ledger.verify_chain(swapped)
    assert not verdict and verdict.index == 1


def test_record_mutation_reports_block(chain2):
    chain, _ = chain2
    rec = chain.blocks[1].records[0]
    raw = bytearray(rec.to_bytes())
    raw[40] ^= 0x01
    bad = LedgerRecord.from_bytes(bytes(raw))
    blk = chain.blocks[1]
    tampered = Chain([chain.blocks[0], ledger.Block(blk.index, blk.prev_hash, blk.timestamp, blk.records_root, (bad,))],
                     [], chain.head)
    verdict = ledger.verify_chain(tampered)
    assert not verdict and verdict.index == 1 and "root" in verdict.reason


def test_files_round_trip(chain2, tmp_path):
    chain, _ = chain2
    chain.save(tmp_path / "l")
    loaded = Chain.load(tmp_path / "l")
    assert loaded.to_files() == chain.to_files()
    assert ledger.verify_chain(loaded)
    assert sorted(p.name for p in (tmp_path / "l").iterdir()) == ["HEAD", "block_0.bin", "block_1.bin", "pending.bin"]


def _verify_files(files):
    try:
        chain = Chain.from_files(files)
    except FormatError:
        return False
    return bool(ledger.verify_chain(chain))


def test_single_byte_mutation_sweep(chain2):
    files = chain2[0].to_files()
    assert _verify_files(files)
    checked = 0
    for name, data in files.items():
        for pos in range(len(data)):
            for delta in (0x01, 0x80, 0xFF):
                mutated = bytearray(data)
                mutated[pos] ^= delta
                assert not _verify_files({**files, name: bytes(mutated)}), (name, pos, delta)
                checked += 1
    assert checked > 1000


def test_history(chain2):
    chain, sigs = chain2
    hist = ledger.history(chain, sigs[0].sigma1_bytes())
    assert [(rid, r.kind) for rid, r in hist] == [((0, 0), RecordKind.SIGN), ((1, 0), RecordKind.SANITIZE)]
    assert [rid for rid, _ in ledger.history(chain, sigs[1].sigma1_bytes())] == [(0, 1)]


def test_challenge_proof(chain2, rng):
    chain, _ = chain2
    chal = ledger.make_challenge([(0, 1), (1, 0)], rng)
    proof = ledger.build_proof(chain, chal)
    assert ledger.check_proof(proof, chal, chain.tip_hash())

    replay = ledger.Challenge(rng.bytes(16), chal.ids)
    verdict = ledger.check_proof(proof, replay, chain.tip_hash())
    assert not verdict and "binding" in verdict.reason

    other = chain.blocks[0].records[0].to_bytes()
    items = (ledger.ProofItem(0, 1, other, proof.items[0].path),) + proof.items[1:]
    verdict = ledger.check_proof(ledger.AuditProof(items, proof.headers, proof.binding), chal, chain.tip_hash())
    assert not verdict and "Merkle" in verdict.reason

    with pytest.raises(UnknownRecord):
        ledger.build_proof(chain, ledger.make_challenge([(5, 0)], rng))


def test_forked_chain_proof_rejected(signer, sanitizer, chain2, rng):
    honest, _ = chain2
    fork = Chain([honest.blocks[0]], [], honest.blocks[0].hash())
    _, _, rec = sign_record(signer, sanitizer, rng, b"forged")
    ledger.append_record(fork, rec)
    ledger.seal_block(fork, honest.blocks[1].timestamp)
    chal = ledger.make_challenge([(1, 0)], rng)
    proof = ledger.build_proof(fork, chal)
    assert ledger.check_proof(proof, chal, fork.tip_hash())
    verdict = ledger.check_proof(proof, chal, honest.tip_hash())
    assert not verdict and "tip" in verdict.reason


def test_challenge_and_proof_encoding(chain2, rng):
    chain, _ = chain2
    chal = ledger.make_challenge([(0, 0), (1, 0)], rng)
    assert ledger.Challenge.from_bytes(chal.to_bytes()) == chal
    proof = ledger.build_proof(chain, chal)
    assert ledger.AuditProof.from_bytes(proof.to_bytes()) == proof
    for bad in (chal.to_bytes()[:-1], b"junk"):
        with pytest.raises(FormatError):
            ledger.Challenge.from_bytes(bad)
    with pytest.raises(FormatError):
        ledger.AuditProof.from_bytes(proof.to_bytes() + b"\x00")
