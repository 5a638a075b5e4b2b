"""A single-writer, hash-chained ledger of signing and sanitization events.

Records are grouped into blocks.  Each block header commits to its index,
the previous header's hash, a timestamp and the Merkle root of its records;
header hashes are SHA3-256.  Merkle trees hash pairs with SHA3-256 and
duplicate the last node of odd levels, so a single record has root
``H(leaf || leaf)``.

A receiver holding only the tip hash can audit any sealed records: it sends
a fresh nonce, and the ledger answers with the records, their Merkle paths,
every header from genesis to tip, and ``SHA3-256(nonce || record hashes)``
binding the answer to that challenge.

There is one node and no consensus.  The directory form stores
``block_<i>.bin`` files, ``HEAD`` (raw tip hash) and ``pending.bin``.
"""

from __future__ import annotations

import hashlib
import struct
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import DanglingSanitizeEvent, FormatError, NothingPending, UnknownRecord
from .mqsig import PublicMap
from .sss import BlockMessage, SanSignature

HASH_LEN = 32
ZERO_HASH = bytes(HASH_LEN)
NONCE_LEN = 16
_HEADER = struct.Struct(">Q32sQ32s")
_RECORD_HEAD = struct.Struct(">B32s32s32sQI")
_U32 = struct.Struct(">I")
_ID = struct.Struct(">QI")
CHALLENGE_MAGIC = b"MCHL"
PROOF_MAGIC = b"MPRF"


def sha3(data: bytes) -> bytes:
    return hashlib.sha3_256(data).digest()


class RecordKind(IntEnum):
    SIGN = 0
    SANITIZE = 1


@dataclass(frozen=True)
class LedgerRecord:
    kind: RecordKind
    message_digest: bytes
    signature_bytes: bytes
    signer_pk_digest: bytes
    sanitizer_pk_digest: bytes
    timestamp: int

    @classmethod
    def for_signature(cls, kind: RecordKind, msg: BlockMessage, sig: SanSignature,
                      pk_sign: PublicMap, pk_sanit: PublicMap, timestamp: int) -> LedgerRecord:
        return cls(RecordKind(kind), sha3(msg.to_bytes()), sig.to_bytes(),
                   sha3(pk_sign.to_bytes()), sha3(pk_sanit.to_bytes()), int(timestamp))

    def __post_init__(self):
        for name in ("message_digest", "signer_pk_digest", "sanitizer_pk_digest"):
            if len(getattr(self, name)) != HASH_LEN:
                raise FormatError(f"{name} must be {HASH_LEN} bytes")
        SanSignature.from_bytes(self.signature_bytes)

    @property
    def sigma1(self) -> bytes:
        """Packed sigma1, sliced straight out of the validated signature bytes."""
        (n,) = struct.unpack_from(">H", self.signature_bytes, 5)
        return self.signature_bytes[7:7 + (n + 1) // 2]

    def to_bytes(self) -> bytes:
        return _RECORD_HEAD.pack(int(self.kind), self.message_digest, self.signer_pk_digest,
                                 self.sanitizer_pk_digest, self.timestamp,
                                 len(self.signature_bytes)) + self.signature_bytes

    @classmethod
    def from_bytes(cls, data: bytes) -> LedgerRecord:
        if len(data) < _RECORD_HEAD.size:
            raise FormatError("record truncated")
        kind, msg_d, sign_d, sanit_d, ts, siglen = _RECORD_HEAD.unpack_from(data)
        if kind not in (0, 1):
            raise FormatError(f"unknown record kind {kind}")
        sig = data[_RECORD_HEAD.size:]
        if len(sig) != siglen:
            raise FormatError("record signature length mismatch")
        return cls(RecordKind(kind), msg_d, sig, sign_d, sanit_d, ts)

    def leaf(self) -> bytes:
        return sha3(self.to_bytes())


# --- Merkle trees ---------------------------------------------------------

def _next_level(level: list[bytes]) -> list[bytes]:
    if len(level) % 2:
        level = level + [level[-1]]
    return [sha3(level[i] + level[i + 1]) for i in range(0, len(level), 2)]


def merkle_root(leaves: Sequence[bytes]) -> bytes:
    if not leaves:
        raise ValueError("empty tree")
    level = list(leaves)
    while True:
        level = _next_level(level)
        if len(level) == 1:
            return level[0]


def merkle_path(leaves: Sequence[bytes], position: int) -> list[bytes]:
    level, pos, path = list(leaves), position, []
    while True:
        if len(level) % 2:
            level = level + [level[-1]]
        path.append(level[pos ^ 1])
        level = [sha3(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
        pos //= 2
        if len(level) == 1:
            return path


def merkle_fold(leaf: bytes, position: int, path: Sequence[bytes]) -> bytes:
    node = leaf
    for sibling in path:
        node = sha3(sibling + node) if position & 1 else sha3(node + sibling)
        position //= 2
    return node


# --- blocks and chain -----------------------------------------------------

@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: bytes
    timestamp: int
    records_root: bytes
    records: tuple[LedgerRecord, ...]

    def header_bytes(self) -> bytes:
        return _HEADER.pack(self.index, self.prev_hash, self.timestamp, self.records_root)

    def hash(self) -> bytes:
        return sha3(self.header_bytes())

    def to_bytes(self) -> bytes:
        out = bytearray(self.header_bytes())
        out += _U32.pack(len(self.records))
        for rec in self.records:
            raw = rec.to_bytes()
            out += _U32.pack(len(raw)) + raw
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> Block:
        if len(data) < _HEADER.size + 4:
            raise FormatError("block truncated")
        index, prev, ts, root = _HEADER.unpack_from(data)
        records, pos = _read_records(data, _HEADER.size)
        if pos != len(data):
            raise FormatError("trailing bytes after block")
        return cls(index, prev, ts, root, tuple(records))


def _read_records(data: bytes, pos: int) -> tuple[list[LedgerRecord], int]:
    if pos + 4 > len(data):
        raise FormatError("record count truncated")
    (count,) = _U32.unpack_from(data, pos)
    pos += 4
    records = []
    for _ in range(count):
        if pos + 4 > len(data):
            raise FormatError("record length truncated")
        (length,) = _U32.unpack_from(data, pos)
        pos += 4
        if pos + length > len(data):
            raise FormatError("record runs past end of data")
        records.append(LedgerRecord.from_bytes(data[pos:pos + length]))
        pos += length
    return records, pos


RecordId = tuple[int, int]


@dataclass
class Chain:
    blocks: list[Block] = field(default_factory=list)
    pending: list[LedgerRecord] = field(default_factory=list)
    head: bytes | None = None

    def tip_hash(self) -> bytes:
        return self.blocks[-1].hash() if self.blocks else ZERO_HASH

    def records(self) -> Iterator[tuple[RecordId, LedgerRecord]]:
        for block in self.blocks:
            for pos, rec in enumerate(block.records):
                yield (block.index, pos), rec
        for pos, rec in enumerate(self.pending):
            yield (len(self.blocks), pos), rec

    def record(self, rid: RecordId) -> LedgerRecord:
        bidx, pos = rid
        if 0 <= bidx < len(self.blocks) and 0 <= pos < len(self.blocks[bidx].records):
            return self.blocks[bidx].records[pos]
        raise UnknownRecord(f"no sealed record at {rid}")

    def to_files(self) -> dict[str, bytes]:
        files = {f"block_{b.index}.bin": b.to_bytes() for b in self.blocks}
        if self.blocks:
            files["HEAD"] = self.head if self.head is not None else self.tip_hash()
        files["pending.bin"] = _encode_records(self.pending)
        return files

    @classmethod
    def from_files(cls, files: dict[str, bytes]) -> Chain:
        blocks = []
        i = 0
        while f"block_{i}.bin" in files:
            blocks.append(Block.from_bytes(files[f"block_{i}.bin"]))
            i += 1
        head = files.get("HEAD")
        if blocks and (head is None or len(head) != HASH_LEN):
            raise FormatError("HEAD missing or malformed")
        pending, pos = _read_records(files.get("pending.bin", bytes(4)), 0)
        return cls(blocks, pending, head if blocks else None)

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for name, data in self.to_files().items():
            tmp = d / (name + ".tmp")
            tmp.write_bytes(data)
            tmp.replace(d / name)

    @classmethod
    def load(cls, directory: str | Path) -> Chain:
        d = Path(directory)
        if not d.is_dir():
            raise FileNotFoundError(f"no ledger at {d}")
        files = {p.name: p.read_bytes() for p in d.iterdir()
                 if p.is_file() and (p.name.startswith("block_") or p.name in ("HEAD", "pending.bin"))}
        return cls.from_files(files)


def _encode_records(records: Sequence[LedgerRecord]) -> bytes:
    out = bytearray(_U32.pack(len(records)))
    for rec in records:
        raw = rec.to_bytes()
        out += _U32.pack(len(raw)) + raw
    return bytes(out)


def append_record(chain: Chain, record: LedgerRecord) -> RecordId:
    if record.kind is RecordKind.SANITIZE:
        sigma1 = record.sigma1
        if not any(r.kind is RecordKind.SIGN and r.sigma1 == sigma1 for _, r in chain.records()):
            raise DanglingSanitizeEvent("sanitize event does not match any recorded signature")
    chain.pending.append(record)
    return len(chain.blocks), len(chain.pending) - 1


def seal_block(chain: Chain, timestamp: int) -> Block:
    if not chain.pending:
        raise NothingPending("no records waiting to be sealed")
    records = tuple(chain.pending)
    block = Block(len(chain.blocks), chain.tip_hash(), int(timestamp),
                  merkle_root([r.leaf() for r in records]), records)
    chain.blocks.append(block)
    chain.pending = []
    chain.head = block.hash()
    return block


def history(chain: Chain, sigma1: bytes) -> list[tuple[RecordId, LedgerRecord]]:
    """Every event sharing this fixed-part signature, in ledger order."""
    return [(rid, r) for rid, r in chain.records() if r.sigma1 == sigma1]


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str = ""
    index: int | None = None

    def __bool__(self):
        return self.ok


ACCEPT = Verdict(True)


def verify_chain(chain: Chain) -> Verdict:
    prev = ZERO_HASH
    signed: set[bytes] = set()
    for pos, block in enumerate(chain.blocks):
        if block.index != pos:
            return Verdict(False, f"expected index {pos}, found {block.index}", pos)
        if block.prev_hash != prev:
            return Verdict(False, "previous-hash link broken", pos)
        if not block.records:
            return Verdict(False, "empty block", pos)
        if merkle_root([r.leaf() for r in block.records]) != block.records_root:
            return Verdict(False, "records root does not recompute", pos)
        for rec in block.records:
            s1 = rec.sigma1
            if rec.kind is RecordKind.SIGN:
                signed.add(s1)
            elif s1 not in signed:
                return Verdict(False, "sanitize event without an earlier signature", pos)
        prev = block.hash()
    if chain.blocks and chain.head != prev:
        return Verdict(False, "HEAD does not match the last block", len(chain.blocks) - 1)
    return ACCEPT


# --- challenge / proof ----------------------------------------------------

@dataclass(frozen=True)
class Challenge:
    nonce: bytes
    ids: tuple[RecordId, ...]

    def to_bytes(self) -> bytes:
        out = bytearray(CHALLENGE_MAGIC + self.nonce + _U32.pack(len(self.ids)))
        for b, p in self.ids:
            out += _ID.pack(b, p)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> Challenge:
        head = 4 + NONCE_LEN + 4
        if len(data) < head or data[:4] != CHALLENGE_MAGIC:
            raise FormatError("bad challenge header")
        nonce = data[4:4 + NONCE_LEN]
        (count,) = _U32.unpack_from(data, 4 + NONCE_LEN)
        if len(data) != head + count * _ID.size:
            raise FormatError("challenge length does not match id count")
        ids = tuple(_ID.unpack_from(data, head + i * _ID.size) for i in range(count))
        return cls(nonce, ids)


@dataclass(frozen=True)
class ProofItem:
    block_index: int
    position: int
    record_bytes: bytes
    path: tuple[bytes, ...]


@dataclass(frozen=True)
class AuditProof:
    items: tuple[ProofItem, ...]
    headers: tuple[bytes, ...]
    binding: bytes

    def to_bytes(self) -> bytes:
        out = bytearray(PROOF_MAGIC + self.binding + _U32.pack(len(self.headers)))
        for h in self.headers:
            out += h
        out += _U32.pack(len(self.items))
        for it in self.items:
            out += _ID.pack(it.block_index, it.position)
            out += _U32.pack(len(it.record_bytes)) + it.record_bytes
            out += _U32.pack(len(it.path)) + b"".join(it.path)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> AuditProof:
        def take(pos: int, k: int) -> tuple[bytes, int]:
            if pos + k > len(data):
                raise FormatError("proof truncated")
            return data[pos:pos + k], pos + k

        def u32(pos: int) -> tuple[int, int]:
            raw, pos = take(pos, 4)
            return _U32.unpack(raw)[0], pos

        magic, pos = take(0, 4)
        if magic != PROOF_MAGIC:
            raise FormatError("bad proof magic")
        binding, pos = take(pos, HASH_LEN)
        nh, pos = u32(pos)
        headers = []
        for _ in range(nh):
            h, pos = take(pos, _HEADER.size)
            headers.append(h)
        ni, pos = u32(pos)
        items = []
        for _ in range(ni):
            raw, pos = take(pos, _ID.size)
            b, p = _ID.unpack(raw)
            rlen, pos = u32(pos)
            rec, pos = take(pos, rlen)
            plen, pos = u32(pos)
            path = []
            for _ in range(plen):
                h, pos = take(pos, HASH_LEN)
                path.append(h)
            items.append(ProofItem(b, p, rec, tuple(path)))
        if pos != len(data):
            raise FormatError("trailing bytes after proof")
        return cls(tuple(items), tuple(headers), binding)


def binding_digest(nonce: bytes, record_hashes: Sequence[bytes]) -> bytes:
    return sha3(nonce + b"".join(record_hashes))


def make_challenge(ids: Sequence[RecordId], rng: np.random.Generator) -> Challenge:
    return Challenge(rng.bytes(NONCE_LEN), tuple((int(b), int(p)) for b, p in ids))


def build_proof(chain: Chain, challenge: Challenge) -> AuditProof:
    items = []
    for rid in challenge.ids:
        rec = chain.record(rid)
        block = chain.blocks[rid[0]]
        leaves = [r.leaf() for r in block.records]
        items.append(ProofItem(rid[0], rid[1], rec.to_bytes(), tuple(merkle_path(leaves, rid[1]))))
    headers = tuple(b.header_bytes() for b in chain.blocks)
    binding = binding_digest(challenge.nonce, [sha3(it.record_bytes) for it in items])
    return AuditProof(tuple(items), headers, binding)


def check_proof(proof: AuditProof, challenge: Challenge, tip_hash: bytes) -> Verdict:
    if not proof.headers:
        return Verdict(False, "proof carries no headers")
    prev = ZERO_HASH
    roots = []
    for pos, raw in enumerate(proof.headers):
        index, prev_hash, _ts, root = _HEADER.unpack(raw)
        if index != pos:
            return Verdict(False, "header indices not consecutive", pos)
        if prev_hash != prev:
            return Verdict(False, "header chain broken", pos)
        roots.append(root)
        prev = sha3(raw)
    if prev != tip_hash:
        return Verdict(False, "headers do not chain to the trusted tip")
    if tuple((it.block_index, it.position) for it in proof.items) != challenge.ids:
        return Verdict(False, "proof answers different records than challenged")
    for it in proof.items:
        if it.block_index >= len(roots):
            return Verdict(False, "record claims a block beyond the tip", it.block_index)
        leaf = sha3(it.record_bytes)
        if merkle_fold(leaf, it.position, it.path) != roots[it.block_index]:
            return Verdict(False, "Merkle path does not reach the block root", it.block_index)
        try:
            LedgerRecord.from_bytes(it.record_bytes)
        except FormatError:
            return Verdict(False, "record bytes are malformed", it.block_index)
    if binding_digest(challenge.nonce, [sha3(it.record_bytes) for it in proof.items]) != proof.binding:
        return Verdict(False, "binding digest does not match the challenge nonce")
    return ACCEPT
