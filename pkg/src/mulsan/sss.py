"""Sanitizable signatures over block-structured messages.

The signer fixes an admissible description (which blocks a designated
sanitizer may replace) and produces two MQ signatures: ``sigma1`` over the
fixed blocks, the description and the sanitizer's public key, and ``sigma2``
over the whole message and both public keys.  The sanitizer may replace
admissible blocks and re-sign the whole message under its own key, carrying
``sigma1`` over unchanged.  Verification accepts ``sigma2`` under either key;
the judge attributes a valid pair to whichever key ``sigma2`` belongs to.

Wire formats (all integers big-endian)::

    message   : count (u32) | { length (u32) | block bytes } * count
    AD        : count (u32) | ceil(count / 8) bitmask bytes, bit 7 of byte 0 = block 0
    signature : b"MSIG" | 0x01 | n (u16) | sigma1 packed | sigma2 packed | AD
"""

from __future__ import annotations

import struct
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field as dc_field
from enum import Enum

import numpy as np

from . import field
from .errors import (
    CountMismatch,
    DimensionMismatch,
    FormatError,
    InvalidFixedSignature,
    NotAdmissible,
    PreconditionViolated,
)
from .h2f import FIXED_TAG, FULL_TAG, HashInput, hash_to_field
from .mqsig import MqKeyPair, Party, PublicMap, UOVParams, mq_keygen, mq_sign, mq_verify

SIG_MAGIC = b"MSIG"
SIG_VERSION = 1
_U32 = struct.Struct(">I")


def _read_u32(data: bytes, pos: int) -> tuple[int, int]:
    if pos + 4 > len(data):
        raise FormatError("truncated length field")
    return _U32.unpack_from(data, pos)[0], pos + 4


@dataclass(frozen=True)
class BlockMessage:
    blocks: tuple[bytes, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(bytes(b) for b in self.blocks))
        if not self.blocks:
            raise ValueError("a message needs at least one block")

    @property
    def count(self) -> int:
        return len(self.blocks)

    def to_bytes(self) -> bytes:
        out = bytearray(_U32.pack(self.count))
        for block in self.blocks:
            out += _U32.pack(len(block)) + block
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> BlockMessage:
        count, pos = _read_u32(data, 0)
        if count == 0:
            raise FormatError("message has zero blocks")
        blocks = []
        for _ in range(count):
            length, pos = _read_u32(data, pos)
            if pos + length > len(data):
                raise FormatError("block runs past end of message")
            blocks.append(data[pos:pos + length])
            pos += length
        if pos != len(data):
            raise FormatError("trailing bytes after message")
        return cls(tuple(blocks))


@dataclass(frozen=True)
class AdmissibleDescription:
    block_count: int
    modifiable: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "modifiable", frozenset(self.modifiable))
        if self.block_count < 1:
            raise ValueError("block_count must be positive")
        bad = [i for i in self.modifiable if not 0 <= i < self.block_count]
        if bad:
            raise ValueError(f"modifiable indices out of range: {sorted(bad)}")

    def is_modifiable(self, index: int) -> bool:
        return index in self.modifiable

    def to_bytes(self) -> bytes:
        mask = bytearray((self.block_count + 7) // 8)
        for i in self.modifiable:
            mask[i // 8] |= 0x80 >> (i % 8)
        return _U32.pack(self.block_count) + bytes(mask)

    @classmethod
    def decode_prefix(cls, data: bytes, pos: int = 0) -> tuple[AdmissibleDescription, int]:
        count, pos = _read_u32(data, pos)
        if count == 0:
            raise FormatError("AD covers zero blocks")
        nbytes = (count + 7) // 8
        if pos + nbytes > len(data):
            raise FormatError("AD bitmask truncated")
        mask = data[pos:pos + nbytes]
        modifiable = {i for i in range(nbytes * 8) if mask[i // 8] & (0x80 >> (i % 8))}
        if any(i >= count for i in modifiable):
            raise FormatError("AD bitmask has bits set past block_count")
        return cls(count, frozenset(modifiable)), pos + nbytes

    @classmethod
    def from_bytes(cls, data: bytes) -> AdmissibleDescription:
        ad, pos = cls.decode_prefix(data)
        if pos != len(data):
            raise FormatError("trailing bytes after AD")
        return ad


@dataclass(frozen=True)
class Modification:
    replacements: Mapping[int, bytes] = dc_field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "replacements", {int(i): bytes(b) for i, b in sorted(self.replacements.items())})

    def __hash__(self):
        return hash(tuple(self.replacements.items()))

    def apply(self, msg: BlockMessage) -> BlockMessage:
        blocks = list(msg.blocks)
        for i, new in self.replacements.items():
            if not 0 <= i < msg.count:
                raise IndexError(f"replacement index {i} outside a {msg.count}-block message")
            blocks[i] = new
        return BlockMessage(tuple(blocks))

    def to_bytes(self) -> bytes:
        out = bytearray(_U32.pack(len(self.replacements)))
        for i, new in self.replacements.items():
            out += _U32.pack(i) + _U32.pack(len(new)) + new
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> Modification:
        count, pos = _read_u32(data, 0)
        reps: dict[int, bytes] = {}
        last = -1
        for _ in range(count):
            idx, pos = _read_u32(data, pos)
            if idx <= last:
                raise FormatError("modification indices must be strictly increasing")
            length, pos = _read_u32(data, pos)
            if pos + length > len(data):
                raise FormatError("replacement runs past end of data")
            reps[idx] = data[pos:pos + length]
            pos += length
            last = idx
        if pos != len(data):
            raise FormatError("trailing bytes after modification")
        return cls(reps)


@dataclass(frozen=True, eq=False)
class SanSignature:
    sigma1: np.ndarray
    sigma2: np.ndarray
    ad: AdmissibleDescription

    def __post_init__(self):
        if self.sigma1.shape != self.sigma2.shape or self.sigma1.ndim != 1:
            raise DimensionMismatch("sigma1 and sigma2 must be vectors of the same length")

    @property
    def n(self) -> int:
        return self.sigma1.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SanSignature):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    def sigma1_bytes(self) -> bytes:
        return field.pack_nibbles(self.sigma1)

    def to_bytes(self) -> bytes:
        return (SIG_MAGIC + bytes([SIG_VERSION]) + struct.pack(">H", self.n)
                + field.pack_nibbles(self.sigma1) + field.pack_nibbles(self.sigma2) + self.ad.to_bytes())

    @classmethod
    def decode_prefix(cls, data: bytes, pos: int = 0) -> tuple[SanSignature, int]:
        """Parse one signature starting at ``pos``; returns it and the offset just past it."""
        if pos + 7 > len(data):
            raise FormatError("signature truncated before end of header")
        if data[pos:pos + 4] != SIG_MAGIC:
            raise FormatError("bad signature magic")
        if data[pos + 4] != SIG_VERSION:
            raise FormatError(f"unsupported signature version {data[pos + 4]}")
        (n,) = struct.unpack_from(">H", data, pos + 5)
        if n == 0:
            raise FormatError("signature dimension is zero")
        pos += 7
        width = (n + 1) // 2
        if pos + 2 * width > len(data):
            raise FormatError("signature vectors truncated")
        try:
            s1 = field.unpack_nibbles(data[pos:pos + width], n)
            s2 = field.unpack_nibbles(data[pos + width:pos + 2 * width], n)
        except ValueError as exc:
            raise FormatError(f"signature vector: {exc}") from None
        ad, pos = AdmissibleDescription.decode_prefix(data, pos + 2 * width)
        return cls(s1, s2, ad), pos

    @classmethod
    def from_bytes(cls, data: bytes) -> SanSignature:
        sig, pos = cls.decode_prefix(data)
        if pos != len(data):
            raise FormatError("trailing bytes after signature")
        return sig


class Origin(Enum):
    SIG = "Sig"
    SAN = "San"


# --- key generation -------------------------------------------------------

def kgen_sign(params: UOVParams, rng: np.random.Generator) -> MqKeyPair:
    return mq_keygen(params, rng, Party.SIGNER)


def kgen_sanit(params: UOVParams, rng: np.random.Generator) -> MqKeyPair:
    return mq_keygen(params, rng, Party.SANITIZER)


# --- message machinery ----------------------------------------------------

def fixed_extract(msg: BlockMessage, ad: AdmissibleDescription) -> bytes:
    """Canonical encoding of the blocks the sanitizer may not touch.

    Layout: count (u32), then for each fixed index ascending its index (u32),
    length (u32) and bytes.  Indices and count are bound in so blocks cannot
    be reordered or spliced between messages of different shape.
    """
    if ad.block_count != msg.count:
        raise CountMismatch(f"AD covers {ad.block_count} blocks, message has {msg.count}")
    out = bytearray(_U32.pack(msg.count))
    for i, block in enumerate(msg.blocks):
        if i not in ad.modifiable:
            out += _U32.pack(i) + _U32.pack(len(block)) + block
    return bytes(out)


def admissible_check(mod: Modification, ad: AdmissibleDescription, msg: BlockMessage | None = None) -> int:
    limit = ad.block_count if msg is None else min(ad.block_count, msg.count)
    ok = all(0 <= i < limit and i in ad.modifiable for i in mod.replacements)
    return int(ok)


def _fixed_digest(msg: BlockMessage, ad: AdmissibleDescription, pk_sanit: PublicMap, m: int) -> np.ndarray:
    parts = [fixed_extract(msg, ad), ad.to_bytes(), pk_sanit.to_bytes()]
    return hash_to_field(HashInput(FIXED_TAG, parts), m)


def _full_digest(msg: BlockMessage, pk_sanit: PublicMap, pk_sign: PublicMap, m: int) -> np.ndarray:
    parts = [msg.to_bytes(), pk_sanit.to_bytes(), pk_sign.to_bytes()]
    return hash_to_field(HashInput(FULL_TAG, parts), m)


def _check_compatible(pk_sign: PublicMap, pk_sanit: PublicMap) -> None:
    a, b = pk_sign.params, pk_sanit.params
    if (a.n, a.m) != (b.n, b.m):
        raise DimensionMismatch(f"signer key is ({a.n}, {a.m}) but sanitizer key is ({b.n}, {b.m})")


# --- the six algorithms ---------------------------------------------------

def sss_sign(msg: BlockMessage, signer: MqKeyPair, pk_sanit: PublicMap, ad: AdmissibleDescription,
             rng: np.random.Generator) -> SanSignature:
    _check_compatible(signer.public, pk_sanit)
    m = signer.params.m
    h0 = _fixed_digest(msg, ad, pk_sanit, m)
    sigma1 = mq_sign(signer.secret, h0, rng)
    h1 = _full_digest(msg, pk_sanit, signer.public, m)
    sigma2 = mq_sign(signer.secret, h1, rng)
    return SanSignature(sigma1, sigma2, ad)


def sss_sanitize(msg: BlockMessage, mod: Modification, sig: SanSignature, pk_sign: PublicMap,
                 sanitizer: MqKeyPair, rng: np.random.Generator) -> tuple[BlockMessage, SanSignature]:
    pk_sanit = sanitizer.public
    _check_compatible(pk_sign, pk_sanit)
    m = pk_sign.params.m
    ad = sig.ad
    fixed_extract(msg, ad)
    if not admissible_check(mod, ad, msg):
        touched = sorted(i for i in mod.replacements if i not in ad.modifiable or i >= msg.count)
        raise NotAdmissible(f"modification touches non-admissible blocks {touched}")
    if sig.n != pk_sign.params.n or not mq_verify(pk_sign, sig.sigma1, _fixed_digest(msg, ad, pk_sanit, m)):
        raise InvalidFixedSignature("signature on the fixed part does not verify")
    sanitized = mod.apply(msg)
    h2 = _full_digest(sanitized, pk_sanit, pk_sign, m)
    sigma2 = mq_sign(sanitizer.secret, h2, rng)
    return sanitized, SanSignature(sig.sigma1, sigma2, ad)


def sss_verify(msg: BlockMessage, sig: SanSignature, pk_sign: PublicMap, pk_sanit: PublicMap) -> bool:
    if (pk_sign.params.n, pk_sign.params.m) != (pk_sanit.params.n, pk_sanit.params.m):
        return False
    if sig.n != pk_sign.params.n or sig.ad.block_count != msg.count:
        return False
    m = pk_sign.params.m
    if not mq_verify(pk_sign, sig.sigma1, _fixed_digest(msg, sig.ad, pk_sanit, m)):
        return False
    h1 = _full_digest(msg, pk_sanit, pk_sign, m)
    return mq_verify(pk_sign, sig.sigma2, h1) or mq_verify(pk_sanit, sig.sigma2, h1)


def sss_judge(msg: BlockMessage, sig: SanSignature, pk_sign: PublicMap, pk_sanit: PublicMap) -> Origin:
    if not sss_verify(msg, sig, pk_sign, pk_sanit):
        raise PreconditionViolated("judge needs a valid message-signature pair")
    h1 = _full_digest(msg, pk_sanit, pk_sign, pk_sign.params.m)
    return Origin.SIG if mq_verify(pk_sign, sig.sigma2, h1) else Origin.SAN


def decode_signatures(data: bytes) -> list[SanSignature]:
    """Split a file of back-to-back signatures (one per log entry)."""
    sigs, pos = [], 0
    while pos < len(data):
        sig, pos = SanSignature.decode_prefix(data, pos)
        sigs.append(sig)
    return sigs


def encode_signatures(sigs: Iterable[SanSignature]) -> bytes:
    return b"".join(s.to_bytes() for s in sigs)
