"""Hashing byte strings to vectors over GF(16) with SHAKE256.

The absorbed stream is ``tag || len(p0) || p0 || len(p1) || p1 ...`` with
32-bit big-endian lengths, so part lists that concatenate to the same bytes
still hash apart.  ``ceil(m / 2)`` bytes are squeezed and split into nibbles,
low nibble first; nibbles of a uniform byte are exactly uniform in GF(16).
"""

from __future__ import annotations

import hashlib
import struct
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

FIXED_TAG = 0x00
FULL_TAG = 0x01


@dataclass(frozen=True)
class HashInput:
    tag: int
    parts: Sequence[bytes]

    def __post_init__(self):
        if self.tag not in (FIXED_TAG, FULL_TAG):
            raise ValueError(f"tag must be 0x00 or 0x01, got {self.tag:#x}")

    def stream(self) -> bytes:
        out = bytearray([self.tag])
        for part in self.parts:
            out += struct.pack(">I", len(part))
            out += part
        return bytes(out)


def hash_to_field(inp: HashInput, m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("output dimension must be at least 1")
    digest = hashlib.shake_256(inp.stream()).digest((m + 1) // 2)
    raw = np.frombuffer(digest, dtype=np.uint8)
    out = np.empty(raw.size * 2, dtype=np.uint8)
    out[0::2] = raw & 0x0F
    out[1::2] = raw >> 4
    return out[:m]
