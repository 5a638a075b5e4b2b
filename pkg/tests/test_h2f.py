import hashlib

import numpy as np
import pytest

from mulsan.h2f import FIXED_TAG, FULL_TAG, HashInput, hash_to_field


def test_deterministic():
    inp = HashInput(FULL_TAG, [b"log", b"entry"])
    np.testing.assert_array_equal(hash_to_field(inp, 8), hash_to_field(inp, 8))


def test_tag_separation():
    a = hash_to_field(HashInput(FIXED_TAG, [b"same"]), 64)
    b = hash_to_field(HashInput(FULL_TAG, [b"same"]), 64)
    assert not np.array_equal(a, b)


def test_part_boundaries():
    left = HashInput(FULL_TAG, [b"ab", b"c"])
    right = HashInput(FULL_TAG, [b"a", b"bc"])
    assert left.stream() == b"\x01\x00\x00\x00\x02ab\x00\x00\x00\x01c"
    assert right.stream() == b"\x01\x00\x00\x00\x01a\x00\x00\x00\x02bc"
    assert not np.array_equal(hash_to_field(left, 64), hash_to_field(right, 64))


def test_matches_shake256_nibbles():
    inp = HashInput(FIXED_TAG, [b"x"])
    digest = hashlib.shake_256(b"\x00\x00\x00\x00\x01x").digest(4)
    expected = [n for byte in digest for n in (byte & 0xF, byte >> 4)][:7]
    np.testing.assert_array_equal(hash_to_field(inp, 7), expected)


@pytest.mark.parametrize("m", [1, 7, 8, 64, 65])
def test_length_and_range(m):
    out = hash_to_field(HashInput(FULL_TAG, [b"abc"]), m)
    assert out.shape == (m,) and out.max() < 16


def test_bad_inputs():
    with pytest.raises(ValueError):
        HashInput(2, [])
    with pytest.raises(ValueError):
        hash_to_field(HashInput(FULL_TAG, []), 0)


def test_uniformity():
    samples = np.array([hash_to_field(HashInput(FULL_TAG, [i.to_bytes(4, "big")]), 8) for i in range(10_000)])
    expected = 10_000 / 16
    sigma = np.sqrt(10_000 * (1 / 16) * (15 / 16))
    for pos in range(8):
        counts = np.bincount(samples[:, pos], minlength=16)
        assert np.all(np.abs(counts - expected) < 5 * sigma)
