import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mulsan import field
from mulsan.errors import DimensionMismatch, EntropyFailure, NoUniqueSolution, SamplingExhausted, ZeroInverse
from mulsan.field import AffineMap, Direction


def poly_reduce_mul(a, b):
    """Carry-less product then long division by x^4 + x + 1."""
    prod = 0
    for i in range(4):
        if (b >> i) & 1:
            prod ^= a << i
    for shift in range(3, -1, -1):
        if prod & (1 << (4 + shift)):
            prod ^= 0b10011 << shift
    return prod


def oracle_matvec(a, x):
    out = []
    for row in a:
        acc = 0
        for c, xi in zip(row, x):
            acc ^= poly_reduce_mul(int(c), int(xi))
        out.append(acc)
    return out


def test_mul_examples():
    assert field.fe_mul(0x0, 0xB) == 0x0
    assert field.fe_mul(0x1, 0xB) == 0xB
    assert field.fe_mul(0x2, 0x9) == 0x1


def test_mul_matches_polynomial_oracle():
    for a, b in itertools.product(range(16), repeat=2):
        assert field.fe_mul(a, b) == poly_reduce_mul(a, b)


def test_mul_matches_log_tables():
    # x is a generator of GF(16)* under x^4 + x + 1
    exp = [1]
    for _ in range(14):
        exp.append(poly_reduce_mul(exp[-1], 2))
    assert sorted(exp) == list(range(1, 16))
    log = {e: i for i, e in enumerate(exp)}
    for a, b in itertools.product(range(16), repeat=2):
        expected = 0 if 0 in (a, b) else exp[(log[a] + log[b]) % 15]
        assert field.fe_mul(a, b) == expected


def test_distributive_and_commutative():
    for a, b, c in itertools.product(range(16), repeat=3):
        assert field.fe_mul(a, b ^ c) == field.fe_mul(a, b) ^ field.fe_mul(a, c)
    for a, b in itertools.product(range(16), repeat=2):
        assert field.fe_mul(a, b) == field.fe_mul(b, a)


def test_inverse():
    assert field.fe_inv(1) == 1
    partners = [b for b in range(1, 16) if poly_reduce_mul(2, b) == 1]
    assert partners == [0x9]
    assert field.fe_inv(2) == 0x9
    for a in range(1, 16):
        assert field.fe_mul(a, field.fe_inv(a)) == 1
    with pytest.raises(ZeroInverse):
        field.fe_inv(0)


def test_solve_identity_and_singular():
    b = field.vector([3, 7, 12])
    np.testing.assert_array_equal(field.solve_linear(field.identity(3), b), b)
    with pytest.raises(NoUniqueSolution):
        field.solve_linear(np.zeros((2, 2), dtype=np.uint8), field.vector([1, 0]))


def test_solve_2x2_against_exhaustive_search():
    rng = np.random.default_rng(7)
    solved = 0
    while solved < 50:
        a = field.random_elements(rng, (2, 2))
        b = field.random_elements(rng, 2)
        candidates = [x for x in itertools.product(range(16), repeat=2)
                      if oracle_matvec(a, x) == list(b)]
        images = {tuple(oracle_matvec(a, x)) for x in itertools.product(range(16), repeat=2)}
        if len(images) < 256:
            with pytest.raises(NoUniqueSolution):
                field.solve_linear(a, b)
            continue
        assert len(candidates) == 1
        assert tuple(field.solve_linear(a, b)) == candidates[0]
        solved += 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_solution_satisfies_system(d, seed):
    rng = np.random.default_rng(seed)
    a = field.random_elements(rng, (d, d))
    b = field.random_elements(rng, d)
    try:
        x = field.solve_linear(a, b)
    except NoUniqueSolution:
        return
    np.testing.assert_array_equal(oracle_matvec(a, x), b)


def test_matmul_against_oracle():
    rng = np.random.default_rng(3)
    a = field.random_elements(rng, (5, 7))
    b = field.random_elements(rng, (7, 4))
    expected = np.array([oracle_matvec(a, b[:, j]) for j in range(4)]).T
    np.testing.assert_array_equal(field.matmul(a, b), expected)
    with pytest.raises(DimensionMismatch):
        field.matmul(a, a)


def test_invert_matrix():
    rng = np.random.default_rng(11)
    amap = field.sample_invertible_affine(9, rng)
    np.testing.assert_array_equal(field.matmul(amap.linear, amap.cached_inverse), field.identity(9))


def test_sample_affine_examples():
    one = field.sample_invertible_affine(1, np.random.default_rng(0))
    assert one.linear.shape == (1, 1) and one.linear[0, 0] != 0

    m8 = field.sample_invertible_affine(8, np.random.default_rng(1))
    np.testing.assert_array_equal(field.matmul(m8.linear, m8.cached_inverse), field.identity(8))

    other = field.sample_invertible_affine(8, np.random.default_rng(2))
    assert m8 != other
    assert m8 == field.sample_invertible_affine(8, np.random.default_rng(1))


class BrokenRng:
    def integers(self, *a, **k):
        raise OSError("device unplugged")


class ZeroRng:
    def integers(self, low, high, size, dtype):
        return np.zeros(size, dtype=dtype)


def test_sample_affine_errors():
    with pytest.raises(EntropyFailure):
        field.sample_invertible_affine(4, BrokenRng())
    with pytest.raises(SamplingExhausted):
        field.sample_invertible_affine(4, ZeroRng())


def test_affine_apply_examples():
    v = field.vector([1, 2, 3, 4])
    ident = AffineMap.from_parts(field.identity(4), np.zeros(4, dtype=np.uint8))
    np.testing.assert_array_equal(field.affine_apply(ident, v, Direction.FORWARD), v)

    w = field.vector([15, 0, 6, 9])
    shift = AffineMap.from_parts(field.identity(4), w)
    np.testing.assert_array_equal(shift(v), [1 ^ 15, 2, 3 ^ 6, 4 ^ 9])

    with pytest.raises(DimensionMismatch):
        shift(field.vector([1, 2]))


@pytest.mark.parametrize("d", [1, 8, 24])
def test_affine_round_trip(d):
    rng = np.random.default_rng(d)
    for _ in range(100):
        amap = field.sample_invertible_affine(d, rng)
        v = field.random_elements(rng, d)
        back = field.affine_apply(amap, field.affine_apply(amap, v, Direction.FORWARD), Direction.INVERSE)
        np.testing.assert_array_equal(back, v)


def test_nibble_packing():
    elems = field.vector([1, 2, 3, 15, 7])
    packed = field.pack_nibbles(elems)
    assert packed == bytes([0x21, 0xF3, 0x07])
    np.testing.assert_array_equal(field.unpack_nibbles(packed, 5), elems)
    with pytest.raises(ValueError):
        field.unpack_nibbles(bytes([0x21, 0xF3, 0x17]), 5)
