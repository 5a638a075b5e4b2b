"""Arithmetic over GF(16) and dense linear algebra on top of it.

Field elements are plain ints in ``[0, 15]``; bit ``i`` is the coefficient of
``x**i`` and the field is GF(2)[x] / (x^4 + x + 1).  Vectors and matrices are
``numpy.uint8`` arrays holding one element per entry.  Addition is XOR.

Nothing here is constant time.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DimensionMismatch,
    EntropyFailure,
    NoUniqueSolution,
    SamplingExhausted,
    ZeroInverse,
)

Q = 16
MODULUS = 0b10011  # x^4 + x + 1
SAMPLING_LIMIT = 256


def _poly_mul(a: int, b: int) -> int:
    r = 0
    for i in range(4):
        if (b >> i) & 1:
            r ^= a << i
    for deg in (6, 5, 4):
        if (r >> deg) & 1:
            r ^= MODULUS << (deg - 4)
    return r


MUL = np.array([[_poly_mul(a, b) for b in range(Q)] for a in range(Q)], dtype=np.uint8)
INV = np.zeros(Q, dtype=np.uint8)
for _a in range(1, Q):
    INV[_a] = int(np.flatnonzero(MUL[_a] == 1)[0])
del _a


def fe_mul(a: int, b: int) -> int:
    return int(MUL[a, b])


def fe_inv(a: int) -> int:
    if a == 0:
        raise ZeroInverse("0 has no multiplicative inverse in GF(16)")
    return int(INV[a])


def vector(values) -> np.ndarray:
    """Build a field vector, checking every entry is a nibble."""
    v = np.asarray(values, dtype=np.int64)
    if v.size and (v.min() < 0 or v.max() >= Q):
        raise ValueError("field elements must lie in [0, 15]")
    return v.astype(np.uint8)


def scale(c: int, v: np.ndarray) -> np.ndarray:
    return MUL[c][v]


def _bitplanes(a: np.ndarray) -> list[np.ndarray]:
    return [((a >> i) & 1).astype(np.float64) for i in range(4)]


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """GF(16) matrix product with numpy ``@`` broadcasting rules.

    Each operand is split into its four GF(2) bit planes; the 16 plane
    products are exact float matmuls reduced mod 2, then recombined as a
    degree-6 polynomial and reduced mod x^4 + x + 1.
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape[-1] != (b.shape[-2] if b.ndim > 1 else b.shape[0]):
        raise DimensionMismatch(f"cannot multiply shapes {a.shape} and {b.shape}")
    pa, pb = _bitplanes(a), _bitplanes(b)
    coeffs = [None] * 7
    for i in range(4):
        for j in range(4):
            prod = np.rint(pa[i] @ pb[j]).astype(np.int64) & 1
            coeffs[i + j] = prod if coeffs[i + j] is None else coeffs[i + j] ^ prod
    out = coeffs[0] | (coeffs[1] << 1) | (coeffs[2] << 2) | (coeffs[3] << 3)
    # x^4 = x + 1, x^5 = x^2 + x, x^6 = x^3 + x^2
    out ^= coeffs[4] * 0b0011
    out ^= coeffs[5] * 0b0110
    out ^= coeffs[6] * 0b1100
    return out.astype(np.uint8)


def matvec(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    if a.shape[1] != v.shape[0]:
        raise DimensionMismatch(f"matrix has {a.shape[1]} columns, vector has {v.shape[0]} entries")
    return np.bitwise_xor.reduce(MUL[a, v[None, :]], axis=1).astype(np.uint8)


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.uint8)


def _eliminate(aug: np.ndarray, d: int) -> np.ndarray:
    """Gauss-Jordan on the first ``d`` columns of ``aug`` (modified in place).

    The pivot is the first nonzero entry at or below the diagonal.
    """
    for col in range(d):
        nz = np.flatnonzero(aug[col:, col])
        if nz.size == 0:
            raise NoUniqueSolution(f"matrix is singular (no pivot in column {col})")
        piv = col + int(nz[0])
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = MUL[INV[aug[col, col]]][aug[col]]
        factors = aug[:, col].copy()
        factors[col] = 0
        aug ^= MUL[factors[:, None], aug[col][None, :]]
    return aug


def solve_linear(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return the unique ``x`` with ``a @ x == b``.

    Raises NoUniqueSolution when ``a`` is singular, whether or not the
    system happens to be consistent.
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    d = a.shape[0]
    if a.shape != (d, d) or b.shape != (d,):
        raise DimensionMismatch(f"expected square system, got A{a.shape} b{b.shape}")
    aug = np.concatenate([a, b[:, None]], axis=1)
    return _eliminate(aug, d)[:, d].copy()


def invert_matrix(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint8)
    d = a.shape[0]
    if a.shape != (d, d):
        raise DimensionMismatch(f"cannot invert non-square matrix of shape {a.shape}")
    aug = np.concatenate([a, identity(d)], axis=1)
    return _eliminate(aug, d)[:, d:].copy()


def random_elements(rng: np.random.Generator, shape) -> np.ndarray:
    try:
        return rng.integers(0, Q, size=shape, dtype=np.uint8)
    except Exception as exc:  # any failure of the entropy source
        raise EntropyFailure(f"entropy source failed: {exc}") from exc


class Direction(Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``v -> linear @ v + offset`` with the inverse of ``linear`` cached."""

    linear: np.ndarray
    offset: np.ndarray
    cached_inverse: np.ndarray

    @classmethod
    def from_parts(cls, linear: np.ndarray, offset: np.ndarray) -> AffineMap:
        linear = np.asarray(linear, dtype=np.uint8)
        offset = np.asarray(offset, dtype=np.uint8)
        if linear.shape != (offset.shape[0],) * 2:
            raise DimensionMismatch(f"linear part {linear.shape} does not match offset {offset.shape}")
        return cls(linear, offset, invert_matrix(linear))

    @property
    def dim(self) -> int:
        return self.offset.shape[0]

    def __eq__(self, other):
        if not isinstance(other, AffineMap):
            return NotImplemented
        return np.array_equal(self.linear, other.linear) and np.array_equal(self.offset, other.offset)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return affine_apply(self, v, Direction.FORWARD)

    def inverse(self, v: np.ndarray) -> np.ndarray:
        return affine_apply(self, v, Direction.INVERSE)


def affine_apply(amap: AffineMap, v: np.ndarray, direction: Direction = Direction.FORWARD) -> np.ndarray:
    v = np.asarray(v, dtype=np.uint8)
    if v.shape != (amap.dim,):
        raise DimensionMismatch(f"map has dimension {amap.dim}, vector has shape {v.shape}")
    if direction is Direction.FORWARD:
        return matvec(amap.linear, v) ^ amap.offset
    return matvec(amap.cached_inverse, v ^ amap.offset)


def sample_invertible_affine(d: int, rng: np.random.Generator) -> AffineMap:
    """Uniform invertible affine map of dimension ``d`` by rejection sampling."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    for _ in range(SAMPLING_LIMIT):
        linear = random_elements(rng, (d, d))
        try:
            inv = invert_matrix(linear)
        except NoUniqueSolution:
            continue
        return AffineMap(linear, random_elements(rng, d), inv)
    raise SamplingExhausted(f"{SAMPLING_LIMIT} consecutive singular {d}x{d} draws")


def pack_nibbles(elems: np.ndarray) -> bytes:
    """Two elements per byte, low nibble first; an odd tail leaves the high nibble zero."""
    e = np.asarray(elems, dtype=np.uint8).ravel()
    if e.size % 2:
        e = np.append(e, np.uint8(0))
    return (e[0::2] | (e[1::2] << 4)).astype(np.uint8).tobytes()


def unpack_nibbles(data: bytes, count: int) -> np.ndarray:
    raw = np.frombuffer(data, dtype=np.uint8)
    if raw.size != (count + 1) // 2:
        raise ValueError(f"expected {(count + 1) // 2} bytes for {count} elements, got {raw.size}")
    out = np.empty(raw.size * 2, dtype=np.uint8)
    out[0::2] = raw & 0x0F
    out[1::2] = raw >> 4
    if count % 2 and out[-1]:
        raise ValueError("nonzero padding nibble")
    return out[:count]


def make_rng(seed: int | None = None) -> np.random.Generator:
    """Generator seeded from ``seed``, or from 256 bits of OS entropy when None."""
    if seed is None:
        seed = int.from_bytes(os.urandom(32), "big")
    return np.random.default_rng(seed)
