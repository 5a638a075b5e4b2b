"""Multivariate quadratic signatures with an Unbalanced Oil and Vinegar core.

The public key is the quadratic map ``P = S o F o T`` where ``S`` (dimension
m) and ``T`` (dimension n) are secret invertible affine maps and ``F`` is a
UOV central map: variables ``0..v-1`` are vinegar, ``v..n-1`` are oil, and no
polynomial has an oil*oil term.  Signing a target ``y`` walks the chain
backwards, ``x = T^-1(F^-1(S^-1(y)))``, where ``F^-1`` fixes random vinegar
values and solves the remaining m x m linear system in the oil variables.
Verification is the single evaluation ``P(x) == y``.

Security rests on the hardness of solving random quadratic systems over
GF(16); no solver or attack tooling lives here.

Key file layout::

    b"MSAN" | 0x01 | role | n (u16 BE) | m (u16 BE) | 0x10 | packed elements

Roles are 0x00 signer public, 0x01 signer secret, 0x02 sanitizer public,
0x03 sanitizer secret.  Elements are packed two per byte, low nibble first.

Public element order, polynomial by polynomial: the upper triangle
``(i, j), i <= j`` of the quadratic part in row-major order, then the n
linear coefficients, then the constant.

Secret element order: ``S`` linear part (m*m row-major), ``S`` offset (m),
the central map polynomial by polynomial (vinegar*vinegar upper triangle
row-major, vinegar*oil block row-major, n linear, constant), ``T`` linear
part (n*n row-major), ``T`` offset (n).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property, lru_cache

import numpy as np

from . import field
from .errors import (
    DimensionMismatch,
    FormatError,
    InversionExhausted,
    NoUniqueSolution,
)
from .field import MUL, AffineMap

KEY_MAGIC = b"MSAN"
KEY_VERSION = 1
_HEADER = struct.Struct(">4sBBHHB")


@dataclass(frozen=True)
class UOVParams:
    n: int
    m: int
    q: int = 16
    retry_limit: int = 256
    name: str = ""

    def __post_init__(self):
        if self.q != field.Q:
            raise ValueError("only q = 16 is supported")
        if not self.n > self.m >= 1:
            raise ValueError(f"need n > m >= 1, got n={self.n}, m={self.m}")
        if self.retry_limit < 1:
            raise ValueError("retry_limit must be positive")

    @property
    def v(self) -> int:
        return self.n - self.m


PRESETS = {
    "uov-toy": UOVParams(n=24, m=8, name="uov-toy"),
    "uov-128": UOVParams(n=160, m=64, name="uov-128"),
}


def get_params(name: str) -> UOVParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown parameter preset {name!r}; choose from {sorted(PRESETS)}") from None


def _params_for(n: int, m: int) -> UOVParams:
    for p in PRESETS.values():
        if (p.n, p.m) == (n, m):
            return p
    return UOVParams(n=n, m=m)


class Party(IntEnum):
    SIGNER = 0
    SANITIZER = 2


# --- size accounting ------------------------------------------------------

def public_element_count(params: UOVParams) -> int:
    n, m = params.n, params.m
    return m * (n + 2) * (n + 1) // 2


def central_element_count(params: UOVParams) -> int:
    n, m, v = params.n, params.m, params.v
    return m * (v * (v + 1) // 2 + v * m + n + 1)


def nominal_secret_element_count(params: UOVParams) -> int:
    """Linear parts of S and T plus the central map: n^2 + m^2 + C."""
    return params.n ** 2 + params.m ** 2 + central_element_count(params)


def secret_element_count(params: UOVParams) -> int:
    """What the secret key file actually stores: the above plus both offsets."""
    return nominal_secret_element_count(params) + params.n + params.m


# --- quadratic maps -------------------------------------------------------

@lru_cache(maxsize=None)
def _triu(n: int):
    return np.triu_indices(n)


def _eval_quadratic(quad: np.ndarray, linear: np.ndarray, const: np.ndarray, x: np.ndarray) -> np.ndarray:
    m = quad.shape[0]
    outer = MUL[x[:, None], x[None, :]]
    quad_part = np.bitwise_xor.reduce(MUL[quad, outer].reshape(m, -1), axis=1)
    return (quad_part ^ field.matvec(linear, x) ^ const).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class CentralMap:
    """UOV central map; ``quad[k]`` is upper triangular with a zero oil*oil block."""

    quad: np.ndarray  # (m, n, n)
    linear: np.ndarray  # (m, n)
    const: np.ndarray  # (m,)
    v: int

    @property
    def m(self) -> int:
        return self.quad.shape[0]

    @property
    def n(self) -> int:
        return self.quad.shape[1]

    @classmethod
    def from_blocks(cls, vv: np.ndarray, vo: np.ndarray, linear: np.ndarray, const: np.ndarray) -> CentralMap:
        """``vv`` is (m, v(v+1)/2) in upper-triangle order, ``vo`` is (m, v, m)."""
        m, v = vo.shape[0], vo.shape[1]
        n = v + m
        quad = np.zeros((m, n, n), dtype=np.uint8)
        iu = _triu(v)
        quad[:, iu[0], iu[1]] = vv
        quad[:, :v, v:] = vo
        return cls(quad, np.asarray(linear, dtype=np.uint8), np.asarray(const, dtype=np.uint8), v)

    @classmethod
    def random(cls, params: UOVParams, rng: np.random.Generator) -> CentralMap:
        m, v, n = params.m, params.v, params.n
        vv = field.random_elements(rng, (m, v * (v + 1) // 2))
        vo = field.random_elements(rng, (m, v, m))
        linear = field.random_elements(rng, (m, n))
        const = field.random_elements(rng, m)
        return cls.from_blocks(vv, vo, linear, const)

    def coefficients(self) -> np.ndarray:
        v, m = self.v, self.m
        iu = _triu(v)
        vv = self.quad[:, iu[0], iu[1]]
        vo = self.quad[:, :v, v:].reshape(m, -1)
        return np.concatenate([vv, vo, self.linear, self.const[:, None]], axis=1).ravel()

    @classmethod
    def from_coefficients(cls, coeffs: np.ndarray, params: UOVParams) -> CentralMap:
        m, v, n = params.m, params.v, params.n
        rows = coeffs.reshape(m, -1)
        a = v * (v + 1) // 2
        b = a + v * m
        return cls.from_blocks(rows[:, :a], rows[:, a:b].reshape(m, v, m), rows[:, b:b + n], rows[:, b + n])

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return _eval_quadratic(self.quad, self.linear, self.const, x)


@dataclass(frozen=True, eq=False)
class PublicMap:
    quad: np.ndarray  # (m, n, n), upper triangular
    linear: np.ndarray  # (m, n)
    const: np.ndarray  # (m,)
    params: UOVParams
    party: Party = Party.SIGNER

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return public_eval(self, x)

    def coefficients(self) -> np.ndarray:
        iu = _triu(self.params.n)
        upper = self.quad[:, iu[0], iu[1]]
        return np.concatenate([upper, self.linear, self.const[:, None]], axis=1).ravel()

    @classmethod
    def from_coefficients(cls, coeffs: np.ndarray, params: UOVParams, party: Party = Party.SIGNER) -> PublicMap:
        n, m = params.n, params.m
        rows = coeffs.reshape(m, -1)
        iu = _triu(n)
        t = len(iu[0])
        quad = np.zeros((m, n, n), dtype=np.uint8)
        quad[:, iu[0], iu[1]] = rows[:, :t]
        return cls(quad, rows[:, t:t + n].copy(), rows[:, t + n].copy(), params, party)

    def to_bytes(self) -> bytes:
        return self._encoded

    @cached_property
    def _encoded(self) -> bytes:
        return _encode_key(int(self.party), self.params, self.coefficients())

    def __eq__(self, other):
        if not isinstance(other, PublicMap):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()


def public_eval(pmap: PublicMap, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8)
    if x.shape != (pmap.params.n,):
        raise DimensionMismatch(f"public map takes {pmap.params.n} variables, got shape {x.shape}")
    return _eval_quadratic(pmap.quad, pmap.linear, pmap.const, x)


def compose(outer: AffineMap, central: CentralMap, inner: AffineMap, params: UOVParams,
            party: Party = Party.SIGNER) -> PublicMap:
    """Expand ``outer o central o inner`` into coefficient form.

    With ``inner(x) = A x + b`` each central quadratic form ``M`` becomes
    ``A^T M A`` (folded to upper-triangular form), picks up the linear term
    ``A^T (M + M^T) b + A^T L`` and the constant ``b^T M b + L.b + c``.  The
    outer map then mixes the m resulting polynomials.
    """
    n, m = params.n, params.m
    a, b = inner.linear, inner.offset
    quad = central.quad
    congr = field.matmul(field.matmul(a.T, quad), a)
    sym = congr ^ congr.transpose(0, 2, 1)
    upper = np.triu(sym)
    idx = np.arange(n)
    upper[:, idx, idx] = congr[:, idx, idx]

    mb = field.matmul(quad ^ quad.transpose(0, 2, 1), b)  # (m, n)
    linear = field.matmul(mb ^ central.linear, a)
    const = field.matmul(field.matmul(quad, b), b) ^ field.matmul(central.linear, b) ^ central.const

    stacked = np.concatenate([upper.reshape(m, -1), linear, const[:, None]], axis=1)
    mixed = field.matmul(outer.linear, stacked)
    out_quad = mixed[:, :n * n].reshape(m, n, n)
    out_linear = mixed[:, n * n:n * n + n]
    out_const = mixed[:, -1] ^ outer.offset
    return PublicMap(out_quad, out_linear, out_const, params, party)


@dataclass(frozen=True, eq=False)
class SecretKey:
    params: UOVParams
    outer: AffineMap  # S, dimension m
    central: CentralMap  # F
    inner: AffineMap  # T, dimension n
    party: Party = Party.SIGNER

    def public_map(self) -> PublicMap:
        return compose(self.outer, self.central, self.inner, self.params, self.party)

    def coefficients(self) -> np.ndarray:
        return np.concatenate([
            self.outer.linear.ravel(), self.outer.offset,
            self.central.coefficients(),
            self.inner.linear.ravel(), self.inner.offset,
        ])

    def to_bytes(self) -> bytes:
        return _encode_key(int(self.party) + 1, self.params, self.coefficients())

    def __eq__(self, other):
        if not isinstance(other, SecretKey):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()


@dataclass(frozen=True)
class MqKeyPair:
    params: UOVParams
    secret: SecretKey
    public: PublicMap


def mq_keygen(params: UOVParams, rng: np.random.Generator, party: Party = Party.SIGNER) -> MqKeyPair:
    outer = field.sample_invertible_affine(params.m, rng)
    inner = field.sample_invertible_affine(params.n, rng)
    central = CentralMap.random(params, rng)
    secret = SecretKey(params, outer, central, inner, party)
    return MqKeyPair(params, secret, secret.public_map())


# --- signing --------------------------------------------------------------

def invert_with_attempts(central: CentralMap, target: np.ndarray, rng: np.random.Generator,
                         retry_limit: int) -> tuple[np.ndarray, int]:
    """Like :func:`central_invert` but also reports how many vinegar draws it took."""
    target = np.asarray(target, dtype=np.uint8)
    v, m = central.v, central.m
    if target.shape != (m,):
        raise DimensionMismatch(f"central map has {m} outputs, target has shape {target.shape}")
    vo = central.quad[:, :v, v:]
    vv = central.quad[:, :v, :v]
    lin_v, lin_o = central.linear[:, :v], central.linear[:, v:]
    for attempt in range(1, retry_limit + 1):
        xv = field.random_elements(rng, v)
        system = np.bitwise_xor.reduce(MUL[vo, xv[None, :, None]], axis=1) ^ lin_o
        outer = MUL[xv[:, None], xv[None, :]]
        fixed = np.bitwise_xor.reduce(MUL[vv, outer].reshape(m, -1), axis=1)
        rhs = target ^ fixed ^ field.matvec(lin_v, xv) ^ central.const
        try:
            xo = field.solve_linear(system, rhs)
        except NoUniqueSolution:
            continue
        return np.concatenate([xv, xo]), attempt
    raise InversionExhausted(f"oil system singular for {retry_limit} consecutive vinegar draws")


def central_invert(central: CentralMap, target: np.ndarray, rng: np.random.Generator,
                   retry_limit: int = 256) -> np.ndarray:
    return invert_with_attempts(central, target, rng, retry_limit)[0]


def mq_sign(secret: SecretKey, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    y = np.asarray(y, dtype=np.uint8)
    if y.shape != (secret.params.m,):
        raise DimensionMismatch(f"expected target of length {secret.params.m}, got shape {y.shape}")
    x0 = secret.outer.inverse(y)
    x1 = central_invert(secret.central, x0, rng, secret.params.retry_limit)
    return secret.inner.inverse(x1)


def mq_verify(pmap: PublicMap, x: np.ndarray, y: np.ndarray) -> bool:
    y = np.asarray(y, dtype=np.uint8)
    if y.shape != (pmap.params.m,):
        raise DimensionMismatch(f"expected target of length {pmap.params.m}, got shape {y.shape}")
    return bool(np.array_equal(public_eval(pmap, x), y))


# --- key files ------------------------------------------------------------

def _encode_key(role: int, params: UOVParams, coeffs: np.ndarray) -> bytes:
    header = _HEADER.pack(KEY_MAGIC, KEY_VERSION, role, params.n, params.m, field.Q)
    return header + field.pack_nibbles(coeffs)


def decode_key(data: bytes) -> PublicMap | SecretKey:
    """Parse a key file; returns a PublicMap or a SecretKey according to the role byte."""
    if len(data) < _HEADER.size:
        raise FormatError("key file truncated before end of header")
    magic, version, role, n, m, q = _HEADER.unpack_from(data)
    if magic != KEY_MAGIC:
        raise FormatError("bad key magic")
    if version != KEY_VERSION:
        raise FormatError(f"unsupported key version {version}")
    if role > 3:
        raise FormatError(f"unknown key role {role}")
    if q != field.Q:
        raise FormatError(f"unsupported field order {q}")
    try:
        params = _params_for(n, m)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    party = Party(role & 0b10)
    count = public_element_count(params) if role % 2 == 0 else secret_element_count(params)
    try:
        coeffs = field.unpack_nibbles(data[_HEADER.size:], count)
    except ValueError as exc:
        raise FormatError(f"key payload: {exc}") from None
    if role % 2 == 0:
        return PublicMap.from_coefficients(coeffs, params, party)

    n2, m2 = n * n, m * m
    s_lin = coeffs[:m2].reshape(m, m)
    s_off = coeffs[m2:m2 + m]
    c_end = m2 + m + central_element_count(params)
    central = CentralMap.from_coefficients(coeffs[m2 + m:c_end], params)
    t_lin = coeffs[c_end:c_end + n2].reshape(n, n)
    t_off = coeffs[c_end + n2:]
    try:
        outer = AffineMap.from_parts(s_lin, s_off)
        inner = AffineMap.from_parts(t_lin, t_off)
    except NoUniqueSolution:
        raise FormatError("secret key contains a singular affine map") from None
    return SecretKey(params, outer, central, inner, party)
