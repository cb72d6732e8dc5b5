"""Arithmetic in GF(p) for a safe prime p, canonical encoding and the hash h.

Elements are immutable and carry their modulus; mixing moduli is an error.
Plain ``int`` operands are reduced into the element's field.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import MixedModulus, NotPrime, NotSafePrime, OutOfRange, TooSmall, WrongLength, ZeroInverse

MIN_PRIME = 23
TRIAL_DIVISION_LIMIT = 1 << 20
MILLER_RABIN_ROUNDS = 40

PRESETS = {
    "p23": 23,
    "p47": 47,
    "p1019": 1019,
    # largest safe prime below 2**256
    "p256": 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF72EF,
}


@lru_cache(maxsize=None)
def _small_primes(limit=1024):
    """Primes below ``limit`` (enough to trial-divide anything below 2**20)."""
    primes = []
    for n in range(2, limit):
        if all(n % q for q in primes if q * q <= n):
            primes.append(n)
    return tuple(primes)


def _trial_division(n):
    if n < 2:
        return False
    for q in _small_primes():
        if q * q > n:
            return True
        if n % q == 0:
            return n == q
    raise AssertionError("trial division table too short")  # unreachable below 2**20


def _miller_rabin(n, rounds=MILLER_RABIN_ROUNDS):
    for q in _small_primes()[:25]:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # fixed small bases first, then bases from a generator seeded by n so
    # that the verdict for a given candidate never changes between runs
    rng = random.Random(n)
    bases = list(_small_primes()[:12])
    bases += [rng.randrange(2, n - 1) for _ in range(rounds - len(bases))]
    for a in bases:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def is_prime(n: int) -> bool:
    """Deterministic below 2**20, probable-prime (40 rounds) above."""
    if n < TRIAL_DIVISION_LIMIT:
        return _trial_division(n)
    return _miller_rabin(n)


@dataclass(frozen=True)
class FieldParams:
    p: int
    byte_width: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "byte_width", (self.p.bit_length() + 7) // 8)

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(value, self)

    @property
    def zero(self) -> FieldElement:
        return FieldElement(0, self)

    @property
    def one(self) -> FieldElement:
        return FieldElement(1, self)

    def __repr__(self):
        return f"FieldParams(p={self.p})"


def validate_safe_prime(candidate: int) -> FieldParams:
    """Return field parameters for ``candidate`` if it is a safe prime >= 23."""
    if candidate < MIN_PRIME:
        raise TooSmall(f"{candidate} is below the smallest accepted prime {MIN_PRIME}")
    if not is_prime(candidate):
        raise NotPrime(f"{candidate} is not prime")
    if not is_prime((candidate - 1) // 2):
        raise NotSafePrime(f"{candidate} is prime but ({candidate}-1)/2 is not")
    return FieldParams(candidate)


def preset(name: str) -> FieldParams:
    try:
        return FieldParams(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown prime preset {name!r}; choose from {sorted(PRESETS)}") from None


class FieldElement:
    __slots__ = ("value", "params")

    def __init__(self, value: int, params: FieldParams):
        object.__setattr__(self, "value", int(value) % params.p)
        object.__setattr__(self, "params", params)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    @property
    def p(self) -> int:
        return self.params.p

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.params.p != self.params.p:
                raise MixedModulus(f"operands live in GF({self.p}) and GF({other.p})")
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def _wrap(self, value):
        return FieldElement(value, self.params)

    def __add__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(self.value + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(self.value - v)

    def __rsub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(v - self.value)

    def __mul__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(self.value * v)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return self * self._wrap(v).inv()

    def __neg__(self):
        return self._wrap(-self.value)

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.inv() ** -exponent
        return self._wrap(pow(self.value, exponent, self.p))

    def inv(self) -> FieldElement:
        if self.value == 0:
            raise ZeroInverse(f"0 has no inverse in GF({self.p})")
        return self._wrap(pow(self.value, -1, self.p))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.value == other.value and self.params.p == other.params.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.params.p))

    def __int__(self):
        return self.value

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"FieldElement({self.value} mod {self.p})"

    def hex(self) -> str:
        return encode(self).hex()


def field_arith(op: str, a: FieldElement, b=None) -> FieldElement:
    """Dispatch one of add, sub, mul, neg, inv, pow by name."""
    if op == "add":
        return a + _same_field(a, b)
    if op == "sub":
        return a - _same_field(a, b)
    if op == "mul":
        return a * _same_field(a, b)
    if op == "neg":
        return -a
    if op == "inv":
        return a.inv()
    if op == "pow":
        return a ** int(b)
    raise ValueError(f"unknown field operation {op!r}")


def _same_field(a, b):
    if not isinstance(b, FieldElement):
        raise TypeError("binary field operations need two FieldElements")
    if a.p != b.p:
        raise MixedModulus(f"operands live in GF({a.p}) and GF({b.p})")
    return b


def random_element(rng: random.Random, params: FieldParams) -> FieldElement:
    """Uniform element by rejection sampling on byte_width-byte draws.

    Bits above p's bit length are masked off before the comparison, which
    keeps the acceptance rate above 1/2 without biasing the result.
    """
    mask = (1 << params.p.bit_length()) - 1
    while True:
        v = int.from_bytes(rng.randbytes(params.byte_width), "big") & mask
        if v < params.p:
            return FieldElement(v, params)


def encode(e: FieldElement) -> bytes:
    return e.value.to_bytes(e.params.byte_width, "big")


def decode(b: bytes, params: FieldParams) -> FieldElement:
    if len(b) != params.byte_width:
        raise WrongLength(f"expected {params.byte_width} bytes, got {len(b)}")
    v = int.from_bytes(b, "big")
    if v >= params.p:
        raise OutOfRange(f"{v} is not below p = {params.p}")
    return FieldElement(v, params)


def from_hex(s: str, params: FieldParams) -> FieldElement:
    try:
        raw = bytes.fromhex(s)
    except ValueError:
        raise WrongLength(f"not a hex string: {s!r}") from None
    return decode(raw, params)


def hash_to_field(e: FieldElement) -> FieldElement:
    """h: SHA-256 of the canonical encoding, read big-endian, reduced mod p."""
    digest = hashlib.sha256(encode(e)).digest()
    return FieldElement(int.from_bytes(digest, "big"), e.params)
