"""Bitstring primitives, GF(2) linear algebra, and GF(2^k) field arithmetic.

Bit index 0 is the least significant position everywhere.  A bitstring of
width w is packed into a single Python integer; bits at positions >= w are
always zero.  All types are immutable and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

MAX_WIDTH = 4096
MAX_FIELD_DEGREE = 32


@dataclass(frozen=True)
class BitString:
    """Fixed-width packed bit vector. ``value`` bit i is position i."""

    width: int
    value: int

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"width must be in [1, {MAX_WIDTH}], got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError("bits beyond width must be zero")

    @classmethod
    def zeros(cls, width: int) -> "BitString":
        return cls(width, 0)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        bits = list(bits)
        value = 0
        for i, b in enumerate(bits):
            if b:
                value |= 1 << i
        return cls(len(bits), value)

    @classmethod
    def from_str01(cls, text: str) -> "BitString":
        """Parse a 0/1 string written lowest position first."""
        return cls.from_bits(int(c) for c in text)

    def bit(self, i: int) -> int:
        if not 0 <= i < self.width:
            raise IndexError(f"bit index {i} out of range for width {self.width}")
        return (self.value >> i) & 1

    def flip(self, i: int) -> "BitString":
        if not 0 <= i < self.width:
            raise IndexError(f"bit index {i} out of range for width {self.width}")
        return BitString(self.width, self.value ^ (1 << i))

    def restrict(self, positions: Sequence[int]) -> int:
        """Bits at ``positions`` packed into an integer, positions[j] -> bit j."""
        out = 0
        for j, p in enumerate(positions):
            if (self.value >> p) & 1:
                out |= 1 << j
        return out

    def popcount(self) -> int:
        return self.value.bit_count()

    def __xor__(self, other: "BitString") -> "BitString":
        if self.width != other.width:
            raise ValueError(f"width mismatch: {self.width} vs {other.width}")
        return BitString(self.width, self.value ^ other.value)

    def to_str01(self) -> str:
        """0/1 string, lowest position first."""
        return "".join(str((self.value >> i) & 1) for i in range(self.width))

    def __str__(self) -> str:
        return self.to_str01()


@dataclass(frozen=True)
class Gf2Matrix:
    """Dense bit matrix over GF(2); row i is packed into ``row_words[i]``."""

    rows: int
    cols: int
    row_words: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("empty matrix rejected")
        if len(self.row_words) != self.rows:
            raise ValueError("row count mismatch")
        mask = (1 << self.cols) - 1
        for w in self.row_words:
            if w & ~mask:
                raise ValueError("row has bits beyond column count")

    @classmethod
    def from_rows(cls, rows: Sequence[int], cols: int) -> "Gf2Matrix":
        return cls(len(rows), cols, tuple(rows))

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[int]]) -> "Gf2Matrix":
        rows = []
        for r in entries:
            word = 0
            for j, e in enumerate(r):
                if e & 1:
                    word |= 1 << j
            rows.append(word)
        return cls(len(entries), len(entries[0]), tuple(rows))

    def entry(self, i: int, j: int) -> int:
        return (self.row_words[i] >> j) & 1


def gf2_rank_rows(rows: Sequence[int]) -> int:
    """GF(2) rank of packed rows via elimination; input is not modified."""
    basis: list[int] = []
    rank = 0
    for row in rows:
        for b in basis:
            low = b & -b
            if row & low:
                row ^= b
        if row:
            basis.append(row)
            rank += 1
    return rank


def gf2_rank(m: Gf2Matrix) -> int:
    return gf2_rank_rows(m.row_words)


# ---------------------------------------------------------------------------
# GF(2^k) arithmetic.  Field elements are ints < 2^k; the modulus is an
# irreducible degree-k polynomial encoded as a (k+1)-bit mask.
# ---------------------------------------------------------------------------


def _clmul(a: int, b: int) -> int:
    """Carry-less (XOR) product of two polynomial masks."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _polymod(a: int, mod: int) -> int:
    dm = mod.bit_length() - 1
    while a.bit_length() - 1 >= dm and a:
        a ^= mod << (a.bit_length() - 1 - dm)
    return a


def _polygcd(a: int, b: int) -> int:
    while b:
        a, b = b, _polymod(a, b)
    return a


def _x_pow_pow2_mod(d: int, mod: int) -> int:
    # x^(2^d) mod `mod` by repeated squaring.
    r = 2  # the polynomial x
    for _ in range(d):
        r = _polymod(_clmul(r, r), mod)
    return r


def _is_irreducible(mask: int, k: int) -> bool:
    if mask.bit_length() - 1 != k:
        return False
    if not mask & 1:
        return False  # zero constant term: divisible by x (degenerate for k=1)
    if k == 1:
        return True  # x + 1
    # x^(2^k) == x mod f, and gcd(x^(2^d) - x, f) = 1 for all proper divisors d.
    if _x_pow_pow2_mod(k, mask) != 2:
        return False
    for d in range(1, k):
        if k % d == 0:
            if _polygcd(_x_pow_pow2_mod(d, mask) ^ 2, mask) != 1:
                return False
    return True


@lru_cache(maxsize=None)
def find_irreducible(k: int) -> int:
    """Lexicographically smallest irreducible degree-k polynomial mask."""
    if not 1 <= k <= MAX_FIELD_DEGREE:
        raise ValueError(f"extension degree must be in [1, {MAX_FIELD_DEGREE}], got {k}")
    for mask in range(1 << k, 1 << (k + 1)):
        if _is_irreducible(mask, k):
            return mask
    raise AssertionError("unreachable: irreducible polynomials exist for every degree")


@dataclass(frozen=True)
class GfExtField:
    """GF(2^k) with an explicit irreducible modulus, verified at construction."""

    k: int
    modulus: int

    def __post_init__(self) -> None:
        if not 1 <= self.k <= MAX_FIELD_DEGREE:
            raise ValueError(f"extension degree must be in [1, {MAX_FIELD_DEGREE}], got {self.k}")
        if not _is_irreducible(self.modulus, self.k):
            raise ValueError(f"modulus {self.modulus:#b} is not irreducible of degree {self.k}")

    @classmethod
    def of_degree(cls, k: int) -> "GfExtField":
        return cls(k, find_irreducible(k))

    @property
    def order(self) -> int:
        return 1 << self.k


def gf_mul(a: int, b: int, f: GfExtField) -> int:
    """Product in GF(2^k): carry-less multiply reduced by the modulus."""
    return _polymod(_clmul(a, b), f.modulus)


def poly_eval(coeffs: Sequence[int], x: int, f: GfExtField) -> int:
    """Horner evaluation of sum_i coeffs[i] * x^i in GF(2^k)."""
    if len(coeffs) < 1:
        raise ValueError("polynomial needs at least one coefficient")
    acc = 0
    for c in reversed(coeffs):
        acc = gf_mul(acc, x, f) ^ c
    return acc
