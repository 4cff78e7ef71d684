"""Random boolean functions f: {0,1}^k -> {0,1} supplying the state phases.

Three variants: the zero function, a fully tabulated true random function,
and an exact 2t-wise independent family built from uniform polynomials of
degree < 2t over GF(2^k).  Evaluating a uniform degree-(2t-1) polynomial at
2t distinct points gives jointly uniform field values, so any fixed output
bit of the evaluation is an exactly 2t-wise independent bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .bitkit import BitString, GfExtField, poly_eval
from .rng import STREAM_ORACLE, substream

MAX_ENUM_K = 4


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseOracle:
    """Base type: a deterministic function from width-k bitstrings to a bit."""

    k: int

    def eval_int(self, b: int) -> int:
        raise NotImplementedError

    def eval(self, b: BitString) -> int:
        if b.width != self.k:
            raise OracleError(f"input width {b.width} != oracle width {self.k}")
        return self.eval_int(b.value)


@dataclass(frozen=True)
class ZeroOracle(PhaseOracle):
    def eval_int(self, b: int) -> int:
        return 0


@dataclass(frozen=True)
class TrueRandomOracle(PhaseOracle):
    """Fully tabulated function; bit b of ``table`` is f(b)."""

    table: int

    def __post_init__(self) -> None:
        if not 0 <= self.table < (1 << (1 << self.k)):
            raise OracleError("table must hold exactly 2^k bits")

    def eval_int(self, b: int) -> int:
        return (self.table >> b) & 1


@dataclass(frozen=True)
class PolyOracle(PhaseOracle):
    """f(b) = lowest bit of a degree < 2t polynomial evaluated at b in GF(2^k)."""

    t: int
    field: GfExtField
    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.field.k != self.k:
            raise OracleError("field degree must match oracle width")
        if len(self.coeffs) != 2 * self.t:
            raise OracleError("need exactly 2t coefficients")

    def eval_int(self, b: int) -> int:
        return poly_eval(self.coeffs, b, self.field) & 1


def poly_oracle(k: int, t: int, seed: int) -> PolyOracle:
    """Uniform random coefficients c_0..c_{2t-1} in GF(2^k), deterministic in seed."""
    if not 1 <= k <= 32:
        raise OracleError(f"k must be in [1, 32], got {k}")
    if t < 1:
        raise OracleError("t must be >= 1")
    field = GfExtField.of_degree(k)
    rng = substream(seed, STREAM_ORACLE, k, t)
    coeffs = tuple(int(rng.integers(0, 1 << k)) for _ in range(2 * t))
    return PolyOracle(k=k, t=t, field=field, coeffs=coeffs)


def oracle_eval(o: PhaseOracle, b: BitString) -> int:
    return o.eval(b)


def enumerate_functions(k: int) -> Iterator[TrueRandomOracle]:
    """Yield every function {0,1}^k -> {0,1} exactly once."""
    if k > MAX_ENUM_K:
        raise OracleError(f"enumeration refused for k > {MAX_ENUM_K} (2^2^k functions)")
    for table in range(1 << (1 << k)):
        yield TrueRandomOracle(k=k, table=table)


def oracle_header(o: PhaseOracle) -> str:
    """One-line companion header for circuit text files."""
    if isinstance(o, ZeroOracle):
        return f"ORACLE zero k={o.k}"
    if isinstance(o, TrueRandomOracle):
        return f"ORACLE table k={o.k} table={o.table:#x}"
    if isinstance(o, PolyOracle):
        coeffs = ",".join(str(c) for c in o.coeffs)
        return f"ORACLE poly k={o.k} t={o.t} modulus={o.field.modulus:#x} coeffs={coeffs}"
    raise OracleError(f"unknown oracle type {type(o).__name__}")


def parse_oracle_header(line: str) -> PhaseOracle:
    parts = line.split()
    if len(parts) < 3 or parts[0] != "ORACLE":
        raise OracleError(f"bad oracle header {line!r}")
    fields = dict(tok.split("=", 1) for tok in parts[2:])
    k = int(fields["k"])
    variant = parts[1]
    if variant == "zero":
        return ZeroOracle(k=k)
    if variant == "table":
        return TrueRandomOracle(k=k, table=int(fields["table"], 0))
    if variant == "poly":
        field = GfExtField(k, int(fields["modulus"], 0))
        coeffs = tuple(int(c) for c in fields["coeffs"].split(","))
        return PolyOracle(k=k, t=int(fields["t"]), field=field, coeffs=coeffs)
    raise OracleError(f"unknown oracle variant {variant!r}")
