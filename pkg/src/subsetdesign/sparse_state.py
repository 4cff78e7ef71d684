"""Sparse subset phase states and their resource metrics.

A state is a uniform-magnitude superposition of distinct n-bit strings with
signs +-1: amplitude(x) = sign(x) / sqrt(count).  Entanglement, coherence,
collision probability, and stabilizer Renyi entropy are all computed from
the sparse entry list without densifying, except where a metric is
intrinsically dense (Pauli enumeration is capped at n <= 10).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .bitkit import BitString
from .phase_oracle import PhaseOracle
from .randomizer import ExactPermutation, RandomizerCircuit

MAX_MAGIC_QUBITS = 10
EIG_CLAMP = 1e-12


class StateError(ValueError):
    pass


@dataclass(frozen=True)
class SubsetPhaseState:
    """Entries are (bitstring value, sign) pairs, sorted by value."""

    n: int
    entries: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise StateError("state needs at least one entry")
        values = [v for v, _ in self.entries]
        if len(set(values)) != len(values):
            raise StateError("entries must have distinct bitstrings")
        if any(s not in (1, -1) for _, s in self.entries):
            raise StateError("signs must be +1 or -1")
        if any(not 0 <= v < (1 << self.n) for v in values):
            raise StateError("entry outside n-bit range")
        if list(values) != sorted(values):
            raise StateError("entries must be sorted by value")

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "SubsetPhaseState":
        return cls(n, tuple(sorted(pairs)))

    @property
    def count(self) -> int:
        return len(self.entries)

    @property
    def k(self) -> int:
        c = self.count
        if c & (c - 1):
            raise StateError("entry count is not a power of two")
        return c.bit_length() - 1

    def amplitude(self) -> float:
        return 1.0 / np.sqrt(self.count)

    def to_dense(self) -> np.ndarray:
        vec = np.zeros(1 << self.n)
        amp = self.amplitude()
        for v, s in self.entries:
            vec[v] = s * amp
        return vec


class EntanglementResult(NamedTuple):
    entropy: float
    purity: float


def prepare(n: int, k: int, oracle: PhaseOracle,
            circuit: RandomizerCircuit | ExactPermutation) -> SubsetPhaseState:
    """Map every (b, 0^(n-k)) through the injective circuit with phase (-1)^f(b)."""
    if k < 1:
        raise StateError("k must be >= 1")
    if oracle.k != k:
        raise StateError(f"oracle width {oracle.k} != k={k}")
    if circuit.n != n:
        raise StateError(f"circuit width {circuit.n} != n={n}")
    if isinstance(circuit, RandomizerCircuit) and circuit.k != k:
        raise StateError(f"circuit register width {circuit.k} != k={k}")
    pairs = []
    for b in range(1 << k):
        image = circuit.apply(BitString(n, b))
        sign = -1 if oracle.eval_int(b) else 1
        pairs.append((image.value, sign))
    state = SubsetPhaseState.from_pairs(n, pairs)
    assert state.count == 1 << k  # distinctness is a corollary of bijectivity
    return state


def entanglement_entropy(s: SubsetPhaseState, region: Iterable[int]) -> EntanglementResult:
    """Von Neumann entropy (base 2) and purity of the reduced state on ``region``.

    The Schmidt spectrum is read off the singular values of the sparse
    coefficient matrix between region- and complement-restrictions, which
    has at most count x count nonzero structure.
    """
    region = sorted(set(region))
    if any(not 0 <= p < s.n for p in region):
        raise StateError("region position out of range")
    if not region or len(region) == s.n:
        return EntanglementResult(0.0, 1.0)
    comp = [p for p in range(s.n) if p not in region]
    u_idx: dict[int, int] = {}
    w_idx: dict[int, int] = {}
    coords = []
    for v, sign in s.entries:
        u = _gather_bits(v, region)
        w = _gather_bits(v, comp)
        ui = u_idx.setdefault(u, len(u_idx))
        wi = w_idx.setdefault(w, len(w_idx))
        coords.append((ui, wi, sign))
    mat = np.zeros((len(u_idx), len(w_idx)))
    amp = s.amplitude()
    for ui, wi, sign in coords:
        mat[ui, wi] = sign * amp
    sv = np.linalg.svd(mat, compute_uv=False)
    probs = sv**2
    probs = probs[probs > EIG_CLAMP]
    entropy = float(-np.sum(probs * np.log2(probs)))
    purity = float(np.sum(probs**2))
    return EntanglementResult(entropy, purity)


def _gather_bits(value: int, positions: Sequence[int]) -> int:
    out = 0
    for j, p in enumerate(positions):
        if (value >> p) & 1:
            out |= 1 << j
    return out


def coherence(s: SubsetPhaseState) -> float:
    """Relative entropy of coherence; for pure states, the Shannon entropy
    of the computational-basis outcome distribution."""
    p = 1.0 / s.count
    return float(-s.count * p * log2(p))


def collision_prob(s: SubsetPhaseState) -> float:
    """Sum over outcomes of the fourth power of amplitude magnitudes."""
    return float(s.count * (1.0 / s.count) ** 2)


def pauli_spectrum(s: SubsetPhaseState) -> np.ndarray:
    """Probability vector of squared, normalized Pauli expectations.

    Paulis are enumerated lexicographically in (x-mask, z-mask); only the
    nonzero probabilities are returned (zeros carry no entropy weight and
    the full 4^n vector is never materialized).  Expectations are computed
    as exact integer pair sums scaled by the subset size.
    """
    if s.n > MAX_MAGIC_QUBITS:
        raise StateError(
            f"Pauli enumeration needs 4^n terms; n={s.n} exceeds the cap of {MAX_MAGIC_QUBITS}"
        )
    n = s.n
    dim = 1 << n
    values = np.array([v for v, _ in s.entries], dtype=np.int64)
    signs = np.array([sg for _, sg in s.entries], dtype=np.int64)
    index_of = {int(v): i for i, v in enumerate(values)}

    all_b = np.arange(dim, dtype=np.int64)
    # parity[i, b] = popcount(values[i] & b) mod 2, as +-1
    parity = np.ones((len(values), dim), dtype=np.int64)
    for bit in range(n):
        flip = ((values[:, None] >> bit) & 1) * ((all_b[None, :] >> bit) & 1)
        parity *= 1 - 2 * flip

    diffs = sorted({int(v ^ w) for v in values for w in values})

    probs = []
    k_count = s.count
    for a in diffs:
        rows = [i for i, v in enumerate(values) if int(v) ^ a in index_of]
        weights = np.array(
            [signs[i] * signs[index_of[int(values[i]) ^ a]] for i in rows], dtype=np.int64
        )
        g = weights @ parity[rows]  # integer pair sums, one per z-mask b
        ab_parity = np.zeros(dim, dtype=np.int64)
        for bit in range(n):
            if (a >> bit) & 1:
                ab_parity ^= (all_b >> bit) & 1
        g = np.where(ab_parity == 0, g, 0)
        nz = g[g != 0].astype(np.float64)
        if nz.size:
            probs.append((nz / k_count) ** 2 / dim)
    out = np.concatenate(probs) if probs else np.zeros(0)
    total = out.sum()
    assert abs(total - 1.0) < 1e-9, f"Pauli spectrum must sum to 1, got {total}"
    return out


def stabilizer_renyi(s: SubsetPhaseState, alpha: float) -> float:
    """Renyi-alpha entropy of the Pauli spectrum minus n (base 2)."""
    if alpha < 0:
        raise StateError("alpha must be >= 0")
    probs = pauli_spectrum(s)
    n = s.n
    if alpha == 0:
        return float(log2(probs.size) - n)
    if alpha == 1:
        return float(-np.sum(probs * np.log2(probs)) - n)
    return float(np.log2(np.sum(probs**alpha)) / (1.0 - alpha) - n)


# ---------------------------------------------------------------------------
# Text dump: header then one `bitstring sign` line per entry.
# ---------------------------------------------------------------------------


def dump_state(s: SubsetPhaseState) -> str:
    try:
        k = s.k
    except StateError:
        k = -1
    lines = [f"SUBSETSTATE {s.n} {k}"]
    for v, sign in s.entries:
        lines.append(f"{BitString(s.n, v).to_str01()} {'+' if sign > 0 else '-'}")
    return "\n".join(lines) + "\n"


def load_state(text: str) -> SubsetPhaseState:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "SUBSETSTATE" or len(head) != 3:
        raise StateError("bad state header")
    n = int(head[1])
    pairs = []
    for ln in lines[1:]:
        bits, sign = ln.split()
        pairs.append((BitString.from_str01(bits).value, 1 if sign == "+" else -1))
    return SubsetPhaseState.from_pairs(n, pairs)
