"""Shallow bit-randomizer circuits: tree-copy CNOT stage plus coin-gated
multi-controlled-X stages acting on n-bit strings.

A circuit is a classical permutation of {0,1}^n built from self-inverse
X-type gates.  The register layout is n = k * 2^L: register r occupies bit
positions [r*k, (r+1)*k).  The copy stage doubles the populated registers
per level; each randomize level applies coin-gated MCX gates controlled on
the already-populated half, targeting the freshly copied half; a final
stage updates register 0 conditioned on register 1.

Loop indices follow a 0-based convention throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2
from typing import Iterator, Mapping, Sequence

import numpy as np

from .bitkit import BitString
from .rng import (
    STREAM_COIN,
    STREAM_EXACT_PERM,
    STREAM_FINAL_COIN,
    STREAM_RMCC,
    substream,
)

COIN_PER_TARGET = "per-target-bit"
COIN_PER_REGISTER = "per-register"
COIN_MODES = (COIN_PER_TARGET, COIN_PER_REGISTER)

MAX_DENSE_QUBITS = 20


class ParameterError(ValueError):
    """Raised when circuit parameters violate their preconditions."""


@dataclass(frozen=True)
class McxGate:
    """X on ``target`` iff the bits at ``controls`` equal ``conditions``."""

    controls: tuple[int, ...]
    conditions: tuple[int, ...]
    target: int

    def __post_init__(self) -> None:
        if len(set(self.controls)) != len(self.controls):
            raise ParameterError("control positions must be distinct")
        if len(self.conditions) != len(self.controls):
            raise ParameterError("one condition bit per control")
        if self.target in self.controls:
            raise ParameterError("target must not be a control")

    @property
    def m(self) -> int:
        return len(self.controls)

    def support(self) -> frozenset[int]:
        return frozenset(self.controls) | {self.target}

    def matches(self, x: BitString) -> bool:
        for c, v in zip(self.controls, self.conditions):
            if x.bit(c) != v:
                return False
        return True

    def apply(self, x: BitString) -> BitString:
        return x.flip(self.target) if self.matches(x) else x


def apply_gate(g: McxGate, x: BitString) -> BitString:
    return g.apply(x)


@dataclass(frozen=True)
class RmccTables:
    """Sampled control tables: S[j] are m distinct positions, C[j] the
    required condition bits."""

    S: tuple[tuple[int, ...], ...]
    C: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.S) != len(self.C):
            raise ParameterError("S and C must have equal length")
        for s, c in zip(self.S, self.C):
            if len(set(s)) != len(s):
                raise ParameterError("positions within one set must be distinct")
            if len(s) != len(c):
                raise ParameterError("condition length must match position count")

    @property
    def alpha(self) -> int:
        return len(self.S)

    @property
    def m(self) -> int:
        return len(self.S[0])


def rmcc(x1: int, x2: int, m: int, alpha: int, rng: np.random.Generator) -> RmccTables:
    """Draw alpha independent (position-set, condition) pairs in [x1, x2]."""
    window = x2 - x1 + 1
    if m < 1 or window < m:
        raise ParameterError(f"window [{x1}, {x2}] too small for m={m}")
    if alpha < 1:
        raise ParameterError("alpha must be >= 1")
    S = []
    C = []
    for _ in range(alpha):
        positions = rng.choice(window, size=m, replace=False) + x1
        bits = rng.integers(0, 2, size=m)
        S.append(tuple(int(p) for p in sorted(positions)))
        C.append(tuple(int(b) for b in bits))
    return RmccTables(tuple(S), tuple(C))


def _coin_array(rng: np.random.Generator, alpha: int, k: int, coin_mode: str) -> np.ndarray:
    """Coins for one register, shape (alpha, k)."""
    if coin_mode == COIN_PER_TARGET:
        return rng.integers(0, 2, size=(alpha, k), dtype=np.uint8)
    if coin_mode == COIN_PER_REGISTER:
        per_gate = rng.integers(0, 2, size=(alpha, 1), dtype=np.uint8)
        return np.repeat(per_gate, k, axis=1)
    raise ParameterError(f"unknown coin mode {coin_mode!r}")


@dataclass(frozen=True)
class RandomizerCircuit:
    """Full gate program with all sampled randomness recorded.

    ``copy_levels[i]`` holds the CNOT layer for level i+1 (1-based levels
    1..L); ``randomize_levels`` lists (level, fired gates) in application
    order (level L first); ``final_gates`` update register 0.
    """

    n: int
    k: int
    m: int
    alpha: int
    coin_mode: str
    seed: int
    tables: RmccTables | None
    copy_levels: tuple[tuple[McxGate, ...], ...]
    randomize_levels: tuple[tuple[int, tuple[McxGate, ...]], ...]
    final_gates: tuple[McxGate, ...]

    @property
    def levels(self) -> int:
        return len(self.copy_levels)

    @property
    def registers(self) -> int:
        return self.n // self.k

    def gates(self) -> Iterator[McxGate]:
        for layer in self.copy_levels:
            yield from layer
        for _, fired in self.randomize_levels:
            yield from fired
        yield from self.final_gates

    def mcx_gates(self) -> Iterator[McxGate]:
        for _, fired in self.randomize_levels:
            yield from fired
        yield from self.final_gates

    def apply(self, x: BitString) -> BitString:
        if x.width != self.n:
            raise ParameterError(f"input width {x.width} != circuit width {self.n}")
        for g in self.gates():
            x = g.apply(x)
        return x

    def apply_to_all(self) -> np.ndarray:
        """Image of every n-bit input, as an index permutation array."""
        if self.n > MAX_DENSE_QUBITS:
            raise ParameterError(f"dense sweep limited to n <= {MAX_DENSE_QUBITS}")
        x = np.arange(1 << self.n, dtype=np.int64)
        for g in self.gates():
            match = np.ones(x.shape, dtype=bool)
            for c, v in zip(g.controls, g.conditions):
                match &= ((x >> c) & 1) == v
            x = np.where(match, x ^ (1 << g.target), x)
        return x


def _validate_params(n: int, k: int, m: int, alpha: int, coin_mode: str) -> int:
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if n < 2 * k or n % k != 0 or (n // k) & (n // k - 1) != 0:
        raise ParameterError(f"n must equal k * 2^L with L >= 1, got n={n}, k={k}")
    if not 1 <= m <= k:
        raise ParameterError(f"m must satisfy 1 <= m <= k, got m={m}, k={k}")
    if alpha < 1:
        raise ParameterError(f"alpha must be >= 1, got {alpha}")
    if coin_mode not in COIN_MODES:
        raise ParameterError(f"coin_mode must be one of {COIN_MODES}, got {coin_mode!r}")
    return int(log2(n // k))


def assemble_circuit(
    n: int,
    k: int,
    m: int,
    alpha: int,
    coin_mode: str,
    seed: int,
    tables: RmccTables,
    level_coins: Mapping[tuple[int, int], np.ndarray],
    final_coins: np.ndarray,
) -> RandomizerCircuit:
    """Build the gate program from explicit tables and coin arrays.

    ``level_coins[(i, l)]`` has shape (alpha, k) for level i in 1..L and
    register l in [0, 2^(i-1)).  This is the single assembly path; tests use
    it to force coins, and the seeded builder derives its arrays then
    delegates here.
    """
    levels = _validate_params(n, k, m, alpha, coin_mode)
    if tables.alpha != alpha or tables.m != m:
        raise ParameterError("tables do not match (m, alpha)")

    copy_levels = []
    for i in range(1, levels + 1):
        half = 1 << (i - 1)
        layer = [
            McxGate((l * k + j,), (1,), (half + l) * k + j)
            for j in range(k)
            for l in range(half)
        ]
        copy_levels.append(tuple(layer))

    randomize_levels = []
    for i in range(levels, 0, -1):
        half = 1 << (i - 1)
        fired = []
        for j in range(alpha):
            for q in range(k):
                for l in range(half):
                    if level_coins[(i, l)][j, q]:
                        controls = tuple(l * k + s for s in tables.S[j])
                        fired.append(McxGate(controls, tables.C[j], (l + half) * k + q))
        randomize_levels.append((i, tuple(fired)))

    final = []
    for j in range(alpha):
        for q in range(k):
            if final_coins[j, q]:
                controls = tuple(k + s for s in tables.S[j])
                final.append(McxGate(controls, tables.C[j], q))

    return RandomizerCircuit(
        n=n,
        k=k,
        m=m,
        alpha=alpha,
        coin_mode=coin_mode,
        seed=seed,
        tables=tables,
        copy_levels=tuple(copy_levels),
        randomize_levels=tuple(randomize_levels),
        final_gates=tuple(final),
    )


def build_randomizer(
    n: int, k: int, m: int, alpha: int, coin_mode: str = COIN_PER_TARGET, seed: int = 0
) -> RandomizerCircuit:
    """Sample a full randomizer circuit; identical (seed, params, coin_mode)
    reproduce the identical gate list."""
    levels = _validate_params(n, k, m, alpha, coin_mode)
    tables = rmcc(0, k - 1, m, alpha, substream(seed, STREAM_RMCC))
    level_coins = {}
    for i in range(1, levels + 1):
        for l in range(1 << (i - 1)):
            level_coins[(i, l)] = _coin_array(substream(seed, STREAM_COIN, i, l), alpha, k, coin_mode)
    final_coins = _coin_array(substream(seed, STREAM_FINAL_COIN), alpha, k, coin_mode)
    return assemble_circuit(n, k, m, alpha, coin_mode, seed, tables, level_coins, final_coins)


def apply_circuit(c: RandomizerCircuit, x: BitString) -> BitString:
    return c.apply(x)


class ExactPermutation:
    """Uniform random permutation of {0,1}^n via seeded Fisher-Yates; the
    alpha -> infinity reference for the circuit ensemble."""

    def __init__(self, n: int, seed: int):
        if n > MAX_DENSE_QUBITS:
            raise ParameterError(f"exact permutation limited to n <= {MAX_DENSE_QUBITS}")
        self.n = n
        self.seed = seed
        rng = substream(seed, STREAM_EXACT_PERM)
        self.perm = rng.permutation(1 << n)

    def apply(self, x: BitString) -> BitString:
        if x.width != self.n:
            raise ParameterError(f"input width {x.width} != permutation width {self.n}")
        return BitString(self.n, int(self.perm[x.value]))

    def apply_to_all(self) -> np.ndarray:
        return self.perm.copy()


# ---------------------------------------------------------------------------
# Serialization: line-oriented text, one gate per line.
# ---------------------------------------------------------------------------


def serialize_circuit(c: RandomizerCircuit) -> str:
    lines = [f"RANDOMIZER {c.n} {c.k} {c.m} {c.alpha} {c.coin_mode} {c.seed}"]
    for layer in c.copy_levels:
        for g in layer:
            lines.append(f"CNOT {g.controls[0]} {g.target}")
    for g in c.mcx_gates():
        pairs = ",".join(f"{p}:{v}" for p, v in zip(g.controls, g.conditions))
        lines.append(f"MCX {g.m} {pairs} {g.target}")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> RandomizerCircuit:
    """Rebuild a circuit from its text form.

    The stage structure is recovered from the register layout: copy CNOTs
    appear first, a randomize gate at level i targets a register in
    [2^(i-1), 2^i), and final-stage gates target register 0.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "RANDOMIZER" or len(head) != 7:
        raise ParameterError("bad header line")
    n, k, m, alpha = (int(v) for v in head[1:5])
    coin_mode, seed = head[5], int(head[6])
    levels = _validate_params(n, k, m, alpha, coin_mode)

    copy_by_level: dict[int, list[McxGate]] = {i: [] for i in range(1, levels + 1)}
    rand_by_level: dict[int, list[McxGate]] = {i: [] for i in range(1, levels + 1)}
    final: list[McxGate] = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "CNOT":
            ctrl, tgt = int(parts[1]), int(parts[2])
            g = McxGate((ctrl,), (1,), tgt)
            lvl = (tgt // k).bit_length()  # register r copied at level floor(log2 r)+1
            copy_by_level[lvl].append(g)
        elif parts[0] == "MCX":
            pairs = [p.split(":") for p in parts[2].split(",")]
            controls = tuple(int(p) for p, _ in pairs)
            conditions = tuple(int(v) for _, v in pairs)
            g = McxGate(controls, conditions, int(parts[3]))
            reg = g.target // k
            if reg == 0:
                final.append(g)
            else:
                rand_by_level[reg.bit_length()].append(g)
        else:
            raise ParameterError(f"unknown gate line {ln!r}")

    return RandomizerCircuit(
        n=n,
        k=k,
        m=m,
        alpha=alpha,
        coin_mode=coin_mode,
        seed=seed,
        tables=None,
        copy_levels=tuple(tuple(copy_by_level[i]) for i in range(1, levels + 1)),
        randomize_levels=tuple((i, tuple(rand_by_level[i])) for i in range(levels, 0, -1)),
        final_gates=tuple(final),
    )


# ---------------------------------------------------------------------------
# Layer scheduling and depth accounting.
# ---------------------------------------------------------------------------

ANCILLA_NONE = "none"
ANCILLA_PER_REGISTER = "one-ancilla-per-register"


@dataclass(frozen=True)
class DepthReport:
    logical_layers: int
    mcx_count: int
    ancilla_mode: str
    elementary_depth: int
    hypergraph_max_degree: int
    greedy_bound: int


def _mcx_cost(m: int, ancilla_mode: str, c0: int, c1: int) -> int:
    if ancilla_mode == ANCILLA_NONE:
        return c0 * m
    if ancilla_mode == ANCILLA_PER_REGISTER:
        return c1 * max(1, ceil(log2(m)) if m > 1 else 0) ** 3
    raise ParameterError(f"unknown ancilla mode {ancilla_mode!r}")


def schedule_mcx_layers(
    gates: Sequence[McxGate],
    ancilla_mode: str = ANCILLA_NONE,
    c0: int = 1,
    c1: int = 1,
) -> DepthReport:
    """Greedy first-fit layering, gates taken in the given order.

    Two gates conflict iff their supports (controls plus target) intersect;
    a layer is a set of pairwise non-conflicting gates.  Reports the layer
    count and the max vertex degree of the support hypergraph.
    """
    if not gates:
        return DepthReport(0, 0, ancilla_mode, 0, 0, 0)
    span = 1 + max(max(g.support()) for g in gates)

    degree_count = np.zeros(span, dtype=np.int64)
    for g in gates:
        for v in g.support():
            degree_count[v] += 1
    degree = int(degree_count.max())

    layer_of = np.empty(len(gates), dtype=np.int64)
    if span <= 64:
        # word-packed supports: one uint64 mask per gate and per layer
        masks = np.array(
            [sum(1 << v for v in g.support()) for g in gates], dtype=np.uint64
        )
        layer_masks = np.zeros(len(gates), dtype=np.uint64)
        n_layers = 0
        for gi in range(len(gates)):
            free = np.flatnonzero((layer_masks[:n_layers] & masks[gi]) == 0)
            li = int(free[0]) if free.size else n_layers
            n_layers = max(n_layers, li + 1)
            layer_masks[li] |= masks[gi]
            layer_of[gi] = li
    else:
        supports = np.zeros((len(gates), span), dtype=np.uint8)
        for gi, g in enumerate(gates):
            supports[gi, list(g.controls)] = 1
            supports[gi, g.target] = 1
        layer_masks = np.zeros((len(gates), span), dtype=np.uint8)
        n_layers = 0
        for gi in range(len(gates)):
            conflicts = layer_masks[:n_layers] @ supports[gi]
            free = np.flatnonzero(conflicts == 0)
            li = int(free[0]) if free.size else n_layers
            n_layers = max(n_layers, li + 1)
            layer_masks[li] |= supports[gi]
            layer_of[gi] = li
    m_max = max(g.m for g in gates)
    layer_cost = np.zeros(n_layers, dtype=np.int64)
    for gi, g in enumerate(gates):
        cost = _mcx_cost(g.m, ancilla_mode, c0, c1)
        layer_cost[layer_of[gi]] = max(layer_cost[layer_of[gi]], cost)
    return DepthReport(
        logical_layers=n_layers,
        mcx_count=len(gates),
        ancilla_mode=ancilla_mode,
        elementary_depth=int(layer_cost.sum()),
        hypergraph_max_degree=degree,
        greedy_bound=m_max * (degree - 1) + 1,
    )


def circuit_stage_schedules(
    c: RandomizerCircuit, ancilla_mode: str = ANCILLA_NONE, c0: int = 1, c1: int = 1
) -> list[DepthReport]:
    """One schedule per randomize level (in application order) plus the
    final stage; empty stages are skipped."""
    reports = []
    for _, fired in c.randomize_levels:
        if fired:
            reports.append(schedule_mcx_layers(fired, ancilla_mode, c0, c1))
    if c.final_gates:
        reports.append(schedule_mcx_layers(c.final_gates, ancilla_mode, c0, c1))
    return reports


def depth_report(
    c: RandomizerCircuit, ancilla_mode: str = ANCILLA_NONE, c0: int = 1, c1: int = 1
) -> DepthReport:
    """Aggregate depth accounting: the copy stage contributes one CNOT layer
    per level; each MCX stage is layered by the greedy scheduler."""
    stages = circuit_stage_schedules(c, ancilla_mode, c0, c1)
    copy_layers = c.levels
    copy_cost = copy_layers * _mcx_cost(1, ancilla_mode, c0, c1)
    return DepthReport(
        logical_layers=copy_layers + sum(r.logical_layers for r in stages),
        mcx_count=sum(r.mcx_count for r in stages),
        ancilla_mode=ancilla_mode,
        elementary_depth=copy_cost + sum(r.elementary_depth for r in stages),
        hypergraph_max_degree=max((r.hypergraph_max_degree for r in stages), default=0),
        greedy_bound=copy_layers + sum(r.greedy_bound for r in stages),
    )
