"""Classical shadow tomography with low-entanglement estimator states.

The measurement unitary is U = (V tensor I) U_p^dag where V is a Haar
random 2^k x 2^k unitary on the low-k-bit subsystem and U_p is either a
randomizer circuit or an exact uniform permutation (the alpha = infinity
reference).  The estimator state U^dag |z> is a superposition of only 2^k
computational basis states, so one shot touches a constant number of
observable entries.

Batched engines drive the sample-heavy experiments; gate-for-gate
agreement between the batched circuit applier and the object path is
pinned by tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Sequence

import numpy as np

from .bitkit import BitString
from .randomizer import (
    COIN_PER_REGISTER,
    COIN_PER_TARGET,
    ExactPermutation,
    ParameterError,
    RandomizerCircuit,
    build_randomizer,
)
from .rng import STREAM_EXPERIMENT, substream

MAX_DENSE_N = 20
MAX_SHADOW_K = 3

ObservableHook = Callable[[int, int], complex]


class ShadowError(ValueError):
    pass


@dataclass(frozen=True)
class CircuitUpMode:
    n: int
    k: int
    m: int
    alpha: int
    coin_mode: str = COIN_PER_TARGET
    seed: int = 0


@dataclass(frozen=True)
class ExactPermutationUpMode:
    n: int
    seed: int = 0


@dataclass(frozen=True)
class ShadowSample:
    n: int
    k: int
    v: np.ndarray  # (2^k, 2^k) local unitary
    perm: np.ndarray  # label image array of U_p
    perm_seed: int
    outcome: BitString


@dataclass(frozen=True)
class EstimatorResult:
    mean: float
    std_error: float
    per_shot_variance: float
    shots: int


def shadow_coefficient(n: int, k: int) -> float:
    if k < 1:
        raise ShadowError("k must be >= 1")
    return (2**k + 1) * (2**n - 1) / (2**k - 1)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Single Haar unitary via QR of a complex Ginibre matrix with phase fix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _haar_batch(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(count, dim, dim)) + 1j * rng.normal(size=(count, dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def sample_shadow(
    psi: np.ndarray,
    k: int,
    up_mode: CircuitUpMode | ExactPermutationUpMode,
    rng: np.random.Generator,
    v_override: np.ndarray | None = None,
    perm_override: np.ndarray | None = None,
) -> ShadowSample:
    """Draw V, apply U = (V tensor I) U_p^dag to psi, and Born-sample z.

    The overrides pin V or the permutation for tests."""
    n = int(np.log2(len(psi)))
    if (1 << n) != len(psi) or n > MAX_DENSE_N:
        raise ShadowError(f"state dimension must be 2^n with n <= {MAX_DENSE_N}")
    if k > MAX_SHADOW_K:
        raise ShadowError(f"local unitary limited to k <= {MAX_SHADOW_K}")
    if perm_override is not None:
        perm = perm_override
    elif isinstance(up_mode, CircuitUpMode):
        circuit = build_randomizer(
            up_mode.n, up_mode.k, up_mode.m, up_mode.alpha, up_mode.coin_mode, up_mode.seed
        )
        perm = circuit.apply_to_all()
    else:
        perm = ExactPermutation(up_mode.n, up_mode.seed).apply_to_all()
    if up_mode.n != n:
        raise ShadowError("permutation width does not match the state")

    v = haar_unitary(1 << k, rng) if v_override is None else v_override
    # (U_p^dag psi)[x] = psi[p(x)], then V on the low k bits.
    permuted = psi[perm]
    reshaped = permuted.reshape(-1, 1 << k)
    rotated = reshaped @ v.T
    probs = np.abs(rotated.reshape(-1)) ** 2
    probs = probs / probs.sum()
    z = int(rng.choice(len(probs), p=probs))
    return ShadowSample(
        n=n, k=k, v=v, perm=perm, perm_seed=up_mode.seed, outcome=BitString(n, z)
    )


def estimator_state(sample: ShadowSample) -> tuple[np.ndarray, np.ndarray]:
    """Labels and amplitudes of U^dag |z>, a 2^k-term superposition."""
    K = 1 << sample.k
    z = sample.outcome.value
    z_lo = z & (K - 1)
    hi = z >> sample.k
    labels = sample.perm[(hi << sample.k) | np.arange(K)]
    amps = sample.v[z_lo, :].conj()
    return labels, amps


def estimate(
    samples: Sequence[ShadowSample],
    observable_hook: ObservableHook,
    n: int,
    k: int,
    diag_free: bool = False,
) -> EstimatorResult:
    """Mean and spread of coeff * <phi|O|phi> over shots, with O supplied
    entry-wise by the hook.  ``diag_free`` skips diagonal entries for
    observables known to vanish there."""
    if not samples:
        raise ShadowError("need at least one sample")
    coeff = shadow_coefficient(n, k)
    values = np.empty(len(samples))
    for si, sample in enumerate(samples):
        labels, amps = estimator_state(sample)
        val = 0.0 + 0.0j
        for a in range(len(labels)):
            for b in range(len(labels)):
                if diag_free and a == b:
                    continue
                entry = observable_hook(int(labels[a]), int(labels[b]))
                if entry != 0:
                    val += np.conj(amps[a]) * amps[b] * entry
        values[si] = coeff * val.real
    mean = float(values.mean())
    var = float(values.var(ddof=1)) if len(values) > 1 else 0.0
    return EstimatorResult(
        mean=mean,
        std_error=float(np.sqrt(var / len(values))),
        per_shot_variance=var,
        shots=len(values),
    )


# ---------------------------------------------------------------------------
# Batched circuit engine.  Tables mirror the object path exactly; tests pin
# the agreement through RandomizerCircuit.from-tables assembly.
# ---------------------------------------------------------------------------


@dataclass
class BatchTables:
    """Randomness for a batch of circuits sharing (n, k, m, alpha)."""

    n: int
    k: int
    m: int
    alpha: int
    S: np.ndarray  # (B, alpha, m) positions in [0, k)
    C: np.ndarray  # (B, alpha, m) condition bits
    level_coins: dict[int, np.ndarray]  # level -> (B, 2^(level-1), alpha, k)
    final_coins: np.ndarray  # (B, alpha, k)

    @property
    def batch(self) -> int:
        return self.S.shape[0]

    @property
    def levels(self) -> int:
        return max(self.level_coins) if self.level_coins else 0


def draw_batch_tables(
    n: int,
    k: int,
    m: int,
    alpha: int,
    count: int,
    rng: np.random.Generator,
    coin_mode: str = COIN_PER_TARGET,
) -> BatchTables:
    registers = n // k
    levels = registers.bit_length() - 1
    if k * (1 << levels) != n or levels < 1:
        raise ParameterError(f"n must equal k * 2^L with L >= 1, got n={n}, k={k}")
    if m == k:
        S = np.tile(np.arange(k, dtype=np.int64), (count, alpha, 1))
    else:
        keys = rng.random((count, alpha, k))
        S = np.sort(np.argpartition(keys, m - 1, axis=2)[:, :, :m], axis=2).astype(np.int64)
    C = rng.integers(0, 2, size=(count, alpha, m), dtype=np.uint8)
    level_coins = {}
    for i in range(1, levels + 1):
        half = 1 << (i - 1)
        if coin_mode == COIN_PER_TARGET:
            coins = rng.integers(0, 2, size=(count, half, alpha, k), dtype=np.uint8)
        else:
            coins = np.repeat(
                rng.integers(0, 2, size=(count, half, alpha, 1), dtype=np.uint8), k, axis=3
            )
        level_coins[i] = coins
    if coin_mode == COIN_PER_TARGET:
        final_coins = rng.integers(0, 2, size=(count, alpha, k), dtype=np.uint8)
    else:
        final_coins = np.repeat(
            rng.integers(0, 2, size=(count, alpha, 1), dtype=np.uint8), k, axis=2
        )
    return BatchTables(n, k, m, alpha, S, C, level_coins, final_coins)


def apply_batch(tables: BatchTables, x: np.ndarray) -> np.ndarray:
    """Apply circuit row b of the batch to every label in x[b]; x has shape
    (batch, points)."""
    n, k, m, alpha = tables.n, tables.k, tables.m, tables.alpha
    levels = tables.levels
    x = x.astype(np.int32, copy=True)

    for i in range(1, levels + 1):
        half = 1 << (i - 1)
        for j in range(k):
            for l in range(half):
                ctrl, tgt = l * k + j, (half + l) * k + j
                x ^= (((x >> ctrl) & 1) << tgt)

    def gate_block(register_base: int, coins: np.ndarray, target_base: int) -> None:
        # coins: (B, alpha, k); one matched-flip pass for a register pair
        for j in range(alpha):
            match = np.ones(x.shape, dtype=bool)
            for mi in range(m):
                pos = (register_base + tables.S[:, j, mi]).astype(np.int32)[:, None]
                match &= ((x >> pos) & 1) == tables.C[:, j, mi][:, None]
            for q in range(k):
                fire = match & (coins[:, j, q] == 1)[:, None]
                np.bitwise_xor(x, fire.astype(np.int32) << (target_base + q), out=x)

    for i in range(levels, 0, -1):
        half = 1 << (i - 1)
        for l in range(half):
            gate_block(l * k, tables.level_coins[i][:, l], (l + half) * k)
    gate_block(k, tables.final_coins, 0)
    return x


def batch_circuit_perms(tables: BatchTables) -> np.ndarray:
    """Image arrays of each circuit in the batch on all 2^n labels."""
    labels = np.broadcast_to(np.arange(1 << tables.n, dtype=np.int64), (tables.batch, 1 << tables.n))
    return apply_batch(tables, labels)


# ---------------------------------------------------------------------------
# Experiments.
# ---------------------------------------------------------------------------


def pair_uniformity(
    n: int,
    alpha: int,
    ns_grid: Sequence[int],
    seed: int,
    k: int = 1,
    m: int = 1,
    coin_mode: str = COIN_PER_TARGET,
    identity_map: bool = False,
    chunk: int = 1 << 16,
) -> list[tuple[int, float]]:
    """Empirical ordered-pair distribution under freshly drawn circuits.

    For each sample an ordered distinct input pair is drawn uniformly and
    both elements are mapped through one fresh circuit.  The reported
    max_norm is the maximum absolute difference between the empirical and
    uniform distribution functions over distinct ordered pairs in
    lexicographic order (the Kolmogorov-Smirnov statistic, which is the
    statistic that decays as 1/sqrt(N_s) across all sampling regimes).
    """
    if n > 10:
        raise ShadowError("pair distribution held densely; n <= 10")
    N = 1 << n
    cells = N * (N - 1)
    off_diag = np.ones(N * N, dtype=bool)
    off_diag[np.arange(N) * N + np.arange(N)] = False
    results = []
    for ns in ns_grid:
        rng = substream(seed, STREAM_EXPERIMENT, int(ns))
        counts = np.zeros(N * N, dtype=np.int64)
        remaining = int(ns)
        while remaining > 0:
            b = min(chunk, remaining)
            remaining -= b
            code = rng.integers(0, cells, size=b)
            x1 = code // (N - 1)
            rest = code % (N - 1)
            x2 = rest + (rest >= x1)
            pairs = np.stack([x1, x2], axis=1)
            if identity_map:
                out = pairs
            else:
                tables = draw_batch_tables(n, k, m, alpha, b, rng, coin_mode)
                out = apply_batch(tables, pairs)
            counts += np.bincount(out[:, 0] * N + out[:, 1], minlength=N * N)
        assert counts[~off_diag].sum() == 0  # bijectivity: outputs stay distinct
        emp = counts[off_diag] / float(ns)
        diff = emp - 1.0 / cells
        max_norm = float(np.max(np.abs(np.cumsum(diff))))
        results.append((int(ns), max_norm))
    return results


def loglog_slope(points: Sequence[tuple[int, float]]) -> float:
    xs = np.log10([p[0] for p in points])
    ys = np.log10([p[1] for p in points])
    return float(np.polyfit(xs, ys, 1)[0])


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return z / np.linalg.norm(z)


def random_phase_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    phases = rng.uniform(0.0, 2 * np.pi, size=dim)
    return np.exp(1j * phases) / np.sqrt(dim)


def _shadow_fidelity_values(
    psi: np.ndarray,
    k: int,
    perms: np.ndarray,
    vs: np.ndarray,
    rng: np.random.Generator,
    include_diag: bool = False,
) -> np.ndarray:
    """Per-shot estimator values for O = |psi><psi| - diag, or the full
    projector when ``include_diag`` is set.  perms: (B, N), vs: (B, K, K)."""
    n = int(np.log2(len(psi)))
    N, K = 1 << n, 1 << k
    B = perms.shape[0]
    coeff = shadow_coefficient(n, k)

    permuted = psi[perms]  # (B, N): U_p^dag psi
    reshaped = permuted.reshape(B, N // K, K)
    rotated = np.einsum("blm,bhm->bhl", vs, reshaped)
    probs = np.abs(rotated.reshape(B, N)) ** 2
    probs /= probs.sum(axis=1, keepdims=True)
    u = rng.random((B, 1))
    z = (np.cumsum(probs, axis=1) < u).sum(axis=1).clip(0, N - 1)

    z_lo = z & (K - 1)
    hi = z >> k
    lo = np.arange(K)
    labels = perms[np.arange(B)[:, None], (hi[:, None] << k) | lo[None, :]]  # (B, K)
    c = vs[np.arange(B), z_lo, :].conj()  # amplitudes of U^dag|z>
    psi_at = psi[labels]  # (B, K)
    overlap = np.einsum("bk,bk->b", c.conj(), psi_at)  # <phi|psi>
    proj = np.abs(overlap) ** 2
    diag = np.einsum("bk,bk->b", np.abs(c) ** 2, np.abs(psi_at) ** 2)
    if include_diag:
        return coeff * proj
    return coeff * (proj - diag)


def _haar_baseline_values(
    psi: np.ndarray, shots: int, rng: np.random.Generator
) -> np.ndarray:
    """Global-Haar shadow baseline (V on all n qubits), sampled directly.

    The measured frame vector phi = U^dag|z> is Haar-distributed tilted by
    the Born weight N |<phi|psi>|^2, so |<phi|psi>|^2 ~ Beta(2, N-1) and the
    orthogonal component stays Haar.  The estimator is
    (N+1) <phi|O|phi> - tr(O) with tr(O) = 0 for the diagonal-free O.
    """
    N = len(psi)
    x = rng.beta(2, N - 1, size=shots)
    theta = rng.uniform(0, 2 * np.pi, size=shots)
    g = rng.normal(size=(shots, N)) + 1j * rng.normal(size=(shots, N))
    g -= np.outer(g @ psi.conj(), psi)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    phi = (np.sqrt(x) * np.exp(1j * theta))[:, None] * psi[None, :] + np.sqrt(1 - x)[:, None] * g
    proj = np.abs(phi.conj() @ psi) ** 2
    diag = (np.abs(phi) ** 2) @ (np.abs(psi) ** 2)
    return (N + 1) * (proj - diag)


def exact_perm_estimation(
    psi: np.ndarray,
    observable: np.ndarray,
    k: int,
    shots: int,
    seed: int,
    diag_free: bool = True,
    chunk: int = 1 << 15,
) -> EstimatorResult:
    """Batched estimation in exact-permutation mode against a dense observable."""
    n = int(np.log2(len(psi)))
    N, K = 1 << n, 1 << k
    coeff = shadow_coefficient(n, k)
    rng = substream(seed, STREAM_EXPERIMENT)
    total = 0.0
    total_sq = 0.0
    done = 0
    base = np.broadcast_to(np.arange(N, dtype=np.int64), (chunk, N))
    while done < shots:
        b = min(chunk, shots - done)
        done += b
        perms = rng.permuted(base[:b], axis=1)
        vs = _haar_batch(K, b, rng)
        permuted = psi[perms]
        rotated = np.einsum("blm,bhm->bhl", vs, permuted.reshape(b, N // K, K))
        probs = np.abs(rotated.reshape(b, N)) ** 2
        probs /= probs.sum(axis=1, keepdims=True)
        u = rng.random((b, 1))
        z = (np.cumsum(probs, axis=1) < u).sum(axis=1).clip(0, N - 1)
        z_lo = z & (K - 1)
        hi = z >> k
        labels = perms[np.arange(b)[:, None], (hi[:, None] << k) | np.arange(K)[None, :]]
        c = vs[np.arange(b), z_lo, :].conj()
        block = observable[labels[:, :, None], labels[:, None, :]]  # (b, K, K)
        if diag_free:
            block = block.copy()
            block[:, np.arange(K), np.arange(K)] = 0.0
        vals = coeff * np.einsum("bi,bij,bj->b", c.conj(), block, c).real
        total += vals.sum()
        total_sq += (vals**2).sum()
    mean = total / shots
    var = (total_sq - shots * mean * mean) / (shots - 1) if shots > 1 else 0.0
    return EstimatorResult(
        mean=float(mean),
        std_error=float(np.sqrt(max(var, 0.0) / shots)),
        per_shot_variance=float(var),
        shots=shots,
    )


def fidelity_experiment(
    n: int = 8,
    k: int = 1,
    alphas: Sequence[int | None] = (1, 2, 4, 8, None),
    n_states: int = 100,
    shots: int = 10_000,
    seed: int = 0,
    m: int = 1,
    coin_mode: str = COIN_PER_TARGET,
    include_haar_baseline: bool = True,
    chunk: int = 1 << 12,
) -> list[dict]:
    """Fidelity estimation of Haar targets with O = |psi><psi| - diag.

    Rows carry the per-state estimate mean, its standard error over shots,
    and the analytic bias sum_z |<z|psi>|^4 (the diagonal weight the
    observable drops; adding it back recovers the fidelity of the target
    itself).  alpha = None is the exact-permutation reference; a global
    Haar-shadow baseline row is emitted per state when requested.
    """
    if n > 12:
        raise ShadowError("fidelity experiment limited to n <= 12")
    N = 1 << n
    rows = []
    for state_id in range(n_states):
        psi = haar_state(N, substream(seed, STREAM_EXPERIMENT, 1, state_id))
        bias = float(np.sum(np.abs(psi) ** 4))
        for alpha in alphas:
            label = "inf" if alpha is None else str(alpha)
            rng = substream(seed, STREAM_EXPERIMENT, 2, state_id, 0 if alpha is None else alpha)
            vals = np.empty(shots)
            done = 0
            while done < shots:
                b = min(chunk, shots - done)
                if alpha is None:
                    perms = rng.permuted(
                        np.broadcast_to(np.arange(N, dtype=np.int64), (b, N)), axis=1
                    )
                else:
                    tables = draw_batch_tables(n, k, m, alpha, b, rng, coin_mode)
                    perms = batch_circuit_perms(tables)
                vs = _haar_batch(1 << k, b, rng)
                vals[done : done + b] = _shadow_fidelity_values(psi, k, perms, vs, rng)
                done += b
            rows.append(
                {
                    "state_id": state_id,
                    "alpha": label,
                    "shots": shots,
                    "mean": float(vals.mean()),
                    "std": float(vals.std(ddof=1) / np.sqrt(shots)),
                    "bias": bias,
                }
            )
        if include_haar_baseline:
            rng = substream(seed, STREAM_EXPERIMENT, 3, state_id)
            vals = _haar_baseline_values(psi, shots, rng)
            rows.append(
                {
                    "state_id": state_id,
                    "alpha": "haar",
                    "shots": shots,
                    "mean": float(vals.mean()),
                    "std": float(vals.std(ddof=1) / np.sqrt(shots)),
                    "bias": bias,
                }
            )
    return rows


# ---------------------------------------------------------------------------
# Exact enumeration of the pair action of small circuits.
# ---------------------------------------------------------------------------

VARIANT_FIXED_C = "fixed_c"
VARIANT_LITERAL = "literal"


@dataclass(frozen=True)
class PairCheckResult:
    n: int
    variant: str
    alpha: int
    max_pair_deviation: Fraction
    max_twirl_deviation: Fraction


def _gate_sequence(n: int, k: int = 1) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Copy CNOTs (control, target) and coin-gated slots (control, target)
    for the k=1, m=1 circuit, in application order; the final stage is the
    last alpha-sized block of slots with control register 1, target 0."""
    registers = n // k
    levels = registers.bit_length() - 1
    copies = []
    for i in range(1, levels + 1):
        half = 1 << (i - 1)
        for j in range(k):
            for l in range(half):
                copies.append((l * k + j, (half + l) * k + j))
    slots = []
    for i in range(levels, 0, -1):
        half = 1 << (i - 1)
        for l in range(half):
            slots.append((l, l + half))
    return copies, slots


def exact_pair_check(n: int, variant: str, alpha: int = 2) -> PairCheckResult:
    """Exact ensemble distribution of the circuit's action on ordered pairs.

    All internal randomness (condition bits and coins) is enumerated
    exactly; results are rational numbers with zero run-to-run variance.
    Returns the max deviation of any fixed input pair's output-pair
    distribution from uniform over distinct ordered pairs, and the max
    entrywise deviation of the two-fold twirl from the exact uniform-
    permutation twirl.
    """
    if variant == VARIANT_FIXED_C:
        alpha = 2
    if n == 2:
        dist = _pair_ensemble_small(n, variant, alpha)
    elif n == 4:
        dist = _pair_ensemble_enumerated(n, variant, alpha)
    else:
        raise ShadowError("exact enumeration implemented for n in {2, 4}")
    return PairCheckResult(
        n=n,
        variant=variant,
        alpha=alpha,
        max_pair_deviation=_max_pair_deviation(dist, 1 << n),
        max_twirl_deviation=_max_twirl_deviation(dist, 1 << n),
    )


def _apply_slot_gates(perm: tuple[int, ...], n: int, ctrl: int, tgt: int, cond: int) -> tuple[int, ...]:
    """Compose one CNOT-with-condition onto a label permutation."""
    out = []
    for x in perm:
        if ((x >> ctrl) & 1) == cond:
            out.append(x ^ (1 << tgt))
        else:
            out.append(x)
    return tuple(out)


def _pair_ensemble_small(n: int, variant: str, alpha: int) -> dict[tuple[int, ...], Fraction]:
    """Distribution over label permutations by per-condition-table coin
    composition; feasible whenever the permutation support stays tiny."""
    N = 1 << n
    copies, slots = _gate_sequence(n)
    identity = tuple(range(N))
    if variant == VARIANT_FIXED_C:
        c_tables = [(0, 1)]
    elif variant == VARIANT_LITERAL:
        c_tables = [
            tuple((bits >> j) & 1 for j in range(alpha)) for bits in range(1 << alpha)
        ]
    else:
        raise ShadowError(f"unknown variant {variant!r}")

    start = identity
    for ctrl, tgt in copies:
        start = _apply_slot_gates(start, n, ctrl, tgt, 1)

    total: dict[tuple[int, ...], Fraction] = {}
    table_weight = Fraction(1, len(c_tables))
    for cond_table in c_tables:
        dist = {start: Fraction(1)}
        for ctrl_reg, tgt_reg in slots:
            for j in range(alpha):
                new: dict[tuple[int, ...], Fraction] = {}
                for perm, w in dist.items():
                    half = w / 2
                    new[perm] = new.get(perm, Fraction(0)) + half
                    fired = _apply_slot_gates(perm, n, ctrl_reg, tgt_reg, cond_table[j])
                    new[fired] = new.get(fired, Fraction(0)) + half
                dist = new
        # final stage: control register 1, target register 0
        for j in range(alpha):
            new = {}
            for perm, w in dist.items():
                half = w / 2
                new[perm] = new.get(perm, Fraction(0)) + half
                fired = _apply_slot_gates(perm, n, 1, 0, cond_table[j])
                new[fired] = new.get(fired, Fraction(0)) + half
            dist = new
        for perm, w in dist.items():
            total[perm] = total.get(perm, Fraction(0)) + w * table_weight
    return total


def _pair_ensemble_enumerated(n: int, variant: str, alpha: int) -> dict[tuple[int, ...], Fraction]:
    """Direct enumeration of all (condition, coin) settings, vectorized."""
    N = 1 << n
    copies, slots = _gate_sequence(n)
    coin_bits = (len(slots) + 1) * alpha  # +1 for the final stage
    cond_bits = alpha if variant == VARIANT_LITERAL else 0
    total_bits = coin_bits + cond_bits
    if total_bits > 20:
        raise ShadowError(f"enumeration too large: 2^{total_bits} settings")
    settings = 1 << total_bits
    s = np.arange(settings, dtype=np.int64)

    if variant == VARIANT_FIXED_C:
        conds = np.array([0, 1] * (alpha // 2 + 1))[:alpha]
        conds = np.broadcast_to(conds, (settings, alpha))
    elif variant == VARIANT_LITERAL:
        conds = np.stack([(s >> (coin_bits + j)) & 1 for j in range(alpha)], axis=1)
    else:
        raise ShadowError(f"unknown variant {variant!r}")

    x = np.broadcast_to(np.arange(N, dtype=np.int64), (settings, N)).copy()
    for ctrl, tgt in copies:
        x ^= ((x >> ctrl) & 1) << tgt
    bit = 0
    for ctrl_reg, tgt_reg in slots:
        for j in range(alpha):
            coin = (s >> bit) & 1
            bit += 1
            fire = (coin[:, None] == 1) & (((x >> ctrl_reg) & 1) == conds[:, j][:, None])
            x ^= fire.astype(np.int64) << tgt_reg
    for j in range(alpha):
        coin = (s >> bit) & 1
        bit += 1
        fire = (coin[:, None] == 1) & (((x >> 1) & 1) == conds[:, j][:, None])
        x ^= fire.astype(np.int64)  # target bit 0

    weight = Fraction(1, settings)
    dist: dict[tuple[int, ...], Fraction] = {}
    for row in map(tuple, x):
        dist[row] = dist.get(row, Fraction(0)) + weight
    return dist


def _dist_arrays(dist: dict[tuple[int, ...], Fraction], N: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Rows, integer numerators, and the common (power-of-two) denominator."""
    denom = 1
    for w in dist.values():
        denom = max(denom, w.denominator)
    rows = np.array(list(dist.keys()), dtype=np.int64)
    nums = np.array([int(w * denom) for w in dist.values()], dtype=np.int64)
    assert all(w * denom == int(w * denom) for w in dist.values())
    return rows, nums, denom


def _max_pair_deviation(dist: dict[tuple[int, ...], Fraction], N: int) -> Fraction:
    uniform = Fraction(1, N * (N - 1))
    rows, nums, denom = _dist_arrays(dist, N)
    worst = Fraction(0)
    for x1 in range(N):
        for x2 in range(N):
            if x1 == x2:
                continue
            codes = rows[:, x1] * N + rows[:, x2]
            counts = np.bincount(codes, weights=nums, minlength=N * N).astype(np.int64)
            cmax = int(counts.max())
            hit = int(np.count_nonzero(counts))
            worst = max(worst, abs(Fraction(cmax, denom) - uniform))
            if hit < N * (N - 1):
                worst = max(worst, uniform)
            else:
                cmin = int(counts[counts > 0].min())
                worst = max(worst, abs(Fraction(cmin, denom) - uniform))
    return worst


def _max_twirl_deviation(dist: dict[tuple[int, ...], Fraction], N: int) -> Fraction:
    """Max entry deviation of the coin-averaged two-fold twirl from the
    exact uniform-permutation twirl, over all basis matrix units.

    A permutation maps the unit |a b><a2 b2| to |pa pb><pa2 pb2|, so the
    twirl entry is the ensemble weight of each image tuple; the reference
    weight is (N-r)!/N! on every pattern-compatible image (r = number of
    distinct labels in the unit) and 0 elsewhere.  Images of permutations
    are automatically pattern-compatible, so the deviation candidates are
    the extreme hit weights and, when some compatible image is unhit, the
    reference weight itself.
    """
    rows, nums, denom = _dist_arrays(dist, N)
    worst = Fraction(0)
    for a in range(N):
        for b in range(N):
            pair_codes = rows[:, a] * N + rows[:, b]
            for a2 in range(N):
                for b2 in range(N):
                    unit = (a, b, a2, b2)
                    r = len(set(unit))
                    ref = Fraction(factorial(N - r), factorial(N))
                    codes = (pair_codes * N + rows[:, a2]) * N + rows[:, b2]
                    uniq, inv = np.unique(codes, return_inverse=True)
                    weights = np.bincount(inv, weights=nums).astype(np.int64)
                    cmax = int(weights.max())
                    cmin = int(weights.min())
                    compatible = 1
                    for i in range(r):
                        compatible *= N - i
                    worst = max(worst, abs(Fraction(cmax, denom) - ref))
                    if len(uniq) < compatible:
                        worst = max(worst, ref)
                    else:
                        worst = max(worst, abs(Fraction(cmin, denom) - ref))
    return worst
