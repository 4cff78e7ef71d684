"""Monte Carlo and closed-form machinery for GF(2) full-rank certification.

The object of study is the t x alpha indicator matrix X with
X[i][j] = 1 iff copy x_i restricted to position set S[j] equals the drawn
condition C[j]; full rank certifies that the t copies pick up independent
random target-bit flips.  Alongside the direct Monte Carlo there is a
two-nonzero-per-column surrogate model with a closed-form union bound on
its rank-deficiency probability.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from math import comb, exp, log2, sqrt
from typing import Sequence

import mpmath
import numpy as np

from .bitkit import BitString, Gf2Matrix, gf2_rank_rows
from .randomizer import RmccTables
from .rng import derive_key, substream

P_SUM_TOL = 1e-12


class RankLabError(ValueError):
    pass


@dataclass(frozen=True)
class RankExperimentConfig:
    t: int
    k: int
    m: int
    alpha: int
    trials: int
    seed: int

    def __post_init__(self) -> None:
        if self.t < 1 or self.t > (1 << self.k):
            raise RankLabError(f"need 1 <= t <= 2^k for distinct copies, got t={self.t}, k={self.k}")
        if not 1 <= self.m <= self.k:
            raise RankLabError(f"need 1 <= m <= k, got m={self.m}, k={self.k}")
        if self.alpha < 1 or self.trials < 1:
            raise RankLabError("alpha and trials must be >= 1")


@dataclass(frozen=True)
class RankExperimentResult:
    full_rank_rate: float
    ci_lo: float
    ci_hi: float
    trials: int
    mean_min_distance: float
    min_distance_hist: dict[int, int]
    mean_column_weight: float
    atypical_pair_rate: float  # fraction of copy pairs with |d - k/2| > k/4
    pair_count: int


def wilson_interval(successes: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    """95% Wilson score interval for a binomial rate."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def build_x_matrix(xs: Sequence[BitString], tables: RmccTables) -> Gf2Matrix:
    """X[i][j] = 1 iff xs[i] restricted to S[j] equals C[j]."""
    values = [x.value for x in xs]
    if len(set(values)) != len(values):
        raise RankLabError("copies must be distinct")
    rows = []
    for x in xs:
        word = 0
        for j, (positions, cond) in enumerate(zip(tables.S, tables.C)):
            if all(x.bit(p) == c for p, c in zip(positions, cond)):
                word |= 1 << j
        rows.append(word)
    return Gf2Matrix.from_rows(rows, tables.alpha)


def _sample_distinct(rng: random.Random, k: int, t: int) -> list[int]:
    # Rejection sampling; collisions are negligible at operating k.
    seen: set[int] = set()
    out: list[int] = []
    while len(out) < t:
        v = rng.getrandbits(k)
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def full_rank_mc(cfg: RankExperimentConfig) -> RankExperimentResult:
    """Per trial: sample t distinct k-bit copies and fresh tables, build X,
    and test rank = t.  Reports the Wilson interval and pairwise-distance
    concentration statistics."""
    rng = random.Random(derive_key(cfg.seed))
    full = 0
    min_dist_total = 0.0
    min_dist_hist: dict[int, int] = {}
    weight_total = 0
    atypical = 0
    pair_count = 0
    delta = cfg.k / 4.0
    for _ in range(cfg.trials):
        xs = _sample_distinct(rng, cfg.k, cfg.t)
        rows = [0] * cfg.t
        for j in range(cfg.alpha):
            positions = rng.sample(range(cfg.k), cfg.m)
            cond_bits = rng.getrandbits(cfg.m)
            mask = 0
            pattern = 0
            for bi, p in enumerate(positions):
                mask |= 1 << p
                if (cond_bits >> bi) & 1:
                    pattern |= 1 << p
            col_bit = 1 << j
            for i, x in enumerate(xs):
                if (x & mask) == pattern:
                    rows[i] |= col_bit
                    weight_total += 1
        if gf2_rank_rows(rows) == cfg.t:
            full += 1
        if cfg.t >= 2:
            dmin = cfg.k
            for i in range(cfg.t):
                for j in range(i + 1, cfg.t):
                    d = (xs[i] ^ xs[j]).bit_count()
                    dmin = min(dmin, d)
                    pair_count += 1
                    if abs(d - cfg.k / 2.0) > delta:
                        atypical += 1
            min_dist_total += dmin
            min_dist_hist[dmin] = min_dist_hist.get(dmin, 0) + 1
    lo, hi = wilson_interval(full, cfg.trials)
    return RankExperimentResult(
        full_rank_rate=full / cfg.trials,
        ci_lo=lo,
        ci_hi=hi,
        trials=cfg.trials,
        mean_min_distance=min_dist_total / cfg.trials if cfg.t >= 2 else float("nan"),
        min_distance_hist=min_dist_hist,
        mean_column_weight=weight_total / (cfg.trials * cfg.alpha),
        atypical_pair_rate=atypical / pair_count if pair_count else 0.0,
        pair_count=pair_count,
    )


def alpha_bound(t: int, eps: float, log_base: float = 2.0) -> int:
    """Column count ceil(2t * log(t^2/eps)) in the configured base."""
    if t < 2:
        raise RankLabError("alpha bound needs t >= 2")
    if eps <= 0:
        raise RankLabError("need eps > 0")
    value = 2 * t * (np.log(t * t / eps) / np.log(log_base))
    if value <= 0:
        warnings.warn("alpha bound is non-positive (eps >= t^2); clamping to 0")
        return 0
    return int(np.ceil(value))


def fullrank_k_bound(t: int, eps: float, log_base: float = 2.0) -> int:
    """Register width ceil(8 * log(t^2/eps)) used alongside alpha_bound."""
    value = 8 * (np.log(t * t / eps) / np.log(log_base))
    return max(1, int(np.ceil(value)))


@dataclass(frozen=True)
class X2ModelParams:
    """Surrogate model: each column is zero, a specific single-entry pattern
    (probability p1 each), or a specific pair pattern (probability p2 each)."""

    t: int
    a: float
    alpha: int
    p0: float = field(default=0.0)
    p1: float = field(default=0.0)
    p2: float = field(default=0.0)

    def __post_init__(self) -> None:
        if self.t < 2 or self.a <= 0 or self.alpha < 0:
            raise RankLabError("need t >= 2, a > 0, alpha >= 0")
        if self.p0 == 0.0 and self.p1 == 0.0 and self.p2 == 0.0:
            p1 = (1 - 1 / self.a**2) / self.t
            p2 = 1 / (self.a * self.t) ** 2
            p0 = 1 - self.t * p1 - comb(self.t, 2) * p2
            object.__setattr__(self, "p1", p1)
            object.__setattr__(self, "p2", p2)
            object.__setattr__(self, "p0", p0)
        total = self.p0 + self.t * self.p1 + comb(self.t, 2) * self.p2
        if abs(total - 1.0) > P_SUM_TOL:
            raise RankLabError(f"column pattern probabilities sum to {total}, not 1")


def x2_column_zero_prob(params: X2ModelParams, w: int) -> float:
    """p(w): probability that a random column is orthogonal to a fixed
    weight-w test vector."""
    t = params.t
    return 1.0 - w / t + w * w / (params.a**2 * t * t)


def x2_union_bound(params: X2ModelParams) -> float:
    """Exact partial sum over nonzero test-vector weights, in extended
    precision (p(w)^alpha can underflow float64 for large alpha)."""
    with mpmath.workdps(60):
        total = mpmath.mpf(0)
        for w in range(1, params.t + 1):
            pw = mpmath.mpf(1) - mpmath.mpf(w) / params.t + mpmath.mpf(w) ** 2 / (
                mpmath.mpf(params.a) ** 2 * params.t**2
            )
            total += mpmath.binomial(params.t, w) * pw**params.alpha
        return float(total)


def x2_model_mc(params: X2ModelParams, trials: int, seed: int) -> float:
    """Monte Carlo rank-deficiency rate of the surrogate model.

    Columns are encoded as t-bit integers; the rank test inserts them into
    a per-trial XOR basis, vectorized across trials.
    """
    t, alpha = params.t, params.alpha
    if t > 16:
        raise RankLabError("surrogate model vectorization limited to t <= 16")
    rng = substream(seed)
    singles = [1 << i for i in range(t)]
    pairs = [(1 << i) | (1 << j) for i in range(t) for j in range(i + 1, t)]
    patterns = np.array([0] + singles + pairs, dtype=np.uint32)
    probs = np.array([params.p0] + [params.p1] * t + [params.p2] * len(pairs))
    probs = probs / probs.sum()  # exact-to-tolerance by construction
    choices = rng.choice(len(patterns), size=(trials, alpha), p=probs)
    cols = patterns[choices]  # (trials, alpha)

    basis = np.zeros((trials, t), dtype=np.uint32)  # slot b holds a vector with top bit b
    for j in range(alpha):
        v = cols[:, j].copy()
        for b in range(t - 1, -1, -1):
            has_bit = (v >> b) & 1 == 1
            occupied = basis[:, b] != 0
            v = np.where(has_bit & occupied, v ^ basis[:, b], v)
            claim = has_bit & ~occupied & (v != 0) & (((v >> b) & 1) == 1)
            basis[:, b] = np.where(claim, v, basis[:, b])
            v = np.where(claim, 0, v)
    ranks = (basis != 0).sum(axis=1)
    return float(np.mean(ranks < t))


def hamming_tail_bound(k: int, delta: float) -> float:
    """Chernoff tail for |d(x, x') - k/2| > delta with uniform pairs."""
    return 2.0 * exp(-2.0 * delta * delta / k)
