import warnings

import numpy as np
import pytest

from subsetdesign.bitkit import BitString, gf2_rank_rows
from subsetdesign.randomizer import RmccTables
from subsetdesign.rank_lab import (
    RankExperimentConfig,
    RankLabError,
    X2ModelParams,
    alpha_bound,
    build_x_matrix,
    full_rank_mc,
    fullrank_k_bound,
    hamming_tail_bound,
    wilson_interval,
    x2_column_zero_prob,
    x2_model_mc,
    x2_union_bound,
)


class TestBuildXMatrix:
    def test_delta_definition(self):
        tables = RmccTables(((1,),), ((1,),))
        xs = [BitString(2, 0b00), BitString(2, 0b10)]
        m = build_x_matrix(xs, tables)
        assert [m.entry(0, 0), m.entry(1, 0)] == [0, 1]

    def test_unmatched_condition_zero_column(self):
        tables = RmccTables(((0, 1),), ((1, 1),))
        xs = [BitString(2, 0b00), BitString(2, 0b01), BitString(2, 0b10)]
        m = build_x_matrix(xs, tables)
        assert all(m.entry(i, 0) == 0 for i in range(3))

    def test_full_string_condition_selects_one_row(self):
        xs = [BitString(3, 0b101), BitString(3, 0b011)]
        tables = RmccTables(((0, 1, 2),), ((1, 0, 1),))
        m = build_x_matrix(xs, tables)
        assert m.entry(0, 0) == 1 and m.entry(1, 0) == 0

    def test_duplicate_copies_rejected(self):
        tables = RmccTables(((0,),), ((1,),))
        with pytest.raises(RankLabError):
            build_x_matrix([BitString(2, 1), BitString(2, 1)], tables)


class TestFullRankMc:
    def test_alpha_below_t_never_full(self):
        cfg = RankExperimentConfig(t=3, k=8, m=2, alpha=2, trials=200, seed=0)
        assert full_rank_mc(cfg).full_rank_rate == 0.0

    def test_t1_rate_matches_exact_formula(self):
        # t=1, m=1: the single row is zero only if every column misses, which
        # happens with probability 2^-alpha independently of x.
        for alpha in (1, 3, 6):
            cfg = RankExperimentConfig(t=1, k=2, m=1, alpha=alpha, trials=20_000, seed=1)
            res = full_rank_mc(cfg)
            expected = 1 - 0.5**alpha
            sigma = np.sqrt(expected * (1 - expected) / cfg.trials) + 1e-9
            assert abs(res.full_rank_rate - expected) < 4 * sigma

    def test_monotone_in_alpha(self):
        rates = []
        for alpha in (2, 4, 8, 16):
            cfg = RankExperimentConfig(t=2, k=6, m=1, alpha=alpha, trials=4000, seed=7)
            res = full_rank_mc(cfg)
            rates.append((res.ci_lo, res.full_rank_rate, res.ci_hi))
        for (lo_a, _, hi_a), (lo_b, _, hi_b) in zip(rates, rates[1:]):
            assert hi_b >= lo_a  # CI overlap tolerance for non-decreasing trend

    def test_column_marginal(self):
        cfg = RankExperimentConfig(t=2, k=10, m=3, alpha=5, trials=10_000, seed=3)
        res = full_rank_mc(cfg)
        # each entry is one with marginal 2^-m; column weight = t * 2^-m
        expected = cfg.t * 0.5**cfg.m
        draws = cfg.trials * cfg.alpha * cfg.t
        sigma = np.sqrt(0.5**cfg.m * (1 - 0.5**cfg.m) / draws) * cfg.t
        assert abs(res.mean_column_weight - expected) < 4 * sigma

    def test_hamming_typicality(self):
        t, eps = 4, 0.1
        k = fullrank_k_bound(t, eps)
        cfg = RankExperimentConfig(t=t, k=k, m=2, alpha=4, trials=5000, seed=11)
        res = full_rank_mc(cfg)
        bound = hamming_tail_bound(k, k / 4)
        sigma = np.sqrt(max(res.atypical_pair_rate, bound) / res.pair_count)
        assert res.atypical_pair_rate <= bound + 3 * sigma

    def test_invalid_configs(self):
        with pytest.raises(RankLabError):
            RankExperimentConfig(t=5, k=2, m=1, alpha=1, trials=1, seed=0)
        with pytest.raises(RankLabError):
            RankExperimentConfig(t=2, k=4, m=5, alpha=1, trials=1, seed=0)


class TestAlphaBound:
    def test_examples(self):
        assert alpha_bound(2, 0.1) == 22
        assert alpha_bound(4, 0.1) == 59

    def test_degenerate_clamps_to_zero(self):
        with warnings.catch_warnings(record=True) as captured:
            warnings.simplefilter("always")
            assert alpha_bound(2, 4.0) == 0
            assert captured and "clamp" in str(captured[0].message)

    def test_k_bound(self):
        assert fullrank_k_bound(2, 0.1) == 43
        assert fullrank_k_bound(4, 0.1) == 59


class TestX2Model:
    def test_probability_normalization(self):
        p = X2ModelParams(t=4, a=2.0, alpha=59)
        assert abs(p.p0 + p.t * p.p1 + 6 * p.p2 - 1.0) < 1e-12
        assert abs(p.p1 - (1 - 0.25) / 4) < 1e-15
        assert abs(p.p2 - 1 / 64) < 1e-15

    def test_union_bound_alpha_zero(self):
        p = X2ModelParams(t=5, a=2.0, alpha=0)
        assert abs(x2_union_bound(p) - (2**5 - 1)) < 1e-9

    def test_weight_t_zero_prob(self):
        p = X2ModelParams(t=4, a=2.0, alpha=10)
        assert abs(x2_column_zero_prob(p, 4) - 1 / 4) < 1e-15  # p(t) = 1/a^2

    def test_union_bound_underflow_handled(self):
        p = X2ModelParams(t=4, a=2.0, alpha=5000)
        val = x2_union_bound(p)
        assert 0.0 <= val < 1e-200 or val == 0.0

    def test_all_zero_columns(self):
        p = X2ModelParams(t=3, a=1.0, alpha=10, p0=1.0, p1=0.0, p2=0.0)
        assert x2_model_mc(p, 500, seed=0) == 1.0

    def test_large_alpha_low_deficiency(self):
        t = 3
        p = X2ModelParams(t=t, a=10.0, alpha=64 * t)
        assert x2_model_mc(p, 2000, seed=1) < 1e-2

    def test_mc_respects_union_bound(self):
        p = X2ModelParams(t=4, a=2.0, alpha=20)
        rate = x2_model_mc(p, 20_000, seed=2)
        bound = x2_union_bound(p)
        sigma = np.sqrt(max(rate, 1e-9) * (1 - min(rate, 1.0)) / 20_000)
        assert rate <= bound + 3 * sigma

    def test_vectorized_rank_matches_reference(self):
        # Dual route: the vectorized XOR-basis rank versus packed-row
        # elimination on the same sampled columns.
        rng = np.random.default_rng(5)
        t, alpha = 5, 12
        patterns = [0] + [1 << i for i in range(t)] + [
            (1 << i) | (1 << j) for i in range(t) for j in range(i + 1, t)
        ]
        for _ in range(300):
            cols = [patterns[int(c)] for c in rng.integers(0, len(patterns), size=alpha)]
            rows = [
                sum(((cols[j] >> i) & 1) << j for j in range(alpha)) for i in range(t)
            ]
            rank_ref = gf2_rank_rows(rows)
            deficient_ref = rank_ref < t
            p = X2ModelParams(t=t, a=2.0, alpha=alpha)
            # re-run the vectorized insertion on this fixed column sample
            basis = np.zeros((1, t), dtype=np.uint32)
            v_all = np.array(cols, dtype=np.uint32).reshape(1, alpha)
            for j in range(alpha):
                v = v_all[:, j].copy()
                for b in range(t - 1, -1, -1):
                    has = ((v >> b) & 1) == 1
                    occ = basis[:, b] != 0
                    v = np.where(has & occ, v ^ basis[:, b], v)
                    claim = has & ~occ & (((v >> b) & 1) == 1)
                    basis[:, b] = np.where(claim, v, basis[:, b])
                    v = np.where(claim, 0, v)
            assert (int((basis != 0).sum()) < t) == deficient_ref


class TestWilson:
    def test_interval_contains_rate(self):
        lo, hi = wilson_interval(90, 100)
        assert lo < 0.9 < hi
        assert 0.0 <= lo and hi <= 1.0

    def test_extremes(self):
        lo, hi = wilson_interval(0, 50)
        assert lo == 0.0 and hi < 0.15
