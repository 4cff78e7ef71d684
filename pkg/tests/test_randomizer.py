import numpy as np
import pytest

from subsetdesign.bitkit import BitString
from subsetdesign.randomizer import (
    COIN_PER_REGISTER,
    COIN_PER_TARGET,
    DepthReport,
    ExactPermutation,
    McxGate,
    ParameterError,
    apply_circuit,
    apply_gate,
    assemble_circuit,
    build_randomizer,
    circuit_stage_schedules,
    depth_report,
    parse_circuit,
    rmcc,
    schedule_mcx_layers,
    serialize_circuit,
)
from subsetdesign.rng import substream
from subsetdesign.shadow import apply_batch, draw_batch_tables


def forced_coin_circuit(n, k, m, alpha, coin_value, seed=0):
    levels = (n // k).bit_length() - 1
    tables = rmcc(0, k - 1, m, alpha, substream(seed, 0))
    coins = {
        (i, l): np.full((alpha, k), coin_value, dtype=np.uint8)
        for i in range(1, levels + 1)
        for l in range(1 << (i - 1))
    }
    final = np.full((alpha, k), coin_value, dtype=np.uint8)
    return assemble_circuit(n, k, m, alpha, COIN_PER_TARGET, seed, tables, coins, final)


class TestMcxGate:
    def test_supplementary_figure_example(self):
        # controls on positions {0,1,4} with required values (1,1,0), target 6
        g = McxGate((0, 1, 4), (1, 1, 0), 6)
        x = BitString.from_bits([1, 1, 0, 0, 0, 0, 0, 0])
        y = apply_gate(g, x)
        assert y.bit(6) == 1 and (y ^ x).value == 1 << 6

    def test_non_matching_unchanged(self):
        g = McxGate((0, 1, 4), (1, 1, 0), 6)
        x = BitString.from_bits([1, 0, 0, 0, 0, 0, 0, 0])
        assert apply_gate(g, x) == x

    def test_self_inverse_random(self):
        rng = np.random.default_rng(17)
        for _ in range(10_000):
            n = int(rng.integers(3, 12))
            m = int(rng.integers(1, n))
            positions = rng.choice(n, size=m + 1, replace=False)
            g = McxGate(
                tuple(int(p) for p in positions[:-1]),
                tuple(int(b) for b in rng.integers(0, 2, size=m)),
                int(positions[-1]),
            )
            x = BitString(n, int(rng.integers(0, 1 << n)))
            assert apply_gate(g, apply_gate(g, x)) == x

    def test_invalid_gates_rejected(self):
        with pytest.raises(ParameterError):
            McxGate((1, 1), (0, 0), 2)
        with pytest.raises(ParameterError):
            McxGate((1, 2), (0, 0), 2)


class TestRmcc:
    def test_full_window(self):
        t = rmcc(0, 3, 4, 5, substream(1))
        assert all(s == (0, 1, 2, 3) for s in t.S)

    def test_structural_contract(self):
        t = rmcc(0, 3, 2, 2, substream(2))
        assert t.alpha == 2 and t.m == 2
        for s, c in zip(t.S, t.C):
            assert len(set(s)) == 2 and all(0 <= p <= 3 for p in s)
            assert all(b in (0, 1) for b in c)

    def test_deterministic(self):
        a = rmcc(0, 7, 3, 6, substream(42))
        b = rmcc(0, 7, 3, 6, substream(42))
        assert a == b

    def test_window_too_small(self):
        with pytest.raises(ParameterError):
            rmcc(0, 1, 3, 1, substream(0))


class TestBuildRandomizer:
    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            build_randomizer(6, 2, 1, 2)  # n/k = 3 not a power of two
        with pytest.raises(ParameterError):
            build_randomizer(8, 2, 3, 2)  # m > k
        with pytest.raises(ParameterError):
            build_randomizer(2, 2, 1, 2)  # L = 0

    def test_copy_tree_replication(self):
        c = forced_coin_circuit(8, 2, 1, 4, coin_value=0)
        x = BitString.from_str01("10000000")
        assert c.apply(x).to_str01() == "10101010"

    def test_all_coins_zero_is_pure_copy(self):
        c = forced_coin_circuit(16, 4, 2, 3, coin_value=0)
        for b in (0b0000, 0b1010, 0b1111):
            out = c.apply(BitString(16, b))
            expected = sum(b << (4 * r) for r in range(4))
            assert out.value == expected

    def test_hand_expanded_structure_n4_k1(self):
        c = build_randomizer(4, 1, 1, 2, seed=5)
        copy_gates = [g for layer in c.copy_levels for g in layer]
        assert [(g.controls[0], g.target) for g in copy_gates] == [(0, 1), (0, 2), (1, 3)]
        for level, fired in c.randomize_levels:
            half = 1 << (level - 1)
            for g in fired:
                ctrl_reg = g.controls[0]
                assert ctrl_reg < half
                assert g.target == ctrl_reg + half
        for g in c.final_gates:
            assert g.controls == (1,) and g.target == 0

    def test_determinism_byte_for_byte(self):
        a = serialize_circuit(build_randomizer(16, 2, 2, 5, COIN_PER_TARGET, seed=9))
        b = serialize_circuit(build_randomizer(16, 2, 2, 5, COIN_PER_TARGET, seed=9))
        assert a == b

    def test_coin_modes_differ(self):
        a = serialize_circuit(build_randomizer(8, 2, 1, 4, COIN_PER_TARGET, seed=3))
        b = serialize_circuit(build_randomizer(8, 2, 1, 4, COIN_PER_REGISTER, seed=3))
        assert a != b

    def test_per_register_coins_shared_across_targets(self):
        c = build_randomizer(8, 4, 1, 3, COIN_PER_REGISTER, seed=21)
        for level, fired in c.randomize_levels:
            seen = {}
            for g in fired:
                reg = g.target // 4 - (1 << (level - 1))
                key = (reg, g.controls, g.conditions)
                seen.setdefault(key, set()).add(g.target % 4)
            for targets in seen.values():
                assert targets == set(range(4))  # fired gates cover every target bit


class TestApplyCircuit:
    def test_width_mismatch(self):
        c = build_randomizer(8, 2, 1, 2, seed=0)
        with pytest.raises(ParameterError):
            apply_circuit(c, BitString(4, 0))

    def test_bijectivity_100_circuits(self):
        rng = np.random.default_rng(100)
        for trial in range(100):
            k = int(rng.choice([1, 2, 4]))
            levels = int(rng.integers(1, 4 if k > 1 else 5))
            n = k << levels
            if n > 16:
                continue
            m = int(rng.integers(1, k + 1))
            alpha = int(rng.integers(1, 6))
            c = build_randomizer(n, k, m, alpha, seed=trial)
            image = c.apply_to_all()
            assert len(np.unique(image)) == 1 << n

    def test_matches_single_apply(self):
        c = build_randomizer(8, 2, 2, 4, seed=33)
        image = c.apply_to_all()
        for v in range(0, 256, 7):
            assert c.apply(BitString(8, v)).value == image[v]

    def test_distinct_prefix_inputs_distinct_outputs(self):
        c = build_randomizer(8, 2, 1, 3, seed=12)
        outs = {c.apply(BitString(8, b)).value for b in range(4)}
        assert len(outs) == 4

    def test_uniform_marginal_per_target_bit(self):
        # n=4, k=1, m=1, alpha=8: output bits outside register 0 have mean 1/2
        # over fresh circuits applied to the fixed input (1, 0, 0, 0).
        n_circuits = 100_000
        rng = substream(314)
        tables = draw_batch_tables(4, 1, 1, 8, n_circuits, rng, COIN_PER_TARGET)
        x = np.full((n_circuits, 1), 1, dtype=np.int64)
        out = apply_batch(tables, x)[:, 0]
        sigma = 0.5 / np.sqrt(n_circuits)
        for bit in (1, 2, 3):
            mean = (((out >> bit) & 1) == 1).mean()
            assert abs(mean - 0.5) < 3 * sigma, f"bit {bit}: mean {mean}"


class TestExactPermutation:
    def test_bijective_and_deterministic(self):
        p1 = ExactPermutation(8, seed=5)
        p2 = ExactPermutation(8, seed=5)
        assert np.array_equal(p1.perm, p2.perm)
        assert len(np.unique(p1.perm)) == 256

    def test_apply(self):
        p = ExactPermutation(4, seed=1)
        for v in range(16):
            assert p.apply(BitString(4, v)).value == p.perm[v]


class TestSerialization:
    def test_roundtrip_bit_exact(self):
        for seed in range(5):
            c = build_randomizer(16, 2, 2, 4, COIN_PER_TARGET, seed=seed)
            text = serialize_circuit(c)
            c2 = parse_circuit(text)
            assert serialize_circuit(c2) == text
            assert np.array_equal(c.apply_to_all(), c2.apply_to_all())

    def test_header_fields_preserved(self):
        c = build_randomizer(8, 1, 1, 3, COIN_PER_REGISTER, seed=77)
        c2 = parse_circuit(serialize_circuit(c))
        assert (c2.n, c2.k, c2.m, c2.alpha, c2.coin_mode, c2.seed) == (8, 1, 1, 3, COIN_PER_REGISTER, 77)

    def test_bad_header_rejected(self):
        with pytest.raises(ParameterError):
            parse_circuit("NOTACIRCUIT 1 2 3\n")


class TestScheduling:
    def test_disjoint_supports_single_layer(self):
        gates = [McxGate((4 * i,), (1,), 4 * i + 1) for i in range(5)]
        rep = schedule_mcx_layers(gates)
        assert rep.logical_layers == 1
        assert rep.hypergraph_max_degree == 1
        assert rep.logical_layers <= rep.greedy_bound

    def test_identical_gates_serialize(self):
        g = McxGate((0, 1), (1, 0), 2)
        rep = schedule_mcx_layers([g] * 7)
        assert rep.logical_layers == 7
        assert rep.hypergraph_max_degree == 7
        assert rep.greedy_bound == 2 * 6 + 1

    def test_greedy_bound_on_generated_circuits(self):
        # Circuit grids in the m >= 2 regime of the generator, plus the
        # k = 1 shadow family where the bound holds with equality.
        rng = np.random.default_rng(2025)
        cases = []
        for t, m in ((4, 2), (8, 3)):
            for k in (m, 2 * m):
                cases.append((k * 4, k, m, 4 * t))
        cases.append((8, 1, 1, 4))
        for n, k, m, alpha in cases:
            for rep in range(5):
                c = build_randomizer(n, k, m, alpha, seed=int(rng.integers(0, 2**32)))
                for stage in circuit_stage_schedules(c):
                    assert stage.logical_layers <= stage.greedy_bound

    def test_empty_gate_list(self):
        rep = schedule_mcx_layers([])
        assert rep == DepthReport(0, 0, "none", 0, 0, 0)


class TestDepthReport:
    def test_copy_only_layer_count(self):
        c = forced_coin_circuit(8, 2, 1, 4, coin_value=0)
        rep = depth_report(c)
        assert rep.logical_layers == 2  # log2(8/2) copy layers only
        assert rep.mcx_count == 0

    def test_single_mcx_cost_model(self):
        rep = schedule_mcx_layers([McxGate((0, 1, 2, 3), (1, 1, 1, 1), 4)])
        assert rep.elementary_depth == 4  # ancilla-free, c0 = 1, m = 4
        rep_anc = schedule_mcx_layers(
            [McxGate((0, 1, 2, 3), (1, 1, 1, 1), 4)], ancilla_mode="one-ancilla-per-register"
        )
        assert rep_anc.elementary_depth == 8  # ceil(log2 4)^3 = 8

    def test_doubling_n_adds_constant_layers(self):
        # With every coin forced on, each level contributes an identical
        # layer count, so each doubling adds the same increment.
        layers = []
        for n in (4, 8, 16):
            c = forced_coin_circuit(n, 2, 1, 3, coin_value=1, seed=4)
            layers.append(depth_report(c).logical_layers)
        assert layers[1] - layers[0] == layers[2] - layers[1]
