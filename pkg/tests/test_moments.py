import os

import numpy as np
import pytest

from subsetdesign.moments import (
    DensityMoment,
    MomentError,
    dump_moment,
    empirical_moment,
    enumerated_function_moment,
    frame_potential,
    haar_moment,
    load_moment,
    trace_distance,
    type_parity_signature,
    unique_moment,
)
from subsetdesign.phase_oracle import TrueRandomOracle
from subsetdesign.randomizer import ExactPermutation
from subsetdesign.sparse_state import SubsetPhaseState, prepare


class TestHaarMoment:
    def test_n1_t1_maximally_mixed(self):
        m = haar_moment(1, 1)
        assert np.allclose(m.matrix, np.eye(2) / 2)

    def test_n1_t2_symmetric_projector(self):
        # Hand value: (I + SWAP)/2 normalized by dim of symmetric subspace 3.
        swap = np.zeros((4, 4))
        for a in range(2):
            for b in range(2):
                swap[b * 2 + a, a * 2 + b] = 1
        expected = (np.eye(4) + swap) / 2 / 3
        m = haar_moment(1, 2)
        assert np.allclose(m.matrix, expected, atol=1e-14)
        assert np.allclose(np.diag(m.matrix), [1 / 3, 1 / 6, 1 / 6, 1 / 3])

    def test_trace_one_everywhere(self):
        for n, t in ((1, 2), (2, 2), (3, 2), (1, 3), (2, 3)):
            assert abs(np.trace(haar_moment(n, t).matrix) - 1) < 1e-10

    def test_dimension_cap(self):
        with pytest.raises(MomentError):
            haar_moment(7, 2)


class TestUniqueMoment:
    def test_l1_t2_single_type(self):
        m = unique_moment(1, 2)
        vec = np.zeros(4)
        vec[0b01] = vec[0b10] = 1 / np.sqrt(2)
        assert np.allclose(m.matrix, np.outer(vec, vec), atol=1e-14)

    def test_l2_t1_maximally_mixed(self):
        m = unique_moment(2, 1)
        assert np.allclose(m.matrix, np.eye(4) / 4)

    def test_t_exceeding_alphabet(self):
        with pytest.raises(MomentError):
            unique_moment(1, 3)

    def test_full_invariants(self):
        for l, t in ((1, 2), (2, 2), (2, 3)):
            unique_moment(l, t).validate_full()
            haar_moment(l, t).validate_full()


class TestTraceDistance:
    def test_self_distance_zero(self):
        m = haar_moment(2, 2)
        assert trace_distance(m, m) < 1e-14

    def test_orthogonal_pure_states(self):
        a = np.zeros((2, 2))
        a[0, 0] = 1
        b = np.zeros((2, 2))
        b[1, 1] = 1
        assert abs(trace_distance(DensityMoment(1, 1, a), DensityMoment(1, 1, b)) - 1) < 1e-14

    def test_dimension_mismatch(self):
        with pytest.raises(MomentError):
            trace_distance(haar_moment(1, 1), haar_moment(1, 2))


class TestEnumeratedFunctionMoment:
    def test_closed_form_distance_values(self):
        cases = [((2, 2), 0.25), ((3, 2), 0.125), ((2, 3), 0.625)]
        for (k, t), expected in cases:
            td = trace_distance(enumerated_function_moment(k, t), unique_moment(k, t))
            assert abs(td - expected) < 1e-10

    def test_closed_form_matches_enumeration(self):
        for k, t in ((1, 2), (2, 2), (2, 3), (3, 2)):
            K = 1 << k
            sigs = np.array([type_parity_signature(v, K, t) for v in range(K**t)])
            closed = (sigs[:, None] == sigs[None, :]).astype(float) / K**t
            enum = enumerated_function_moment(k, t).matrix
            assert np.max(np.abs(closed - enum)) < 1e-14

    def test_k4_closed_form_path(self):
        m = enumerated_function_moment(4, 2)
        assert m.dim == 256
        m.validate_full()


class TestEmpiricalMoment:
    def test_single_state_rank_one(self):
        s = SubsetPhaseState.from_pairs(2, [(0, 1), (3, -1)])
        m = empirical_moment([s], 2)
        eig = np.linalg.eigvalsh(m.matrix)
        assert abs(eig[-1] - 1.0) < 1e-12 and abs(eig[:-1]).max() < 1e-12

    def test_duplicates_no_effect(self):
        s = SubsetPhaseState.from_pairs(2, [(0, 1), (3, -1)])
        a = empirical_moment([s], 2)
        b = empirical_moment([s, s, s], 2)
        assert np.allclose(a.matrix, b.matrix)

    def test_convergence_to_enumerated_average(self):
        # Random tables with the identity map: the empirical two-copy moment
        # approaches the exact all-functions average as M grows.
        target = enumerated_function_moment(2, 2)
        rng = np.random.default_rng(123)
        tds = []
        for count in (100, 1000, 10000):
            states = [
                SubsetPhaseState.from_pairs(
                    2, [(b, 1 - 2 * ((int(tab) >> b) & 1)) for b in range(4)]
                )
                for tab in rng.integers(0, 16, size=count)
            ]
            tds.append(trace_distance(empirical_moment(states, 2), target))
        assert tds[2] < tds[1] < tds[0]


class TestFramePotential:
    def test_orthonormal_states(self):
        states = [np.eye(4)[i] for i in range(4)]
        assert frame_potential(states, 2) == 0.0

    def test_identical_states(self):
        v = np.ones(4) / 2
        assert abs(frame_potential([v, v, v], 2) - 1.0) < 1e-12

    def test_haar_baseline(self):
        rng = np.random.default_rng(77)
        N = 16
        states = []
        for _ in range(400):
            z = rng.normal(size=N) + 1j * rng.normal(size=N)
            states.append(z / np.linalg.norm(z))
        value = frame_potential(states, 2)
        expected = 2 / (N * (N + 1))
        assert abs(value - expected) < 0.35 * expected

    def test_needs_two(self):
        with pytest.raises(MomentError):
            frame_potential([np.ones(2)], 1)


class TestDump:
    def test_roundtrip(self, tmp_path):
        m = haar_moment(2, 2)
        path = os.path.join(tmp_path, "m.bin")
        dump_moment(m, path)
        m2 = load_moment(path, 2, 2)
        assert np.array_equal(m2.matrix, m.matrix.astype(complex))
        assert os.path.getsize(path) == 16 + 16 * m.dim * m.dim


class TestPipelineStates:
    def test_prepared_ensemble_moment_invariants(self):
        states = []
        for seed in range(30):
            perm = ExactPermutation(4, seed=seed)
            oracle = TrueRandomOracle(k=2, table=seed % 16)
            states.append(prepare(4, 2, oracle, perm))
        m = empirical_moment(states, 2)
        m.validate_full()
