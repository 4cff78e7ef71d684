"""Sparse subset-phase state designs and their verification toolkit."""

from .bitkit import BitString, Gf2Matrix, GfExtField, find_irreducible, gf2_rank, gf_mul, poly_eval
from .moments import (
    DensityMoment,
    empirical_moment,
    enumerated_function_moment,
    frame_potential,
    haar_moment,
    trace_distance,
    unique_moment,
)
from .phase_oracle import PhaseOracle, PolyOracle, TrueRandomOracle, ZeroOracle, enumerate_functions, oracle_eval, poly_oracle
from .randomizer import (
    DepthReport,
    ExactPermutation,
    McxGate,
    RandomizerCircuit,
    RmccTables,
    apply_circuit,
    apply_gate,
    build_randomizer,
    depth_report,
    rmcc,
    schedule_mcx_layers,
)
from .rank_lab import (
    RankExperimentConfig,
    RankExperimentResult,
    X2ModelParams,
    alpha_bound,
    build_x_matrix,
    full_rank_mc,
    x2_model_mc,
    x2_union_bound,
)
from .shadow import (
    EstimatorResult,
    ShadowSample,
    estimate,
    exact_pair_check,
    fidelity_experiment,
    pair_uniformity,
    sample_shadow,
)
from .sparse_state import (
    SubsetPhaseState,
    coherence,
    collision_prob,
    entanglement_entropy,
    prepare,
    stabilizer_renyi,
)

__version__ = "0.1.0"
