"""Acceptance suite: one test per criterion, each printing a pass/fail line
and enforcing the stated tolerance and runtime budget."""

import time
from math import ceil, log2

import numpy as np
import pytest

from subsetdesign import moments, rank_lab, shadow, sparse_state
from subsetdesign.cli import pipeline_triangle_check
from subsetdesign.phase_oracle import poly_oracle
from subsetdesign.randomizer import ExactPermutation, build_randomizer, circuit_stage_schedules
from subsetdesign.rng import MASK64, derive_key, substream


class Criterion:
    def __init__(self, index: int, label: str, budget_s: float):
        self.index = index
        self.label = label
        self.budget = budget_s
        self.start = time.monotonic()

    def finish(self, ok: bool, detail: str) -> None:
        elapsed = time.monotonic() - self.start
        status = "PASS" if ok and elapsed < self.budget else "FAIL"
        print(f"[{status}] criterion {self.index} ({self.label}): {detail} [{elapsed:.1f}s / {self.budget:.0f}s]")
        assert ok, f"criterion {self.index}: {detail}"
        assert elapsed < self.budget, f"criterion {self.index} exceeded {self.budget}s ({elapsed:.1f}s)"


def test_criterion_1_enumerated_moment_equalities():
    crit = Criterion(1, "all-functions average vs unique-type moment", 10)
    cases = [((2, 2), 0.25), ((3, 2), 0.125), ((2, 3), 0.625)]
    devs = []
    for (k, t), expected in cases:
        td = moments.trace_distance(
            moments.enumerated_function_moment(k, t), moments.unique_moment(k, t)
        )
        devs.append(abs(td - expected))
    ok = all(d <= 1e-10 for d in devs)
    crit.finish(ok, f"max |TD - expected| = {max(devs):.2e} over {len(cases)} cases")


def test_criterion_2_unique_to_haar_scaling():
    crit = Criterion(2, "unique-to-Haar scaled trace distance", 120)
    t = 2
    scaled = {}
    for n in (2, 3, 4, 5):
        td = moments.trace_distance(moments.unique_moment(n, t), moments.haar_moment(n, t))
        scaled[n] = td * (1 << n) / t**2
    ratio = max(scaled.values()) / min(scaled.values())
    crit.finish(ratio < 2.0, f"scaled values {dict((n, round(v, 4)) for n, v in scaled.items())}, ratio {ratio:.3f} < 2")


def test_criterion_3_pipeline_triangle():
    crit = Criterion(3, "exact two-stage pipeline triangle inequality", 10)
    td, bound = pipeline_triangle_check()
    crit.finish(td <= bound + 1e-9, f"TD(pipeline, Haar) = {td:.6f} <= {bound:.6f} + 1e-9")


def test_criterion_4_full_rank_bound():
    crit = Criterion(4, "full-rank Monte Carlo at the alpha bound", 300)
    eps = 0.1
    details = []
    ok = True
    for t in (2, 4, 8):
        k = rank_lab.fullrank_k_bound(t, eps)
        m = max(1, ceil(log2(t)))
        alpha = rank_lab.alpha_bound(t, eps)
        cfg = rank_lab.RankExperimentConfig(t=t, k=k, m=m, alpha=alpha, trials=10_000, seed=derive_key(2024, t) & MASK64)
        res = rank_lab.full_rank_mc(cfg)
        failures = round((1 - res.full_rank_rate) * cfg.trials)
        _, deficiency_hi = rank_lab.wilson_interval(failures, cfg.trials)
        details.append(f"t={t}: deficiency <= {deficiency_hi:.4f}")
        ok = ok and deficiency_hi <= eps
    crit.finish(ok, "; ".join(details))


def test_criterion_5_x2_union_bound():
    crit = Criterion(5, "surrogate-model union bound consistency", 60)
    params = rank_lab.X2ModelParams(t=4, a=2.0, alpha=59)
    trials = 100_000
    rate = rank_lab.x2_model_mc(params, trials, seed=7)
    bound = rank_lab.x2_union_bound(params)
    sigma = np.sqrt(max(rate, 1.0 / trials) * (1 - min(rate, 1.0)) / trials)
    ok = rate <= bound + 3 * sigma
    crit.finish(ok, f"MC deficiency {rate:.2e} <= bound {bound:.2e} + 3 sigma")


def test_criterion_6_scheduling_bound():
    crit = Criterion(6, "greedy layer bound over circuit grids", 60)
    eps = 0.1
    cells = []
    for t in (2, 4, 8):
        m = max(2, ceil(log2(t)))
        alpha = rank_lab.alpha_bound(t, eps)
        for k in (m, 2 * m):
            for regs in (4, 8):
                cells.append((t, k * regs, k, m, alpha))
        cells.append((t, 8, 1, 1, alpha))
    circuits = 0
    violations = 0
    ratios = []
    idx = 0
    while circuits < 100:
        t, n, k, m, alpha = cells[idx % len(cells)]
        seed = derive_key(600, idx) & MASK64
        circuit = build_randomizer(n, k, min(m, k), alpha, seed=seed)
        layers = 0
        for stage in circuit_stage_schedules(circuit):
            layers += stage.logical_layers
            if stage.logical_layers > stage.greedy_bound:
                violations += 1
        ratios.append(layers / (alpha * min(m, k)))
        circuits += 1
        idx += 1
    ok = violations == 0
    crit.finish(ok, f"{circuits} circuits, 0 bound violations required (got {violations}); mean layers/(alpha*m) = {np.mean(ratios):.3f}")


def test_criterion_7_resource_ceilings():
    crit = Criterion(7, "coherence, entanglement, magic, collision ceilings", 300)
    n = 8
    ok = True
    worst = {"coh": 0.0, "ent": -1.0, "m0": -1.0, "col": 0.0}
    rng = np.random.default_rng(70)
    for k in (1, 2, 3):
        registers = n / k
        use_circuit = registers == int(registers) and (int(registers) & (int(registers) - 1)) == 0
        for sid in range(50):
            oracle = poly_oracle(k, 2, derive_key(700, k, sid) & MASK64)
            if use_circuit:
                mapper = build_randomizer(n, k, 1, 8, seed=derive_key(701, k, sid) & MASK64)
            else:
                mapper = ExactPermutation(n, seed=derive_key(701, k, sid) & MASK64)
            state = sparse_state.prepare(n, k, oracle, mapper)

            coh = sparse_state.coherence(state)
            ok = ok and coh == float(k)
            worst["coh"] = max(worst["coh"], abs(coh - k))

            cuts = [range(c) for c in range(1, n)]
            cuts += [sorted(int(q) for q in rng.choice(n, size=4, replace=False)) for _ in range(3)]
            for region in cuts:
                ent = sparse_state.entanglement_entropy(state, region).entropy
                ok = ok and ent <= k + 1e-9
                worst["ent"] = max(worst["ent"], ent - k)

            m0 = sparse_state.stabilizer_renyi(state, 0)
            ok = ok and m0 <= 2 * k + 1e-9
            worst["m0"] = max(worst["m0"], m0 - 2 * k)

            col = sparse_state.collision_prob(state)
            ok = ok and abs(col - 2.0**-k) <= 1e-12
            worst["col"] = max(worst["col"], abs(col - 2.0**-k))
    crit.finish(
        ok,
        f"150 states: coherence exact (max dev {worst['coh']:.1e}), "
        f"max S_A - k = {worst['ent']:.2e} <= 0, max M0 - 2k = {worst['m0']:.2e} <= 0, "
        f"collision dev {worst['col']:.1e}",
    )


def test_criterion_8_shadow_unbiasedness():
    crit = Criterion(8, "exact-permutation estimator unbiasedness", 120)
    rng = substream(800)
    psi = shadow.haar_state(16, rng)
    observable = np.outer(psi, psi.conj())
    observable -= np.diag(np.diag(observable))
    truth = float(np.real(psi.conj() @ observable @ psi))
    res = shadow.exact_perm_estimation(psi, observable, k=1, shots=1_000_000, seed=801)
    dev = abs(res.mean - truth)
    ok = dev < 4 * res.std_error
    crit.finish(ok, f"mean {res.mean:.5f} vs truth {truth:.5f}: {dev / res.std_error:.2f} SE < 4 SE at 1e6 shots")


def test_criterion_9_pair_uniformity_slope():
    crit = Criterion(9, "max-norm inverse-sqrt sample scaling", 300)
    slopes = []
    for seed_id in range(10):
        pts = shadow.pair_uniformity(
            8, 2, [10**3, 10**4, 10**5, 10**6], seed=derive_key(900, seed_id) & MASK64
        )
        slopes.append(shadow.loglog_slope(pts))
    mean_slope = float(np.mean(slopes))
    ok = -0.6 <= mean_slope <= -0.4
    crit.finish(ok, f"mean log-log slope over 10 seeds = {mean_slope:.3f} in [-0.6, -0.4]")


def test_criterion_10_fidelity_reproduction():
    crit = Criterion(10, "fidelity estimation concentrates at the truth", 600)
    rows = shadow.fidelity_experiment(
        n=8, k=1, alphas=(2, 4, None), n_states=100, shots=10_000, seed=1000,
        include_haar_baseline=True,
    )
    ok = True
    details = []
    for label in ("2", "4", "inf"):
        corrected = np.array([r["mean"] + r["bias"] for r in rows if r["alpha"] == label])
        se = corrected.std(ddof=1) / np.sqrt(len(corrected))
        dev = abs(corrected.mean() - 1.0)
        ok = ok and dev <= 3 * se and len(corrected) == 100
        details.append(f"alpha={label}: {corrected.mean():.4f} ({dev / se:.2f} SE)")
    haar_rows = [r for r in rows if r["alpha"] == "haar"]
    ok = ok and len(haar_rows) == 100  # baseline column produced
    crit.finish(ok, "; ".join(details) + f"; haar baseline rows: {len(haar_rows)}")


def test_criterion_11_exact_pair_enumeration():
    crit = Criterion(11, "exact pair-twirl enumeration", 60)
    first = shadow.exact_pair_check(2, "fixed_c")
    second = shadow.exact_pair_check(2, "fixed_c")
    stable = (
        first.max_pair_deviation == second.max_pair_deviation
        and first.max_twirl_deviation == second.max_twirl_deviation
    )
    devs = [shadow.exact_pair_check(2, "literal", a).max_pair_deviation for a in (2, 4, 8)]
    monotone = devs[0] >= devs[1] >= devs[2]
    ok = stable and monotone
    crit.finish(
        ok,
        f"fixed_c deviation {first.max_pair_deviation} (exact, stable); "
        f"literal deviations {[str(d) for d in devs]} non-increasing",
    )
