"""Command surface tying the experiments together.

Every command resolves its configuration from built-in defaults, then an
optional JSON config file, then explicit flags (flags win).  The resolved
config and master seed are echoed into a comment header of every output
file, so a run is reproducible from its own artifact.  Exit status 0 means
every requested assertion passed; 1 means an assertion failed (named on
stdout); 2 means a parameter or schema error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from math import ceil, log2
from typing import Callable, Sequence

import numpy as np

from . import moments, rank_lab, shadow, sparse_state
from .phase_oracle import poly_oracle
from .randomizer import (
    ANCILLA_NONE,
    COIN_MODES,
    COIN_PER_TARGET,
    ExactPermutation,
    ParameterError,
    build_randomizer,
    circuit_stage_schedules,
    depth_report,
    serialize_circuit,
)
from .rng import MASK64, derive_key

OUTDIR_ENV = "SUBSETDESIGN_OUTDIR"

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_PARAMETER = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_PARAMETER):
        super().__init__(message)
        self.code = code


def _outdir() -> str:
    return os.environ.get(OUTDIR_ENV, ".")


def _resolve_out(args: argparse.Namespace, default_name: str) -> str:
    if args.out:
        return args.out
    return os.path.join(_outdir(), default_name)


def _write_csv(path: str, config: dict, seed: int, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [
        "# config: " + json.dumps(config, sort_keys=True),
        f"# seed: {seed}",
        ",".join(header),
    ]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {path} ({len(rows)} rows)")


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in str(text).split(",") if tok != ""]


def _parse_alpha_list(text: str) -> list[int | None]:
    out: list[int | None] = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if tok in ("inf", "INF", "Inf"):
            out.append(None)
        elif tok:
            out.append(int(tok))
    return out


# ---------------------------------------------------------------------------
# Commands.
# ---------------------------------------------------------------------------


def cmd_params(args: argparse.Namespace) -> int:
    t, eps, base = args.t, args.eps, args.log_base
    if t < 2 or eps <= 0:
        raise CliError("params: need t >= 2 and eps > 0")
    k_design = ceil(log2(2 * t * t / eps))
    k_fullrank = rank_lab.fullrank_k_bound(t, eps, base)
    m = max(1, ceil(log2(t)))
    alpha = rank_lab.alpha_bound(t, eps, base)
    config = {"command": "params", "t": t, "eps": eps, "log_base": base}
    row = [t, eps, k_design, k_fullrank, m, alpha]
    print(json.dumps({"k_design": k_design, "k_fullrank": k_fullrank, "m": m, "alpha": alpha}))
    if args.out:
        _write_csv(args.out, config, args.seed, ["t", "eps", "k_design", "k_fullrank", "m", "alpha"], [row])
    return EXIT_OK


def cmd_randomize(args: argparse.Namespace) -> int:
    circuit = build_randomizer(args.n, args.k, args.m, args.alpha, args.coin_mode, args.seed)
    path = _resolve_out(args, f"circuit_n{args.n}_k{args.k}_m{args.m}_a{args.alpha}.txt")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(serialize_circuit(circuit))
    report = depth_report(circuit, args.ancilla_mode, args.c0, args.c1)
    print(f"wrote {path}")
    print(json.dumps(report.__dict__))
    return EXIT_OK


def cmd_design_check(args: argparse.Namespace) -> int:
    rows = []
    violations = []

    closed_form_cases = [(2, 2, 0.25), (3, 2, 0.125), (2, 3, 0.625)]
    for k, t, expected in closed_form_cases:
        td = moments.trace_distance(
            moments.enumerated_function_moment(k, t), moments.unique_moment(k, t)
        )
        ok = abs(td - expected) <= 1e-10
        rows.append(["enumerated_vs_unique", f"k={k};t={t}", td, expected, ok])
        if not ok:
            violations.append(f"enumerated_vs_unique(k={k},t={t})")

    t = 2
    scaled = {}
    for n in range(2, args.nmax + 1):
        td = moments.trace_distance(moments.unique_moment(n, t), moments.haar_moment(n, t))
        scaled[n] = td * (1 << n) / t**2
        rows.append(["unique_vs_haar_scaled", f"n={n};t={t}", scaled[n], float("nan"), True])
    ratio = max(scaled.values()) / min(scaled.values())
    ok = ratio < 2.0
    rows.append(["unique_vs_haar_ratio", f"n=2..{args.nmax}", ratio, 2.0, ok])
    if not ok:
        violations.append("unique_vs_haar_ratio")

    td_pipeline, bound = pipeline_triangle_check()
    ok = td_pipeline <= bound + 1e-9
    rows.append(["pipeline_triangle", "k=n=2;t=2", td_pipeline, bound, ok])
    if not ok:
        violations.append("pipeline_triangle")

    config = {"command": "design-check", "nmax": args.nmax}
    path = _resolve_out(args, "design_check.csv")
    _write_csv(path, config, args.seed, ["check", "params", "value", "reference", "pass"], rows)
    for v in violations:
        print(f"VIOLATION: {v}")
    return EXIT_ASSERTION if violations else EXIT_OK


def pipeline_triangle_check() -> tuple[float, float]:
    """Exact two-stage pipeline at k=n=2, t=2: average over all 16 phase
    functions and all 24 basis permutations, against the Haar moment."""
    from itertools import permutations as iterperm

    states = []
    for table in range(16):
        for perm in iterperm(range(4)):
            pairs = [(perm[b], -1 if (table >> b) & 1 else 1) for b in range(4)]
            states.append(sparse_state.SubsetPhaseState.from_pairs(2, pairs))
    rho = moments.empirical_moment(states, 2)
    haar = moments.haar_moment(2, 2)
    unique = moments.unique_moment(2, 2)
    td1 = moments.trace_distance(moments.enumerated_function_moment(2, 2), unique)
    td2 = moments.trace_distance(unique, haar)
    return moments.trace_distance(rho, haar), td1 + td2


def _rank_shard(payload: tuple) -> rank_lab.RankExperimentResult:
    t, k, m, alpha, trials, seed = payload
    return rank_lab.full_rank_mc(rank_lab.RankExperimentConfig(t, k, m, alpha, trials, seed))


def cmd_rank_mc(args: argparse.Namespace) -> int:
    rows = []
    config = {
        "command": "rank-mc",
        "t": args.t,
        "eps": args.eps,
        "trials": args.trials,
        "log_base": args.log_base,
        "workers": args.workers,
    }
    for t in _parse_int_list(args.t):
        k = args.k or rank_lab.fullrank_k_bound(t, args.eps, args.log_base)
        m = args.m or max(1, ceil(log2(t)))
        alpha = args.alpha or rank_lab.alpha_bound(t, args.eps, args.log_base)
        shard_size = min(args.trials, 2000)
        n_shards = (args.trials + shard_size - 1) // shard_size
        payloads = []
        remaining = args.trials
        for si in range(n_shards):
            trials = min(shard_size, remaining)
            remaining -= trials
            payloads.append((t, k, m, alpha, trials, derive_key(args.seed, 8, t, si) & MASK64))
        results = _map_maybe_parallel(_rank_shard, payloads, args.workers)
        merged = _merge_rank_results(results)
        rows.append(
            [t, k, m, alpha, args.trials, merged.full_rank_rate, merged.ci_lo, merged.ci_hi,
             merged.mean_min_distance]
        )
    path = _resolve_out(args, "rank_mc.csv")
    _write_csv(
        path, config, args.seed,
        ["t", "k", "m", "alpha", "trials", "full_rank_rate", "ci_lo", "ci_hi", "mean_min_distance"],
        rows,
    )
    return EXIT_OK


def _merge_rank_results(results: Sequence[rank_lab.RankExperimentResult]) -> rank_lab.RankExperimentResult:
    trials = sum(r.trials for r in results)
    successes = round(sum(r.full_rank_rate * r.trials for r in results))
    lo, hi = rank_lab.wilson_interval(successes, trials)
    hist: dict[int, int] = {}
    for r in results:
        for d, c in r.min_distance_hist.items():
            hist[d] = hist.get(d, 0) + c
    pair_count = sum(r.pair_count for r in results)
    return rank_lab.RankExperimentResult(
        full_rank_rate=successes / trials,
        ci_lo=lo,
        ci_hi=hi,
        trials=trials,
        mean_min_distance=sum(r.mean_min_distance * r.trials for r in results) / trials,
        min_distance_hist=hist,
        mean_column_weight=sum(r.mean_column_weight * r.trials for r in results) / trials,
        atypical_pair_rate=(
            sum(r.atypical_pair_rate * r.pair_count for r in results) / pair_count
            if pair_count else 0.0
        ),
        pair_count=pair_count,
    )


def _map_maybe_parallel(fn: Callable, payloads: Sequence, workers: int) -> list:
    if workers <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads))


def cmd_shadow_fidelity(args: argparse.Namespace) -> int:
    alphas = _parse_alpha_list(args.alphas)
    rows_dicts = shadow.fidelity_experiment(
        n=args.n,
        k=args.k,
        alphas=alphas,
        n_states=args.states,
        shots=args.shots,
        seed=args.seed,
        m=args.m or 1,
        include_haar_baseline=args.haar_baseline,
    )
    config = {
        "command": "shadow-fidelity",
        "n": args.n,
        "k": args.k,
        "alphas": args.alphas,
        "states": args.states,
        "shots": args.shots,
        "haar_baseline": args.haar_baseline,
    }
    rows = [[r["state_id"], r["alpha"], r["shots"], r["mean"], r["std"], r["bias"]] for r in rows_dicts]
    path = _resolve_out(args, "shadow_fidelity.csv")
    _write_csv(path, config, args.seed, ["state_id", "alpha", "shots", "mean", "std", "bias"], rows)
    return EXIT_OK


def _pairs_shard(payload: tuple) -> list:
    n, alpha, ns_grid, seed, seed_id = payload
    pts = shadow.pair_uniformity(n, alpha, ns_grid, seed)
    return [(seed_id, ns, mn) for ns, mn in pts]


def cmd_shadow_pairs(args: argparse.Namespace) -> int:
    ns_grid = _parse_int_list(args.ns)
    payloads = [
        (args.n, args.alpha, ns_grid, derive_key(args.seed, 9, si) & MASK64, si)
        for si in range(args.seeds)
    ]
    shards = _map_maybe_parallel(_pairs_shard, payloads, args.workers)
    rows = []
    slopes = []
    for shard in shards:
        pts = [(ns, mn) for _, ns, mn in shard]
        slopes.append(shadow.loglog_slope(pts))
        for _, ns, mn in shard:
            rows.append([args.n, args.alpha, ns, mn])
    mean_slope = float(np.mean(slopes))
    config = {
        "command": "shadow-pairs",
        "n": args.n,
        "alpha": args.alpha,
        "ns": args.ns,
        "seeds": args.seeds,
    }
    path = _resolve_out(args, "shadow_pairs.csv")
    _write_csv(path, config, args.seed, ["n", "alpha", "Ns", "max_norm"], rows)
    print(json.dumps({"mean_loglog_slope": mean_slope, "per_seed": [round(s, 4) for s in slopes]}))
    return EXIT_OK


def cmd_resources(args: argparse.Namespace) -> int:
    rows = []
    t_for_oracle = 2
    for k in _parse_int_list(args.k):
        registers = args.n / k
        circuit_ok = registers == int(registers) and int(registers) >= 2 and (int(registers) & (int(registers) - 1)) == 0
        for sid in range(args.states):
            oracle = poly_oracle(k, t_for_oracle, derive_key(args.seed, 10, k, sid) & MASK64)
            if circuit_ok:
                mapper = build_randomizer(
                    args.n, k, min(args.m or 1, k), args.alpha or 8, COIN_PER_TARGET,
                    derive_key(args.seed, 11, k, sid) & MASK64,
                )
                mapper_name = "circuit"
            else:
                mapper = ExactPermutation(args.n, derive_key(args.seed, 11, k, sid) & MASK64)
                mapper_name = "exact"
            state = sparse_state.prepare(args.n, k, oracle, mapper)
            half = range(args.n // 2)
            ent = sparse_state.entanglement_entropy(state, half)
            ent_max = max(
                sparse_state.entanglement_entropy(state, range(cut)).entropy
                for cut in range(1, args.n)
            )
            m0 = sparse_state.stabilizer_renyi(state, 0)
            m2 = sparse_state.stabilizer_renyi(state, 2)
            rows.append(
                [sid, k, mapper_name, sparse_state.coherence(state), ent.entropy, ent_max,
                 m0, m2, sparse_state.collision_prob(state)]
            )
    config = {"command": "resources", "n": args.n, "k": args.k, "states": args.states}
    path = _resolve_out(args, "resources.csv")
    _write_csv(
        path, config, args.seed,
        ["state_id", "k", "mapper", "coherence", "ent_half", "ent_max", "m0", "m2", "collision"],
        rows,
    )
    return EXIT_OK


def cmd_schedule(args: argparse.Namespace) -> int:
    rows = []
    violations = []
    circuit_id = 0
    ratio_sum = 0.0
    ratio_count = 0
    for t in _parse_int_list(args.t):
        m = max(2, ceil(log2(t)))
        alpha = rank_lab.alpha_bound(t, args.eps)
        grids = [(k, k * regs) for k in (m, 2 * m) for regs in (4, 8)]
        grids.append((1, 8))  # the k=1 shadow-circuit family (m forced to 1)
        per_cell = max(1, args.circuits // (len(_parse_int_list(args.t)) * len(grids)))
        for k, n in grids:
            mm = min(m, k)
            for rep in range(per_cell):
                seed = derive_key(args.seed, 12, t, k, n, rep) & MASK64
                circuit = build_randomizer(n, k, mm, alpha, args.coin_mode, seed)
                stages = circuit_stage_schedules(circuit)
                total_layers = 0
                for stage_idx, rep_ in enumerate(stages):
                    ok = rep_.logical_layers <= rep_.greedy_bound
                    total_layers += rep_.logical_layers
                    rows.append(
                        [circuit_id, t, n, k, mm, alpha, stage_idx, rep_.logical_layers,
                         rep_.hypergraph_max_degree, rep_.greedy_bound, ok]
                    )
                    if not ok:
                        violations.append(
                            f"greedy_bound(circuit={circuit_id},stage={stage_idx})"
                        )
                ratio_sum += total_layers / (alpha * mm)
                ratio_count += 1
                circuit_id += 1
    config = {"command": "schedule", "t": args.t, "circuits": args.circuits, "eps": args.eps}
    path = _resolve_out(args, "schedule.csv")
    _write_csv(
        path, config, args.seed,
        ["circuit_id", "t", "n", "k", "m", "alpha", "stage", "layers", "delta", "bound", "pass"],
        rows,
    )
    print(json.dumps({"mean_layers_per_alpha_m": ratio_sum / max(1, ratio_count), "circuits": circuit_id}))
    for v in violations:
        print(f"VIOLATION: {v}")
    return EXIT_ASSERTION if violations else EXIT_OK


# ---------------------------------------------------------------------------
# Argument plumbing.
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed (u64)")
    p.add_argument("--out", type=str, default=None, help="output path")
    p.add_argument("--workers", type=int, default=1, help="worker count")
    p.add_argument("--config", type=str, default=None, help="JSON config file; flags override")


def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(prog="subsetdesign")
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="derived parameter bounds for (t, eps)")
    _add_common(p)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--log-base", type=float, default=2.0, dest="log_base")
    p.set_defaults(fn=cmd_params)

    p = sub.add_parser("randomize", help="build and serialize a circuit; emit its depth report")
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--coin-mode", choices=COIN_MODES, default=COIN_PER_TARGET, dest="coin_mode")
    p.add_argument("--ancilla-mode", default=ANCILLA_NONE, dest="ancilla_mode")
    p.add_argument("--c0", type=int, default=1)
    p.add_argument("--c1", type=int, default=1)
    p.set_defaults(fn=cmd_randomize)

    p = sub.add_parser("design-check", help="moment identity and scaling checks")
    _add_common(p)
    p.add_argument("--nmax", type=int, default=5)
    p.set_defaults(fn=cmd_design_check)

    p = sub.add_parser("rank-mc", help="full-rank Monte Carlo over a t grid")
    _add_common(p)
    p.add_argument("--t", type=str, default="2,4,8")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--alpha", type=int, default=None)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--log-base", type=float, default=2.0, dest="log_base")
    p.set_defaults(fn=cmd_rank_mc)

    p = sub.add_parser("shadow-fidelity", help="fidelity estimation table")
    _add_common(p)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--alphas", type=str, default="1,2,4,8,inf")
    p.add_argument("--states", type=int, default=100)
    p.add_argument("--shots", type=int, default=10000)
    p.add_argument("--haar-baseline", action="store_true", default=True, dest="haar_baseline")
    p.add_argument("--no-haar-baseline", action="store_false", dest="haar_baseline")
    p.set_defaults(fn=cmd_shadow_fidelity)

    p = sub.add_parser("shadow-pairs", help="pair-uniformity max-norm series")
    _add_common(p)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--alpha", type=int, default=2)
    p.add_argument("--ns", type=str, default="1000,10000,100000,1000000")
    p.add_argument("--seeds", type=int, default=10)
    p.set_defaults(fn=cmd_shadow_pairs)

    p = sub.add_parser("resources", help="entanglement/coherence/magic table of prepared states")
    _add_common(p)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k", type=str, default="1,2,3")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--alpha", type=int, default=None)
    p.add_argument("--states", type=int, default=50)
    p.set_defaults(fn=cmd_resources)

    p = sub.add_parser("schedule", help="layer scheduling report over circuit grids")
    _add_common(p)
    p.add_argument("--t", type=str, default="2,4,8")
    p.add_argument("--circuits", type=int, default=100)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--coin-mode", choices=COIN_MODES, default=COIN_PER_TARGET, dest="coin_mode")
    p.set_defaults(fn=cmd_schedule)

    return root


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            overrides = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"config: cannot read {args.config}: {exc}")
    if not isinstance(overrides, dict):
        raise CliError("config: top level must be an object")
    explicit = {tok.split("=")[0].lstrip("-").replace("-", "_") for tok in argv if tok.startswith("--")}
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise CliError(f"config: unknown field {key!r}")
        if attr not in explicit:
            setattr(args, attr, value)
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config_file(args, parser, argv)
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParameterError, rank_lab.RankLabError, shadow.ShadowError,
            sparse_state.StateError, moments.MomentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    sys.exit(main())
