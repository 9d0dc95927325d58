"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The heavy criteria (5
and 8) share a 10^5-shot Monte Carlo on the distance-5 problem and together
take a few minutes of single-core time; everything else runs in seconds.
"""

from __future__ import annotations

import dataclasses
import itertools
import time

import numpy as np
import pytest

from relaybp.bench import (
    compare_ensembling,
    run_monte_carlo,
    sample_error_batch,
    sweep_memory_strengths,
    write_csv,
    read_csv,
    stats_record,
)
from relaybp.bp import run_leg
from relaybp.builders import build_bb_preset, build_repetition, build_surface_phenomenological
from relaybp.gf2 import SparseBinaryMatrix, identical_column_groups
from relaybp.oracle import min_weight_table
from relaybp.problem import DecodingProblem, compress_columns, drop_inert_columns, merged_prior, xz_split
from relaybp.relay import RelayDecoder, RelaySchedule, decode

from conftest import random_problem, random_tree_problem, textbook_min_sum

BIG_CLAMP = float(2**20)


def _report(criterion: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def d5_problem():
    joint = build_surface_phenomenological(5, rounds=5, p_data=0.03, p_meas=0.03)
    return compress_columns(drop_inert_columns(xz_split(joint)[0]))


@pytest.fixture(scope="module")
def d3_problem():
    joint = build_surface_phenomenological(3, rounds=3, p_data=0.03, p_meas=0.03)
    return compress_columns(drop_inert_columns(xz_split(joint)[0]))


_C5_CACHE: dict[float, dict] = {}


def _criterion5_runs(problem, clamp: float) -> dict:
    """Relay-BP-1 (R=301, surface interval preset) vs plain BP (10k cap)."""
    if clamp not in _C5_CACHE:
        shots = 100_000
        relay_sched = RelaySchedule(
            solutions_sought=1,
            max_legs=301,
            t_first=80,
            t_rest=60,
            first_leg_gamma=0.35,
            gamma_center=0.30,
            gamma_width=1.10,
            rng_seed=7,
            clamp=clamp,
        )
        bp_sched = RelaySchedule(
            solutions_sought=1,
            max_legs=1,
            t_first=10_000,
            first_leg_gamma=0.0,
            gamma_center=0.0,
            gamma_width=0.0,
            rng_seed=7,
            clamp=clamp,
        )
        t0 = time.time()
        relay = run_monte_carlo(problem, relay_sched, shots=shots, seed=2024)
        bp = run_monte_carlo(problem, bp_sched, shots=shots, seed=2024)
        _C5_CACHE[clamp] = {"relay": relay, "bp": bp, "seconds": time.time() - t0, "shots": shots}
    return _C5_CACHE[clamp]


def _tree_exactness_failures(n_problems: int, clamp: float, seed: int) -> tuple[int, int]:
    """(mismatches, syndromes checked) for BP vs brute force on random trees."""
    rng = np.random.default_rng(seed)
    fails = 0
    total = 0
    for _ in range(n_problems):
        problem, diam = random_tree_problem(rng, int(rng.integers(8, 16)))
        weights, corrections, degenerate = min_weight_table(problem)
        for sy in range(1 << problem.m):
            sig = np.array([(sy >> i) & 1 for i in range(problem.m)], dtype=np.uint8)
            out = run_leg(
                problem, sig, 0.0, max_iterations=diam, clamp=clamp, stop_on_convergence=False
            )
            total += 1
            if np.array_equal(out.correction.bits, corrections[sy]):
                continue
            if degenerate[sy]:
                w_bp = float(out.correction.bits @ problem.priors)
                same_class = (
                    abs(w_bp - weights[sy]) <= 1e-9 * max(1.0, abs(weights[sy]))
                    and problem.syndrome(out.correction).bits.tolist() == sig.tolist()
                )
                if same_class:
                    continue
            fails += 1
    return fails, total


def test_criterion_1_tree_exactness():
    """BP (gamma=0) after diameter iterations is exact on trees."""
    t0 = time.time()
    fails, total = _tree_exactness_failures(n_problems=100, clamp=1024.0, seed=101)
    _report(
        1,
        fails == 0,
        f"100 tree problems, {total} syndromes exhaustively checked, "
        f"{fails} mismatches ({time.time() - t0:.1f}s)",
    )


def test_criterion_2_reduction_identity():
    """R=1, gamma=0 messages bit-identical to an independent textbook loop."""
    rng = np.random.default_rng(202)
    iters = 20
    mismatches = 0
    problems = 0
    decode_mismatches = 0
    for _ in range(100):
        m = int(rng.integers(2, 7))
        n = int(rng.integers(3, 12))
        problem = random_problem(rng, m, n)
        sig = problem.syndrome((rng.random(n) < 0.5).astype(np.uint8)).bits
        out = run_leg(problem, sig, 0.0, max_iterations=iters, record_trace=True, stop_on_convergence=False)
        history = textbook_min_sum(problem.H.to_dense(), problem.priors, sig, iters)
        from relaybp.bp import EdgeGraph

        graph = EdgeGraph.from_problem(problem)
        for t, (mu_t, nu_t, marg_t, hard_t) in enumerate(history):
            for e in range(graph.n_edges):
                i, j = int(graph.edge_row[e]), int(graph.edge_col[e])
                if out.trace["mu"][t, e] != mu_t[(i, j)] or out.trace["nu"][t, e] != nu_t[(j, i)]:
                    mismatches += 1
            if not np.array_equal(out.trace["marginal"][t], np.array(marg_t)):
                mismatches += 1
        # full relay with R=1 must agree with the textbook loop's stopping
        res = decode(problem, sig, RelaySchedule(max_legs=1, t_first=iters, first_leg_gamma=0.0))
        h_dense = problem.H.to_dense()
        first_conv = next(
            (t + 1 for t, (_, _, _, hard_t) in enumerate(history)
             if np.array_equal(h_dense @ np.array(hard_t) % 2, sig)),
            None,
        )
        if first_conv is None:
            if res.success:
                decode_mismatches += 1
        else:
            hard_then = np.array(history[first_conv - 1][3], dtype=np.uint8)
            if not (res.success and res.total_iterations == first_conv
                    and np.array_equal(res.correction.bits, hard_then)):
                decode_mismatches += 1
        problems += 1
    _report(
        2,
        mismatches == 0 and decode_mismatches == 0,
        f"{problems} problems x {iters} iterations, {mismatches} message mismatches, "
        f"{decode_mismatches} decode mismatches (exact equality)",
    )


def test_criterion_3_convergence_soundness(d3_problem):
    """Every success=true result satisfies H e = sigma; 1e5 decodes."""
    t0 = time.time()
    cases = [
        (build_repetition(5, 0.06, 0.03, 3), RelaySchedule(max_legs=4, t_first=12, t_rest=12, rng_seed=1), 40_000),
        (d3_problem, RelaySchedule(max_legs=6, t_first=12, t_rest=12, rng_seed=2).with_preset("surface"), 40_000),
        (build_bb_preset("toy_72", 0.01, 0.01, 2), RelaySchedule(max_legs=4, t_first=15, t_rest=15, rng_seed=3).with_preset("bb"), 20_000),
    ]
    violations = 0
    total = 0
    successes = 0
    for problem, sched, shots in cases:
        errors = sample_error_batch(problem, shots, seed=555)
        dec = RelayDecoder(problem, sched)
        h_dense = problem.H.to_dense().astype(np.int64)
        syndromes = (errors.astype(np.int64) @ h_dense.T) & 1
        found, _, _, _, e_hat = dec.decode_batch(syndromes.astype(np.uint8))
        ok = found > 0
        recomputed = (e_hat[ok].astype(np.int64) @ h_dense.T) & 1
        violations += int((recomputed != syndromes[ok]).any(axis=1).sum())
        successes += int(ok.sum())
        total += shots
    _report(
        3,
        total >= 100_000 and violations == 0,
        f"{total} decodes across 3 built-in problems, {successes} converged, "
        f"{violations} syndrome violations ({time.time() - t0:.1f}s)",
    )


def test_criterion_4_column_compression():
    """Compression preserves decoding semantics; merged priors exact."""
    rng = np.random.default_rng(404)
    worst_prior_err = 0.0
    problems = 0
    checks = 0
    for _ in range(50):
        m = int(rng.integers(3, 6))
        base_n = int(rng.integers(4, 8))
        base = random_problem(rng, m, base_n, k=2)
        while len({base.H.column(j).tobytes() for j in range(base.n)}) < base.n:
            base = random_problem(rng, m, base_n, k=2)
        # plant 1..3 duplicate groups
        h = base.H.to_dense()
        a = base.A.to_dense()
        for _ in range(int(rng.integers(1, 4))):
            src = int(rng.integers(0, base_n))
            h = np.column_stack([h, h[:, src]])
            a = np.column_stack([a, a[:, src]])
        n = h.shape[1]
        problem = DecodingProblem(
            H=SparseBinaryMatrix.from_dense(h),
            A=SparseBinaryMatrix.from_dense(a),
            p=np.concatenate([base.p, rng.uniform(0.05, 0.45, n - base_n)]),
        )
        comp = compress_columns(problem)
        groups = identical_column_groups(problem.H)
        # merged priors vs independent subset-parity enumeration
        for gi, g in enumerate(groups):
            odd = 0.0
            for pattern in itertools.product([0, 1], repeat=len(g)):
                if sum(pattern) % 2 == 1:
                    pr = 1.0
                    for bit, j in zip(pattern, g):
                        pr *= problem.p[j] if bit else 1.0 - problem.p[j]
                    odd += pr
            worst_prior_err = max(worst_prior_err, abs(comp.p[gi] - odd))
        # oracle equivalence: syndrome sets match and per-syndrome min
        # weights agree with the compressed problem's own enumeration
        w_full, _, _ = min_weight_table(problem) if problem.n <= 14 else (None, None, None)
        w_comp, corr_comp, _ = min_weight_table(comp)
        hd = problem.H.to_dense().astype(np.int64)
        ad = problem.A.to_dense().astype(np.int64)
        hc = comp.H.to_dense().astype(np.int64)
        ac = comp.A.to_dense().astype(np.int64)
        if w_full is not None:
            reachable_full = np.isfinite(w_full)
            reachable_comp = np.isfinite(w_comp)
            assert np.array_equal(reachable_full, reachable_comp)
        # group-representative mapping preserves syndrome and action
        for v in range(1 << problem.n):
            e = np.array([(v >> j) & 1 for j in range(problem.n)], dtype=np.int64)
            collapsed = np.array([e[g].sum() & 1 for g in groups], dtype=np.int64)
            assert np.array_equal(hd @ e & 1, hc @ collapsed & 1)
            assert np.array_equal(ad @ e & 1, ac @ collapsed & 1)
            checks += 1
        # expanding a compressed min-weight correction reproduces syndrome+action
        for sy in np.flatnonzero(np.isfinite(w_comp))[:16]:
            x = corr_comp[sy].astype(np.int64)
            expanded = np.zeros(problem.n, dtype=np.int64)
            for gi, g in enumerate(groups):
                expanded[g[0]] = x[gi]
            assert np.array_equal(hd @ expanded & 1, hc @ x & 1)
            assert np.array_equal(ad @ expanded & 1, ac @ x & 1)
        assert compress_columns(comp) is comp  # idempotent
        problems += 1
    _report(
        4,
        problems >= 50 and worst_prior_err <= 1e-12,
        f"{problems} planted-duplicate problems, {checks} exhaustive vectors, "
        f"max merged-prior error {worst_prior_err:.2e} (tol 1e-12)",
    )


def test_criterion_5_relay_beats_plain_bp(d5_problem):
    """Relay-BP-1 strictly below plain BP with non-overlapping 95% CIs."""
    runs = _criterion5_runs(d5_problem, 1024.0)
    relay, bp = runs["relay"], runs["bp"]
    ok = relay.logical_error_rate < bp.logical_error_rate and relay.ci_high < bp.ci_low
    _report(
        5,
        ok,
        f"d=5 X-side, p=0.03, {runs['shots']} shots: relay LER "
        f"{relay.logical_error_rate:.4f} [{relay.ci_low:.4f},{relay.ci_high:.4f}] vs "
        f"BP LER {bp.logical_error_rate:.4f} [{bp.ci_low:.4f},{bp.ci_high:.4f}] "
        f"({runs['seconds']:.0f}s)",
    )


def test_criterion_6_relay_vs_independent(d5_problem):
    """Relay ensembling needs fewer iterations than independent restarts.

    Leg caps are short (T=6) so typical shots chain several legs; that is
    the regime where the marginal hand-off matters, mirroring the published
    330.8-vs-578 iteration comparison which averaged 5-10 legs per shot.
    """
    sched = RelaySchedule(
        solutions_sought=1,
        max_legs=301,
        t_first=6,
        t_rest=6,
        first_leg_gamma=0.35,
        gamma_center=0.30,
        gamma_width=1.10,
        rng_seed=7,
    )
    t0 = time.time()
    res = compare_ensembling(d5_problem, sched, shots=20_000, seed=99)
    z = res.iter_delta_mean / res.iter_delta_stderr
    ok = res.iter_delta_mean + 1.96 * res.iter_delta_stderr < 0.0
    _report(
        6,
        ok,
        f"paired {res.shots} shots: relay {res.relay.mean_iterations:.2f} vs independent "
        f"{res.independent.mean_iterations:.2f} iterations, delta {res.iter_delta_mean:.2f} "
        f"+- {res.iter_delta_stderr:.2f} (z={z:.1f}) ({time.time() - t0:.0f}s)",
    )


def test_criterion_7_parallel_invariance(d3_problem):
    """run_monte_carlo is bit-identical for worker counts 1, 4, 16."""
    sched = RelaySchedule(max_legs=30, t_first=20, t_rest=15, rng_seed=5).with_preset("surface")
    stats = {w: run_monte_carlo(d3_problem, sched, shots=5000, seed=77, workers=w) for w in (1, 4, 16)}
    ok = stats[1] == stats[4] == stats[16]
    _report(
        7,
        ok,
        f"5000 shots, workers 1/4/16: LER {stats[1].logical_error_rate:.4f}, "
        f"mean iters {stats[1].mean_iterations:.3f}, bit-identical={ok}",
    )


def test_criterion_8_clamp_insensitivity(d5_problem):
    """Criteria 1 and 5 conclusions unchanged with clamp 2^20 vs 1024."""
    t0 = time.time()
    fails, total = _tree_exactness_failures(n_problems=100, clamp=BIG_CLAMP, seed=101)
    runs_small = _criterion5_runs(d5_problem, 1024.0)
    runs_big = _criterion5_runs(d5_problem, BIG_CLAMP)

    def overlap(a, b):
        return a.ci_low <= b.ci_high and b.ci_low <= a.ci_high

    relay_consistent = overlap(runs_small["relay"], runs_big["relay"])
    bp_consistent = overlap(runs_small["bp"], runs_big["bp"])
    big_conclusion = (
        runs_big["relay"].logical_error_rate < runs_big["bp"].logical_error_rate
        and runs_big["relay"].ci_high < runs_big["bp"].ci_low
    )
    ok = fails == 0 and relay_consistent and bp_consistent and big_conclusion
    _report(
        8,
        ok,
        f"trees at 2^20: {fails}/{total} mismatches; relay LER {runs_big['relay'].logical_error_rate:.4f} "
        f"(vs {runs_small['relay'].logical_error_rate:.4f}), BP {runs_big['bp'].logical_error_rate:.4f} "
        f"(vs {runs_small['bp'].logical_error_rate:.4f}); CIs overlap per arm and the "
        f"relay<BP separation persists ({time.time() - t0:.0f}s)",
    )


def test_criterion_9_sweep_machinery(d3_problem, tmp_path):
    """5x5 sweep completes, CSV well-formed, accuracy depends on interval."""
    t0 = time.time()
    base = RelaySchedule(max_legs=30, t_first=20, t_rest=15, first_leg_gamma=0.35)
    centers = [0.0, 0.25, 0.5, 0.75, 1.0]
    widths = [0.0, 0.3, 0.6, 0.9, 1.2]
    grid = sweep_memory_strengths(d3_problem, base, centers, widths, shots_per_cell=1500, seed=31)
    records = []
    for i, c in enumerate(centers):
        for j, w in enumerate(widths):
            sched = dataclasses.replace(base, gamma_center=c, gamma_width=w)
            records.append(
                stats_record(
                    d3_problem.name,
                    sched,
                    grid.stats[i][j],
                    grid.cell_seeds[i][j],
                    extras={"includes_negative_gamma": int(grid.includes_negative_gamma[i][j])},
                )
            )
    csv_path = tmp_path / "sweep.csv"
    write_csv(csv_path, records)
    rows = read_csv(csv_path)
    well_formed = len(rows) == 25 and all(r["ler"] != "" and r["ci_low"] != "" for r in rows)
    cells = [(float(r["ler"]), (float(r["ci_high"]) - float(r["ci_low"])) / 2) for r in rows]
    separated = any(
        abs(a_ler - b_ler) > a_hw + b_hw
        for (a_ler, a_hw), (b_ler, b_hw) in itertools.combinations(cells, 2)
    )
    lers = [c[0] for c in cells]
    _report(
        9,
        well_formed and separated,
        f"25-cell grid, LER range [{min(lers):.4f}, {max(lers):.4f}], "
        f"well-formed CSV={well_formed}, separated pair exists={separated} "
        f"({time.time() - t0:.0f}s)",
    )
