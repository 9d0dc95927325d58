"""Monte Carlo logical-error-rate estimation and parameter sweeps.

Per-shot noise comes from a counter-based stream keyed by (seed, shot
index), so any shot can be regenerated in isolation and results are
bit-identical for every worker count.  A decode counts as a failure when it
does not converge or when the correction's action differs from the true
error's action; confidence intervals are exact (Clopper-Pearson) because
rates near zero are the regime of interest.  Iteration statistics count
message-passing iterations only, aggregated over all shots including
failures.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.stats import beta

from . import _kernels
from .problem import DecodingProblem
from .relay import RelayDecoder, RelaySchedule

_NOISE_STREAM = 0x6E6F697365  # domain tag separating noise from gamma draws

CSV_SCHEMA = "relaybp-bench-v1"
CSV_FIELDS = [
    "problem",
    "S",
    "R",
    "gamma_center",
    "gamma_width",
    "p_scale",
    "shots",
    "failures",
    "ler",
    "ci_low",
    "ci_high",
    "mean_iterations",
    "iter_stderr",
    "mean_legs",
    "seed",
]


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    """Counter-based generator for one shot; independent of all other shots."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(_NOISE_STREAM)], dtype=np.uint64)
    counter = np.array([0, 0, 0, np.uint64(shot)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def sample_error(problem: DecodingProblem, rng: np.random.Generator) -> np.ndarray:
    """Draw e_j = 1 with probability p_j independently per error mechanism."""
    return (rng.random(problem.n) < problem.p).astype(np.uint8)


def sample_error_batch(problem: DecodingProblem, shots: int, seed: int, start: int = 0) -> np.ndarray:
    errors = np.empty((shots, problem.n), dtype=np.uint8)
    for b in range(shots):
        errors[b] = sample_error(problem, shot_rng(seed, start + b))
    return errors


def clopper_pearson(failures: int, shots: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval for the failure rate."""
    alpha = 1.0 - confidence
    lo = 0.0 if failures == 0 else float(beta.ppf(alpha / 2, failures, shots - failures + 1))
    hi = 1.0 if failures == shots else float(beta.ppf(1 - alpha / 2, failures + 1, shots - failures))
    return lo, hi


@dataclass(frozen=True)
class BenchStats:
    shots: int
    failures: int
    logical_error_rate: float
    ci_low: float
    ci_high: float
    mean_iterations: float
    iter_stderr: float
    mean_legs: float

    @property
    def ci_halfwidth(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    # exact integer accumulation keeps the result independent of chunking
    n = values.size
    s1 = int(values.sum())
    s2 = int((values.astype(np.int64) ** 2).sum())
    mean = s1 / n
    if n < 2:
        return mean, 0.0
    var = (s2 - s1 * s1 / n) / (n - 1)
    return mean, math.sqrt(max(var, 0.0) / n)


def _aggregate(
    shots: int, fail: np.ndarray, iters: np.ndarray, legs: np.ndarray, double_rate: bool
) -> BenchStats:
    failures = int(fail.sum())
    ler = failures / shots
    lo, hi = clopper_pearson(failures, shots)
    if double_rate:
        ler, lo, hi = min(2 * ler, 1.0), min(2 * lo, 1.0), min(2 * hi, 1.0)
    mean_it, se_it = _mean_stderr(iters)
    mean_legs, _ = _mean_stderr(legs)
    return BenchStats(
        shots=shots,
        failures=failures,
        logical_error_rate=ler,
        ci_low=lo,
        ci_high=hi,
        mean_iterations=mean_it,
        iter_stderr=se_it,
        mean_legs=mean_legs,
    )


DecoderHook = Callable[[np.ndarray], tuple[bool, np.ndarray, int, int]]


def _decode_all(
    problem: DecodingProblem,
    schedule: RelaySchedule,
    errors: np.ndarray,
    workers: int,
    decoder: DecoderHook | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Decode every sampled error; returns (fail, iters, legs, corrections)."""
    shots = errors.shape[0]
    syndromes = np.empty((shots, problem.m), dtype=np.uint8)
    _kernels.syndromes_from_errors(problem.H.col_indptr, problem.H.col_indices, errors, syndromes)
    if decoder is None:
        dec = RelayDecoder(problem, schedule)
        found, iters, legs, _w, e_hat = dec.decode_batch(syndromes, workers=workers)
        success = found > 0
    else:
        success = np.empty(shots, dtype=bool)
        iters = np.empty(shots, dtype=np.int64)
        legs = np.empty(shots, dtype=np.int64)
        e_hat = np.empty_like(errors)
        for b in range(shots):
            ok, corr, it, lg = decoder(syndromes[b])
            success[b], e_hat[b], iters[b], legs[b] = ok, corr, it, lg
    mismatch = np.empty(shots, dtype=np.uint8)
    _kernels.action_mismatch(problem.A.col_indptr, problem.A.col_indices, problem.k, errors, e_hat, mismatch)
    fail = (~success) | (mismatch == 1)
    return fail, iters, legs, e_hat


def run_monte_carlo(
    problem: DecodingProblem,
    schedule: RelaySchedule,
    shots: int,
    seed: int,
    workers: int = 1,
    p_scale: float = 1.0,
    double_rate: bool = False,
    decoder: DecoderHook | None = None,
) -> BenchStats:
    """Sample errors, decode, and count logical failures.

    ``p_scale`` rescales every prior (and the decoder's log-ratios with it)
    so one problem file can serve a physical-error-rate sweep.  ``decoder``
    replaces the relay with an arbitrary syndrome -> correction hook; meant
    for tests.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    prob = problem if p_scale == 1.0 else problem.rescale_priors(p_scale)
    errors = sample_error_batch(prob, shots, seed)
    fail, iters, legs, _ = _decode_all(prob, schedule, errors, workers, decoder)
    return _aggregate(shots, fail, iters, legs, double_rate)


@dataclass(frozen=True)
class SweepGrid:
    """Rectangular (gamma_center, gamma_width) sweep; grid[i][j] pairs centers[i] with widths[j]."""

    centers: tuple[float, ...]
    widths: tuple[float, ...]
    stats: tuple[tuple[BenchStats, ...], ...]
    cell_seeds: tuple[tuple[int, ...], ...]
    includes_negative_gamma: tuple[tuple[bool, ...], ...]


def cell_seed(seed: int, i: int, j: int) -> int:
    """Stable independent seed for sweep cell (i, j)."""
    return int(np.random.SeedSequence(entropy=(seed, i, j)).generate_state(1, dtype=np.uint64)[0])


def sweep_memory_strengths(
    problem: DecodingProblem,
    base_schedule: RelaySchedule,
    centers: Sequence[float],
    widths: Sequence[float],
    shots_per_cell: int,
    seed: int,
    workers: int = 1,
    p_scale: float = 1.0,
    progress: Callable[[int, int], None] | None = None,
) -> SweepGrid:
    """Per-cell Monte Carlo over a memory-strength interval grid.

    Cells whose interval dips below zero are flagged; accuracy hotspots
    often sit exactly in that region.
    """
    if not centers or not widths:
        raise ValueError("sweep grid must be non-empty")
    rows = []
    seeds = []
    flags = []
    total = len(centers) * len(widths)
    done = 0
    for i, c in enumerate(centers):
        row = []
        seed_row = []
        flag_row = []
        for j, w in enumerate(widths):
            cs = cell_seed(seed, i, j)
            sched = replace(base_schedule, gamma_center=float(c), gamma_width=float(w), rng_seed=cs)
            row.append(
                run_monte_carlo(problem, sched, shots_per_cell, seed=cs, workers=workers, p_scale=p_scale)
            )
            seed_row.append(cs)
            flag_row.append(c - w / 2.0 < 0.0)
            done += 1
            if progress is not None:
                progress(done, total)
        rows.append(tuple(row))
        seeds.append(tuple(seed_row))
        flags.append(tuple(flag_row))
    return SweepGrid(
        centers=tuple(float(c) for c in centers),
        widths=tuple(float(w) for w in widths),
        stats=tuple(rows),
        cell_seeds=tuple(seeds),
        includes_negative_gamma=tuple(flags),
    )


@dataclass(frozen=True)
class CompareResult:
    """Relay vs independent ensembling on identical shot streams."""

    relay: BenchStats
    independent: BenchStats
    iter_delta_mean: float
    iter_delta_stderr: float
    shots: int


def compare_ensembling(
    problem: DecodingProblem,
    schedule: RelaySchedule,
    shots: int,
    seed: int,
    workers: int = 1,
    p_scale: float = 1.0,
) -> CompareResult:
    """Paired comparison: same errors through relay and independent modes.

    The pairing makes the iteration-count difference attributable to the
    marginal hand-off alone; ``iter_delta_mean`` is mean(relay - independent)
    with its standard error.
    """
    prob = problem if p_scale == 1.0 else problem.rescale_priors(p_scale)
    errors = sample_error_batch(prob, shots, seed)
    results = {}
    iters_by_mode = {}
    for mode in ("relay", "independent"):
        sched = replace(schedule, ensembling_mode=mode)
        fail, iters, legs, _ = _decode_all(prob, sched, errors, workers, None)
        results[mode] = _aggregate(shots, fail, iters, legs, double_rate=False)
        iters_by_mode[mode] = iters
    delta = iters_by_mode["relay"] - iters_by_mode["independent"]
    d_mean, d_se = _mean_stderr(delta)
    return CompareResult(
        relay=results["relay"],
        independent=results["independent"],
        iter_delta_mean=d_mean,
        iter_delta_stderr=d_se,
        shots=shots,
    )


# ---------------------------------------------------------------------------
# result records


def stats_record(
    problem_name: str,
    schedule: RelaySchedule,
    stats: BenchStats,
    seed: int,
    p_scale: float = 1.0,
    extras: dict | None = None,
) -> dict:
    rec = {
        "problem": problem_name,
        "S": schedule.solutions_sought,
        "R": schedule.max_legs,
        "gamma_center": schedule.gamma_center,
        "gamma_width": schedule.gamma_width,
        "p_scale": p_scale,
        "shots": stats.shots,
        "failures": stats.failures,
        "ler": stats.logical_error_rate,
        "ci_low": stats.ci_low,
        "ci_high": stats.ci_high,
        "mean_iterations": stats.mean_iterations,
        "iter_stderr": stats.iter_stderr,
        "mean_legs": stats.mean_legs,
        "seed": seed,
    }
    if extras:
        rec.update(extras)
    return rec


def write_csv(path, records: list[dict]) -> None:
    """One row per configuration; schema version on a leading comment line."""
    extras = [k for rec in records for k in rec if k not in CSV_FIELDS]
    fields = CSV_FIELDS + sorted(set(extras))
    with open(path, "w", newline="") as f:
        f.write(f"# {CSV_SCHEMA}\n")
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        for rec in records:
            writer.writerow({k: rec.get(k, "") for k in fields})


def write_jsonl(path, records: list[dict]) -> None:
    """Machine-readable variant of the same records."""
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps({"schema": CSV_SCHEMA, **rec}) + "\n")


def read_csv(path) -> list[dict]:
    with open(path) as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return list(csv.DictReader(lines))
