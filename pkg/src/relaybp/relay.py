"""Relay-BP-S driver: chain DMem-BP legs and keep the lightest solution.

Leg 0 runs with marginals initialized to the priors and a uniform memory
strength; every later leg starts from the previous leg's final marginals
(information passing forward through the relay) and draws its per-node
memory strengths independently and uniformly from a configured interval.
The relay stops after finding S valid solutions or exhausting R legs and
returns the lowest-weight solution, where a solution's weight is the sum of
the log-prior ratios over its support.  Intervals reaching below zero are
deliberate: negative memory strengths help escape trapping sets.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from . import _kernels
from .bp import DEFAULT_CLAMP, EdgeGraph
from .gf2 import BitVector
from .problem import DecodingProblem

_GAMMA_STREAM = 0x67616D6D61  # domain tag so gamma draws never collide with noise draws


# Interval presets that work well per code family (uniform first-leg gamma,
# then per-node draws from [center - width/2, center + width/2]).
PRESETS: dict[str, dict[str, float]] = {
    "bb": {"first_leg_gamma": 0.125, "gamma_center": 0.21, "gamma_width": 0.90},
    "surface": {"first_leg_gamma": 0.35, "gamma_center": 0.30, "gamma_width": 1.10},
}


@dataclass(frozen=True)
class RelaySchedule:
    """Complete Relay-BP-S configuration.

    ``t_first``/``t_rest`` cap the iterations of leg 0 and of every later
    leg; ``iteration_caps`` overrides both with an explicit per-leg list.
    ``ensembling_mode="independent"`` restarts every leg from the priors
    instead of relaying marginals (used only for comparison experiments).
    """

    solutions_sought: int = 1
    max_legs: int = 301
    t_first: int = 80
    t_rest: int = 60
    first_leg_gamma: float = 0.125
    gamma_center: float = 0.21
    gamma_width: float = 0.90
    rng_seed: int = 0
    ensembling_mode: Literal["relay", "independent"] = "relay"
    clamp: float = DEFAULT_CLAMP
    iteration_caps: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.solutions_sought < 1:
            raise ValueError("solutions_sought must be >= 1")
        if self.max_legs < 1:
            raise ValueError("max_legs must be >= 1")
        if self.solutions_sought > self.max_legs:
            raise ValueError("solutions_sought cannot exceed max_legs")
        if self.gamma_width < 0:
            raise ValueError("gamma_width must be >= 0")
        if self.ensembling_mode not in ("relay", "independent"):
            raise ValueError("ensembling_mode must be 'relay' or 'independent'")
        caps = self.leg_caps()
        if len(caps) != self.max_legs or any(t < 0 for t in caps):
            raise ValueError("iteration caps must list max_legs entries, all >= 0")

    def leg_caps(self) -> tuple[int, ...]:
        if self.iteration_caps is not None:
            return tuple(int(t) for t in self.iteration_caps)
        return (self.t_first,) + (self.t_rest,) * (self.max_legs - 1)

    def with_preset(self, name: str) -> "RelaySchedule":
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
        return replace(self, **PRESETS[name])


@dataclass(frozen=True)
class Solution:
    """One valid correction found by a leg."""

    correction: BitVector
    weight: float
    found_on_leg: int


@dataclass(frozen=True)
class DecodeResult:
    success: bool
    correction: BitVector
    solutions_found: int
    total_iterations: int
    legs_used: int
    weight: float | None = None
    solutions: tuple[Solution, ...] = ()


def weight(correction: BitVector | np.ndarray, priors: np.ndarray) -> float:
    """Sum of log-prior ratios over the support of the correction."""
    bits = correction.bits if isinstance(correction, BitVector) else np.asarray(correction, dtype=np.uint8)
    lam = np.asarray(priors, dtype=np.float64)
    if bits.size != lam.size:
        raise ValueError(f"length mismatch: correction {bits.size}, priors {lam.size}")
    total = 0.0
    for j in np.flatnonzero(bits):
        total += float(lam[j])
    return total


def _gamma_rng(seed: int, leg: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(_GAMMA_STREAM)], dtype=np.uint64)
    counter = np.array([0, 0, 0, np.uint64(leg)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def sample_gammas(schedule: RelaySchedule, leg: int, n: int) -> np.ndarray:
    """Per-node memory strengths for one leg, re-derivable in isolation.

    Leg 0 is the uniform first-leg value; each later leg has its own
    counter-based stream keyed by (rng_seed, leg), so gamma vectors are
    deterministic and independent of how many legs actually execute.
    """
    if leg == 0:
        return np.full(n, float(schedule.first_leg_gamma))
    rng = _gamma_rng(schedule.rng_seed, leg)
    lo = schedule.gamma_center - schedule.gamma_width / 2.0
    hi = schedule.gamma_center + schedule.gamma_width / 2.0
    return rng.uniform(lo, hi, size=n)


def gamma_table(schedule: RelaySchedule, n: int) -> np.ndarray:
    """(max_legs, n) memory strengths, one row per leg."""
    table = np.empty((schedule.max_legs, n))
    for r in range(schedule.max_legs):
        table[r] = sample_gammas(schedule, r, n)
    return table


class RelayDecoder:
    """Reusable decoder: precomputed graph, priors, and gamma table.

    Instances hold only immutable state, so one decoder may serve many
    concurrent decode calls.
    """

    def __init__(self, problem: DecodingProblem, schedule: RelaySchedule):
        self.problem = problem
        self.schedule = schedule
        self.graph = EdgeGraph.from_problem(problem)
        self.lam0 = problem.priors
        self.gammas = gamma_table(schedule, problem.n)
        self.t_caps = np.asarray(schedule.leg_caps(), dtype=np.int64)

    def decode(self, syndrome: BitVector | np.ndarray) -> DecodeResult:
        sig = syndrome.bits if isinstance(syndrome, BitVector) else np.asarray(syndrome, dtype=np.uint8)
        if sig.size != self.problem.m:
            raise ValueError(f"syndrome length {sig.size} != {self.problem.m} checks")
        n = self.problem.n
        s_max = self.schedule.solutions_sought
        best_e = np.empty(n, dtype=np.uint8)
        marg_out = np.empty(n)
        sol_legs = np.empty(s_max, dtype=np.int64)
        sol_weights = np.empty(s_max)
        sol_e = np.empty((s_max, n), dtype=np.uint8)
        found, total_iters, legs_used, best_w = _kernels.relay_decode(
            self.graph.chk_ptr,
            self.graph.var_ptr,
            self.graph.var_edges,
            self.graph.edge_col,
            self.graph.edge_row,
            sig.astype(np.uint8),
            self.lam0,
            self.gammas,
            self.t_caps,
            s_max,
            float(self.schedule.clamp),
            self.schedule.ensembling_mode == "independent",
            best_e,
            marg_out,
            sol_legs,
            sol_weights,
            sol_e,
        )
        solutions = tuple(
            Solution(correction=BitVector(sol_e[i].copy()), weight=float(sol_weights[i]), found_on_leg=int(sol_legs[i]))
            for i in range(found)
        )
        return DecodeResult(
            success=found > 0,
            correction=BitVector(best_e),
            solutions_found=int(found),
            total_iterations=int(total_iters),
            legs_used=int(legs_used),
            weight=float(best_w) if found > 0 else None,
            solutions=solutions,
        )

    def decode_batch(
        self, syndromes: np.ndarray, workers: int = 1
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Decode each row of ``syndromes``; per-shot results by index.

        Returns (found, iterations, legs, weight, corrections).  Shots are
        fully independent, so the outcome is identical for any worker count.
        """
        syndromes = np.ascontiguousarray(syndromes, dtype=np.uint8)
        n_shots = syndromes.shape[0]
        if syndromes.shape[1] != self.problem.m:
            raise ValueError("syndrome width mismatch")
        out_found = np.empty(n_shots, dtype=np.int64)
        out_iters = np.empty(n_shots, dtype=np.int64)
        out_legs = np.empty(n_shots, dtype=np.int64)
        out_weight = np.empty(n_shots)
        out_e = np.empty((n_shots, self.problem.n), dtype=np.uint8)

        # Single-leg schedules (plain BP / Mem-BP) hit large iteration caps on
        # every unconverged shot; a lane-batched kernel recovers SIMD there.
        # Per-shot results are bit-identical to the scalar relay path.
        single_leg = self.schedule.max_legs == 1 and self.t_caps[0] > 0

        def run(start: int, stop: int) -> None:
            if single_leg:
                _kernels.bp_single_leg_batch(
                    self.graph.chk_ptr,
                    self.graph.var_ptr,
                    self.graph.var_edges,
                    self.graph.edge_col,
                    self.graph.edge_row,
                    syndromes,
                    self.lam0,
                    self.gammas[0],
                    int(self.t_caps[0]),
                    float(self.schedule.clamp),
                    start,
                    stop,
                    out_found,
                    out_iters,
                    out_legs,
                    out_weight,
                    out_e,
                )
                return
            _kernels.relay_decode_range(
                self.graph.chk_ptr,
                self.graph.var_ptr,
                self.graph.var_edges,
                self.graph.edge_col,
                self.graph.edge_row,
                syndromes,
                self.lam0,
                self.gammas,
                self.t_caps,
                self.schedule.solutions_sought,
                float(self.schedule.clamp),
                self.schedule.ensembling_mode == "independent",
                start,
                stop,
                out_found,
                out_iters,
                out_legs,
                out_weight,
                out_e,
            )

        if workers <= 1 or n_shots < 2:
            run(0, n_shots)
        else:
            from concurrent.futures import ThreadPoolExecutor

            chunk = max(1, -(-n_shots // (workers * 4)))
            spans = [(s, min(s + chunk, n_shots)) for s in range(0, n_shots, chunk)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(lambda span: run(*span), spans))
        return out_found, out_iters, out_legs, out_weight, out_e


def decode(problem: DecodingProblem, syndrome: BitVector | np.ndarray, schedule: RelaySchedule) -> DecodeResult:
    """One-shot decode; build a RelayDecoder directly to amortize setup."""
    return RelayDecoder(problem, schedule).decode(syndrome)
