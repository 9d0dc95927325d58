"""Exact reference decoding by exhaustive enumeration.

Test-side ground truth only; costs grow as 2^N and are capped accordingly.
Never used in the decoding hot path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf2 import BitVector, matvec
from .problem import DecodingProblem

MAX_BRUTE_FORCE_N = 24
_CHUNK = 1 << 16
_TIE_TOL = 1e-9


@dataclass(frozen=True)
class OracleResult:
    """Exhaustive-search answer for one syndrome.

    ``bitwise_marginals`` are the exact posteriors Pr(e_j = 1 | syndrome);
    thresholding them at 1/2 need not satisfy the syndrome (bitwise-MAP
    caveat), but ``min_weight_correction`` always does.  ``degenerate`` is
    set when several solutions share the minimum weight (up to a 1e-9
    relative tolerance); ties are broken toward the lexicographically
    smallest bit string.
    """

    min_weight_correction: BitVector
    min_weight: float
    bitwise_marginals: np.ndarray
    degenerate: bool


def _bit_block(start: int, stop: int, n: int) -> np.ndarray:
    k = np.arange(start, stop, dtype=np.int64)
    return ((k[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def brute_force_min_weight(problem: DecodingProblem, syndrome: BitVector | np.ndarray) -> OracleResult:
    """Enumerate all 2^N error vectors and keep the most probable match.

    Maximizing the independent-error probability is the same as minimizing
    the weight sum of log((1-p_j)/p_j) over the support.  Raises if N
    exceeds the cap or if no error vector reproduces the syndrome (possible
    only for syndromes that were not generated as H e).
    """
    n = problem.n
    if n > MAX_BRUTE_FORCE_N:
        raise ValueError(f"brute force capped at N <= {MAX_BRUTE_FORCE_N}, problem has N = {n}")
    sig = syndrome.bits if isinstance(syndrome, BitVector) else np.asarray(syndrome, dtype=np.uint8)
    if sig.size != problem.m:
        raise ValueError("syndrome length mismatch")
    h_dense = problem.H.to_dense()
    lam = problem.priors
    lex_weights = 1 << (n - 1 - np.arange(n, dtype=np.int64))

    # pass 1: minimum weight and its lexicographically smallest attainer
    best_w = np.inf
    best_key = -1
    best_vec: np.ndarray | None = None
    total = 1 << n
    for start in range(0, total, _CHUNK):
        bits = _bit_block(start, min(start + _CHUNK, total), n)
        match = ~((bits @ h_dense.T.astype(np.int64)) & 1 ^ sig).any(axis=1)
        if not match.any():
            continue
        bits = bits[match]
        w = bits @ lam
        keys = bits @ lex_weights
        order = np.lexsort((keys, w))
        cand = order[0]
        if w[cand] < best_w or (w[cand] == best_w and keys[cand] < best_key):
            best_w = float(w[cand])
            best_key = int(keys[cand])
            best_vec = bits[cand].copy()
    if best_vec is None:
        raise ValueError("no error vector reproduces this syndrome (H inconsistent with sigma)")

    # pass 2: exact posteriors and degeneracy, relative to the best weight
    tol = _TIE_TOL * max(1.0, abs(best_w))
    z = 0.0
    bit_mass = np.zeros(n)
    n_min = 0
    for start in range(0, total, _CHUNK):
        bits = _bit_block(start, min(start + _CHUNK, total), n)
        match = ~((bits @ h_dense.T.astype(np.int64)) & 1 ^ sig).any(axis=1)
        if not match.any():
            continue
        bits = bits[match]
        w = bits @ lam
        rel = np.exp(best_w - w)  # <= ~1 by construction
        z += rel.sum()
        bit_mass += rel @ bits
        n_min += int((w <= best_w + tol).sum())
    return OracleResult(
        min_weight_correction=BitVector(best_vec),
        min_weight=best_w,
        bitwise_marginals=bit_mass / z,
        degenerate=n_min > 1,
    )


def min_weight_table(problem: DecodingProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimum-weight solutions for every syndrome in one enumeration pass.

    Returns (weights, corrections, degenerate), each indexed by the syndrome
    packed as an integer (bit i of the index = detector i).  Unreachable
    syndromes carry weight +inf.  Capped at N <= 20 and M <= 20.
    """
    n, m = problem.n, problem.m
    if n > 20 or m > 20:
        raise ValueError("min_weight_table capped at N <= 20 and M <= 20")
    bits = _bit_block(0, 1 << n, n)
    syn_int = ((bits @ problem.H.to_dense().T.astype(np.int64)) & 1) @ (1 << np.arange(m, dtype=np.int64))
    w = bits @ problem.priors
    keys = bits @ (1 << (n - 1 - np.arange(n, dtype=np.int64)))
    order = np.lexsort((keys, w, syn_int))
    syn_sorted = syn_int[order]
    w_sorted = w[order]
    first = np.ones(order.size, dtype=bool)
    first[1:] = syn_sorted[1:] != syn_sorted[:-1]
    weights = np.full(1 << m, np.inf)
    corrections = np.zeros((1 << m, n), dtype=np.uint8)
    degenerate = np.zeros(1 << m, dtype=bool)
    idx_first = np.flatnonzero(first)
    weights[syn_sorted[idx_first]] = w_sorted[idx_first]
    corrections[syn_sorted[idx_first]] = bits[order[idx_first]]
    runner_up = idx_first + 1
    valid = runner_up < order.size
    valid[valid] &= syn_sorted[runner_up[valid]] == syn_sorted[idx_first[valid]]
    ties = np.zeros(idx_first.size, dtype=bool)
    ties[valid] = w_sorted[runner_up[valid]] <= w_sorted[idx_first[valid]] + _TIE_TOL * np.maximum(
        1.0, np.abs(w_sorted[idx_first[valid]])
    )
    degenerate[syn_sorted[idx_first]] = ties
    return weights, corrections, degenerate


def logical_failure(
    problem: DecodingProblem, true_error: BitVector | np.ndarray, correction: BitVector | np.ndarray
) -> bool:
    """True iff the correction misses: wrong syndrome or wrong logical action."""
    e = true_error if isinstance(true_error, BitVector) else BitVector(true_error)
    c = correction if isinstance(correction, BitVector) else BitVector(correction)
    if e.length != problem.n or c.length != problem.n:
        raise ValueError("length mismatch")
    if matvec(problem.H, c) != matvec(problem.H, e):
        return True
    residual = e ^ c
    return matvec(problem.A, residual).any()
