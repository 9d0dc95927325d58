"""Numba kernels for min-sum message passing and the relay driver.

Layout: edges are enumerated row-major over H, so the edges of check i are
the contiguous range chk_ptr[i]:chk_ptr[i+1]; var_edges lists edge ids
grouped per error node in ascending check order.  Messages mu (check to
error) and nu (error to check) live in flat arrays indexed by edge id.

All sums run in ascending neighbor order and exclusion sums are computed
directly (not via subtract-from-total), so trajectories are bit-reproducible
and independent of any batching or threading arrangement.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_EMPTY2D = np.empty((0, 0), dtype=np.float64)


@njit(cache=True, nogil=True)
def bp_leg(
    chk_ptr,
    var_ptr,
    var_edges,
    edge_col,
    edge_row,
    sigma,
    lam0,
    gamma,
    mu,
    nu,
    lam,
    marg,
    hard,
    parity,
    max_iters,
    clamp,
    check_convergence,
    trace_mu,
    trace_nu,
    trace_lam,
    trace_marg,
    record_trace,
):
    """One DMem-BP leg (flooding schedule); state arrays updated in place.

    Per iteration: bias update from the previous marginals, check-to-error
    min-sum messages from nu(t-1), error-to-check messages and marginals
    from the fresh mu(t), hard decision, then the parity test.  Returns
    (converged, iterations_used).
    """
    n_checks = chk_ptr.size - 1
    n_errors = var_ptr.size - 1
    for it in range(max_iters):
        # bias: Lambda(t) = (1 - gamma) * Lambda(0) + gamma * M(t-1)
        for j in range(n_errors):
            v = (1.0 - gamma[j]) * lam0[j] + gamma[j] * marg[j]
            if v > clamp:
                v = clamp
            elif v < -clamp:
                v = -clamp
            lam[j] = v
        # check to error: sign product and min over the other neighbors
        for i in range(n_checks):
            lo = chk_ptr[i]
            hi = chk_ptr[i + 1]
            deg = hi - lo
            if deg == 0:
                continue
            neg = 0
            min1 = np.inf
            min2 = np.inf
            c1 = 0
            for e in range(lo, hi):
                v = nu[e]
                if v < 0.0:
                    neg += 1
                    a = -v
                else:
                    a = v
                if a < min1:
                    min2 = min1
                    min1 = a
                    c1 = 1
                elif a == min1:
                    c1 += 1
                elif a < min2:
                    min2 = a
            base = -1.0 if sigma[i] else 1.0
            for e in range(lo, hi):
                v = nu[e]
                others_neg = neg - 1 if v < 0.0 else neg
                sgn = base if (others_neg & 1) == 0 else -base
                a = -v if v < 0.0 else v
                if deg == 1:
                    mag = clamp  # empty min saturates; empty sign product is +1
                elif a == min1 and c1 == 1:
                    mag = min2
                else:
                    mag = min1
                if mag > clamp:
                    mag = clamp
                mu[e] = sgn * mag
        # error to check plus marginals, ascending-order sums
        for j in range(n_errors):
            lo = var_ptr[j]
            hi = var_ptr[j + 1]
            s_all = lam[j]
            for k in range(lo, hi):
                s_all += mu[var_edges[k]]
            if s_all > clamp:
                s_all = clamp
            elif s_all < -clamp:
                s_all = -clamp
            marg[j] = s_all
            hard[j] = 1 if s_all < 0.0 else 0
            for k in range(lo, hi):
                s = lam[j]
                for k2 in range(lo, hi):
                    if k2 != k:
                        s += mu[var_edges[k2]]
                if s > clamp:
                    s = clamp
                elif s < -clamp:
                    s = -clamp
                nu[var_edges[k]] = s
        if record_trace:
            for e in range(mu.size):
                trace_mu[it, e] = mu[e]
                trace_nu[it, e] = nu[e]
            for j in range(n_errors):
                trace_lam[it, j] = lam[j]
                trace_marg[it, j] = marg[j]
        if check_convergence:
            for i in range(n_checks):
                parity[i] = sigma[i]
            for j in range(n_errors):
                if hard[j]:
                    for k in range(var_ptr[j], var_ptr[j + 1]):
                        parity[edge_row[var_edges[k]]] ^= 1
            ok = True
            for i in range(n_checks):
                if parity[i]:
                    ok = False
                    break
            if ok:
                return 1, it + 1
    return 0, max_iters


@njit(cache=True, nogil=True)
def relay_decode(
    chk_ptr,
    var_ptr,
    var_edges,
    edge_col,
    edge_row,
    sigma,
    lam0,
    gammas,
    t_caps,
    n_solutions,
    clamp,
    independent,
    best_e,
    marg_out,
    sol_legs,
    sol_weights,
    sol_e,
):
    """Chain DMem-BP legs; returns (found, total_iterations, legs_used, best_weight).

    Messages and biases reset to the priors at every leg; marginals carry
    over (or reset too, in independent-ensembling mode).  Each converged leg
    records a solution; the lowest weight wins, earliest leg on ties.
    """
    n_errors = var_ptr.size - 1
    n_edges = edge_col.size
    n_checks = chk_ptr.size - 1
    mu = np.zeros(n_edges, dtype=np.float64)
    nu = np.empty(n_edges, dtype=np.float64)
    lam = np.empty(n_errors, dtype=np.float64)
    marg = np.empty(n_errors, dtype=np.float64)
    hard = np.empty(n_errors, dtype=np.uint8)
    parity = np.empty(n_checks, dtype=np.uint8)
    no_trace = np.empty((0, 0), dtype=np.float64)

    for j in range(n_errors):
        marg[j] = lam0[j]
        hard[j] = 1 if marg[j] < 0.0 else 0
    best_w = np.inf
    found = 0
    total_iters = 0
    legs_used = 0
    for r in range(t_caps.size):
        if independent:
            for j in range(n_errors):
                marg[j] = lam0[j]
        for j in range(n_errors):
            lam[j] = lam0[j]
        for e in range(n_edges):
            nu[e] = lam0[edge_col[e]]
            mu[e] = 0.0
        conv, used = bp_leg(
            chk_ptr,
            var_ptr,
            var_edges,
            edge_col,
            edge_row,
            sigma,
            lam0,
            gammas[r],
            mu,
            nu,
            lam,
            marg,
            hard,
            parity,
            t_caps[r],
            clamp,
            True,
            no_trace,
            no_trace,
            no_trace,
            no_trace,
            False,
        )
        total_iters += used
        legs_used = r + 1
        if conv == 1:
            w = 0.0
            for j in range(n_errors):
                if hard[j]:
                    w += lam0[j]
            sol_legs[found] = r
            sol_weights[found] = w
            for j in range(n_errors):
                sol_e[found, j] = hard[j]
            found += 1
            if w < best_w:
                best_w = w
                for j in range(n_errors):
                    best_e[j] = hard[j]
            if found >= n_solutions:
                break
    if found == 0:
        for j in range(n_errors):
            best_e[j] = hard[j]
        best_w = np.nan
    for j in range(n_errors):
        marg_out[j] = marg[j]
    return found, total_iters, legs_used, best_w


@njit(cache=True, nogil=True)
def relay_decode_range(
    chk_ptr,
    var_ptr,
    var_edges,
    edge_col,
    edge_row,
    syndromes,
    lam0,
    gammas,
    t_caps,
    n_solutions,
    clamp,
    independent,
    start,
    stop,
    out_found,
    out_iters,
    out_legs,
    out_weight,
    out_e,
):
    """Decode syndromes[start:stop], writing per-shot results by index."""
    n_errors = var_ptr.size - 1
    marg_out = np.empty(n_errors, dtype=np.float64)
    sol_legs = np.empty(n_solutions, dtype=np.int64)
    sol_weights = np.empty(n_solutions, dtype=np.float64)
    sol_e = np.empty((n_solutions, n_errors), dtype=np.uint8)
    for b in range(start, stop):
        found, iters, legs, w = relay_decode(
            chk_ptr,
            var_ptr,
            var_edges,
            edge_col,
            edge_row,
            syndromes[b],
            lam0,
            gammas,
            t_caps,
            n_solutions,
            clamp,
            independent,
            out_e[b],
            marg_out,
            sol_legs,
            sol_weights,
            sol_e,
        )
        out_found[b] = found
        out_iters[b] = iters
        out_legs[b] = legs
        out_weight[b] = w


@njit(cache=True, nogil=True)
def _load_lane(
    lane, shot, syndromes, lam0, edge_col, mu, nu, lam, marg, hard, sig, t_lane, shot_of
):
    n_errors = lam0.size
    for j in range(n_errors):
        lam[j, lane] = lam0[j]
        marg[j, lane] = lam0[j]
        hard[j, lane] = 1 if lam0[j] < 0.0 else 0
    for e in range(edge_col.size):
        mu[e, lane] = 0.0
        nu[e, lane] = lam0[edge_col[e]]
    for i in range(sig.shape[0]):
        sig[i, lane] = syndromes[shot, i] if shot >= 0 else 0
    t_lane[lane] = 0
    shot_of[lane] = shot


# Lane count for the batched single-leg kernel: wide enough to amortize the
# per-edge loop overhead, small enough that all message state stays in L2.
LANES = 64


@njit(cache=True, nogil=True)
def bp_single_leg_batch(
    chk_ptr,
    var_ptr,
    var_edges,
    edge_col,
    edge_row,
    syndromes,
    lam0,
    gamma,
    t_cap,
    clamp,
    start,
    stop,
    out_found,
    out_iters,
    out_legs,
    out_weight,
    out_e,
):
    """Single-leg BP over many syndromes, vectorized across LANES shot lanes.

    Lane-parallel rewrite of bp_leg for the one-leg case (plain BP and
    Mem-BP benchmarking, where unconverged shots burn large iteration caps).
    Each lane holds one shot; finished lanes are refilled immediately.  The
    arithmetic per lane is identical, op for op, to the scalar kernel, so
    results are bit-equal to relay_decode with a single leg.
    """
    lanes = LANES
    n_checks = chk_ptr.size - 1
    n_errors = var_ptr.size - 1
    n_edges = edge_col.size
    mu = np.zeros((n_edges, lanes))
    nu = np.empty((n_edges, lanes))
    lam = np.empty((n_errors, lanes))
    marg = np.empty((n_errors, lanes))
    hard = np.zeros((n_errors, lanes), dtype=np.uint8)
    sig = np.zeros((n_checks, lanes), dtype=np.uint8)
    parity = np.empty((n_checks, lanes), dtype=np.uint8)
    t_lane = np.zeros(lanes, dtype=np.int64)
    shot_of = np.full(lanes, -1, dtype=np.int64)
    min1 = np.empty(lanes)
    min2 = np.empty(lanes)
    amin = np.empty(lanes, dtype=np.int32)
    spar = np.empty(lanes, dtype=np.uint8)
    acc = np.empty(lanes)
    gamma_is_zero = True
    for j in range(gamma.size):
        if gamma[j] != 0.0:
            gamma_is_zero = False
            break

    next_shot = start
    n_busy = 0
    for lane in range(lanes):
        if next_shot < stop:
            _load_lane(lane, next_shot, syndromes, lam0, edge_col, mu, nu, lam, marg, hard, sig, t_lane, shot_of)
            next_shot += 1
            n_busy += 1
        else:
            _load_lane(lane, -1, syndromes, lam0, edge_col, mu, nu, lam, marg, hard, sig, t_lane, shot_of)

    while n_busy > 0:
        # bias (with gamma = 0 it stays at the priors bit-exactly; skip)
        if not gamma_is_zero:
            for j in range(n_errors):
                g = gamma[j]
                l0 = (1.0 - g) * lam0[j]
                for lane in range(lanes):
                    v = l0 + g * marg[j, lane]
                    lam[j, lane] = min(max(v, -clamp), clamp)
        # check to error.  Tie bookkeeping differs from the scalar kernel
        # but emits the same values: on a tied minimum, min2 == min1, so the
        # argmin lane also sends min1.
        for i in range(n_checks):
            lo = chk_ptr[i]
            hi = chk_ptr[i + 1]
            deg = hi - lo
            if deg == 0:
                continue
            for lane in range(lanes):
                spar[lane] = 0
                min1[lane] = np.inf
                min2[lane] = np.inf
                amin[lane] = -1
            for e in range(lo, hi):
                for lane in range(lanes):
                    v = nu[e, lane]
                    a = -v if v < 0.0 else v
                    spar[lane] ^= 1 if v < 0.0 else 0
                    below = a < min1[lane]
                    min2[lane] = min1[lane] if below else min(min2[lane], a)
                    amin[lane] = e if below else amin[lane]
                    min1[lane] = min(min1[lane], a)
            for e in range(lo, hi):
                for lane in range(lanes):
                    v = nu[e, lane]
                    others_odd = spar[lane] ^ (1 if v < 0.0 else 0)
                    flip = others_odd != sig[i, lane]
                    mag = min2[lane] if e == amin[lane] else min1[lane]
                    if deg == 1:
                        mag = clamp
                    mag = min(mag, clamp)
                    mu[e, lane] = -mag if flip else mag
        # error to check plus marginals
        for j in range(n_errors):
            lo = var_ptr[j]
            hi = var_ptr[j + 1]
            for lane in range(lanes):
                acc[lane] = lam[j, lane]
            for k in range(lo, hi):
                e = var_edges[k]
                for lane in range(lanes):
                    acc[lane] += mu[e, lane]
            for lane in range(lanes):
                s_all = min(max(acc[lane], -clamp), clamp)
                marg[j, lane] = s_all
                hard[j, lane] = 1 if s_all < 0.0 else 0
            for k in range(lo, hi):
                e0 = var_edges[k]
                for lane in range(lanes):
                    acc[lane] = lam[j, lane]
                for k2 in range(lo, hi):
                    if k2 == k:
                        continue
                    e2 = var_edges[k2]
                    for lane in range(lanes):
                        acc[lane] += mu[e2, lane]
                for lane in range(lanes):
                    nu[e0, lane] = min(max(acc[lane], -clamp), clamp)
        # parity per lane
        for i in range(n_checks):
            for lane in range(lanes):
                parity[i, lane] = sig[i, lane]
        for j in range(n_errors):
            for k in range(var_ptr[j], var_ptr[j + 1]):
                row = edge_row[var_edges[k]]
                for lane in range(lanes):
                    parity[row, lane] ^= hard[j, lane]
        # transitions
        for lane in range(lanes):
            shot = shot_of[lane]
            if shot < 0:
                continue
            t_lane[lane] += 1
            conv = True
            for i in range(n_checks):
                if parity[i, lane]:
                    conv = False
                    break
            if conv or t_lane[lane] >= t_cap:
                if conv:
                    w = 0.0
                    for j in range(n_errors):
                        if hard[j, lane]:
                            w += lam0[j]
                    out_found[shot] = 1
                    out_weight[shot] = w
                else:
                    out_found[shot] = 0
                    out_weight[shot] = np.nan
                out_iters[shot] = t_lane[lane]
                out_legs[shot] = 1
                for j in range(n_errors):
                    out_e[shot, j] = hard[j, lane]
                if next_shot < stop:
                    _load_lane(
                        lane, next_shot, syndromes, lam0, edge_col, mu, nu, lam, marg, hard, sig, t_lane, shot_of
                    )
                    next_shot += 1
                else:
                    shot_of[lane] = -1
                    n_busy -= 1


@njit(cache=True, nogil=True)
def syndromes_from_errors(col_indptr, col_indices, errors, out):
    """out[b] = H e_b over GF(2), via column adjacency accumulation."""
    n_shots, n_errors = errors.shape
    n_checks = out.shape[1]
    for b in range(n_shots):
        for i in range(n_checks):
            out[b, i] = 0
        for j in range(n_errors):
            if errors[b, j]:
                for k in range(col_indptr[j], col_indptr[j + 1]):
                    out[b, col_indices[k]] ^= 1


@njit(cache=True, nogil=True)
def action_mismatch(a_col_indptr, a_col_indices, n_action_rows, e_true, e_hat, out):
    """out[b] = 1 iff A (e_true[b] xor e_hat[b]) is nonzero."""
    n_shots, n_errors = e_true.shape
    acc = np.empty(n_action_rows, dtype=np.uint8)
    for b in range(n_shots):
        for i in range(n_action_rows):
            acc[i] = 0
        for j in range(n_errors):
            if e_true[b, j] != e_hat[b, j]:
                for k in range(a_col_indptr[j], a_col_indptr[j + 1]):
                    acc[a_col_indices[k]] ^= 1
        flag = 0
        for i in range(n_action_rows):
            if acc[i]:
                flag = 1
                break
        out[b] = flag
