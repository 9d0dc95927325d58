"""One DMem-BP leg: min-sum message passing with memory-biased priors.

Messages are log-likelihood ratios (positive = no error).  The update rules,
flooding order, and conventions:

  bias       Lambda_j(t) = (1 - gamma_j) Lambda_j(0) + gamma_j M_j(t-1)
  check msg  mu_{i->j}(t) = kappa_{i,j} (-1)^{sigma_i}
                            min_{j' in N(i) \\ j} |nu_{j'->i}(t-1)|,
             kappa = sign of the product of the same nu values
  error msg  nu_{j->i}(t) = Lambda_j(t) + sum_{i' in N(j) \\ i} mu_{i'->j}(t)
  marginal   M_j(t) = Lambda_j(t) + sum_{i' in N(j)} mu_{i'->j}(t)
  decision   e_j(t) = 1 iff M_j(t) < 0   (sgn(0) treated as +1)

Conventions: a zero-valued nu contributes +1 to the sign product; a
degree-one check sends the saturation bound with an empty (+1) sign
product; every stored quantity is clamped to [-clamp, +clamp].  Setting
gamma = 0 with initial marginals equal to the priors reproduces standard
min-sum BP exactly; a constant gamma in (0, 1) gives Mem-BP.

The fast path is :func:`run_leg` (numba).  The BeliefState methods perform
the same updates one phase at a time in plain numpy for inspection and
testing; both paths produce bit-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import _kernels
from .gf2 import BitVector
from .problem import DecodingProblem

DEFAULT_CLAMP = 1024.0


@dataclass(frozen=True)
class EdgeGraph:
    """Flat edge-list view of a check matrix, shared by all kernels.

    Edge ids run row-major over H; ``chk_ptr`` delimits each check's edges,
    ``var_edges`` lists edge ids per error node in ascending check order.
    """

    n_checks: int
    n_errors: int
    chk_ptr: np.ndarray
    var_ptr: np.ndarray
    var_edges: np.ndarray
    edge_col: np.ndarray
    edge_row: np.ndarray

    @classmethod
    def from_problem(cls, problem: DecodingProblem) -> "EdgeGraph":
        h = problem.H
        edge_col = h.row_indices.astype(np.int32)
        edge_row = np.repeat(
            np.arange(h.rows, dtype=np.int32), np.diff(h.row_indptr)
        )
        order = np.lexsort((edge_row, edge_col))
        graph = cls(
            n_checks=h.rows,
            n_errors=h.cols,
            chk_ptr=h.row_indptr.astype(np.int32),
            var_ptr=h.col_indptr.astype(np.int32),
            var_edges=order.astype(np.int32),
            edge_col=edge_col,
            edge_row=edge_row,
        )
        for a in (graph.chk_ptr, graph.var_ptr, graph.var_edges, graph.edge_col, graph.edge_row):
            a.flags.writeable = False
        return graph

    @property
    def n_edges(self) -> int:
        return int(self.edge_col.size)


def _clip(x: np.ndarray, clamp: float) -> np.ndarray:
    return np.clip(x, -clamp, clamp, out=x)


@dataclass
class BeliefState:
    """Full mutable state of one leg; owned by a single decode execution."""

    graph: EdgeGraph
    syndrome: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    lambda0: np.ndarray
    lam: np.ndarray
    marginal: np.ndarray
    hard_decision: np.ndarray
    iteration: int = 0
    clamp: float = DEFAULT_CLAMP

    def copy(self) -> "BeliefState":
        return BeliefState(
            graph=self.graph,
            syndrome=self.syndrome.copy(),
            mu=self.mu.copy(),
            nu=self.nu.copy(),
            lambda0=self.lambda0.copy(),
            lam=self.lam.copy(),
            marginal=self.marginal.copy(),
            hard_decision=self.hard_decision.copy(),
            iteration=self.iteration,
            clamp=self.clamp,
        )


def init_leg(
    problem: DecodingProblem,
    syndrome: BitVector | np.ndarray,
    initial_marginals: np.ndarray | None = None,
    clamp: float = DEFAULT_CLAMP,
) -> BeliefState:
    """Set nu and the biases to the log-prior ratios; marginals from input.

    With ``initial_marginals=None`` the marginals also start at the priors,
    which is the standard first-leg initialization.
    """
    sig = syndrome.bits if isinstance(syndrome, BitVector) else np.asarray(syndrome, dtype=np.uint8)
    if sig.size != problem.m:
        raise ValueError(f"syndrome length {sig.size} != {problem.m} checks")
    graph = EdgeGraph.from_problem(problem)
    lam0 = problem.priors.copy()
    if initial_marginals is None:
        marg = lam0.copy()
    else:
        marg = np.asarray(initial_marginals, dtype=np.float64).copy()
        if marg.size != problem.n:
            raise ValueError(f"initial marginals length {marg.size} != {problem.n} error nodes")
    return BeliefState(
        graph=graph,
        syndrome=sig.astype(np.uint8),
        mu=np.zeros(graph.n_edges),
        nu=lam0[graph.edge_col].astype(np.float64),
        lambda0=lam0,
        lam=lam0.copy(),
        marginal=marg,
        hard_decision=(marg < 0).astype(np.uint8),
        clamp=clamp,
    )


def update_bias(state: BeliefState, gamma: np.ndarray) -> np.ndarray:
    """Lambda(t) from the previous marginals; gamma may be any real vector."""
    g = np.asarray(gamma, dtype=np.float64)
    state.lam[:] = (1.0 - g) * state.lambda0 + g * state.marginal
    return _clip(state.lam, state.clamp)


def check_to_error_update(state: BeliefState, syndrome: np.ndarray | None = None) -> np.ndarray:
    """Min-sum check-node phase on nu(t-1); updates and returns mu."""
    g = state.graph
    sig = state.syndrome if syndrome is None else np.asarray(syndrome, dtype=np.uint8)
    for i in range(g.n_checks):
        lo, hi = g.chk_ptr[i], g.chk_ptr[i + 1]
        if hi == lo:
            continue
        base = -1.0 if sig[i] else 1.0
        for k in range(lo, hi):
            others = np.concatenate([state.nu[lo:k], state.nu[k + 1 : hi]])
            if others.size == 0:
                mag = state.clamp
                sgn = 1.0
            else:
                mag = np.abs(others).min()
                sgn = -1.0 if (others < 0).sum() & 1 else 1.0
            state.mu[k] = sgn * base * min(mag, state.clamp)
    return state.mu


def error_to_check_update(state: BeliefState) -> np.ndarray:
    """Error-node phase: nu(t) = Lambda(t) + exclusion sums of mu(t)."""
    g = state.graph
    for j in range(g.n_errors):
        lo, hi = g.var_ptr[j], g.var_ptr[j + 1]
        edges = g.var_edges[lo:hi]
        for pos, e in enumerate(edges):
            s = state.lam[j]
            for pos2, e2 in enumerate(edges):
                if pos2 != pos:
                    s += state.mu[e2]
            state.nu[e] = min(max(s, -state.clamp), state.clamp)
    return state.nu


def compute_marginals(state: BeliefState) -> tuple[np.ndarray, np.ndarray]:
    """M(t) = Lambda(t) + all incoming mu(t); hard decision by sign."""
    g = state.graph
    for j in range(g.n_errors):
        lo, hi = g.var_ptr[j], g.var_ptr[j + 1]
        s = state.lam[j]
        for e in g.var_edges[lo:hi]:
            s += state.mu[e]
        state.marginal[j] = min(max(s, -state.clamp), state.clamp)
    state.hard_decision[:] = state.marginal < 0
    return state.marginal, state.hard_decision


def iterate(state: BeliefState, gamma: np.ndarray) -> np.ndarray:
    """One full iteration in Algorithm order; returns the hard decision."""
    update_bias(state, gamma)
    check_to_error_update(state)
    error_to_check_update(state)
    compute_marginals(state)
    state.iteration += 1
    return state.hard_decision


def syndrome_satisfied(state: BeliefState) -> bool:
    g = state.graph
    parity = state.syndrome.copy()
    for j in np.flatnonzero(state.hard_decision):
        lo, hi = g.var_ptr[j], g.var_ptr[j + 1]
        for e in g.var_edges[lo:hi]:
            parity[g.edge_row[e]] ^= 1
    return not parity.any()


@dataclass
class LegOutcome:
    """Result of one leg; ``converged`` implies H e = sigma."""

    converged: bool
    correction: BitVector
    iterations_used: int
    final_marginals: np.ndarray
    trace: Mapping[str, np.ndarray] | None = None


def run_leg(
    problem: DecodingProblem,
    syndrome: BitVector | np.ndarray,
    gamma: float | np.ndarray,
    initial_marginals: np.ndarray | None = None,
    max_iterations: int = 80,
    clamp: float = DEFAULT_CLAMP,
    record_trace: bool = False,
    stop_on_convergence: bool = True,
    _graph: EdgeGraph | None = None,
) -> LegOutcome:
    """Run one DMem-BP leg to convergence or the iteration cap (numba path).

    ``max_iterations=0`` returns the hard decision of the initial marginals
    without any message passing.  With ``record_trace`` the outcome carries
    per-iteration mu/nu/bias/marginal arrays; with
    ``stop_on_convergence=False`` exactly ``max_iterations`` iterations run
    and convergence is evaluated on the final state.
    """
    sig = syndrome.bits if isinstance(syndrome, BitVector) else np.asarray(syndrome, dtype=np.uint8)
    if sig.size != problem.m:
        raise ValueError(f"syndrome length {sig.size} != {problem.m} checks")
    graph = _graph if _graph is not None else EdgeGraph.from_problem(problem)
    lam0 = problem.priors
    g = np.broadcast_to(np.asarray(gamma, dtype=np.float64), (problem.n,)).copy()
    marg = lam0.copy() if initial_marginals is None else np.asarray(initial_marginals, dtype=np.float64).copy()
    if marg.size != problem.n:
        raise ValueError(f"initial marginals length {marg.size} != {problem.n} error nodes")
    mu = np.zeros(graph.n_edges)
    nu = lam0[graph.edge_col].astype(np.float64)
    lam = lam0.copy()
    hard = (marg < 0).astype(np.uint8)
    parity = np.empty(problem.m, dtype=np.uint8)
    if record_trace:
        t_mu = np.empty((max_iterations, graph.n_edges))
        t_nu = np.empty((max_iterations, graph.n_edges))
        t_lam = np.empty((max_iterations, problem.n))
        t_marg = np.empty((max_iterations, problem.n))
    else:
        t_mu = t_nu = t_lam = t_marg = _kernels._EMPTY2D
    conv, used = _kernels.bp_leg(
        graph.chk_ptr,
        graph.var_ptr,
        graph.var_edges,
        graph.edge_col,
        graph.edge_row,
        sig.astype(np.uint8),
        lam0,
        g,
        mu,
        nu,
        lam,
        marg,
        hard,
        parity,
        max_iterations,
        float(clamp),
        stop_on_convergence,
        t_mu,
        t_nu,
        t_lam,
        t_marg,
        record_trace,
    )
    correction = BitVector(hard)
    converged = bool(conv) if stop_on_convergence else _satisfies(problem, correction, sig)
    trace = None
    if record_trace:
        trace = {"mu": t_mu[:used], "nu": t_nu[:used], "bias": t_lam[:used], "marginal": t_marg[:used]}
    return LegOutcome(
        converged=converged,
        correction=correction,
        iterations_used=int(used),
        final_marginals=marg,
        trace=trace,
    )


def _satisfies(problem: DecodingProblem, correction: BitVector, sig: np.ndarray) -> bool:
    from .gf2 import matvec

    return bool(np.array_equal(matvec(problem.H, correction).bits, sig))
