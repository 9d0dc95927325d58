

import math

import numpy as np
import pytest

from relaybp.bp import (
    BeliefState,
    EdgeGraph,
    check_to_error_update,
    compute_marginals,
    error_to_check_update,
    init_leg,
    iterate,
    run_leg,
    syndrome_satisfied,
    update_bias,
)
from relaybp.builders import build_repetition
from relaybp.gf2 import SparseBinaryMatrix
from relaybp.problem import DecodingProblem

from conftest import random_problem, textbook_min_sum


def single_check_problem(n_neighbors: int, p: float = 0.1) -> DecodingProblem:
    h = SparseBinaryMatrix.from_dense([[1] * n_neighbors])
    return DecodingProblem(
        H=h, A=SparseBinaryMatrix(0, n_neighbors, np.empty((0, 2), int)), p=np.full(n_neighbors, p)
    )


class TestInit:
    def test_nu_equals_log_prior(self):
        problem = single_check_problem(3, p=0.1)
        state = init_leg(problem, np.array([0], dtype=np.uint8))
        assert np.allclose(state.nu, math.log(9), atol=1e-12)
        assert np.array_equal(state.lam, state.lambda0)
        assert np.array_equal(state.marginal, state.lambda0)

    def test_symmetric_prior_gives_zero(self):
        problem = single_check_problem(2, p=0.5)
        state = init_leg(problem, np.array([0], dtype=np.uint8))
        assert np.all(state.nu == 0.0)

    def test_custom_initial_marginals(self):
        problem = single_check_problem(2)
        state = init_leg(problem, np.array([1], dtype=np.uint8), initial_marginals=np.array([-1.0, 2.0]))
        assert state.marginal[0] == -1.0
        assert state.hard_decision.tolist() == [1, 0]

    def test_syndrome_length_checked(self):
        problem = single_check_problem(2)
        with pytest.raises(ValueError, match="syndrome length"):
            init_leg(problem, np.array([0, 1], dtype=np.uint8))


class TestCheckToError:
    def test_sign_and_min_hand_example(self):
        # incoming nu {+2, -3}, syndrome 1: mu to third neighbor = (-1)(-1)(2)
        problem = single_check_problem(3)
        state = init_leg(problem, np.array([1], dtype=np.uint8))
        state.nu[:] = [2.0, -3.0, 99.0]
        check_to_error_update(state)
        assert state.mu[2] == 2.0

    def test_all_positive_zero_syndrome(self):
        problem = single_check_problem(3)
        state = init_leg(problem, np.array([0], dtype=np.uint8))
        state.nu[:] = [0.5, 2.0, 1.0]
        check_to_error_update(state)
        assert state.mu[0] == 1.0 and state.mu[0] > 0

    def test_degree_two_check(self):
        problem = single_check_problem(2)
        state = init_leg(problem, np.array([0], dtype=np.uint8))
        state.nu[:] = [-1.5, 7.0]
        check_to_error_update(state)
        assert state.mu[1] == -1.5

    def test_degree_one_saturates(self):
        problem = single_check_problem(1)
        state = init_leg(problem, np.array([1], dtype=np.uint8))
        check_to_error_update(state)
        assert state.mu[0] == -state.clamp

    def test_zero_message_counts_positive(self):
        problem = single_check_problem(3)
        state = init_leg(problem, np.array([0], dtype=np.uint8))
        state.nu[:] = [0.0, -2.0, 5.0]
        check_to_error_update(state)
        # others for edge 2 are {0.0, -2.0}: sign (+1)(-1) = -1, magnitude 0
        assert state.mu[2] == 0.0 and math.copysign(1.0, state.mu[2]) == -1.0


class TestErrorToCheck:
    def test_degree_one_error_node(self):
        problem = single_check_problem(2)
        state = init_leg(problem, np.array([0], dtype=np.uint8))
        state.lam[:] = [3.0, -1.0]
        state.mu[:] = [9.0, 9.0]
        error_to_check_update(state)
        assert state.nu.tolist() == [3.0, -1.0]  # empty exclusion sums

    def test_hand_sum(self):
        # error node with three checks: nu toward check 0 uses mu from 1 and 2
        h = SparseBinaryMatrix.from_dense([[1], [1], [1]])
        problem = DecodingProblem(H=h, A=SparseBinaryMatrix(0, 1, np.empty((0, 2), int)), p=np.array([0.2]))
        state = init_leg(problem, np.zeros(3, dtype=np.uint8))
        state.lam[:] = [2.0]
        state.mu[:] = [99.0, -1.0, 0.5]
        error_to_check_update(state)
        assert state.nu[0] == 2.0 + (-1.0) + 0.5


class TestBias:
    def test_gamma_zero_keeps_prior(self):
        problem = single_check_problem(2, p=0.2)
        state = init_leg(problem, np.array([0], dtype=np.uint8))
        state.marginal[:] = [100.0, -100.0]
        update_bias(state, np.zeros(2))
        assert np.array_equal(state.lam, state.lambda0)

    def test_gamma_one_copies_marginal(self):
        problem = single_check_problem(2, p=0.2)
        state = init_leg(problem, np.array([0], dtype=np.uint8))
        state.marginal[:] = [4.0, -4.0]
        update_bias(state, np.ones(2))
        assert state.lam.tolist() == [4.0, -4.0]

    def test_negative_gamma(self):
        problem = single_check_problem(1, p=0.1)
        state = init_leg(problem, np.array([0], dtype=np.uint8))
        state.lambda0[:] = [2.0]
        state.marginal[:] = [1.0]
        update_bias(state, np.array([-0.2]))
        assert state.lam[0] == pytest.approx(2.2, abs=1e-15)


class TestMarginals:
    def test_hand_example(self):
        h = SparseBinaryMatrix.from_dense([[1], [1]])
        problem = DecodingProblem(H=h, A=SparseBinaryMatrix(0, 1, np.empty((0, 2), int)), p=np.array([0.2]))
        state = init_leg(problem, np.zeros(2, dtype=np.uint8))
        state.lam[:] = [2.0]
        state.mu[:] = [-3.0, -1.0]
        compute_marginals(state)
        assert state.marginal[0] == -2.0
        assert state.hard_decision[0] == 1

    def test_zero_marginal_means_no_error(self):
        problem = single_check_problem(1, p=0.5)
        state = init_leg(problem, np.array([0], dtype=np.uint8))
        state.lam[:] = [0.0]
        state.mu[:] = [0.0]
        compute_marginals(state)
        assert state.marginal[0] == 0.0 and state.hard_decision[0] == 0


class TestRunLeg:
    def test_zero_syndrome_converges_immediately(self):
        problem = build_repetition(4, 0.1, 0.05, 2)
        out = run_leg(problem, np.zeros(problem.m, dtype=np.uint8), 0.0, max_iterations=30)
        assert out.converged and out.iterations_used == 1
        assert out.correction.weight() == 0

    def test_repetition_unique_minimum(self):
        # brute force over all 8 vectors confirms (1,0,0) is the unique
        # min-weight solution for sigma=(1,0); the tree graph makes min-sum exact
        problem = build_repetition(3, 0.1, 0.05, 1)
        out = run_leg(problem, np.array([1, 0], dtype=np.uint8), 0.0, max_iterations=20)
        assert out.converged
        assert out.correction.bits.tolist() == [1, 0, 0]

    def test_zero_budget_returns_initial_decision(self):
        problem = build_repetition(3, 0.1, 0.05, 1)
        out = run_leg(problem, np.array([1, 0], dtype=np.uint8), 0.0, max_iterations=0)
        assert not out.converged and out.iterations_used == 0
        assert out.correction.weight() == 0  # positive priors, no message passing

    def test_convergence_soundness(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            problem = random_problem(rng, int(rng.integers(3, 7)), int(rng.integers(4, 12)))
            e = (rng.random(problem.n) < problem.p).astype(np.uint8)
            sig = problem.syndrome(e)
            out = run_leg(problem, sig, 0.0, max_iterations=50)
            if out.converged:
                assert problem.syndrome(out.correction) == sig

    def test_clamp_bounds_all_messages(self):
        rng = np.random.default_rng(29)
        problem = random_problem(rng, 5, 9)
        sig = problem.syndrome((rng.random(problem.n) < 0.5).astype(np.uint8))
        out = run_leg(problem, sig, 0.0, max_iterations=25, clamp=3.0, record_trace=True, stop_on_convergence=False)
        for key in ("mu", "nu", "bias", "marginal"):
            assert np.all(np.abs(out.trace[key]) <= 3.0)

    def test_final_marginals_returned_for_chaining(self):
        problem = build_repetition(3, 0.1, 0.05, 1)
        out = run_leg(problem, np.array([1, 0], dtype=np.uint8), 0.2, max_iterations=7, stop_on_convergence=False)
        assert out.final_marginals.shape == (problem.n,)


class TestKernelMatchesStepwise:
    def test_trajectories_bit_identical(self):
        rng = np.random.default_rng(31)
        for _ in range(15):
            m, n = int(rng.integers(2, 7)), int(rng.integers(3, 10))
            problem = random_problem(rng, m, n)
            gamma = rng.uniform(-0.3, 1.0, n)
            sig = problem.syndrome((rng.random(n) < 0.5).astype(np.uint8)).bits
            iters = 12
            out = run_leg(problem, sig, gamma, max_iterations=iters, record_trace=True, stop_on_convergence=False)
            state = init_leg(problem, sig)
            for t in range(iters):
                iterate(state, gamma)
                assert np.array_equal(state.mu, out.trace["mu"][t])
                assert np.array_equal(state.nu, out.trace["nu"][t])
                assert np.array_equal(state.lam, out.trace["bias"][t])
                assert np.array_equal(state.marginal, out.trace["marginal"][t])

    def test_stepwise_convergence_matches(self):
        rng = np.random.default_rng(37)
        problem = random_problem(rng, 4, 8)
        sig = problem.syndrome((rng.random(8) < problem.p).astype(np.uint8)).bits
        out = run_leg(problem, sig, 0.0, max_iterations=40)
        state = init_leg(problem, sig)
        converged_at = None
        for t in range(40):
            iterate(state, np.zeros(8))
            if syndrome_satisfied(state):
                converged_at = t + 1
                break
        if out.converged:
            assert converged_at == out.iterations_used
            assert np.array_equal(state.hard_decision, out.correction.bits)
        else:
            assert converged_at is None


class TestAgainstTextbook:
    def test_textbook_matches_kernel(self):
        rng = np.random.default_rng(41)
        problem = random_problem(rng, 5, 9)
        sig = problem.syndrome((rng.random(9) < 0.5).astype(np.uint8)).bits
        iters = 10
        out = run_leg(problem, sig, 0.0, max_iterations=iters, record_trace=True, stop_on_convergence=False)
        graph = EdgeGraph.from_problem(problem)
        history = textbook_min_sum(problem.H.to_dense(), problem.priors, sig, iters)
        for t, (mu_t, nu_t, marg_t, _) in enumerate(history):
            for e in range(graph.n_edges):
                i, j = int(graph.edge_row[e]), int(graph.edge_col[e])
                assert out.trace["mu"][t, e] == mu_t[(i, j)]
                assert out.trace["nu"][t, e] == nu_t[(j, i)]
            assert np.array_equal(out.trace["marginal"][t], np.array(marg_t))
