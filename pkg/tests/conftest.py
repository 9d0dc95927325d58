"""Shared generators and reference implementations for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from relaybp.gf2 import SparseBinaryMatrix
from relaybp.problem import DecodingProblem


def random_problem(
    rng: np.random.Generator,
    m: int,
    n: int,
    p_range: tuple[float, float] = (0.02, 0.3),
    max_col_weight: int = 3,
    k: int = 1,
) -> DecodingProblem:
    """Random sparse problem: every column touches 1..max_col_weight checks."""
    entries = set()
    for j in range(n):
        deg = int(rng.integers(1, max_col_weight + 1))
        for i in rng.choice(m, size=min(deg, m), replace=False):
            entries.add((int(i), j))
    a_entries = set()
    for row in range(k):
        for j in np.flatnonzero(rng.random(n) < 0.4):
            a_entries.add((row, int(j)))
    return DecodingProblem(
        H=SparseBinaryMatrix(m, n, np.array(sorted(entries), dtype=np.int64).reshape(-1, 2)),
        A=SparseBinaryMatrix(k, n, np.array(sorted(a_entries), dtype=np.int64).reshape(-1, 2)),
        p=rng.uniform(*p_range, n),
    )


def random_tree_problem(rng: np.random.Generator, n_target: int) -> tuple[DecodingProblem, int]:
    """Tree-structured problem where every syndrome is satisfiable.

    Construction: grow a tree by attaching each new check to an existing
    error node plus one or two fresh error nodes; processing checks in
    creation order and flipping each check's fresh child solves any
    syndrome, so H has full row rank.  Returns (problem, tanner diameter).
    """
    edges = [(0, 0)]  # bootstrap: check 0 - error 0
    n, m = 1, 1
    while n < n_target:
        attach = int(rng.integers(0, n))
        fresh = min(int(rng.integers(1, 3)), n_target - n)
        c = m
        edges.append((c, attach))
        for fk in range(fresh):
            edges.append((c, n + fk))
        n += fresh
        m += 1
    problem = DecodingProblem(
        H=SparseBinaryMatrix(m, n, np.array(edges, dtype=np.int64)),
        A=SparseBinaryMatrix(0, n, np.empty((0, 2), dtype=np.int64)),
        p=rng.uniform(0.01, 0.3, n),
    )
    return problem, tanner_diameter(m, n, edges)


def tanner_diameter(m: int, n: int, edges: list[tuple[int, int]]) -> int:
    adj: dict[tuple, list[tuple]] = {}
    for c, e in edges:
        adj.setdefault(("c", c), []).append(("e", e))
        adj.setdefault(("e", e), []).append(("c", c))

    def bfs(start):
        dist = {start: 0}
        queue = [start]
        far, fd = start, 0
        while queue:
            u = queue.pop(0)
            for v in adj.get(u, ()):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    if dist[v] > fd:
                        far, fd = v, dist[v]
                    queue.append(v)
        return far, fd

    u, _ = bfs(("e", 0))
    _, d = bfs(u)
    return d


def textbook_min_sum(
    h_dense: np.ndarray,
    priors: np.ndarray,
    syndrome: np.ndarray,
    iterations: int,
    clamp: float = 1024.0,
):
    """Plain dictionary-based min-sum (gamma = 0), coded straight from the
    update rules, for bitwise comparison against the production kernel.

    Takes the log-prior ratios as input (bit-exact equality cannot survive
    two different log implementations).  Summations accumulate in ascending
    neighbor order starting from the bias term, matching the kernel's
    documented summation contract.  Returns per-iteration snapshots of mu,
    nu, the marginals, and the hard decisions.
    """
    m, n = h_dense.shape
    lam = [float(x) for x in priors]
    errs_of = [sorted(np.flatnonzero(h_dense[i]).tolist()) for i in range(m)]
    chks_of = [sorted(np.flatnonzero(h_dense[:, j]).tolist()) for j in range(n)]
    nu = {(j, i): lam[j] for j in range(n) for i in chks_of[j]}
    mu = {}

    def clip(x: float) -> float:
        return clamp if x > clamp else (-clamp if x < -clamp else x)

    history = []
    for _ in range(iterations):
        for i in range(m):
            for j in errs_of[i]:
                others = [nu[(j2, i)] for j2 in errs_of[i] if j2 != j]
                if others:
                    mag = min(-x if x < 0.0 else x for x in others)
                    sgn = 1.0
                    for x in others:
                        if x < 0.0:
                            sgn = -sgn
                else:
                    mag = clamp
                    sgn = 1.0
                base = -1.0 if syndrome[i] else 1.0
                if mag > clamp:
                    mag = clamp
                mu[(i, j)] = sgn * base * mag
        marg = [0.0] * n
        hard = [0] * n
        for j in range(n):
            for i in chks_of[j]:
                s = lam[j]
                for i2 in chks_of[j]:
                    if i2 != i:
                        s += mu[(i2, j)]
                nu[(j, i)] = clip(s)
            s_all = lam[j]
            for i in chks_of[j]:
                s_all += mu[(i, j)]
            marg[j] = clip(s_all)
            hard[j] = 1 if marg[j] < 0.0 else 0
        history.append((dict(mu), dict(nu), list(marg), list(hard)))
    return history


@pytest.fixture(scope="session")
def surface_d3_x():
    from relaybp import build_surface_phenomenological, compress_columns, drop_inert_columns, xz_split

    joint = build_surface_phenomenological(3, rounds=3, p_data=0.03, p_meas=0.03)
    return compress_columns(drop_inert_columns(xz_split(joint)[0]))


@pytest.fixture(scope="session")
def surface_d5_x():
    from relaybp import build_surface_phenomenological, compress_columns, drop_inert_columns, xz_split

    joint = build_surface_phenomenological(5, rounds=5, p_data=0.03, p_meas=0.03)
    return compress_columns(drop_inert_columns(xz_split(joint)[0]))
