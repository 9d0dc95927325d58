"""Built-in desk-scale decoding-problem generators.

All three builders produce phenomenological memory problems: independent
data-qubit flips before every measurement layer plus independent
measurement-outcome flips, with the final layer measured perfectly.  This is
a deliberate simplification for self-contained testing; full circuit-level
problems (correlated multi-qubit error mechanisms) are expected to arrive
through the file interchange format instead.

Time convention used by every builder: ``rounds`` counts measurement layers.
Detector (t, s) compares check s between layers t and t-1 (layer -1 is the
known initial reference).  A data error in epoch t flips detector layer t
only; a measurement error at layer t < rounds-1 flips detector layers t and
t+1.  The final layer is error-free, so its measurement-error columns are
omitted rather than carried at probability zero.  ``rounds=1`` therefore
yields a pure code-capacity problem.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .gf2 import SparseBinaryMatrix
from .problem import DecodingProblem


# ---------------------------------------------------------------------------
# dense GF(2) helpers; build-time only, never in the decoding hot path


def gf2_row_echelon(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    a = (np.asarray(mat, dtype=np.uint8) & 1).copy()
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hit = np.flatnonzero(a[r:, c])
        if hit.size == 0:
            continue
        piv = r + hit[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        others = np.flatnonzero(a[:, c])
        for i in others:
            if i != r:
                a[i, :] ^= a[r, :]
        pivots.append(c)
        r += 1
    return a, pivots


def gf2_rank(mat: np.ndarray) -> int:
    return len(gf2_row_echelon(mat)[1])


def gf2_nullspace(mat: np.ndarray) -> np.ndarray:
    """Basis (as rows) of the right nullspace of ``mat`` over GF(2)."""
    a, pivots = gf2_row_echelon(mat)
    cols = a.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = a[i, fc]
    return basis


def css_logicals(hx: np.ndarray, hz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Representative logical operators of a CSS code.

    Returns (lx, lz): lx rows span ker(hz) modulo rowspace(hx), lz rows span
    ker(hx) modulo rowspace(hz).  Any bases work for logical-failure
    accounting because the pairing between X and Z logical classes is
    non-degenerate.
    """

    def quotient(kernel_of: np.ndarray, modulo: np.ndarray) -> np.ndarray:
        ker = gf2_nullspace(kernel_of)
        stack = (modulo & 1).astype(np.uint8)
        base_rank = gf2_rank(stack)
        chosen = []
        cur = stack
        cur_rank = base_rank
        for v in ker:
            trial = np.vstack([cur, v[None, :]])
            r = gf2_rank(trial)
            if r > cur_rank:
                chosen.append(v)
                cur = trial
                cur_rank = r
        return np.array(chosen, dtype=np.uint8).reshape(len(chosen), kernel_of.shape[1])

    return quotient(hz, hx), quotient(hx, hz)


# ---------------------------------------------------------------------------
# shared phenomenological time extension


def _extend_memory(
    n_qubits: int,
    checks: list[tuple[str | None, np.ndarray]],
    logicals: list[tuple[str | None, np.ndarray]],
    error_kinds: list[tuple[str | None, str | None]],
    p_data: float,
    p_meas: float,
    rounds: int,
    name: str,
    description: str,
) -> DecodingProblem:
    """Lay out detectors, data-error and measurement-error columns over time.

    ``error_kinds`` lists (kind_tag, flipped_check_tag) pairs: an error of a
    given kind flips the adjacent checks carrying ``flipped_check_tag``
    (None matches untagged checks).  A logical representative detects the
    error kind whose flipped-check tag equals its own tag.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not (0.0 < p_data < 1.0 and 0.0 < p_meas < 1.0):
        raise ValueError("probabilities must lie in (0, 1)")
    m = len(checks)
    n_data_cols = rounds * n_qubits * len(error_kinds)
    n_meas_cols = (rounds - 1) * m
    n_cols = n_data_cols + n_meas_cols

    # qubit -> adjacent check ids, per error kind
    adjacency: dict[str | None, list[list[int]]] = {}
    for _, target in error_kinds:
        adj = [[] for _ in range(n_qubits)]
        for s, (tag, support) in enumerate(checks):
            if tag == target:
                for q in support:
                    adj[int(q)].append(s)
        adjacency[target] = adj

    def data_col(t: int, kind_idx: int, q: int) -> int:
        return (t * len(error_kinds) + kind_idx) * n_qubits + q

    def meas_col(t: int, s: int) -> int:
        return n_data_cols + t * m + s

    h_ent: list[tuple[int, int]] = []
    for t in range(rounds):
        for ki, (_, target) in enumerate(error_kinds):
            adj = adjacency[target]
            for q in range(n_qubits):
                col = data_col(t, ki, q)
                for s in adj[q]:
                    h_ent.append((t * m + s, col))
    for t in range(rounds - 1):
        for s in range(m):
            h_ent.append((t * m + s, meas_col(t, s)))
            h_ent.append(((t + 1) * m + s, meas_col(t, s)))

    a_ent: list[tuple[int, int]] = []
    for li, (ltag, lsupport) in enumerate(logicals):
        kind_idx = next(ki for ki, (_, target) in enumerate(error_kinds) if target == ltag)
        for t in range(rounds):
            for q in lsupport:
                a_ent.append((li, data_col(t, kind_idx, int(q))))

    p = np.empty(n_cols)
    p[:n_data_cols] = p_data
    p[n_data_cols:] = p_meas

    tags = [tag for tag, _ in checks]
    typed = all(t is not None for t in tags)
    h_types = "".join(tags) * rounds if typed and m else None
    a_types = "".join(t for t, _ in logicals) if typed and logicals else None
    problem = DecodingProblem(
        H=SparseBinaryMatrix(rounds * m, n_cols, np.asarray(h_ent, dtype=np.int64).reshape(-1, 2)),
        A=SparseBinaryMatrix(len(logicals), n_cols, np.asarray(a_ent, dtype=np.int64).reshape(-1, 2)),
        p=p,
        h_row_types=h_types,
        a_row_types=a_types,
        name=name,
        description=description,
    )
    if problem.degenerate:
        raise ValueError("builder produced a degenerate problem (internal error)")
    return problem


# ---------------------------------------------------------------------------
# repetition code


def build_repetition(n: int, p_data: float, p_meas: float, rounds: int) -> DecodingProblem:
    """Repetition-code memory: neighbor parity checks repeated over rounds.

    The single action row marks data errors on qubit 0; zero-syndrome
    residuals are codewords (all-zeros or all-ones), so that one bit
    identifies a logical flip.
    """
    if n < 2:
        raise ValueError("repetition code needs n >= 2")
    checks = [(None, np.array([q, q + 1])) for q in range(n - 1)]
    logicals = [(None, np.array([0]))]
    return _extend_memory(
        n,
        checks,
        logicals,
        [(None, None)],
        p_data,
        p_meas,
        rounds,
        name=f"repetition_n{n}_r{rounds}",
        description=f"phenomenological repetition code, n={n}, rounds={rounds}",
    )


# ---------------------------------------------------------------------------
# rotated surface code


def _surface_layout(d: int) -> tuple[list[tuple[str, np.ndarray]], np.ndarray, np.ndarray]:
    """Rotated-surface-code stabilizers plus one logical representative each.

    Data qubits sit on a d x d grid (index r*d+c).  Plaquette (a, b) covers
    the up-to-four qubits with r in {a-1, a}, c in {b-1, b}; bulk plaquettes
    alternate in a checkerboard ((a+b) even = Z), the top/bottom boundaries
    keep only X half-plaquettes and the left/right boundaries only Z.
    The Z logical runs along grid row 0, the X logical along grid column 0.
    """
    checks: list[tuple[str, np.ndarray]] = []
    for a in range(d + 1):
        for b in range(d + 1):
            qubits = [
                r * d + c
                for r in (a - 1, a)
                for c in (b - 1, b)
                if 0 <= r < d and 0 <= c < d
            ]
            if len(qubits) < 2:
                continue
            z_type = (a + b) % 2 == 0
            on_tb = a in (0, d)
            on_lr = b in (0, d)
            if on_tb and z_type:
                continue  # top/bottom boundary hosts X checks only
            if on_lr and not z_type:
                continue  # left/right boundary hosts Z checks only
            checks.append(("Z" if z_type else "X", np.array(sorted(qubits))))
    logical_z = np.arange(d)  # grid row 0
    logical_x = np.arange(d) * d  # grid column 0
    return checks, logical_x, logical_z


def build_surface_phenomenological(d: int, rounds: int, p_data: float, p_meas: float) -> DecodingProblem:
    """Rotated surface code memory with X and Z checks over ``rounds`` layers.

    Row tags are set so :func:`relaybp.problem.xz_split` applies; the two
    action rows are the X and Z logical representatives.
    """
    if d < 3 or d % 2 == 0:
        raise ValueError("d must be an odd integer >= 3")
    checks, logical_x, logical_z = _surface_layout(d)
    n = d * d
    x_checks = [(t, s) for t, s in checks if t == "X"]
    z_checks = [(t, s) for t, s in checks if t == "Z"]
    expected = (d * d - 1) // 2
    if len(x_checks) != expected or len(z_checks) != expected:
        raise AssertionError("surface layout produced wrong stabilizer counts")
    hx = np.zeros((expected, n), dtype=np.uint8)
    hz = np.zeros((expected, n), dtype=np.uint8)
    for i, (_, s) in enumerate(x_checks):
        hx[i, s] = 1
    for i, (_, s) in enumerate(z_checks):
        hz[i, s] = 1
    lz = np.zeros(n, dtype=np.uint8)
    lz[logical_z] = 1
    lx = np.zeros(n, dtype=np.uint8)
    lx[logical_x] = 1
    if (hx @ hz.T % 2).any():
        raise AssertionError("surface layout is not CSS")
    if (hx @ lz % 2).any() or (hz @ lx % 2).any():
        raise AssertionError("surface logicals do not commute with the stabilizers")
    if int(lx @ lz % 2) != 1:
        raise AssertionError("surface logicals must anticommute")
    logicals = [("X", logical_x), ("Z", logical_z)]
    # X errors flip Z checks and are witnessed by the Z logical (and vice versa)
    kinds = [("X", "Z"), ("Z", "X")]
    return _extend_memory(
        n,
        checks,
        logicals,
        kinds,
        p_data,
        p_meas,
        rounds,
        name=f"surface_d{d}_r{rounds}",
        description=f"phenomenological rotated surface code, d={d}, rounds={rounds}",
    )


# ---------------------------------------------------------------------------
# bivariate bicycle codes


def _cyclic_shift(size: int, power: int) -> np.ndarray:
    return np.roll(np.eye(size, dtype=np.uint8), shift=power % size, axis=1)


def bb_code_matrices(
    l: int, m: int, a_terms: list[tuple[int, int]], b_terms: list[tuple[int, int]]
) -> tuple[np.ndarray, np.ndarray]:
    """CSS check matrices H_X = [A|B], H_Z = [B^T|A^T] on the l x m torus.

    Each term (i, j) is the monomial x^i y^j, realized as the Kronecker
    product of cyclic shifts.  Terms must be distinct modulo (l, m).
    """

    def poly(terms: list[tuple[int, int]], what: str) -> np.ndarray:
        reduced = [(int(i) % l, int(j) % m) for i, j in terms]
        if len(set(reduced)) != len(reduced):
            raise ValueError(f"{what} contains repeated exponents modulo ({l},{m}): {terms}")
        acc = np.zeros((l * m, l * m), dtype=np.uint8)
        for i, j in reduced:
            acc ^= np.kron(_cyclic_shift(l, i), _cyclic_shift(m, j))
        return acc

    a = poly(a_terms, "a_terms")
    b = poly(b_terms, "b_terms")
    hx = np.hstack([a, b])
    hz = np.hstack([b.T, a.T])
    if (hx @ hz.T % 2).any():
        raise AssertionError("bivariate bicycle blocks failed CSS commutation")
    return hx, hz


def build_bivariate_bicycle(
    l: int,
    m: int,
    a_terms: list[tuple[int, int]],
    b_terms: list[tuple[int, int]],
    p_data: float,
    p_meas: float,
    rounds: int,
) -> DecodingProblem:
    """Bivariate-bicycle CSS memory problem with computed logical operators.

    The logical bases come from a one-off GF(2) kernel/quotient computation;
    nothing from this step is needed while decoding.
    """
    hx, hz = bb_code_matrices(l, m, a_terms, b_terms)
    n = 2 * l * m
    lx, lz = css_logicals(hx, hz)
    k = n - gf2_rank(hx) - gf2_rank(hz)
    if len(lx) != k or len(lz) != k:
        raise AssertionError(f"logical basis size mismatch: k={k}, got {len(lx)}/{len(lz)}")
    if k == 0:
        raise ValueError(f"bivariate bicycle code ({l},{m},{a_terms},{b_terms}) encodes no logical qubits")
    checks = [("X", np.flatnonzero(row)) for row in hx] + [("Z", np.flatnonzero(row)) for row in hz]
    logicals = [("X", np.flatnonzero(v)) for v in lx] + [("Z", np.flatnonzero(v)) for v in lz]
    kinds = [("X", "Z"), ("Z", "X")]
    return _extend_memory(
        n,
        checks,
        logicals,
        kinds,
        p_data,
        p_meas,
        rounds,
        name=f"bb_l{l}_m{m}_r{rounds}",
        description=f"phenomenological bivariate bicycle code [[{n},{k}]], l={l}, m={m}, rounds={rounds}",
    )


def bb_presets() -> dict:
    """Named polynomial parameter sets shipped as data (see data/bb_codes.json)."""
    with resources.files("relaybp").joinpath("data/bb_codes.json").open() as f:
        return json.load(f)


def build_bb_preset(name: str, p_data: float, p_meas: float, rounds: int) -> DecodingProblem:
    presets = bb_presets()
    if name not in presets:
        raise ValueError(f"unknown bivariate-bicycle preset {name!r}; available: {sorted(presets)}")
    cfg = presets[name]
    problem = build_bivariate_bicycle(
        cfg["l"],
        cfg["m"],
        [tuple(t) for t in cfg["a_terms"]],
        [tuple(t) for t in cfg["b_terms"]],
        p_data,
        p_meas,
        rounds,
    )
    return problem
