"""Decoding-problem container, transforms, and file interchange format.

A decoding problem is a triple (H, A, p): a check matrix mapping error
vectors to syndromes, an action matrix mapping error vectors to their
logical effect, and per-error prior probabilities.  Rows of H and A may
carry X/Z type tags so CSS problems can be split into two independent
single-type problems.

File format (``relaybp-problem v1``), line oriented::

    relaybp-problem v1
    name <rest of line>
    dims <M> <N> <K>
    description <rest of line>        # optional
    htypes <M characters from {X,Z}>  # optional, one tag per H row
    atypes <K characters from {X,Z}>  # optional, one tag per A row
    H
    %%MatrixMarket matrix coordinate pattern general
    <M> <N> <nnz>
    <row> <col>                       # 1-based, one entry per line
    ...
    A
    %%MatrixMarket matrix coordinate pattern general
    <K> <N> <nnz>
    ...
    p
    <N lines, one decimal prior per line>
    end

Priors are written with ``repr(float)`` (shortest round-trip decimal), so a
save/load cycle is bit-exact.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, replace
from typing import Sequence, TextIO

import numpy as np

from .gf2 import BitVector, SparseBinaryMatrix, identical_column_groups

FORMAT_MAGIC = "relaybp-problem v1"


class ProblemFormatError(ValueError):
    """Raised when a problem file fails to parse or violates an invariant."""


@dataclass(frozen=True)
class DecodingProblem:
    """One decoding instance: check matrix H, action matrix A, priors p.

    Invariants checked at construction: H and A have the same column count,
    which equals len(p), and every prior lies strictly inside (0, 1).
    All-zero H columns are tolerated in memory (XZ splitting produces them
    transiently) but rejected by :func:`load_problem`; see ``degenerate``.
    """

    H: SparseBinaryMatrix
    A: SparseBinaryMatrix
    p: np.ndarray
    h_row_types: str | None = None
    a_row_types: str | None = None
    name: str = ""
    description: str = ""

    def __post_init__(self):
        p = np.ascontiguousarray(self.p, dtype=np.float64)
        p.flags.writeable = False
        object.__setattr__(self, "p", p)
        if self.H.cols != self.A.cols:
            raise ValueError(f"H has {self.H.cols} columns but A has {self.A.cols}")
        if p.size != self.H.cols:
            raise ValueError(f"p has length {p.size}, expected {self.H.cols}")
        bad = np.flatnonzero((p <= 0.0) | (p >= 1.0))
        if bad.size:
            raise ValueError(f"prior out of range (0,1) at column {bad[0]}: p={p[bad[0]]!r}")
        if self.h_row_types is not None:
            _check_types(self.h_row_types, self.H.rows, "htypes")
        if self.a_row_types is not None:
            _check_types(self.a_row_types, self.A.rows, "atypes")
        if "\n" in self.name or "\n" in self.description:
            raise ValueError("name and description must be single-line")

    @property
    def m(self) -> int:
        return self.H.rows

    @property
    def n(self) -> int:
        return self.H.cols

    @property
    def k(self) -> int:
        return self.A.rows

    @property
    def priors(self) -> np.ndarray:
        """Log-likelihood ratios lambda_j = log((1-p_j)/p_j)."""
        lam = np.log((1.0 - self.p) / self.p)
        lam.flags.writeable = False
        return lam

    @property
    def degenerate(self) -> bool:
        """True when H has no rows or contains an all-zero column."""
        return self.m == 0 or bool((self.H.column_degrees() == 0).any())

    def zero_columns(self) -> np.ndarray:
        return np.flatnonzero(self.H.column_degrees() == 0)

    def syndrome(self, error: BitVector | np.ndarray) -> BitVector:
        e = error if isinstance(error, BitVector) else BitVector(error)
        from .gf2 import matvec

        return matvec(self.H, e)

    def rescale_priors(self, scale: float) -> "DecodingProblem":
        """Return a copy with every p_j multiplied by ``scale``."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        q = self.p * scale
        if (q >= 1.0).any():
            j = int(np.flatnonzero(q >= 1.0)[0])
            raise ValueError(f"scaled prior at column {j} reaches {q[j]:g} >= 1")
        return replace(self, p=q)

    def select_columns(self, keep: Sequence[int]) -> "DecodingProblem":
        """Restrict the problem to a subset of error columns (order preserved)."""
        keep = np.asarray(keep, dtype=np.int64)
        remap = -np.ones(self.n, dtype=np.int64)
        remap[keep] = np.arange(keep.size)
        h_ent = self.H.entries()
        h_ent = h_ent[remap[h_ent[:, 1]] >= 0]
        h_ent[:, 1] = remap[h_ent[:, 1]]
        a_ent = self.A.entries()
        a_ent = a_ent[remap[a_ent[:, 1]] >= 0]
        a_ent[:, 1] = remap[a_ent[:, 1]]
        return replace(
            self,
            H=SparseBinaryMatrix(self.m, keep.size, h_ent),
            A=SparseBinaryMatrix(self.k, keep.size, a_ent),
            p=self.p[keep],
        )

    def content_hash(self) -> str:
        """SHA-256 of the canonical serialized form."""
        buf = io.StringIO()
        _write(self, buf)
        return hashlib.sha256(buf.getvalue().encode()).hexdigest()


def _check_types(tags: str, expected: int, what: str) -> None:
    if len(tags) != expected:
        raise ValueError(f"{what} has length {len(tags)}, expected {expected}")
    bad = set(tags) - {"X", "Z"}
    if bad:
        raise ValueError(f"{what} contains invalid tag(s) {sorted(bad)}; allowed: X, Z")


def log_prior_ratios(p: np.ndarray) -> np.ndarray:
    """lambda_j = log((1-p_j)/p_j); positive iff p_j < 1/2."""
    p = np.asarray(p, dtype=np.float64)
    return np.log((1.0 - p) / p)


# ---------------------------------------------------------------------------
# transforms


def xz_split(problem: DecodingProblem) -> tuple[DecodingProblem, DecodingProblem]:
    """Split a CSS problem into the X- and Z-decoding problems.

    The X-decoding problem keeps the H rows and A rows tagged ``Z`` (Z-type
    detectors fire on X errors, Z-type logicals witness X-type failures);
    the Z-decoding problem keeps the rows tagged ``X``.  Columns and priors
    are inherited unchanged, so columns with no remaining checks become
    all-zero (compress or drop them afterwards; see
    :func:`drop_inert_columns`).
    """
    if problem.h_row_types is None or problem.a_row_types is None:
        raise ValueError("xz_split requires X/Z type tags on every H row and A row")

    def extract(tag: str, suffix: str) -> DecodingProblem:
        h_rows = [i for i, t in enumerate(problem.h_row_types) if t == tag]
        a_rows = [i for i, t in enumerate(problem.a_row_types) if t == tag]
        h_ent = [(k, j) for k, i in enumerate(h_rows) for j in problem.H.row(i)]
        a_ent = [(k, j) for k, i in enumerate(a_rows) for j in problem.A.row(i)]
        return DecodingProblem(
            H=SparseBinaryMatrix(len(h_rows), problem.n, np.asarray(h_ent, dtype=np.int64).reshape(-1, 2)),
            A=SparseBinaryMatrix(len(a_rows), problem.n, np.asarray(a_ent, dtype=np.int64).reshape(-1, 2)),
            p=problem.p,
            h_row_types=tag * len(h_rows),
            a_row_types=tag * len(a_rows),
            name=f"{problem.name}{suffix}" if problem.name else suffix.strip("_"),
            description=problem.description,
        )

    return extract("Z", "_X"), extract("X", "_Z")


def drop_inert_columns(problem: DecodingProblem) -> DecodingProblem:
    """Remove columns that are all-zero in both H and A.

    Such errors neither trigger a detector nor cause a logical effect, so
    removing them changes no decoding outcome.  A column that is zero in H
    but not in A is an undetectable logical error and is refused.
    """
    h_deg = problem.H.column_degrees()
    a_deg = problem.A.column_degrees()
    undetectable = np.flatnonzero((h_deg == 0) & (a_deg != 0))
    if undetectable.size:
        raise ValueError(
            f"columns {undetectable.tolist()} are invisible to H but act on A "
            "(undetectable logical errors); refusing to drop"
        )
    keep = np.flatnonzero((h_deg != 0) | (a_deg != 0))
    if keep.size == problem.n:
        return problem
    return problem.select_columns(keep)


def merged_prior(ps: np.ndarray) -> float:
    """Probability that an odd number of independent events with probs ps occur."""
    ps = np.asarray(ps, dtype=np.float64)
    return float((1.0 - np.prod(1.0 - 2.0 * ps)) / 2.0)


def compress_columns(problem: DecodingProblem) -> DecodingProblem:
    """Merge identical H columns, keeping the smallest index of each group.

    The representative's prior becomes the probability that an odd number of
    the group's errors occur.  Requires the A columns within each H-identical
    group to be identical as well (guaranteed for problems whose circuit
    distance is at least two); otherwise the offending groups are reported.
    """
    groups = identical_column_groups(problem.H)
    if len(groups) == problem.n:
        return problem
    bad = []
    for g in groups:
        if len(g) == 1:
            continue
        ref = problem.A.column(g[0]).tobytes()
        if any(problem.A.column(j).tobytes() != ref for j in g[1:]):
            bad.append(g)
    if bad:
        raise ValueError(f"action columns differ within H-identical groups: {bad}")
    reps = [g[0] for g in groups]
    new_p = np.array([merged_prior(problem.p[g]) for g in groups])
    h_ent = [(int(i), jn) for jn, r in enumerate(reps) for i in problem.H.column(r)]
    a_ent = [(int(i), jn) for jn, r in enumerate(reps) for i in problem.A.column(r)]

    def build(rows: int, ent: list[tuple[int, int]]) -> SparseBinaryMatrix:
        return SparseBinaryMatrix(rows, len(reps), np.asarray(ent, dtype=np.int64).reshape(-1, 2))

    return replace(problem, H=build(problem.m, h_ent), A=build(problem.k, a_ent), p=new_p)


# ---------------------------------------------------------------------------
# serialization


def _write_mm(m: SparseBinaryMatrix, out: TextIO) -> None:
    out.write("%%MatrixMarket matrix coordinate pattern general\n")
    out.write(f"{m.rows} {m.cols} {m.nnz}\n")
    for r, c in m.entries():
        out.write(f"{r + 1} {c + 1}\n")


def _write(problem: DecodingProblem, out: TextIO) -> None:
    out.write(FORMAT_MAGIC + "\n")
    out.write(f"name {problem.name}\n")
    out.write(f"dims {problem.m} {problem.n} {problem.k}\n")
    if problem.description:
        out.write(f"description {problem.description}\n")
    if problem.h_row_types is not None and problem.m > 0:
        out.write(f"htypes {problem.h_row_types}\n")
    if problem.a_row_types is not None and problem.k > 0:
        out.write(f"atypes {problem.a_row_types}\n")
    out.write("H\n")
    _write_mm(problem.H, out)
    out.write("A\n")
    _write_mm(problem.A, out)
    out.write("p\n")
    for x in problem.p:
        out.write(repr(float(x)) + "\n")
    out.write("end\n")


def save_problem(problem: DecodingProblem, path) -> None:
    """Write a problem in the v1 interchange format (bit-exact round trip)."""
    with open(path, "w") as f:
        _write(problem, f)


class _Lines:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            self.pos += 1
            if line.strip():
                return line.rstrip("\n")
        raise ProblemFormatError(f"unexpected end of file at line {self.pos}")

    @property
    def lineno(self) -> int:
        return self.pos


def _read_mm(src: _Lines, what: str) -> SparseBinaryMatrix:
    header = src.next()
    if not header.startswith("%%MatrixMarket matrix coordinate pattern"):
        raise ProblemFormatError(f"line {src.lineno}: expected MatrixMarket pattern header for {what}")
    dims = src.next().split()
    if len(dims) != 3:
        raise ProblemFormatError(f"line {src.lineno}: expected '<rows> <cols> <nnz>' for {what}")
    rows, cols, nnz = (int(x) for x in dims)
    ent = np.empty((nnz, 2), dtype=np.int64)
    for k in range(nnz):
        parts = src.next().split()
        if len(parts) != 2:
            raise ProblemFormatError(f"line {src.lineno}: expected '<row> <col>' in {what}")
        r, c = int(parts[0]) - 1, int(parts[1]) - 1
        if not (0 <= r < rows and 0 <= c < cols):
            raise ProblemFormatError(f"line {src.lineno}: entry ({r + 1},{c + 1}) outside {rows}x{cols} {what}")
        ent[k] = (r, c)
    try:
        return SparseBinaryMatrix(rows, cols, ent)
    except ValueError as exc:
        raise ProblemFormatError(f"{what}: {exc}") from exc


def load_problem(path) -> DecodingProblem:
    """Parse a v1 interchange file and validate all invariants.

    Rejects out-of-range priors, dimension mismatches, duplicate entries, and
    all-zero H columns (an error every decoder would be blind to).
    """
    with open(path) as f:
        text = f.read()
    return loads_problem(text)


def loads_problem(text: str) -> DecodingProblem:
    src = _Lines(text)
    if src.next() != FORMAT_MAGIC:
        raise ProblemFormatError(f"not a '{FORMAT_MAGIC}' file")
    name = ""
    description = ""
    htypes: str | None = None
    atypes: str | None = None
    dims: tuple[int, int, int] | None = None
    line = src.next()
    while line != "H":
        key, _, value = line.partition(" ")
        if key == "name":
            name = value
        elif key == "dims":
            parts = value.split()
            if len(parts) != 3:
                raise ProblemFormatError(f"line {src.lineno}: dims needs '<M> <N> <K>'")
            dims = tuple(int(x) for x in parts)
        elif key == "description":
            description = value
        elif key == "htypes":
            htypes = value.strip()
        elif key == "atypes":
            atypes = value.strip()
        else:
            raise ProblemFormatError(f"line {src.lineno}: unknown header field {key!r}")
        line = src.next()
    H = _read_mm(src, "H")
    if src.next() != "A":
        raise ProblemFormatError("expected 'A' section after H")
    A = _read_mm(src, "A")
    if dims is not None and dims != (H.rows, H.cols, A.rows):
        raise ProblemFormatError(
            f"header dims {dims} disagree with matrix sections ({H.rows}, {H.cols}, {A.rows})"
        )
    if src.next() != "p":
        raise ProblemFormatError("expected 'p' section after A")
    p = np.empty(H.cols, dtype=np.float64)
    for j in range(H.cols):
        tok = src.next()
        try:
            p[j] = float(tok)
        except ValueError as exc:
            raise ProblemFormatError(f"line {src.lineno}: bad prior {tok!r} at column {j}") from exc
        if not (0.0 < p[j] < 1.0) or math.isnan(p[j]):
            raise ProblemFormatError(f"line {src.lineno}: prior out of range (0,1) at column {j}: {tok}")
    if src.next() != "end":
        raise ProblemFormatError("expected 'end' after priors")
    if htypes is not None and H.rows == 0:
        htypes = ""
    if atypes is not None and A.rows == 0:
        atypes = ""
    try:
        problem = DecodingProblem(
            H=H, A=A, p=p, h_row_types=htypes, a_row_types=atypes, name=name, description=description
        )
    except ValueError as exc:
        raise ProblemFormatError(str(exc)) from exc
    zero = problem.zero_columns()
    if zero.size:
        raise ProblemFormatError(
            f"H columns {zero.tolist()} are all-zero (errors no detector can see); "
            "compress or drop inert columns before saving"
        )
    return problem
