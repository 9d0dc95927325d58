"""Sparse GF(2) vector and matrix primitives.

Everything in here is immutable after construction.  Decoding never mutates
the check or action matrices, so both orientations (row and column adjacency)
are built once up front; message passing and syndrome accumulation then walk
the adjacency lists directly.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


class BitVector:
    """Fixed-length binary vector, stored densely as read-only uint8."""

    __slots__ = ("_bits",)

    def __init__(self, bits: np.ndarray | Sequence[int]):
        arr = np.ascontiguousarray(bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("BitVector expects a 1-D 0/1 array")
        if arr.size and arr.max() > 1:
            raise ValueError("BitVector entries must be 0 or 1")
        arr.flags.writeable = False
        self._bits = arr

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(np.zeros(length, dtype=np.uint8))

    @classmethod
    def from_support(cls, length: int, support: Iterable[int]) -> "BitVector":
        idx = np.asarray(sorted(set(int(i) for i in support)), dtype=np.int64)
        if idx.size and (idx[0] < 0 or idx[-1] >= length):
            raise ValueError(f"support index out of range for length {length}")
        bits = np.zeros(length, dtype=np.uint8)
        bits[idx] = 1
        return cls(bits)

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def length(self) -> int:
        return self._bits.size

    @property
    def support(self) -> np.ndarray:
        """Sorted indices of the 1-entries."""
        return np.flatnonzero(self._bits)

    def weight(self) -> int:
        return int(self._bits.sum())

    def __len__(self) -> int:
        return self._bits.size

    def __getitem__(self, j: int) -> int:
        return int(self._bits[j])

    def __xor__(self, other: "BitVector") -> "BitVector":
        return xor(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self._bits.shape == other._bits.shape and bool(
            np.array_equal(self._bits, other._bits)
        )

    def __hash__(self) -> int:
        return hash(self._bits.tobytes())

    def any(self) -> bool:
        return bool(self._bits.any())

    def __repr__(self) -> str:
        body = "".join(str(b) for b in self._bits[:64])
        tail = "..." if self.length > 64 else ""
        return f"BitVector({body}{tail}, length={self.length})"


def xor(a: BitVector, b: BitVector) -> BitVector:
    """Symmetric difference of two equal-length bit vectors."""
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} != {b.length}")
    return BitVector(np.bitwise_xor(a.bits, b.bits))


class SparseBinaryMatrix:
    """Binary matrix held as consistent row- and column-adjacency lists.

    The entry set is stored twice: CSR-style (per-row sorted column indices)
    and CSC-style (per-column sorted row indices).  Both views are built once
    and kept read-only, which makes instances safe to share across concurrent
    decode workers.
    """

    __slots__ = (
        "rows",
        "cols",
        "row_indptr",
        "row_indices",
        "col_indptr",
        "col_indices",
    )

    def __init__(self, rows: int, cols: int, entries: np.ndarray):
        """Build from an (nnz, 2) array of (row, col) coordinates."""
        entries = np.asarray(entries, dtype=np.int64).reshape(-1, 2)
        if entries.size:
            if entries[:, 0].min() < 0 or entries[:, 0].max() >= rows:
                raise ValueError("row index out of range")
            if entries[:, 1].min() < 0 or entries[:, 1].max() >= cols:
                raise ValueError("column index out of range")
        order = np.lexsort((entries[:, 1], entries[:, 0]))
        entries = entries[order]
        if entries.shape[0] > 1:
            dup = np.all(entries[1:] == entries[:-1], axis=1)
            if dup.any():
                r, c = entries[1:][dup][0]
                raise ValueError(f"duplicate entry at row {r}, column {c}")
        self.rows = int(rows)
        self.cols = int(cols)
        r = entries[:, 0].astype(np.int32)
        c = entries[:, 1].astype(np.int32)
        self.row_indptr = np.zeros(rows + 1, dtype=np.int32)
        np.add.at(self.row_indptr, r + 1, 1)
        np.cumsum(self.row_indptr, out=self.row_indptr)
        self.row_indices = c.copy()
        # column view: sort by (col, row)
        order_c = np.lexsort((r, c))
        self.col_indptr = np.zeros(cols + 1, dtype=np.int32)
        np.add.at(self.col_indptr, c + 1, 1)
        np.cumsum(self.col_indptr, out=self.col_indptr)
        self.col_indices = r[order_c].copy()
        for a in (self.row_indptr, self.row_indices, self.col_indptr, self.col_indices):
            a.flags.writeable = False

    @classmethod
    def from_dense(cls, dense: np.ndarray | Sequence[Sequence[int]]) -> "SparseBinaryMatrix":
        d = np.asarray(dense, dtype=np.uint8)
        if d.ndim != 2:
            raise ValueError("expected a 2-D array")
        rc = np.argwhere(d != 0)
        return cls(d.shape[0], d.shape[1], rc)

    @classmethod
    def from_rows(cls, rows: int, cols: int, row_supports: Sequence[Iterable[int]]) -> "SparseBinaryMatrix":
        ent = [(i, j) for i, sup in enumerate(row_supports) for j in sup]
        return cls(rows, cols, np.asarray(ent, dtype=np.int64).reshape(-1, 2))

    @property
    def nnz(self) -> int:
        return int(self.row_indices.size)

    def row(self, i: int) -> np.ndarray:
        """Sorted column indices of row i."""
        return self.row_indices[self.row_indptr[i] : self.row_indptr[i + 1]]

    def column(self, j: int) -> np.ndarray:
        """Sorted row indices of column j."""
        return self.col_indices[self.col_indptr[j] : self.col_indptr[j + 1]]

    def entries(self) -> np.ndarray:
        """All (row, col) coordinates in row-major order."""
        r = np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.row_indptr))
        return np.column_stack([r, self.row_indices.astype(np.int64)])

    def to_dense(self) -> np.ndarray:
        d = np.zeros((self.rows, self.cols), dtype=np.uint8)
        ent = self.entries()
        if ent.size:
            d[ent[:, 0], ent[:, 1]] = 1
        return d

    def column_degrees(self) -> np.ndarray:
        return np.diff(self.col_indptr)

    def row_degrees(self) -> np.ndarray:
        return np.diff(self.row_indptr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseBinaryMatrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.row_indptr, other.row_indptr)
            and np.array_equal(self.row_indices, other.row_indices)
        )

    def __hash__(self) -> int:  # consistent with __eq__, used rarely
        return hash((self.rows, self.cols, self.row_indices.tobytes()))

    def __repr__(self) -> str:
        return f"SparseBinaryMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


def matvec(m: SparseBinaryMatrix, v: BitVector) -> BitVector:
    """GF(2) matrix-vector product: result[i] = parity of row i over supp(v)."""
    if v.length != m.cols:
        raise ValueError(f"dimension mismatch: matrix has {m.cols} columns, vector length {v.length}")
    counts = np.zeros(m.rows, dtype=np.int64)
    sup = v.support
    if sup.size:
        touched = np.concatenate([m.column(int(j)) for j in sup])
        counts += np.bincount(touched, minlength=m.rows)
    return BitVector((counts & 1).astype(np.uint8))


def matvec_dense(m: SparseBinaryMatrix, bits: np.ndarray) -> np.ndarray:
    """matvec on a plain uint8 array, returning a plain uint8 array."""
    return matvec(m, BitVector(bits)).bits


def identical_column_groups(m: SparseBinaryMatrix) -> list[list[int]]:
    """Partition column indices into maximal groups of bit-identical columns.

    Groups are ordered by their smallest member; identity is decided on the
    exact sorted row-index lists, not on hashes.
    """
    buckets: dict[bytes, list[int]] = {}
    order: list[bytes] = []
    for j in range(m.cols):
        key = m.column(j).tobytes()
        if key not in buckets:
            buckets[key] = []
            order.append(key)
        buckets[key].append(j)
    return [buckets[k] for k in order]
