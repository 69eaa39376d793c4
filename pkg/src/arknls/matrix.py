"""Dense and sparse matrix containers plus the few products the solver needs.

Everything is float64.  Dense storage is column-major because the solver's
hot loops read and write whole columns.  The sparse container is standard
CSR with sorted column indices, restricted to nonnegative values since it
only ever holds the data matrix of a nonnegative factorization.
"""

from __future__ import annotations

import math
from typing import Union

import numpy as np

__all__ = [
    "DenseMatrix",
    "SparseMatrixCSR",
    "MatrixRef",
    "gram",
    "at_times",
    "relative_residual",
    "frobenius_norm",
    "transposed",
    "row_dense",
]


class DenseMatrix:
    """Column-major dense real matrix.

    Wraps a Fortran-ordered, writable ``float64`` ndarray.  All stored
    values must be finite.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.asfortranarray(np.asarray(data, dtype=np.float64))
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-d array, got ndim={arr.ndim}")
        if not np.isfinite(arr).all():
            raise ValueError("dense matrix entries must be finite")
        self.data = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "DenseMatrix":
        # Fast path for freshly computed float64 results; skips validation.
        out = object.__new__(cls)
        out.data = np.asfortranarray(arr)
        return out

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "DenseMatrix":
        return cls._wrap(np.zeros((rows, cols), order="F"))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def copy(self) -> "DenseMatrix":
        return DenseMatrix._wrap(self.data.copy(order="F"))

    def __repr__(self) -> str:
        return f"DenseMatrix({self.rows}x{self.cols})"


class SparseMatrixCSR:
    """Compressed sparse row matrix with nonnegative finite values.

    ``row_offsets`` has length ``rows + 1`` and is nondecreasing; column
    indices are strictly increasing within each row.  Duplicate entries are
    therefore impossible once constructed; use :meth:`from_coo` to build
    from unsorted coordinate data.
    """

    __slots__ = ("rows", "cols", "row_offsets", "col_indices", "values")

    def __init__(self, rows, cols, row_offsets, col_indices, values):
        self.rows = int(rows)
        self.cols = int(cols)
        self.row_offsets = np.ascontiguousarray(row_offsets, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self._validate()

    def _validate(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        off = self.row_offsets
        if off.shape != (self.rows + 1,):
            raise ValueError("row_offsets must have length rows + 1")
        if off[0] != 0 or off[-1] != self.values.size:
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(off) < 0):
            raise ValueError("row_offsets must be nondecreasing")
        if self.col_indices.size != self.values.size:
            raise ValueError("col_indices and values must have equal length")
        if self.values.size:
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.cols:
                raise ValueError("column index out of range")
            rows_of = np.repeat(np.arange(self.rows), np.diff(off))
            same_row = rows_of[1:] == rows_of[:-1]
            if np.any(same_row & (np.diff(self.col_indices) <= 0)):
                raise ValueError("column indices must be strictly increasing per row")
        if not np.isfinite(self.values).all():
            raise ValueError("sparse values must be finite")
        if self.values.size and self.values.min() < 0.0:
            raise ValueError("sparse values must be nonnegative")

    @classmethod
    def from_coo(cls, rows, cols, row_idx, col_idx, values) -> "SparseMatrixCSR":
        """Build from coordinate triples; duplicates are summed."""
        ri = np.asarray(row_idx, dtype=np.int64)
        ci = np.asarray(col_idx, dtype=np.int64)
        vals = np.asarray(values, dtype=np.float64)
        if not (ri.shape == ci.shape == vals.shape):
            raise ValueError("coordinate arrays must have equal length")
        if ri.size:
            order = np.lexsort((ci, ri))
            ri, ci, vals = ri[order], ci[order], vals[order]
            fresh = np.empty(ri.size, dtype=bool)
            fresh[0] = True
            fresh[1:] = (ri[1:] != ri[:-1]) | (ci[1:] != ci[:-1])
            starts = np.flatnonzero(fresh)
            vals = np.add.reduceat(vals, starts)
            ri, ci = ri[starts], ci[starts]
        offsets = np.zeros(rows + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(np.bincount(ri, minlength=rows))
        return cls(rows, cols, offsets, ci, vals)

    @property
    def nnz(self) -> int:
        return self.values.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def to_dense(self) -> DenseMatrix:
        out = np.zeros((self.rows, self.cols), order="F")
        for i in range(self.rows):
            lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
            out[i, self.col_indices[lo:hi]] = self.values[lo:hi]
        return DenseMatrix._wrap(out)

    def transpose(self) -> "SparseMatrixCSR":
        """CSR storage of the transpose (equivalently a CSC view of self)."""
        rows_of = np.repeat(np.arange(self.rows), np.diff(self.row_offsets))
        order = np.argsort(self.col_indices, kind="stable")
        offsets = np.zeros(self.cols + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(np.bincount(self.col_indices, minlength=self.cols))
        return SparseMatrixCSR(
            self.cols, self.rows, offsets, rows_of[order], self.values[order]
        )

    def __repr__(self) -> str:
        return f"SparseMatrixCSR({self.rows}x{self.cols}, nnz={self.nnz})"


MatrixRef = Union[DenseMatrix, SparseMatrixCSR]


def gram(U: DenseMatrix) -> DenseMatrix:
    """Gram matrix of the columns of ``U``.

    The upper triangle is computed and mirrored, so the result is
    symmetric exactly, not just up to rounding.
    """
    if U.cols < 1:
        raise ValueError("gram requires at least one column")
    prod = U.data.T @ U.data
    upper = np.triu(prod)
    return DenseMatrix._wrap(upper + np.triu(prod, 1).T)


def at_times(A: MatrixRef, U: DenseMatrix) -> DenseMatrix:
    """Product of the transpose of ``A`` (m x n) with ``U`` (m x r).

    The sparse path walks CSR rows of ``A``, accumulating each scaled row
    of ``U`` into the output row given by the column index.
    """
    u = U.data
    if A.rows != u.shape[0]:
        raise ValueError(
            f"dimension mismatch: A has {A.rows} rows, U has {u.shape[0]}"
        )
    if isinstance(A, DenseMatrix):
        return DenseMatrix._wrap(A.data.T @ u)
    r = u.shape[1]
    out = np.zeros((A.cols, r), order="F")
    if A.nnz:
        rows_of = np.repeat(np.arange(A.rows), np.diff(A.row_offsets))
        scaled = A.values[:, None] * u[rows_of, :]
        for c in range(r):
            out[:, c] = np.bincount(A.col_indices, weights=scaled[:, c], minlength=A.cols)
    return DenseMatrix._wrap(out)


def frobenius_norm(A: MatrixRef) -> float:
    return math.sqrt(_fro_squared(A))


def _fro_squared(A: MatrixRef) -> float:
    if isinstance(A, DenseMatrix):
        flat = A.data.ravel(order="K")
        return float(np.dot(flat, flat))
    return float(np.dot(A.values, A.values))


def relative_residual(A: MatrixRef, U: DenseMatrix, V: DenseMatrix) -> float:
    """Frobenius norm of ``A - U V^T`` divided by the norm of ``A``.

    Uses the trace identity
    ``|A - U V^T|^2 = |A|^2 - 2 <A^T U, V> + <U^T U, V^T V>``
    so the low-rank product is never materialized.  The radicand is clamped
    at zero: near an exact fit it can come out slightly negative in floats.
    """
    if U.rows != A.rows or V.rows != A.cols or U.cols != V.cols:
        raise ValueError("factor dimensions do not conform with A")
    a2 = _fro_squared(A)
    if a2 == 0.0:
        raise ValueError("relative residual undefined for an all-zero matrix")
    h = at_times(A, U).data
    cross = float(np.sum(h * V.data))
    quad = float(np.sum((U.data.T @ U.data) * (V.data.T @ V.data)))
    return math.sqrt(max(a2 - 2.0 * cross + quad, 0.0) / a2)


def transposed(A: MatrixRef) -> MatrixRef:
    """Materialized transpose, used to run the mirrored half-sweep."""
    if isinstance(A, DenseMatrix):
        return DenseMatrix._wrap(np.asfortranarray(A.data.T))
    return A.transpose()


def row_dense(A: MatrixRef, i: int) -> np.ndarray:
    """Row ``i`` of ``A`` as a fresh dense vector of length ``A.cols``."""
    if not 0 <= i < A.rows:
        raise IndexError(f"row {i} out of range for {A.rows}-row matrix")
    if isinstance(A, DenseMatrix):
        return A.data[i, :].copy()
    out = np.zeros(A.cols)
    lo, hi = A.row_offsets[i], A.row_offsets[i + 1]
    out[A.col_indices[lo:hi]] = A.values[lo:hi]
    return out
