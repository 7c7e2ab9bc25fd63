"""Linear operators exposed through matrix-vector products.

An operator only has to provide ``matvec``.  Operators backed by stored
entries (``DenseMatrix``, ``SparseMatrix`` and compositions of them) also
expose ``entry(i, j)`` and ``to_dense()``, which the exact quantities below
rely on.

Classes
-------

- LinearOperator : base class, validates inputs and outputs of ``matvec``.
- FunctionOperator : wraps an arbitrary ``x -> Ax`` callable (implicit).
- DenseMatrix : row-major dense backing store.
- SparseMatrix : compressed-row backing store.
- IdentityOperator, SumOperator, ScaledOperator, ProductOperator
- CountingOperator : counts matvec invocations of a wrapped operator.
"""

from __future__ import annotations

import threading
from typing import Callable

import numpy as np


class DimensionMismatch(ValueError):
    pass


class NonFiniteError(ValueError):
    pass


class ImplicitOperatorError(TypeError):
    """Raised when explicit entries are needed but the operator is matvec-only."""


def _check_vector(x, n: int, what: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise DimensionMismatch(f"{what} has shape {x.shape}, expected ({n},)")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{what} contains NaN or Inf")
    return x


class LinearOperator:
    """Square ``n x n`` operator available through ``matvec``.

    Subclasses implement ``_matvec`` and, when entries are stored,
    ``_to_dense``.  Instances are treated as immutable.
    """

    concurrent_safe = True

    def __init__(self, dim: int):
        dim = int(dim)
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = dim

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.dim)

    @property
    def has_explicit_entries(self) -> bool:
        return False

    def matvec(self, x) -> np.ndarray:
        x = _check_vector(x, self.dim)
        y = np.asarray(self._matvec(x), dtype=np.float64)
        if y.shape != (self.dim,):
            raise DimensionMismatch(f"matvec returned shape {y.shape}, expected ({self.dim},)")
        return y

    def _matvec(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def entry(self, i: int, j: int) -> float:
        return float(self.to_dense()[i, j])

    def to_dense(self) -> np.ndarray:
        if not self.has_explicit_entries:
            raise ImplicitOperatorError(
                f"{type(self).__name__} does not expose explicit entries"
            )
        return self._to_dense()

    def _to_dense(self) -> np.ndarray:
        raise NotImplementedError

    def __add__(self, other):
        if isinstance(other, LinearOperator):
            return SumOperator(self, other)
        return NotImplemented

    def __mul__(self, alpha):
        if np.isscalar(alpha):
            return ScaledOperator(self, alpha)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return ScaledOperator(self, -1.0)

    def __sub__(self, other):
        if isinstance(other, LinearOperator):
            return SumOperator(self, -other)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            return ProductOperator(self, other)
        return self.matvec(other)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class FunctionOperator(LinearOperator):
    """Implicit operator defined by a matvec callable.

    Parameters
    ----------
    dim : int
        Operator dimension ``n``.
    matvec : callable
        Maps an ``n``-vector ``x`` to ``Ax``.  Must be deterministic.
    concurrent_safe : bool
        Whether ``matvec`` may be called from several threads at once.
    """

    def __init__(self, dim: int, matvec: Callable[[np.ndarray], np.ndarray], concurrent_safe: bool = False):
        super().__init__(dim)
        self._fun = matvec
        self.concurrent_safe = bool(concurrent_safe)

    def _matvec(self, x):
        return self._fun(x)


class DenseMatrix(LinearOperator):
    """Operator backed by an ``n x n`` row-major array of finite values."""

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64, order="C")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("matrix entries contain NaN or Inf")
        super().__init__(a.shape[0])
        a.setflags(write=False)
        self.entries = a

    @property
    def has_explicit_entries(self):
        return True

    def _matvec(self, x):
        return self.entries @ x

    def entry(self, i, j):
        return float(self.entries[i, j])

    def _to_dense(self):
        return self.entries.copy()


class SparseMatrix(LinearOperator):
    """Operator backed by compressed-row (CSR) storage.

    Column indices must be strictly increasing within each row; use
    ``from_coo`` to build from unordered triplets (duplicates are summed).
    """

    def __init__(self, dim: int, indptr, indices, data):
        super().__init__(dim)
        indptr = np.array(indptr, dtype=np.int64)
        indices = np.array(indices, dtype=np.int64)
        data = np.array(data, dtype=np.float64)
        if indptr.shape != (self.dim + 1,) or indptr[0] != 0:
            raise ValueError("row offsets must have length dim + 1 and start at 0")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("row offsets must be monotone")
        if indptr[-1] != indices.shape[0] or indices.shape != data.shape:
            raise ValueError("row offsets, column indices and values disagree in length")
        if indices.size and (indices.min() < 0 or indices.max() >= self.dim):
            raise ValueError("column index out of range")
        rows = np.repeat(np.arange(self.dim), np.diff(indptr))
        if indices.size > 1:
            same_row = rows[1:] == rows[:-1]
            if np.any(same_row & (indices[1:] <= indices[:-1])):
                raise ValueError("column indices must be strictly increasing within each row")
        if not np.all(np.isfinite(data)):
            raise NonFiniteError("matrix values contain NaN or Inf")
        for arr in (indptr, indices, data, rows):
            arr.setflags(write=False)
        self.indptr, self.indices, self.data = indptr, indices, data
        self._rows = rows

    @classmethod
    def from_coo(cls, dim, rows, cols, values):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= dim):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= dim):
            raise ValueError("column index out of range")
        key = rows * dim + cols
        uniq, inverse = np.unique(key, return_inverse=True)
        summed = np.zeros(uniq.shape[0])
        np.add.at(summed, inverse, values)
        r, c = np.divmod(uniq, dim)
        indptr = np.zeros(dim + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=dim), out=indptr[1:])
        return cls(dim, indptr, c, summed)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=np.float64)
        r, c = np.nonzero(a)
        return cls.from_coo(a.shape[0], r, c, a[r, c])

    @property
    def nnz(self) -> int:
        return int(self.data.shape[0])

    @property
    def has_explicit_entries(self):
        return True

    def _matvec(self, x):
        return np.bincount(self._rows, weights=self.data * x[self.indices], minlength=self.dim)

    def entry(self, i, j):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        k = lo + np.searchsorted(self.indices[lo:hi], j)
        if k < hi and self.indices[k] == j:
            return float(self.data[k])
        return 0.0

    def _to_dense(self):
        a = np.zeros((self.dim, self.dim))
        a[self._rows, self.indices] = self.data
        return a


class IdentityOperator(LinearOperator):
    @property
    def has_explicit_entries(self):
        return True

    def _matvec(self, x):
        return x.copy()

    def _to_dense(self):
        return np.eye(self.dim)


class SumOperator(LinearOperator):
    """``A + B`` evaluated as ``Ax + Bx``."""

    def __init__(self, left: LinearOperator, right: LinearOperator):
        if left.dim != right.dim:
            raise DimensionMismatch(f"cannot add operators of dims {left.dim} and {right.dim}")
        super().__init__(left.dim)
        self.left, self.right = left, right
        self.concurrent_safe = left.concurrent_safe and right.concurrent_safe

    @property
    def has_explicit_entries(self):
        return self.left.has_explicit_entries and self.right.has_explicit_entries

    def _matvec(self, x):
        return self.left.matvec(x) + self.right.matvec(x)

    def _to_dense(self):
        return self.left.to_dense() + self.right.to_dense()


class ScaledOperator(LinearOperator):
    def __init__(self, op: LinearOperator, alpha: float):
        alpha = float(alpha)
        if not np.isfinite(alpha):
            raise NonFiniteError("scale factor must be finite")
        super().__init__(op.dim)
        self.op, self.alpha = op, alpha
        self.concurrent_safe = op.concurrent_safe

    @property
    def has_explicit_entries(self):
        return self.op.has_explicit_entries

    def _matvec(self, x):
        return self.alpha * self.op.matvec(x)

    def _to_dense(self):
        return self.alpha * self.op.to_dense()


class ProductOperator(LinearOperator):
    """``A @ B`` evaluated as ``A(Bx)``; one matvec costs one call to each factor."""

    def __init__(self, left: LinearOperator, right: LinearOperator):
        if left.dim != right.dim:
            raise DimensionMismatch(f"cannot multiply operators of dims {left.dim} and {right.dim}")
        super().__init__(left.dim)
        self.left, self.right = left, right
        self.concurrent_safe = left.concurrent_safe and right.concurrent_safe

    @property
    def has_explicit_entries(self):
        return self.left.has_explicit_entries and self.right.has_explicit_entries

    def _matvec(self, x):
        return self.left.matvec(self.right.matvec(x))

    def _to_dense(self):
        return self.left.to_dense() @ self.right.to_dense()


class CountingOperator(LinearOperator):
    """Wraps an operator and counts ``matvec`` calls (thread-safe)."""

    def __init__(self, op: LinearOperator):
        super().__init__(op.dim)
        self.op = op
        self.concurrent_safe = op.concurrent_safe
        self._lock = threading.Lock()
        self.count = 0

    @property
    def has_explicit_entries(self):
        return self.op.has_explicit_entries

    def _matvec(self, x):
        with self._lock:
            self.count += 1
        return self.op.matvec(x)

    def _to_dense(self):
        return self.op.to_dense()


def as_operator(a) -> LinearOperator:
    """Return ``a`` if it is already an operator, otherwise wrap it as a dense matrix."""
    if isinstance(a, LinearOperator):
        return a
    return DenseMatrix(a)


def matvec(op: LinearOperator, x) -> np.ndarray:
    return as_operator(op).matvec(x)


def hadamard(a, b) -> np.ndarray:
    """Entrywise product of two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise DimensionMismatch(f"hadamard of shapes {a.shape} and {b.shape}")
    return a * b


def exact_diagonal(op, allow_matvecs: bool = False) -> np.ndarray:
    """Return ``diag(A)``.

    Reads stored entries when available.  For matvec-only operators the
    diagonal is extracted with ``n`` basis-vector products, which must be
    requested explicitly with ``allow_matvecs=True``.
    """
    op = as_operator(op)
    if op.has_explicit_entries and not allow_matvecs:
        return np.diagonal(op.to_dense()).copy()
    if not allow_matvecs:
        raise ImplicitOperatorError(
            "operator has no explicit entries; pass allow_matvecs=True to spend n matvecs"
        )
    d = np.empty(op.dim)
    e = np.zeros(op.dim)
    for j in range(op.dim):
        e[j] = 1.0
        d[j] = op.matvec(e)[j]
        e[j] = 0.0
    return d


def frobenius_norm(op) -> float:
    return float(np.linalg.norm(as_operator(op).to_dense(), "fro"))


def off_diagonal_frobenius(op) -> float:
    """Frobenius norm of ``A`` with its diagonal set to zero."""
    a = as_operator(op).to_dense()
    np.fill_diagonal(a, 0.0)
    return float(np.linalg.norm(a, "fro"))


def off_diagonal_part(op) -> np.ndarray:
    a = as_operator(op).to_dense()
    np.fill_diagonal(a, 0.0)
    return a
