"""Reader for real-valued Matrix Market files.

Supports the ``coordinate`` and ``array`` formats with ``general`` or
``symmetric`` symmetry.  Symmetric files are expanded to full storage.
Coordinate files load as ``SparseMatrix``; array files as ``DenseMatrix``.
"""

from __future__ import annotations

import os

import numpy as np

from .operators import DenseMatrix, NonFiniteError, SparseMatrix


class MatrixMarketError(ValueError):
    """Malformed Matrix Market input; ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None, path=None):
        self.message = message
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


_FIELDS = ("real", "integer", "double")
_SYMMETRIES = ("general", "symmetric")


def _parse_float(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise MatrixMarketError(f"cannot parse value {tok!r}", lineno) from None
    if not np.isfinite(v):
        raise MatrixMarketError(f"non-finite value {tok!r}", lineno)
    return v


def _parse_int(tok, lineno, what):
    try:
        return int(tok)
    except ValueError:
        raise MatrixMarketError(f"cannot parse {what} {tok!r}", lineno) from None


def parse_matrix_market(text: str):
    """Parse Matrix Market ``text`` into a ``DenseMatrix`` or ``SparseMatrix``."""
    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)

    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("expected header '%%MatrixMarket matrix <format> <field> <symmetry>'", 1)
    obj, fmt, field, symmetry = (h.lower() for h in header[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", 1)
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported format {fmt!r}", 1)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r} (only real-valued matrices)", 1)
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", 1)

    body = [
        (i + 1, ln.split())
        for i, ln in enumerate(lines[1:], start=1)
        if ln.strip() and not ln.lstrip().startswith("%")
    ]
    if not body:
        raise MatrixMarketError("missing size line", len(lines))

    size_line, size = body[0]
    expected = 3 if fmt == "coordinate" else 2
    if len(size) != expected:
        raise MatrixMarketError(f"size line needs {expected} integers", size_line)
    dims = [_parse_int(t, size_line, "size") for t in size]
    nrows, ncols = dims[0], dims[1]
    if nrows != ncols:
        raise MatrixMarketError(f"matrix must be square, got {nrows}x{ncols}", size_line)
    if nrows < 1:
        raise MatrixMarketError("matrix dimension must be positive", size_line)
    n = nrows
    entries = body[1:]

    if fmt == "coordinate":
        nnz = dims[2]
        if len(entries) != nnz:
            last = entries[-1][0] if entries else size_line
            raise MatrixMarketError(f"expected {nnz} entries, found {len(entries)}", last)
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        for k, (lineno, toks) in enumerate(entries):
            if len(toks) != 3:
                raise MatrixMarketError("coordinate entry needs 'row col value'", lineno)
            i = _parse_int(toks[0], lineno, "row index")
            j = _parse_int(toks[1], lineno, "column index")
            if not (1 <= i <= n and 1 <= j <= n):
                raise MatrixMarketError(f"index ({i}, {j}) out of range for n={n}", lineno)
            if symmetry == "symmetric" and j > i:
                raise MatrixMarketError("symmetric file has an entry above the diagonal", lineno)
            rows[k], cols[k], vals[k] = i - 1, j - 1, _parse_float(toks[2], lineno)
        if symmetry == "symmetric":
            off = rows != cols
            rows, cols, vals = (
                np.concatenate([rows, cols[off]]),
                np.concatenate([cols, rows[off]]),
                np.concatenate([vals, vals[off]]),
            )
        return SparseMatrix.from_coo(n, rows, cols, vals)

    # array format: column-major; symmetric stores the lower triangle only
    if symmetry == "symmetric":
        positions = [(i, j) for j in range(n) for i in range(j, n)]
    else:
        positions = [(i, j) for j in range(n) for i in range(n)]
    if len(entries) != len(positions):
        last = entries[-1][0] if entries else size_line
        raise MatrixMarketError(f"expected {len(positions)} values, found {len(entries)}", last)
    a = np.zeros((n, n))
    for (lineno, toks), (i, j) in zip(entries, positions):
        if len(toks) != 1:
            raise MatrixMarketError("array entry needs exactly one value", lineno)
        v = _parse_float(toks[0], lineno)
        a[i, j] = v
        if symmetry == "symmetric":
            a[j, i] = v
    return DenseMatrix(a)


def read_matrix_market(path):
    path = os.fspath(path)
    with open(path, encoding="ascii", errors="replace") as fh:
        text = fh.read()
    try:
        return parse_matrix_market(text)
    except MatrixMarketError as exc:
        raise MatrixMarketError(exc.message, exc.lineno, path) from None
    except NonFiniteError as exc:
        raise MatrixMarketError(str(exc), None, path) from None


def write_matrix_market(path, a, fmt: str = "coordinate"):
    """Write a dense array as a general real Matrix Market file."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"%%MatrixMarket matrix {fmt} real general\n")
        if fmt == "coordinate":
            r, c = np.nonzero(a)
            fh.write(f"{n} {n} {r.size}\n")
            for i, j in zip(r, c):
                fh.write(f"{i + 1} {j + 1} {a[i, j]:.17g}\n")
        elif fmt == "array":
            fh.write(f"{n} {n}\n")
            for v in a.T.ravel():
                fh.write(f"{v:.17g}\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
