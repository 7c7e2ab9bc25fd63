import numpy as np
import pytest

from diagest.mmio import MatrixMarketError, parse_matrix_market, read_matrix_market, write_matrix_market
from diagest.operators import DenseMatrix, SparseMatrix


def test_coordinate_general(tightness):
    op = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 1\n1 2 1.0\n")
    assert isinstance(op, SparseMatrix)
    np.testing.assert_array_equal(op.to_dense(), tightness)


def test_coordinate_symmetric_expands():
    text = "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 2\n3 1 -1.5\n2 2 4\n"
    a = parse_matrix_market(text).to_dense()
    np.testing.assert_array_equal(a, [[2, 0, -1.5], [0, 4, 0], [-1.5, 0, 0]])


def test_array_general_is_column_major():
    text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n"
    op = parse_matrix_market(text)
    assert isinstance(op, DenseMatrix)
    np.testing.assert_array_equal(op.to_dense(), [[1, 3], [2, 4]])


def test_array_symmetric():
    text = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n5\n3\n"
    np.testing.assert_array_equal(parse_matrix_market(text).to_dense(), [[1, 5], [5, 3]])


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n", 1),
        ("%MatrixMarket garbage\n1 1 1\n1 1 1\n", 1),
        ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 x 3\n", 4),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3),
        ("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1.0\n", 2),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 nan\n", 3),
        ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n", 3),
        ("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n", 5),
    ],
)
def test_errors_name_the_line(text, lineno):
    with pytest.raises(MatrixMarketError) as info:
        parse_matrix_market(text)
    assert info.value.lineno == lineno
    assert f"{lineno}:" in str(info.value)


@pytest.mark.parametrize("fmt", ["coordinate", "array"])
def test_roundtrip(tmp_path, rng, fmt):
    a = rng.standard_normal((5, 5))
    a[1, 2] = 0.0
    path = tmp_path / "a.mtx"
    write_matrix_market(path, a, fmt=fmt)
    np.testing.assert_array_equal(read_matrix_market(path).to_dense(), a)


def test_read_error_carries_path(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("not a header\n")
    with pytest.raises(MatrixMarketError) as info:
        read_matrix_market(path)
    assert str(path) in str(info.value)
    assert info.value.lineno == 1
