from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singleshot.gf2 import (
    BitMatrix,
    BitVector,
    DimensionError,
    EchelonBasis,
    InconsistentSystemError,
    batch_mat_vec,
    express_rows,
    kernel_basis,
    mat_mul,
    mat_vec_mul,
    min_distance,
    rank,
    row_reduce,
    rowspace_contains,
    solve,
    span_array,
    vec_mat_mul,
    weight_enumerator,
)


@st.composite
def matrices(draw, max_rows=8, max_cols=12, min_rows=0, min_cols=1):
    nrows = draw(st.integers(min_rows, max_rows))
    ncols = draw(st.integers(min_cols, max_cols))
    rows = draw(st.lists(st.integers(0, (1 << ncols) - 1), min_size=nrows, max_size=nrows))
    return BitMatrix(tuple(rows), ncols)


def dense(M: BitMatrix) -> np.ndarray:
    return M.to_array().astype(np.int64)


def brute_rank(M: BitMatrix) -> int:
    """Rank as log2 of the span size, counted by enumerating every row subset."""
    span = set()
    for mask in range(1 << M.nrows):
        acc = 0
        for i in range(M.nrows):
            if mask >> i & 1:
                acc ^= M.rows[i]
        span.add(acc)
    return len(span).bit_length() - 1


def test_vector_parse_and_format_round_trip():
    v = BitVector.parse("0110 1")
    assert v.length == 5
    assert v.support == [1, 2, 4]
    assert str(v) == "01101"
    assert v.weight == 3


def test_vector_ops():
    a = BitVector.from_bits([1, 0, 1, 1])
    b = BitVector.from_support(4, [0, 1])
    assert (a ^ b).to_list() == [0, 1, 1, 1]
    assert a.dot(b) == 1
    assert a.distance(b) == 3
    assert a.concat(b).to_list() == [1, 0, 1, 1, 1, 1, 0, 0]
    with pytest.raises(DimensionError):
        a ^ BitVector.zeros(3)


def test_matrix_parse_skips_comments_and_blank_lines():
    M = BitMatrix.parse("# header\n1 0 1\n\n0 1 1\n")
    assert M.shape == (2, 3)
    assert M.to_array().tolist() == [[1, 0, 1], [0, 1, 1]]
    assert BitMatrix.parse(M.format()) == M


def test_matrix_parse_rejects_ragged_rows():
    with pytest.raises(ValueError):
        BitMatrix.parse("1 0 1\n0 1\n")


def test_identity_rank_and_kernel():
    I = BitMatrix.identity(5)
    assert rank(I) == 5
    assert kernel_basis(I).nrows == 0


def test_solve_inconsistent_system():
    M = BitMatrix.parse("1 1\n1 1")
    with pytest.raises(InconsistentSystemError):
        solve(M, BitVector.parse("10"))


def test_express_rows_reports_offending_row():
    H = BitMatrix.parse("1 1 0 0\n0 1 1 0")
    P = BitMatrix.parse("1 0 1 0\n0 0 0 1")
    with pytest.raises(InconsistentSystemError) as err:
        express_rows(H, P)
    assert err.value.row == 1


def test_min_distance_trivial_code_rejected():
    with pytest.raises(ValueError):
        min_distance(BitMatrix.zeros(2, 4))


def test_hamming_code_distance():
    G = BitMatrix.parse("1 0 0 0 1 1 0\n0 1 0 0 1 0 1\n0 0 1 0 0 1 1\n0 0 0 1 1 1 1")
    assert min_distance(G) == (3, 7)
    assert weight_enumerator(G) == [1, 0, 0, 7, 7, 0, 0, 1]


@settings(max_examples=200, deadline=None)
@given(matrices(), st.data())
def test_mat_vec_matches_dense_product(M, data):
    v = BitVector(M.ncols, data.draw(st.integers(0, (1 << M.ncols) - 1)))
    expect = dense(M) @ np.array(v.to_list()) % 2
    assert mat_vec_mul(M, v).to_list() == expect.tolist()


@settings(max_examples=200, deadline=None)
@given(matrices(min_rows=1), st.data())
def test_vec_mat_matches_dense_product(M, data):
    v = BitVector(M.nrows, data.draw(st.integers(0, (1 << M.nrows) - 1)))
    expect = np.array(v.to_list()) @ dense(M) % 2
    assert vec_mat_mul(v, M).to_list() == expect.tolist()


@settings(max_examples=100, deadline=None)
@given(matrices(min_rows=1), st.data())
def test_mat_mul_matches_dense(A, data):
    ncols = data.draw(st.integers(1, 10))
    rows = data.draw(st.lists(st.integers(0, (1 << ncols) - 1), min_size=A.ncols, max_size=A.ncols))
    B = BitMatrix(tuple(rows), ncols)
    expect = dense(A) @ dense(B) % 2
    assert mat_mul(A, B).to_array().tolist() == expect.tolist()


@settings(max_examples=200, deadline=None)
@given(matrices())
def test_row_reduce_transform_and_rank(M):
    red = row_reduce(M)
    assert mat_mul(red.transform, M) == red.reduced
    assert rank(red.transform) == M.nrows
    assert red.rank == brute_rank(M)
    assert list(red.pivots) == sorted(red.pivots)
    for r, p in enumerate(red.pivots):
        column = [row >> p & 1 for row in red.reduced.rows]
        assert column == [int(i == r) for i in range(M.nrows)]


@settings(max_examples=200, deadline=None)
@given(matrices())
def test_kernel_rank_nullity(M):
    K = kernel_basis(M)
    assert K.nrows + rank(M) == M.ncols
    assert rank(K) == K.nrows
    for v in K:
        assert mat_vec_mul(M, v).weight == 0


@settings(max_examples=200, deadline=None)
@given(matrices(min_rows=1), st.data())
def test_solve_returns_a_solution(M, data):
    x = BitVector(M.ncols, data.draw(st.integers(0, (1 << M.ncols) - 1)))
    b = mat_vec_mul(M, x)
    assert mat_vec_mul(M, solve(M, b)) == b


@settings(max_examples=150, deadline=None)
@given(matrices(min_rows=1, max_rows=6), st.data())
def test_express_rows_reconstructs(H, data):
    H = row_reduce(H).reduced.take_rows(range(row_reduce(H).rank))
    if H.nrows == 0:
        return
    masks = data.draw(st.lists(st.integers(0, (1 << H.nrows) - 1), max_size=6))
    P = BitMatrix(tuple(vec_mat_mul(BitVector(H.nrows, m), H).bits for m in masks), H.ncols)
    A = express_rows(H, P)
    assert A.shape == (H.nrows, P.nrows)
    assert mat_mul(A.T, H) == P


@settings(max_examples=150, deadline=None)
@given(matrices(max_rows=6), st.integers(0, (1 << 12) - 1))
def test_rowspace_membership_matches_enumeration(M, x):
    v = BitVector(M.ncols, x & ((1 << M.ncols) - 1))
    span = set(int(w) for w in span_array(M.rows, M.ncols))
    assert rowspace_contains(M, v) == (v.bits in span)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 255), max_size=10))
def test_echelon_basis_rank_and_membership(vectors):
    basis = EchelonBasis(8)
    for x in vectors:
        basis.add(x)
    M = BitMatrix(tuple(vectors), 8)
    assert basis.rank == rank(M)
    for y in range(256):
        assert (y in basis) == rowspace_contains(M, BitVector(8, y))


@settings(max_examples=100, deadline=None)
@given(matrices(min_rows=1, max_rows=6, max_cols=10))
def test_min_distance_matches_itertools_enumeration(G):
    if rank(G) == 0:
        return
    weights = []
    for coeffs in itertools.product((0, 1), repeat=G.nrows):
        word = 0
        for c, row in zip(coeffs, G.rows):
            if c:
                word ^= row
        weights.append(bin(word).count("1"))
    nonzero = sorted({w for w in weights if w})
    d = nonzero[0]
    # each codeword appears 2**(rows - rank) times among the combinations
    mult = weights.count(d) // (1 << (G.nrows - rank(G)))
    assert min_distance(G) == (d, mult)


@settings(max_examples=100, deadline=None)
@given(matrices(min_rows=1), st.lists(st.integers(0, (1 << 12) - 1), min_size=1, max_size=20))
def test_batch_mat_vec_matches_scalar(M, xs):
    xs = [x & ((1 << M.ncols) - 1) for x in xs]
    out = batch_mat_vec(M, np.array(xs, dtype=np.uint64))
    assert [int(o) for o in out] == [mat_vec_mul(M, BitVector(M.ncols, x)).bits for x in xs]
