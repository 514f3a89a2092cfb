import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msdfactory.codes import load_golden
from msdfactory.gf2 import (
    BinaryMatrix, NoSolution, in_row_span, nullspace_basis, rank, row_reduce, same_row_span, solve_linear,
)


@st.composite
def matrices(draw, max_rows=8, max_cols=12):
    r = draw(st.integers(0, max_rows))
    c = draw(st.integers(1, max_cols))
    rows = draw(st.lists(st.integers(0, (1 << c) - 1), min_size=r, max_size=r))
    return BinaryMatrix.from_ints(rows, c)


def test_rank_examples():
    assert rank(BinaryMatrix.identity(3)) == 3
    assert rank(BinaryMatrix([[1, 1]])) == 1
    assert rank(load_golden("gperp_bh2")) == 9


def test_nullspace_examples():
    ns = nullspace_basis(BinaryMatrix([[1, 1]]))
    assert ns == BinaryMatrix([[1, 1]])
    assert nullspace_basis(BinaryMatrix.identity(5)).rows == 0


def test_text_roundtrip_and_malformed():
    m = BinaryMatrix([[1, 0, 1], [0, 1, 1]])
    assert BinaryMatrix.from_text(m.to_text()) == m
    assert BinaryMatrix.from_text("# comment\n101\n011\n") == m
    with pytest.raises(ValueError):
        BinaryMatrix.from_text("101\n01\n")
    with pytest.raises(ValueError):
        BinaryMatrix.from_text("102\n")


def test_from_ints_rejects_wide_rows():
    with pytest.raises(ValueError):
        BinaryMatrix.from_ints([0b1000], 3)


def test_basic_algebra():
    a = BinaryMatrix([[1, 0, 1], [0, 1, 1]])
    b = BinaryMatrix([[1, 1], [0, 1], [1, 0]])
    prod = a @ b
    ref = (np.array(a) @ np.array(b)) % 2
    assert np.array_equal(np.array(prod), ref)
    assert (a + a).is_zero()
    assert a.T.T == a
    assert a.row_weights() == [2, 2]
    assert a.col_weights() == [1, 1, 2]
    assert a.support(1) == [1, 2]
    assert a.vstack(a).rows == 4
    assert a.hstack(a).cols == 6
    assert a.select_cols([2, 0]) == BinaryMatrix([[1, 1], [1, 0]])
    assert a.apply(0b111) == 0b00


def test_solve_examples():
    b = BinaryMatrix([[1, 0, 1], [1, 1, 1]])
    assert solve_linear(BinaryMatrix.identity(2), b, side="right") == b
    gp = load_golden("gperp_bh2")
    r = solve_linear(gp, BinaryMatrix.identity(9), side="right")
    assert gp @ r == BinaryMatrix.identity(9)
    with pytest.raises(NoSolution):
        solve_linear(BinaryMatrix([[1, 0, 0]]), BinaryMatrix([[0, 1, 0]]), side="left")
    with pytest.raises(ValueError):
        solve_linear(BinaryMatrix.identity(2), b, side="up")


def test_printed_r_is_one_valid_witness():
    gp = load_golden("gperp_bh2")
    assert gp @ load_golden("r_bh2") == BinaryMatrix.identity(9)


@settings(max_examples=80, deadline=None)
@given(matrices())
def test_rank_transpose_invariant(m):
    if m.rows == 0:
        return
    assert rank(m) == rank(m.T)


@settings(max_examples=80, deadline=None)
@given(matrices())
def test_nullspace_matches_brute_force(m):
    ns = nullspace_basis(m)
    assert ns.rows == m.cols - rank(m)
    for g in ns.packed_rows:
        assert m.apply(g) == 0
    brute = [v for v in range(1 << m.cols) if m.apply(v) == 0]
    span = {0}
    for g in ns.packed_rows:
        span |= {s ^ g for s in span}
    assert span == set(brute)


@settings(max_examples=60, deadline=None)
@given(matrices(), st.data())
def test_solve_left_satisfies_equation(a, data):
    if a.rows == 0:
        return
    combos = data.draw(st.lists(st.integers(0, (1 << a.rows) - 1), min_size=1, max_size=4))
    b = BinaryMatrix.from_ints(combos, a.rows) @ a
    x = solve_linear(a, b, side="left")
    assert x @ a == b


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_row_reduce_preserves_span(m):
    red, piv = row_reduce(m)
    assert red.rows == len(piv) == rank(m)
    assert same_row_span(red, m)
    for v in itertools.islice(range(1 << m.cols), 64):
        assert in_row_span(red, v) == in_row_span(m, v)
