from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oracles import sympy_rank, sympy_rref
from twistdescent.exactla import GF, QQ, FieldMismatchError, Matrix, kernel_basis, parse_field, rank, rref, solve, sparse_rank

F7 = GF(7)


def M(rows, f=QQ):
    return Matrix.from_rows(f, rows)


def matrices(field, max_dim=4):
    dims = st.tuples(st.integers(0, max_dim), st.integers(0, max_dim))
    return dims.flatmap(
        lambda rc: st.lists(st.lists(st.integers(-4, 4), min_size=rc[1], max_size=rc[1]), min_size=rc[0], max_size=rc[0]).map(
            lambda rows: Matrix.from_rows(field, rows, ncols=rc[1])
        )
    )


def test_scalar_canonical_forms():
    assert QQ.coerce(Fraction(4, -6)) == Fraction(-2, 3)
    assert QQ.to_json(Fraction(-2, 3)) == "-2/3"
    assert F7.coerce(-1) == 6
    assert F7.coerce(Fraction(1, 2)) == 4
    assert F7.to_json(10) == 3


def test_parse_field():
    assert parse_field("q") == QQ
    assert parse_field("fp:7") == F7
    with pytest.raises(ValueError):
        parse_field("fp:8")
    with pytest.raises(ValueError):
        parse_field("reals")


def test_rref_identity():
    red, r, piv = rref(Matrix.identity(QQ, 2))
    assert red == Matrix.identity(QQ, 2) and r == 2 and piv == (0, 1)


def test_rref_proportional_rows():
    red, r, _ = rref(M([[1, 2], [2, 4]]))
    assert red == M([[1, 2], [0, 0]]) and r == 1


def test_rref_prime_field_scaling():
    red, r, _ = rref(Matrix.from_rows(GF(5), [[2]]))
    assert red == Matrix.from_rows(GF(5), [[1]]) and r == 1


def test_rref_field_mismatch():
    with pytest.raises(FieldMismatchError, match="field mismatch"):
        M([[1]]) + Matrix.from_rows(F7, [[1]])
    with pytest.raises(FieldMismatchError):
        solve(M([[1]]), Matrix.from_rows(F7, [[1]]))


def test_kernel_examples():
    assert kernel_basis(Matrix.identity(QQ, 3)).ncols == 0
    assert kernel_basis(Matrix.zeros(QQ, 1, 3)).ncols == 3
    m = M([[1, 2]])
    k = kernel_basis(m)
    assert k.ncols == 1 and (m @ k).is_zero()
    assert sympy_rank(k) == 1


def test_solve_examples():
    rhs = M([[3], [5]])
    assert solve(Matrix.identity(QQ, 2), rhs) == rhs
    assert solve(M([[1, 2], [2, 4]]), M([[1], [3]])) is None
    x = solve(M([[1, 2], [2, 4]]), M([[1], [2]]))
    assert x == M([[1], [0]])
    with pytest.raises(ValueError):
        solve(M([[1, 2]]), M([[1], [2]]))


def test_empty_shapes():
    z = Matrix.zeros(QQ, 0, 3)
    assert rank(z) == 0
    assert kernel_basis(z).shape == (3, 3)
    assert (Matrix.zeros(QQ, 2, 0) @ Matrix.zeros(QQ, 0, 4)).shape == (2, 4)


@given(matrices(QQ))
def test_rref_matches_sympy_over_q(m):
    red, r, piv = rref(m)
    if m.nrows and m.ncols:
        rows, spiv = sympy_rref(m)
        assert [list(x) for x in red.rows] == rows and piv == spiv
    assert rref(red)[0] == red


@given(st.sampled_from([QQ, F7]).flatmap(matrices))
def test_rank_nullity_and_kernel(m):
    k = kernel_basis(m)
    assert (m @ k).is_zero()
    assert k.ncols + rank(m) == m.ncols
    assert rank(m) == sympy_rank(m)
    assert rank(k) == k.ncols


@given(st.sampled_from([QQ, F7]).flatmap(matrices), st.integers(0, 10**6))
def test_solve_exact(m, seed):
    import random

    rng = random.Random(seed)
    x0 = Matrix.from_rows(m.field, [[rng.randint(-3, 3)] for _ in range(m.ncols)], ncols=1)
    rhs = m @ x0
    x = solve(m, rhs)
    assert x is not None and m @ x == rhs


@given(st.sampled_from([QQ, F7]).flatmap(matrices))
def test_sparse_rank_agrees(m):
    cols = [{i: m[i, j] for i in range(m.nrows) if m[i, j] != 0} for j in range(m.ncols)]
    assert sparse_rank(m.field, cols) == rank(m)
