import pytest

from exactlinalg import (
    RATIONAL,
    FiniteComplex,
    GradedVectorSpace,
    homology,
    inverse_columns,
    is_chain_map,
    kernel_vectors,
    mapping_cone_complex,
    matrix_from_rows,
    parse_field,
    rank,
    solve,
    solve_columns,
)


def test_parse_field():
    assert parse_field("rational") == RATIONAL
    assert parse_field("QQ") == RATIONAL
    assert parse_field("prime:7").characteristic == 7
    assert parse_field("GF(5)").characteristic == 5
    with pytest.raises(ValueError):
        parse_field("4")
    with pytest.raises(ValueError):
        parse_field("reals")


def test_field_conversion():
    assert RATIONAL.format(RATIONAL("-3/2")) == "-3/2"
    F7 = parse_field("prime:7")
    assert F7("1/2") * F7(2) == F7.one
    with pytest.raises(ZeroDivisionError):
        F7("1/7")


def test_rank():
    assert rank(matrix_from_rows(RATIONAL, [[1, 2], [2, 4]])) == 1
    assert rank(matrix_from_rows(RATIONAL, [[1, 0], [0, 1]])) == 2
    assert rank(matrix_from_rows(RATIONAL, [[0] * 4] * 3)) == 0


def test_rank_depends_on_field():
    m = [[1, 1], [1, 3]]
    assert rank(matrix_from_rows(RATIONAL, m)) == 2
    assert rank(matrix_from_rows(parse_field("prime:2"), m)) == 1


def test_kernel():
    ker = kernel_vectors(matrix_from_rows(RATIONAL, [[1, 1]]))
    assert len(ker) == 1
    v = ker[0]
    assert v[0] == -v[1] and v[0]
    assert kernel_vectors(matrix_from_rows(RATIONAL, [[1, 0], [0, 1]])) == []
    assert len(kernel_vectors(matrix_from_rows(RATIONAL, [[0, 0]]))) == 2


def test_solve():
    assert solve(matrix_from_rows(RATIONAL, [[2]]), [RATIONAL(1)]) == [RATIONAL("1/2")]
    assert solve(matrix_from_rows(RATIONAL, [[0, 0]]), [RATIONAL(1)]) is None
    m = matrix_from_rows(RATIONAL, [[1, 0], [0, 0]])
    sols = solve_columns(m, [{0: RATIONAL(3)}, {1: RATIONAL(1)}])
    assert sols[0] == {0: RATIONAL(3)}
    assert sols[1] is None


def test_inverse_columns():
    cols = [{0: RATIONAL(1), 1: RATIONAL(1)}, {1: RATIONAL(1)}]
    inv = inverse_columns(RATIONAL, cols)
    assert inv == [{0: RATIONAL(1), 1: RATIONAL(-1)}, {1: RATIONAL(1)}]
    with pytest.raises(ValueError):
        inverse_columns(RATIONAL, [{0: RATIONAL(1)}, {0: RATIONAL(2)}])


def test_graded_vector_space():
    v = GradedVectorSpace({0: 1, 2: 3, 5: 0})
    assert v == {0: 1, 2: 3}
    assert v.shift(2) == {-2: 1, 0: 3}
    assert v.total == 4
    assert v.euler_characteristic() == 4
    assert (v + GradedVectorSpace({1: 2})).euler_characteristic() == 2
    assert GradedVectorSpace().is_zero()


def test_homology_of_zero_differential():
    c = FiniteComplex.zero(RATIONAL, (0, 1))
    assert homology(c) == {0: 1, 1: 1}
    assert c.euler_characteristic() == 0
    assert c.shift(1).homology() == {-1: 1, 0: 1}


def test_cone_of_identity_is_acyclic():
    c = FiniteComplex.zero(RATIONAL, (0, 1))
    ident = [{0: RATIONAL.one}, {1: RATIONAL.one}]
    assert is_chain_map(c, c, ident)
    cone = mapping_cone_complex(c, c, ident)
    assert cone.is_acyclic()
    assert cone.homology().is_zero()


def test_homology_rejects_nonzero_square():
    c = FiniteComplex(RATIONAL, (0, 1, 2), ({1: RATIONAL(1)}, {2: RATIONAL(1)}, {}))
    with pytest.raises(ValueError):
        homology(c)


def test_differential_degree_is_checked():
    with pytest.raises(ValueError):
        FiniteComplex(RATIONAL, (0, 0), ({1: RATIONAL(1)}, {}))


def test_classify_cycles():
    one = RATIONAL.one
    c = FiniteComplex(RATIONAL, (0, 0, 1), ({2: one}, {2: one}, {}))
    assert c.homology() == {0: 1}
    data = c.homology_data()
    assert data.dims() == {0: 1}
    assert data.classify({0: one}, 0) is None
    coords = data.classify({0: one, 1: -one}, 0)
    assert coords is not None and any(coords)
    assert data.is_boundary({2: one}, 1)
