"""Randomized checks of the structural invariants over the catalogue categories."""

from functools import lru_cache

from hypothesis import given, settings
from hypothesis import strategies as st

from exactlinalg import RATIONAL, kernel_vectors, matrix_from_rows, parse_field, rank
from certify import homology_dims, is_quasi_iso
from dgcat import tensor_cat, trivial_extension, truncated_polynomial, validate
from twisted import (
    HomSpace,
    adjunction_check,
    compose,
    cone,
    direct_sum,
    double_dual_map,
    dual_tc,
    flatten,
    hom_complex,
    representable,
    shift,
    validate_tc,
    zero_morphism,
    zigzag_check,
)
from catalogue import kt2_pair, zigzag_category, zigzag_pair
from spherical import twist_bimodule, twist_of_object

SETTINGS = settings(max_examples=100, deadline=None, derandomize=True)


@lru_cache(maxsize=None)
def category(name):
    if name == "kt2":
        return truncated_polynomial(1, 2, RATIONAL)
    return zigzag_category(RATIONAL)


@lru_cache(maxsize=None)
def modules(name):
    return kt2_pair(RATIONAL) if name == "kt2" else zigzag_pair(RATIONAL)


@lru_cache(maxsize=None)
def twists(name):
    return tuple(twist_bimodule(M) for M in modules(name))


def _combination(space, degree, coeffs):
    basis = space.closed_basis(degree)
    f = zero_morphism(space.source, space.target, degree)
    for b, c in zip(basis, coeffs):
        if c:
            f = f + b.scaled(RATIONAL(c))
    return f


@st.composite
def generator(draw, C):
    return draw(st.sampled_from(C.objects)), draw(st.integers(-2, 2))


@st.composite
def twisted_complexes(draw, name=None):
    """Representables, then cones of random closed degree-0 maps into representables."""
    name = name or draw(st.sampled_from(["kt2", "zigzag"]))
    C = category(name)
    x, s = draw(generator(C))
    X = representable(C, x, s)
    for _ in range(draw(st.integers(0, 2))):
        y, t = draw(generator(C))
        Y = representable(C, y, t)
        space = HomSpace(X, Y)
        coeffs = draw(st.lists(st.integers(-3, 3), min_size=len(space), max_size=len(space)))
        X = cone(_combination(space, 0, coeffs))
    return X


@SETTINGS
@given(twisted_complexes(), st.integers(-3, 3))
def test_cones_and_shifts_are_twisted_complexes(X, n):
    assert validate_tc(X).passed
    assert validate_tc(shift(X, n)).passed
    assert shift(shift(X, n), -n).structurally_equal(X)


@SETTINGS
@given(twisted_complexes(), st.integers(-3, 3))
def test_shift_moves_homology(X, n):
    before, after = homology_dims(X), homology_dims(shift(X, n))
    assert {c: dims.shift(n) for c, dims in before.items()} == after


@SETTINGS
@given(twisted_complexes())
def test_double_dual_is_a_quasi_isomorphism(X):
    f = double_dual_map(X)
    assert f.is_closed()
    assert is_quasi_iso(f)


@SETTINGS
@given(
    st.sampled_from(["kt2", "zigzag"]).flatmap(
        lambda name: st.tuples(twisted_complexes(name), twisted_complexes(name), twisted_complexes(name))
    ),
    st.data(),
)
def test_composition_is_associative(triple, data):
    X, Y, Z = triple
    maps = []
    for source, target in ((X, Y), (Y, Z), (Z, X)):
        space = HomSpace(source, target)
        zero = [n for n, p in enumerate(space.degrees) if p == 0]
        coeffs = data.draw(st.lists(st.integers(-2, 2), min_size=len(zero), max_size=len(zero)))
        maps.append(space.to_morphism({n: RATIONAL(c) for n, c in zip(zero, coeffs) if c}, 0))
    f, g, h = maps
    left = compose(h, compose(g, f))
    right = compose(compose(h, g), f)
    assert left.entries == right.entries


@SETTINGS
@given(st.integers(1, 4), st.integers(-3, 3), st.integers(-2, 4))
def test_truncated_polynomials_and_trivial_extensions_validate(n, deg_t, pairing):
    A = truncated_polynomial(n, deg_t, RATIONAL)
    assert validate(A).passed
    assert validate(trivial_extension(A, pairing)).passed


@SETTINGS
@given(st.sampled_from(["kt2", "zigzag"]), st.integers(0, 1))
def test_zigzag_identity_for_catalogue_modules(name, which):
    assert zigzag_check(modules(name)[which]).passed


@SETTINGS
@given(st.sampled_from(["kt2", "zigzag"]).flatmap(lambda name: st.tuples(st.just(name), twisted_complexes(name))))
def test_adjunction_holds_on_homology(pair):
    name, Y = pair
    for M in modules(name):
        X = representable(M.left, M.left.objects[0], 0)
        assert adjunction_check(M, X, Y).passed


@settings(max_examples=25, deadline=None, derandomize=True)
@given(st.sampled_from(["kt2", "zigzag"]).flatmap(lambda name: st.tuples(st.just(name), twisted_complexes(name))))
def test_twist_bimodule_matches_direct_cone(pair):
    name, X = pair
    for M, T in zip(modules(name), twists(name)):
        assert homology_dims(flatten(X, T)) == homology_dims(twist_of_object(M, X))


@settings(max_examples=25, deadline=None, derandomize=True)
@given(
    st.sampled_from(["kt2", "zigzag"]).flatmap(
        lambda name: st.tuples(st.just(name), twisted_complexes(name), twisted_complexes(name))
    )
)
def test_sums_duals_and_twists_are_twisted_complexes(triple):
    name, X, Y = triple
    assert validate_tc(direct_sum(X, Y)).passed
    assert validate_tc(dual_tc(X)).passed
    for T in twists(name):
        assert validate_tc(flatten(X, T)).passed


@SETTINGS
@given(
    st.sampled_from(["kt2", "zigzag"]).flatmap(
        lambda name: st.tuples(twisted_complexes(name), twisted_complexes(name))
    )
)
def test_euler_characteristic_survives_homology(pair):
    X, Y = pair
    c = hom_complex(X, Y)
    assert c.euler_characteristic() == c.homology().euler_characteristic()


@SETTINGS
@given(
    st.sampled_from(["rational", "prime:3", "prime:7"]),
    st.integers(1, 5).flatmap(
        lambda ncols: st.lists(
            st.lists(st.integers(-4, 4), min_size=ncols, max_size=ncols), min_size=1, max_size=5
        )
    ),
)
def test_rank_plus_nullity(field, rows):
    m = matrix_from_rows(parse_field(field), rows)
    assert rank(m) + len(kernel_vectors(m)) == len(rows[0])


@SETTINGS
@given(st.integers(1, 3), st.integers(-2, 3), st.integers(1, 3), st.integers(-2, 3))
def test_euler_characteristic_is_multiplicative(n, deg_a, m, deg_b):
    A = truncated_polynomial(n, deg_a, RATIONAL)
    B = truncated_polynomial(m, deg_b, RATIONAL)
    AB = tensor_cat(A, B)
    (a,), (b,) = A.objects, B.objects
    chi = AB.hom_complex(f"{a}|{b}", f"{a}|{b}").euler_characteristic()
    assert chi == A.hom_complex(a, a).euler_characteristic() * B.hom_complex(b, b).euler_characteristic()
