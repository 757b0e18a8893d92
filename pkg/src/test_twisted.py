import pytest

from exactlinalg import RATIONAL, FiniteComplex
from dgcat import (
    build_bimodule,
    field_category,
    kronecker,
    trivial_extension,
    truncated_polynomial,
    validate_bimodule,
    validate_bimodule_map,
)
from twisted import (
    ChainMorphism,
    HomSpace,
    NotSemifreeError,
    TwistedComplex,
    adjunction_check,
    coaction,
    complex_as_twisted,
    compose,
    cone,
    cone_inclusion,
    cone_map,
    cone_projection,
    diagonal_tc,
    double_dual_map,
    dual_bimodule_tc,
    dual_morphism,
    dual_tc,
    expand,
    expand_complex,
    find_homotopy,
    flatten,
    from_object,
    hom_bimodule,
    hom_complex,
    identity,
    representable,
    semifree_model,
    shift,
    shift_morphism,
    shift_tc_bimodule,
    tc_differential,
    tensor,
    validate_tc,
    validate_tc_bimodule,
    zero_morphism,
    zigzag_check,
)
from certify import is_quasi_iso


@pytest.fixture
def kt2():
    return truncated_polynomial(1, 2, RATIONAL)


@pytest.fixture
def cone_t(kt2):
    t = kt2.element("pt", "pt", {"t": 1})
    f = ChainMorphism(representable(kt2, "pt", -2), representable(kt2, "pt"), 0, {(0, 0): t})
    return cone(f, name="cone(t)")


def test_cone_of_t_matches_the_two_generator_complex(kt2, cone_t):
    t = kt2.element("pt", "pt", {"t": 1})
    X = TwistedComplex(kt2, (("pt", -1), ("pt", 0)), {(1, 0): t})
    assert validate_tc(X).passed
    assert cone_t.structurally_equal(X)


def test_upper_triangular_delta_is_rejected(kt2):
    t = kt2.element("pt", "pt", {"t": 1})
    X = TwistedComplex(kt2, (("pt", 0), ("pt", -1)), {(0, 1): t})
    report = validate_tc(X)
    assert not report.passed
    assert report.violations[0]["axiom"] == "lower-triangular"


def test_wrong_entry_degree_is_rejected(kt2):
    t = kt2.element("pt", "pt", {"t": 1})
    X = TwistedComplex(kt2, (("pt", -2), ("pt", 0)), {(1, 0): t})
    assert not validate_tc(X).passed


def test_endomorphisms_of_the_point(kt2):
    E = representable(kt2, "pt")
    assert hom_complex(E, E).homology() == {0: 1, 2: 1}


def test_endomorphisms_of_cone_t(cone_t):
    assert expand_complex(cone_t)["pt"].homology() == {0: 1, 3: 1}
    assert hom_complex(cone_t, cone_t).homology() == {-1: 1, 0: 1, 2: 1, 3: 1}


def test_yoneda_on_kronecker():
    K = kronecker(RATIONAL)
    assert hom_complex(representable(K, "2"), representable(K, "1")).homology() == {0: 2}
    assert hom_complex(representable(K, "1"), representable(K, "2")).homology() == {}


def test_zigzag_homs_sit_in_degree_one():
    Z = trivial_extension(kronecker(RATIONAL, arrow_degree=1), 2)
    assert hom_complex(representable(Z, "2"), representable(Z, "1")).homology() == {1: 2}


def test_cone_of_identity_is_contractible():
    K = kronecker(RATIONAL)
    C = cone(identity(representable(K, "1")))
    assert validate_tc(C).passed
    assert hom_complex(C, C).is_acyclic()
    assert all(c.is_acyclic() for c in expand_complex(C).values())


def test_cone_inclusion_and_projection_are_closed():
    K = kronecker(RATIONAL)
    a = K.element("2", "1", {"a": 1})
    f = ChainMorphism(representable(K, "2"), representable(K, "1"), 0, {(0, 0): a})
    C = cone(f)
    assert cone_inclusion(f, C).is_closed()
    assert cone_projection(f, C).is_closed()
    assert expand_complex(C)["1"].homology() == {0: 1}
    assert expand_complex(C)["2"].homology() == {0: 1}


def test_cone_requires_closed_degree_zero(kt2):
    E = representable(kt2, "pt")
    t = kt2.element("pt", "pt", {"t": 1})
    with pytest.raises(ValueError):
        cone(ChainMorphism(E, E, 2, {(0, 0): t}))


def test_shift_and_shifted_morphisms(cone_t):
    S = shift(cone_t, 3)
    assert validate_tc(S).passed
    assert [s for _, s in S.generators] == [2, 3]
    f = shift_morphism(identity(cone_t), 3, S, S)
    assert f.is_closed()
    assert hom_complex(S, S).homology() == hom_complex(cone_t, cone_t).homology()


def test_differential_squares_to_zero(cone_t):
    space = HomSpace(cone_t, cone_t)
    for n in range(len(space)):
        f = space.basis_morphism(n)
        assert not tc_differential(tc_differential(f)).entries


def test_boundaries_are_nullhomotopic(cone_t):
    space = HomSpace(cone_t, cone_t)
    f = tc_differential(space.basis_morphism(space.index[(0, 0, 0)]))
    assert f.entries
    h = find_homotopy(f, zero_morphism(cone_t, cone_t, f.degree))
    assert h is not None
    assert h.verify()


def test_identity_is_not_nullhomotopic(cone_t):
    assert find_homotopy(identity(cone_t), zero_morphism(cone_t, cone_t)) is None


def test_cone_map_of_a_commuting_square():
    K = kronecker(RATIONAL)
    a = K.element("2", "1", {"a": 1})
    h1, h2 = representable(K, "1"), representable(K, "2")
    f = ChainMorphism(h2, h1, 0, {(0, 0): a})
    g = cone_map(f, f, identity(h2), identity(h1))
    assert g.is_closed()
    assert is_quasi_iso(g)
    with pytest.raises(ValueError):
        b = K.element("2", "1", {"b": 1})
        cone_map(f, ChainMorphism(h2, h1, 0, {(0, 0): b}), identity(h2), identity(h1))


def test_dual_twisted_complex(cone_t):
    D = dual_tc(cone_t)
    assert D.generators == (("pt", 0), ("pt", 1))
    assert validate_tc(D).passed
    assert dual_morphism(identity(cone_t), D, D).is_closed()


def test_double_dual_map_is_a_quasi_isomorphism(cone_t):
    f = double_dual_map(cone_t)
    assert f.is_closed()
    assert is_quasi_iso(f)


def test_flatten_along_the_diagonal_is_the_identity(cone_t, kt2):
    assert flatten(cone_t, diagonal_tc(kt2)).structurally_equal(cone_t)


def test_tc_bimodules_validate():
    K = kronecker(RATIONAL)
    D = diagonal_tc(K)
    assert validate_tc_bimodule(D).passed
    assert validate_tc_bimodule(shift_tc_bimodule(D, 1)).passed
    assert validate_tc_bimodule(dual_bimodule_tc(D)).passed
    assert validate_tc_bimodule(tensor(D, D)).passed


def test_expansion_and_semifree_model_recover_the_complex():
    K = kronecker(RATIONAL)
    a = K.element("2", "1", {"a": 1})
    X = cone(ChainMorphism(representable(K, "2"), representable(K, "1"), 0, {(0, 0): a}))
    V = expand(from_object(X))
    assert validate_bimodule(V).passed
    model = semifree_model(V)
    assert model.complex.rank == 2
    assert model.complex.structurally_equal(X)


def test_module_that_is_not_free_is_rejected(kt2):
    k = field_category(RATIONAL)
    one = RATIONAL.one
    simple = build_bimodule(
        k,
        kt2,
        {("pt", "pt"): FiniteComplex.zero(RATIONAL, (0,))},
        lambda a, a2, b, i, v: {v: one},
        lambda b2, b, a, i, v: {v: one} if kt2.is_unit(b2, b, i) else {},
        name="k",
    )
    assert validate_bimodule(simple).passed
    with pytest.raises(NotSemifreeError):
        semifree_model(simple)


def test_complex_as_twisted():
    V = FiniteComplex(RATIONAL, (0, 1), ({1: RATIONAL.one}, {}))
    T = complex_as_twisted(RATIONAL, V)
    assert validate_tc(T).passed
    assert hom_complex(representable(T.category, "pt"), T).is_acyclic()


def test_hom_bimodule_and_coaction():
    K = kronecker(RATIONAL)
    D = diagonal_tc(K)
    H = hom_bimodule(D, D)
    assert validate_bimodule(H).passed
    assert validate_bimodule_map(coaction(D)).passed
    assert is_quasi_iso(coaction(D))


def test_composition_on_the_point(kt2):
    E = representable(kt2, "pt")
    t = ChainMorphism(E, E, 2, {(0, 0): kt2.element("pt", "pt", {"t": 1})})
    assert compose(t, t).is_zero()
    assert compose(identity(E), t) == t


@pytest.mark.parametrize("obj", ["1", "2"])
def test_zigzag_for_the_diagonal(obj):
    K = kronecker(RATIONAL)
    assert zigzag_check(diagonal_tc(K)).passed
    assert zigzag_check(from_object(representable(K, obj))).passed


def test_adjunction_dimensions():
    K = kronecker(RATIONAL)
    D = diagonal_tc(K)
    report = adjunction_check(D, representable(K, "2"), representable(K, "1"))
    assert report.passed
    assert report.left == {0: 2}
