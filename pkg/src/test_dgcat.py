import pytest

from exactlinalg import RATIONAL, parse_field
from dgcat import (
    BimoduleMap,
    InfiniteHomError,
    NonHomogeneousRelationError,
    bimodule_cone,
    category_from_structure,
    diagonal_bimodule,
    dual_bimodule,
    field_category,
    glue,
    kronecker,
    linear_dual_bimodule,
    opposite,
    quiver_path_category,
    shift_bimodule,
    tensor_cat,
    trivial_extension,
    truncated_polynomial,
    validate,
    validate_bimodule,
    validate_bimodule_map,
    vector_space_bimodule,
)


def test_kronecker_dimensions():
    K = kronecker(RATIONAL)
    assert K.dim("2", "1") == 2
    assert K.dim("1", "1") == 1
    assert K.dim("2", "2") == 1
    assert K.dim("1", "2") == 0
    assert K.total_dimension == 4
    assert validate(K).passed


def test_zigzag_category():
    Z = trivial_extension(kronecker(RATIONAL, arrow_degree=1), 2)
    assert validate(Z).passed
    assert Z.total_dimension == 8
    assert [(b.label, b.degree) for b in Z.hom("1", "1")] == [("e_1", 0), ("e_1*", 2)]
    assert sorted((b.label, b.degree) for b in Z.hom("2", "1")) == [("a", 1), ("b", 1)]
    assert sorted((b.label, b.degree) for b in Z.hom("1", "2")) == [("a*", 1), ("b*", 1)]


def test_zigzag_pairing_is_nondegenerate():
    Z = trivial_extension(kronecker(RATIONAL, arrow_degree=1), 2)
    a = Z.element("2", "1", {"a": 1})
    a_dual = Z.element("1", "2", {"a*": 1})
    b_dual = Z.element("1", "2", {"b*": 1})
    top = Z.index("1", "1", "e_1*")
    assert set(Z.compose("1", "2", "1", a, a_dual)) == {top}
    assert Z.compose("1", "2", "1", a, b_dual) == {}


def test_truncated_polynomial():
    P = truncated_polynomial(2, 2, RATIONAL)
    assert validate(P).passed
    assert P.hom_complex("pt", "pt").dims() == {0: 1, 2: 1, 4: 1}
    t = P.element("pt", "pt", {"t": 1})
    assert P.compose("pt", "pt", "pt", t, t) == P.element("pt", "pt", {"t^2": 1})
    with pytest.raises(ValueError):
        truncated_polynomial(0, 2, RATIONAL)


def test_odd_truncated_polynomial_is_valid():
    E = truncated_polynomial(1, -1, RATIONAL, variable="e")
    assert validate(E).passed
    assert validate(opposite(E)).passed


def test_opposite_is_an_involution():
    Z = trivial_extension(kronecker(RATIONAL, arrow_degree=1), 2)
    assert opposite(opposite(Z)) == Z
    assert validate(opposite(Z)).passed
    assert opposite(Z).dim("1", "2") == Z.dim("2", "1")


def test_tensor_category():
    T = tensor_cat(truncated_polynomial(1, 1, RATIONAL), kronecker(RATIONAL))
    assert validate(T).passed
    assert T.total_dimension == 2 * 4


def test_quiver_relations():
    Q = quiver_path_category(
        RATIONAL, ["x"], [("t", "x", "x", 0)], relations=[{"t*t": 1}], max_length=3
    )
    assert Q.dim("x", "x") == 2
    assert validate(Q).passed


def test_quiver_with_commutativity_relation():
    Q = quiver_path_category(
        RATIONAL,
        ["1", "2", "3"],
        [("a", "1", "2", 0), ("b", "2", "3", 0), ("c", "1", "2", 0), ("d", "2", "3", 0)],
        relations=[{"b*a": 1, "d*c": -1}],
    )
    assert Q.dim("1", "3") == 3
    assert validate(Q).passed


def test_quiver_without_saturation_raises():
    with pytest.raises(InfiniteHomError):
        quiver_path_category(RATIONAL, ["x"], [("t", "x", "x", 0)], max_length=3)


def test_nonhomogeneous_relation_raises():
    with pytest.raises(NonHomogeneousRelationError):
        quiver_path_category(
            RATIONAL,
            ["x"],
            [("s", "x", "x", 0), ("t", "x", "x", 1)],
            relations=[{"s": 1, "t": 1}],
            max_length=2,
        )


def test_broken_associativity_is_reported():
    C = category_from_structure(
        RATIONAL,
        ["x"],
        {"x->x": [["e_x", 0], ["p", 0], ["q", 0]]},
        products={"p*p": {"q": 1}, "q*p": {"q": 1}},
    )
    report = validate(C)
    assert not report.passed
    assert any(v["axiom"] == "associativity" for v in report.violations)


def test_structure_with_differential():
    C = category_from_structure(
        RATIONAL,
        ["x", "y"],
        {"x->x": [["e_x", 0]], "y->y": [["e_y", 0]], "x->y": [["f", 0], ["g", 1]]},
        differential={"f": {"g": 1}},
    )
    assert validate(C).passed
    assert C.hom_complex("x", "y").homology().is_zero()


def test_bimodule_constructions_validate():
    K = kronecker(RATIONAL)
    delta = diagonal_bimodule(K)
    assert validate_bimodule(delta).passed
    assert validate_bimodule(dual_bimodule(delta)).passed
    assert validate_bimodule(shift_bimodule(dual_bimodule(delta), 3)).passed


def test_linear_dual_slots():
    K = kronecker(RATIONAL)
    serre = linear_dual_bimodule(K)
    assert serre.slot("2", "1").dims() == {0: 2}
    assert serre.slot("1", "2").dimension == 0


def test_cone_of_identity_bimodule_map():
    Z = trivial_extension(kronecker(RATIONAL, arrow_degree=1), 2)
    delta = diagonal_bimodule(Z)
    ident = BimoduleMap(
        delta,
        delta,
        {key: [{j: RATIONAL.one} for j in range(s.dimension)] for key, s in delta.slots.items()},
    )
    assert validate_bimodule_map(ident).passed
    cone = bimodule_cone(ident)
    assert validate_bimodule(cone).passed
    assert all(s.is_acyclic() for s in cone.slots.values())


def test_glue_vector_space_gives_kronecker_shape():
    k = field_category(RATIONAL)
    phi = vector_space_bimodule(k, k, [0, 0])
    R = glue(k, k, phi)
    assert R.objects == ("B:pt", "A:pt")
    assert R.dim("B:pt", "A:pt") == 2
    assert R.dim("A:pt", "B:pt") == 0
    assert validate(R).passed


def test_glue_over_prime_field():
    F = parse_field("prime:3")
    k = field_category(F)
    R = glue(k, k, vector_space_bimodule(k, k, [0, 1, 1]))
    assert validate(R).passed
    assert R.hom_complex("B:pt", "A:pt").homology() == {0: 1, 1: 2}
