import pytest

from exactlinalg import RATIONAL, parse_field
from dgcat import field_category, kronecker, trivial_extension, truncated_polynomial
from twisted import (
    ChainMorphism,
    cone,
    diagonal_tc,
    direct_sum,
    expand,
    from_object,
    identity,
    representable,
    tensor,
    zero_complex,
    zero_morphism,
)
from settings import config
from catalogue import zigzag_category
from certify import (
    COEFFICIENT_BOUND,
    FAIL,
    INCONCLUSIVE,
    PASS,
    MapSpace,
    certify,
    check_graded_symmetry,
    find_quasi_iso,
    homology_dims,
    homology_rows,
    is_quasi_iso,
    total_homology,
)


@pytest.fixture
def K():
    return kronecker(RATIONAL)


@pytest.fixture
def cone_a(K):
    a = K.element("2", "1", {"a": 1})
    return cone(ChainMorphism(representable(K, "2"), representable(K, "1"), 0, {(0, 0): a}))


def test_homology_of_a_representable(K):
    dims = homology_dims(representable(K, "1"))
    assert dims == {"1": {0: 1}, "2": {0: 2}}
    assert total_homology(representable(K, "1")) == {0: 3}
    assert ("2", 0, 2) in homology_rows(representable(K, "1"))


def test_identity_is_certified(cone_a):
    result = find_quasi_iso(cone_a, cone_a)
    assert result.status == PASS
    assert result.certificate.method == "identity"
    assert is_quasi_iso(result.morphism)


def test_different_homology_fails(K):
    result = find_quasi_iso(representable(K, "1"), representable(K, "2"))
    assert result.status == FAIL
    assert result.morphism is None
    assert result.to_dict()["certificate"]["method"] == "homology"


def test_contractible_complex_is_certified_by_the_zero_map(K):
    C = cone(identity(representable(K, "1")))
    result = find_quasi_iso(C, zero_complex(K))
    assert result.status == PASS
    assert result.certificate.method == "zero"


def test_random_search_finds_an_inclusion(K, cone_a):
    junk = cone(identity(representable(K, "2")))
    Y = direct_sum(cone_a, junk)
    assert MapSpace(cone_a, Y).dimension >= 1
    result = find_quasi_iso(cone_a, Y, attempts=16, seed=7)
    assert result.status == PASS
    assert result.certificate.method == "random"
    again = find_quasi_iso(cone_a, Y, attempts=16, seed=7)
    assert again.certificate.to_dict() == result.certificate.to_dict()


def test_supplied_candidate_is_tried_first(K, cone_a):
    Y = direct_sum(cone_a, cone(identity(representable(K, "2"))))
    inclusion = ChainMorphism(cone_a, Y, 0, identity(cone_a).entries)
    result = find_quasi_iso(cone_a, Y, candidates=[None, inclusion])
    assert result.status == PASS
    assert result.certificate.method == "candidate"
    assert result.certificate.attempt == 1


def test_certify_a_given_map():
    P = truncated_polynomial(1, 2, RATIONAL)
    E = representable(P, "pt")
    assert certify(identity(E)).passed
    assert certify(zero_morphism(E, E)).status == INCONCLUSIVE


def test_explicit_bimodule_maps(cone_a):
    V = expand(from_object(cone_a))
    result = find_quasi_iso(V, V)
    assert result.passed
    assert is_quasi_iso(result.morphism)


def test_natural_transformations(K):
    D = diagonal_tc(K)
    result = find_quasi_iso(D, tensor(D, D))
    assert result.passed
    assert is_quasi_iso(result.morphism)


def test_search_over_a_prime_field():
    F = parse_field("prime:3")
    K = kronecker(F)
    X = representable(K, "1")
    assert find_quasi_iso(X, X).passed


def test_coefficient_bound_comes_from_settings(monkeypatch):
    assert COEFFICIENT_BOUND == config("COEFFICIENT_BOUND")
    E = representable(truncated_polynomial(1, 2, RATIONAL), "pt")
    Y = direct_sum(E, cone(identity(E)))
    assert MapSpace(E, Y).dimension == 2
    assert find_quasi_iso(E, Y, both_directions=False).status == PASS
    # every coefficient drawn from [0, 0] is zero, so no random map is tried
    monkeypatch.setattr("certify.COEFFICIENT_BOUND", 0)
    assert find_quasi_iso(E, Y, both_directions=False).status == INCONCLUSIVE
    assert find_quasi_iso(E, Y, both_directions=False, bound=3).status == PASS


@pytest.mark.parametrize(
    "make, degree",
    [
        (lambda: field_category(RATIONAL), 0),
        (lambda: trivial_extension(field_category(RATIONAL), 2), 2),
        (lambda: truncated_polynomial(1, 2, RATIONAL), 2),
        (lambda: zigzag_category(RATIONAL), 2),
    ],
    ids=["k", "k+k*[-2]", "k[t]/t^2", "zigzag"],
)
def test_graded_symmetry(make, degree):
    report = check_graded_symmetry(make(), degree)
    assert report.passed
    assert report.certificates[f"C* ~ C[{degree}]"].passed


def test_kronecker_is_not_symmetric(K):
    report = check_graded_symmetry(K, 0)
    assert report.status == FAIL
    assert report.failures[0]["check"] == "slot dims"
