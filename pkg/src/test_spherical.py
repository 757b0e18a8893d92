import pytest

from exactlinalg import RATIONAL
from dgcat import (
    diagonal_bimodule,
    field_category,
    linear_dual_bimodule,
    shift_bimodule,
    validate,
    validate_bimodule,
    validate_bimodule_map,
)
from twisted import (
    identity,
    representable,
    validate_tc_bimodule,
    zero_morphism,
)
from certify import FAIL, INCONCLUSIVE, PASS, CheckReport, QuasiIsoResult, homology_dims
from catalogue import (
    kt2_object,
    kt2_pair,
    p_object,
    p_prime_pair,
    two_loop_point,
    zigzag_category,
    zigzag_pair,
)
from spherical import (
    check_p_object,
    check_p_prime_cotwist,
    check_serre_duality,
    check_sigma,
    check_spherical_object,
    check_twist_on_object,
    compare_bimodules,
    cotwist_bimodule,
    cotwist_matrix,
    glue_many,
    glue_spherical,
    glued_many_twist,
    glued_twist,
    inverse_twist_bimodule,
    p_prime,
    p_prime_serre_table,
    serre_pairing_candidates,
    serre_shift_check,
    spherical_certificates,
    twist_bimodule,
    verify_commutativity,
    verify_degenerate,
)


@pytest.fixture(scope="module")
def kt2_datum():
    return glue_spherical(*kt2_pair(RATIONAL))


@pytest.fixture(scope="module")
def zigzag_datum():
    return glue_spherical(*zigzag_pair(RATIONAL))


def test_kt2_object_is_2_spherical():
    report = check_spherical_object(kt2_object(RATIONAL), 2)
    assert report.status == PASS
    assert "ring structure forced by dimensions" in report.notes


def test_zigzag_projective_is_2_spherical():
    E = representable(zigzag_category(RATIONAL), "1")
    assert check_spherical_object(E, 2).passed


def test_point_over_k_is_not_spherical_in_nonzero_degree():
    report = check_spherical_object(representable(field_category(RATIONAL), "pt"), 2)
    assert report.status == FAIL


@pytest.mark.parametrize("n", [1, 2])
def test_p_objects(n):
    report = check_p_object(p_object(RATIONAL, n), n)
    assert report.passed
    powers = [row for row in report.rows if row.get("check") == "t^k nonzero"]
    assert [row["k"] for row in powers] == list(range(1, n + 1))


def test_one_p_object_is_a_2_spherical_object():
    P = p_object(RATIONAL, 1)
    assert check_p_object(P, 1).passed == check_spherical_object(P, 2).passed


def test_two_loops_are_not_a_p_object():
    E = representable(two_loop_point(RATIONAL), "pt")
    assert check_p_object(E, 1).status == FAIL


def test_p_prime_is_a_bimodule_over_dual_numbers():
    Pp = p_prime(p_object(RATIONAL, 1))
    assert validate_tc_bimodule(Pp).passed
    assert not Pp.degenerate
    assert Pp.values["pt"].rank == 2


def test_p_prime_with_zero_generator_is_degenerate():
    P = p_object(RATIONAL, 1)
    Pp = p_prime(P, zero_morphism(P, P, 2))
    assert Pp.degenerate
    assert validate_tc_bimodule(Pp).passed


def test_p_prime_rejects_wrong_degree():
    P = p_object(RATIONAL, 1)
    with pytest.raises(ValueError, match="degree-2"):
        p_prime(P, identity(P))


@pytest.mark.parametrize("n", [1, 2])
def test_p_prime_cotwist_is_a_shifted_diagonal(n):
    Pp = p_prime(p_object(RATIONAL, n))
    report = check_p_prime_cotwist(Pp, n)
    assert report.passed


def test_p_prime_cotwist_homology():
    Pp = p_prime(p_object(RATIONAL, 1))
    assert homology_dims(cotwist_bimodule(Pp)) == {("pt", "pt"): {3: 1, 4: 1}}


def test_cotwist_of_zero_is_the_diagonal():
    k = field_category(RATIONAL)
    from spherical import zero_bimodule

    C = cotwist_bimodule(zero_bimodule(k))
    assert homology_dims(C) == homology_dims(diagonal_bimodule(C.left))


def test_cotwist_of_spherical_object():
    M, _ = kt2_pair(RATIONAL)
    C = cotwist_bimodule(M)
    assert validate_bimodule(C).passed
    assert homology_dims(C) == {("pt", "pt"): {3: 1}}


def test_sigma_triangle():
    for M in (*kt2_pair(RATIONAL), *zigzag_pair(RATIONAL)):
        assert check_sigma(M).passed, M.name


def test_twist_agrees_with_direct_cone():
    M, _ = kt2_pair(RATIONAL)
    assert check_twist_on_object(M, kt2_object(RATIONAL)).passed


def test_twist_of_zero_is_identity():
    from spherical import zero_bimodule

    k = field_category(RATIONAL)
    T = twist_bimodule(zero_bimodule(k))
    assert validate_tc_bimodule(T).passed
    assert homology_dims(T) == {("pt", "pt"): {0: 1}}


def test_inverse_twist_is_a_bimodule():
    M, _ = kt2_pair(RATIONAL)
    assert validate_tc_bimodule(inverse_twist_bimodule(M)).passed


def test_glued_algebra_of_kt2_pair(kt2_datum):
    R = kt2_datum.ctx.R
    assert validate(R).passed
    assert R.hom_complex("A:pt", "A:pt").homology() == {0: 1}
    assert R.hom_complex("B:pt", "B:pt").homology() == {0: 1}
    assert R.hom_complex("B:pt", "A:pt").homology() == {0: 1, 2: 1}
    assert R.dim("A:pt", "B:pt") == 0
    assert kt2_datum.report.passed


def test_glued_algebra_of_zigzag_pair(zigzag_datum):
    R = zigzag_datum.ctx.R
    assert R.hom_complex("B:pt", "A:pt").homology() == {0: 2}
    total = sum(R.hom_complex(x, y).homology().total for x in R.objects for y in R.objects)
    assert total == 4


def test_gluing_against_zero():
    from spherical import zero_bimodule

    _, N = kt2_pair(RATIONAL)
    datum = glue_spherical(zero_bimodule(N.category), N)
    assert datum.ctx.R.dim("B:pt", "A:pt") == 0


def _methods(report):
    return {key: res.certificate.method for key, res in report.certificates.items() if res.passed}


@pytest.mark.parametrize("which", ["kt2", "zigzag"])
def test_glued_twist_is_certified_by_a_natural_map(which, kt2_datum, zigzag_datum):
    datum = kt2_datum if which == "kt2" else zigzag_datum
    result = glued_twist(datum)
    assert result.report.passed
    assert homology_dims(result.first) == homology_dims(result.composite)
    assert "valuewise" not in _methods(result.report).values()
    assert not result.report.notes


def test_value_by_value_fallback_is_noted(monkeypatch):
    M, _ = kt2_pair(RATIONAL)
    T = twist_bimodule(M)
    monkeypatch.setattr("spherical.find_quasi_iso", lambda *args, **kwargs: QuasiIsoResult(INCONCLUSIVE))
    report = CheckReport("fallback")
    result = compare_bimodules(report, "T ~ T", T, T)
    assert result.passed
    assert result.certificate.method == "valuewise"
    assert report.notes == ["T ~ T: certified value by value only, no natural map found"]


def test_value_by_value_on_request_is_not_noted():
    M, _ = kt2_pair(RATIONAL)
    T = twist_bimodule(M)
    report = CheckReport("values")
    assert compare_bimodules(report, "T ~ T", T, T, natural=False).certificate.method == "valuewise"
    assert not report.notes


@pytest.mark.parametrize("n", [1, 2])
def test_glued_p_prime_twist(n):
    result = glued_twist(p_prime_pair(RATIONAL, n))
    assert result.report.passed
    assert homology_dims(result.first) == homology_dims(result.composite)


@pytest.mark.parametrize("n", [1, 2])
def test_glued_p_prime_certificates(n):
    report = spherical_certificates(p_prime_pair(RATIONAL, n), n=n)
    assert report.passed


def test_glued_many_twist_of_three():
    M, N = kt2_pair(RATIONAL)
    report = glued_many_twist([M, N, M])
    assert report.passed
    assert "first ~ composite" in report.certificates


def test_degenerate_gluing_gives_twist_of_n():
    _, N = zigzag_pair(RATIONAL)
    assert verify_degenerate(N).passed


@pytest.mark.parametrize(
    "which, expected",
    [("kt2", {1: 1, 3: 1}), ("zigzag", {3: 2})],
)
def test_cotwist_matrix(which, expected, kt2_datum, zigzag_datum):
    """The zigzag pair is ``M = h^2[1]``, ``N = h^1``, so ``Hom(M, N)[-1]`` sits in degree 3, not 0."""
    datum = kt2_datum if which == "kt2" else zigzag_datum
    result = cotwist_matrix(datum)
    assert result.report.passed
    assert result.matrix.slot("B:pt", "A:pt").homology() == expected


def test_trace_pairing_of_a_spherical_object():
    M, _ = kt2_pair(RATIONAL)
    C = cotwist_bimodule(M)
    target = shift_bimodule(linear_dual_bimodule(M.left), -3)
    (f,) = serre_pairing_candidates(C, target)
    assert validate_bimodule_map(f).passed
    # only the degree-3 class t pairs with the unit
    pt = M.left.objects[0]
    assert [k for k, col in enumerate(f.components[(pt, pt)]) if col] == [
        k for k, p in enumerate(C.slot(pt, pt).degrees) if p == 3
    ]


def test_trace_pairing_needs_the_right_degree():
    M, _ = kt2_pair(RATIONAL)
    target = shift_bimodule(linear_dual_bimodule(M.left), -5)
    assert serre_pairing_candidates(cotwist_bimodule(M), target) == []


@pytest.mark.parametrize("pair", [kt2_pair, zigzag_pair], ids=["kt2", "zigzag"])
def test_serre_shift_for_single_object(pair):
    M, _ = pair(RATIONAL)
    report = serre_shift_check(M, 2)
    assert report.passed
    assert report.certificates["cotwist ~ R*[-1-d]"].certificate.method == "candidate"


@pytest.mark.parametrize("which", ["kt2", "zigzag"])
def test_serre_shift_for_glued_pairs(which, kt2_datum, zigzag_datum):
    datum = kt2_datum if which == "kt2" else zigzag_datum
    report = serre_shift_check(datum, 2)
    assert report.passed
    assert report.certificates["cotwist ~ R*[-1-d]"].certificate.method == "candidate"


def test_serre_duality_tables(kt2_datum):
    assert check_serre_duality(field_category(RATIONAL)).passed
    assert check_serre_duality(zigzag_category(RATIONAL)).passed
    assert check_serre_duality(kt2_datum.ctx.R).passed


def test_commutativity_zigzag():
    M, N = zigzag_pair(RATIONAL)
    assert verify_commutativity(M, N).passed


def test_spherical_certificates_kt2(kt2_datum):
    report = spherical_certificates(kt2_datum, d=2)
    assert report.passed


def test_spherical_certificates_without_criterion_is_inconclusive(kt2_datum):
    report = spherical_certificates(kt2_datum)
    assert report.status == "inconclusive"


def test_glue_many_nests_left():
    M, N = kt2_pair(RATIONAL)
    datum = glue_many([M, N, M])
    assert len(datum.ctx.R.objects) == 3
    assert validate_tc_bimodule(datum.P).passed


def test_p_prime_serre_table_is_informational():
    P = p_object(RATIONAL, 1)
    datum = glue_spherical(p_prime(P), p_prime(P))
    report = p_prime_serre_table(datum, 1)
    assert report.rows
    assert report.status == PASS
    assert report.notes[0] in ("slot dimensions agree", "slot dimensions differ")
