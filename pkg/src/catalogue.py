"""Named example categories, objects and bimodules.

These are the inputs of the bundled scenarios and of the test suite:

- the zigzag algebra of the Kronecker quiver, whose projectives are 2-spherical,
- the dual numbers ``k[t]/t^2`` with ``deg t = 2`` and the P-objects over
  ``k[t]/t^{n+1}``,
- a one-object category whose endomorphisms are too large to be spherical.
"""

from dgcat import category_from_structure, kronecker, trivial_extension, truncated_polynomial
from glued import kronecker_context
from spherical import glue_spherical, p_prime, zero_bimodule
from twisted import from_object, representable

__all__ = [
    "kronecker_context",
    "zigzag_category",
    "zigzag_pair",
    "kt2_category",
    "kt2_object",
    "kt2_pair",
    "p_object",
    "p_prime_pair",
    "two_loop_point",
    "zero_bimodule",
]


def zigzag_category(field):
    """Trivial extension of the degree-1 Kronecker quiver by its dual in degree 2.

    Both projectives have endomorphisms ``k + k[-2]``, and ``hom(2, 1)`` sits in
    degree 1 so that ``Hom(h^1, h^2[1])`` is concentrated in degree 0.
    """
    return trivial_extension(kronecker(field, arrow_degree=1), 2)


def zigzag_pair(field):
    """``M = h^2[1]`` and ``N = h^1`` over the zigzag category, both over ``k``."""
    Z = zigzag_category(field)
    M = from_object(representable(Z, "2", 1, name="h^2[1]"))
    N = from_object(representable(Z, "1"))
    return M, N


def kt2_category(field):
    return truncated_polynomial(1, 2, field)


def kt2_object(field):
    """The free rank-one module over ``k[t]/t^2``, a 2-spherical object."""
    return representable(kt2_category(field), "pt")


def kt2_pair(field):
    """Two copies of the spherical object of ``k[t]/t^2``."""
    E = kt2_object(field)
    return from_object(E), from_object(E)


def p_object(field, n):
    """The free rank-one module over ``k[t]/t^{n+1}`` with ``deg t = 2``."""
    if n < 1:
        raise ValueError(f"a P^n-object needs n >= 1, got {n}")
    return representable(truncated_polynomial(n, 2, field), "pt")


def p_prime_pair(field, n):
    """Two copies of the P-object bimodule over ``k[e]/e^2``, glued."""
    P = p_object(field, n)
    return glue_spherical(p_prime(P), p_prime(P))


def two_loop_point(field):
    """One object with two degree-2 loops and zero products; ``End`` has homology ``k + k^2[-2]``."""
    return category_from_structure(
        field,
        ["pt"],
        {"pt->pt": [["e_pt", 0], ["x", 2], ["y", 2]]},
        name="TwoLoops",
    )
