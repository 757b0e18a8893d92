"""Exact linear algebra over Q or a prime field.

Everything in the library bottoms out here: scalars live in a sympy domain
(``QQ`` or ``GF(p)``), vectors are sparse ``{index: scalar}`` dicts, and
matrices are ``sympy.polys.matrices.DomainMatrix`` objects, so no floating
point enters any computation.

Notes
-----
A :class:`FiniteComplex` stores a flat basis with one integer degree per
basis vector and its differential column by column. Homology is computed
degree by degree from ranks of the blocks ``C^n -> C^{n+1}``.
"""

import logging
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from functools import cached_property

from sympy import isprime
from sympy.polys.domains import GF, QQ
from sympy.polys.matrices import DomainMatrix

logger = logging.getLogger(__name__)


########################################################################################
## Fields and scalars
########################################################################################


@dataclass(frozen=True)
class Field:
    """The session field: ``"rational"`` or ``"prime:<p>"``."""

    name: str

    @cached_property
    def domain(self):
        if self.name == "rational":
            return QQ
        return GF(self.characteristic)

    @property
    def characteristic(self):
        if self.name == "rational":
            return 0
        return int(self.name.split(":", 1)[1])

    @property
    def zero(self):
        return self.domain.zero

    @property
    def one(self):
        return self.domain.one

    def __call__(self, value):
        """Convert an int, a Fraction, a field element or a string like "-3/2"."""
        K = self.domain
        if isinstance(value, str):
            value = Fraction(value.strip())
        if isinstance(value, Fraction):
            if value.denominator == 1:
                return K.convert(value.numerator)
            if self.characteristic and value.denominator % self.characteristic == 0:
                raise ZeroDivisionError(
                    f"{value} has no image in {self.name}: denominator vanishes"
                )
            return K.convert(value.numerator) / K.convert(value.denominator)
        if isinstance(value, int):
            return K.convert(value)
        return K.convert(value)

    def format(self, x):
        """Render a scalar as a short string ("3", "-1/2")."""
        if self.characteristic:
            return str(self.domain.to_int(x))
        return str(self.domain.to_sympy(x))

    def __str__(self):
        return self.name


RATIONAL = Field("rational")


def parse_field(text):
    """Parse a field specification.

    Accepts ``rational``, ``QQ``, ``prime:<p>``, ``GF(<p>)`` or a bare prime.

    >>> parse_field("prime:7").characteristic
    7
    """
    if isinstance(text, Field):
        return text
    spec = str(text).strip()
    if spec.lower() in ("rational", "qq", "q"):
        return RATIONAL
    digits = spec
    for prefix in ("prime:", "GF(", "gf(", "F_", "F"):
        if spec.startswith(prefix):
            digits = spec[len(prefix) :].rstrip(")")
            break
    try:
        p = int(digits)
    except ValueError:
        raise ValueError(f"Unknown field specification {text!r}") from None
    if not isprime(p):
        raise ValueError(f"Field characteristic must be prime, got {p}")
    return Field(f"prime:{p}")


########################################################################################
## Sparse vectors
########################################################################################


def add_scaled(acc, vec, coeff=None):
    """In place ``acc += coeff * vec``; zero entries are dropped."""
    for i, x in vec.items():
        y = x if coeff is None else coeff * x
        old = acc.get(i)
        if old is not None:
            y = old + y
        if y:
            acc[i] = y
        else:
            acc.pop(i, None)
    return acc


def scaled(vec, coeff):
    if not coeff:
        return {}
    out = {}
    for i, x in vec.items():
        y = coeff * x
        if y:
            out[i] = y
    return out


def apply_columns(columns, vec):
    """Apply the linear map given by sparse ``columns`` to the sparse ``vec``."""
    acc = {}
    for j, x in vec.items():
        col = columns[j]
        if col:
            add_scaled(acc, col, x)
    return acc


########################################################################################
## Matrices
########################################################################################


def matrix_from_rows(field, rows):
    """Build a matrix from a list of rows of ints, Fractions or strings."""
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    dok = {}
    for i, row in enumerate(rows):
        if len(row) != ncols:
            raise ValueError("ragged matrix rows")
        for j, x in enumerate(row):
            v = field(x)
            if v:
                dok[(i, j)] = v
    return DomainMatrix.from_dok(dok, (nrows, ncols), field.domain)


def matrix_from_columns(field, nrows, columns):
    dok = {}
    for j, col in enumerate(columns):
        for i, x in col.items():
            if x:
                dok[(i, j)] = x
    return DomainMatrix.from_dok(dok, (nrows, len(columns)), field.domain)


def matrix_from_sparse_rows(field, ncols, rows):
    dok = {}
    for i, row in enumerate(rows):
        for j, x in row.items():
            if x:
                dok[(i, j)] = x
    return DomainMatrix.from_dok(dok, (len(rows), ncols), field.domain)


def matrix_columns(m):
    """Sparse columns of a DomainMatrix."""
    cols = [{} for _ in range(m.shape[1])]
    for (i, j), x in m.to_dok().items():
        if x:
            cols[j][i] = x
    return cols


def _rref(m):
    """rref of a matrix with at least one row and one column."""
    reduced, pivots = m.rref()
    return reduced.to_dok(), tuple(pivots)


def rank(m):
    """Exact rank over the matrix's domain.

    >>> rank(matrix_from_rows(RATIONAL, [[1, 2], [2, 4]]))
    1
    """
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return 0
    return len(_rref(m)[1])


def kernel_vectors(m):
    """A basis of ``ker m`` as sparse vectors over the column index."""
    rows, cols = m.shape
    if cols == 0:
        return []
    one = m.domain.one
    if rows == 0:
        return [{j: one} for j in range(cols)]
    dok, pivots = _rref(m)
    pivot_set = set(pivots)
    free_entries = {}
    for (r, c), x in dok.items():
        if c not in pivot_set and x:
            free_entries.setdefault(c, []).append((r, x))
    basis = []
    for f in range(cols):
        if f in pivot_set:
            continue
        v = {f: one}
        for r, x in free_entries.get(f, ()):
            v[pivots[r]] = -x
        basis.append(v)
    return basis


def kernel_basis(m):
    """Columns form a basis of ``ker m``; ``m * kernel_basis(m) == 0``.

    >>> kernel_basis(matrix_from_rows(RATIONAL, [[1, 1]])).shape
    (2, 1)
    """
    field_dom = m.domain
    vecs = kernel_vectors(m)
    dok = {}
    for j, v in enumerate(vecs):
        for i, x in v.items():
            dok[(i, j)] = x
    return DomainMatrix.from_dok(dok, (m.shape[1], len(vecs)), field_dom)


def solve_columns(m, rhs):
    """Solve ``m x = b`` for every sparse column ``b`` in ``rhs``.

    Returns a list with a sparse solution per column, or ``None`` where the
    system has no solution.
    """
    rows, cols = m.shape
    if not rhs:
        return []
    if rows == 0:
        return [{} for _ in rhs]
    aug = m.hstack(
        DomainMatrix.from_dok(
            {(i, j): x for j, b in enumerate(rhs) for i, x in b.items() if x},
            (rows, len(rhs)),
            m.domain,
        )
    )
    dok, pivots = _rref(aug)
    main = [p for p in pivots if p < cols]
    k = len(main)
    out = [{} for _ in rhs]
    bad = set()
    for (r, c), x in dok.items():
        if c < cols or not x:
            continue
        j = c - cols
        if r < k:
            out[j][main[r]] = x
        else:
            bad.add(j)
    return [None if j in bad else out[j] for j in range(len(rhs))]


def solve(m, b):
    """Return ``x`` with ``m x = b`` as a list of scalars, or ``None``.

    >>> solve(matrix_from_rows(RATIONAL, [[2]]), [RATIONAL(1)]) == [RATIONAL("1/2")]
    True
    """
    cols = m.shape[1]
    vec = {i: x for i, x in enumerate(b) if x}
    sol = solve_columns(m, [vec])[0]
    if sol is None:
        return None
    zero = m.domain.zero
    return [sol.get(j, zero) for j in range(cols)]


def independent_columns(m):
    """Indices of a maximal independent set of columns, chosen greedily from the left."""
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return ()
    return _rref(m)[1]


def inverse_columns(field, columns):
    """Sparse columns of the inverse of the square matrix given by ``columns``."""
    n = len(columns)
    if n == 0:
        return []
    m = matrix_from_columns(field, n, columns)
    sols = solve_columns(m, [{i: field.one} for i in range(n)])
    if any(s is None for s in sols):
        raise ValueError("matrix is singular")
    return sols


########################################################################################
## Graded vector spaces and finite complexes
########################################################################################


@dataclass(frozen=True)
class GradedVectorSpace:
    """Dimensions by degree; zero dimensions are never stored."""

    dims: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        clean = {int(k): int(v) for k, v in self.dims.items() if v}
        if any(v < 0 for v in clean.values()):
            raise ValueError("negative dimension in graded vector space")
        object.__setattr__(self, "dims", dict(sorted(clean.items())))

    @classmethod
    def from_degrees(cls, degrees):
        dims = {}
        for deg in degrees:
            dims[deg] = dims.get(deg, 0) + 1
        return cls(dims)

    def __getitem__(self, degree):
        return self.dims.get(degree, 0)

    def __add__(self, other):
        dims = dict(self.dims)
        for k, v in other.dims.items():
            dims[k] = dims.get(k, 0) + v
        return GradedVectorSpace(dims)

    def __eq__(self, other):
        if isinstance(other, dict):
            return self.dims == GradedVectorSpace(other).dims
        if isinstance(other, GradedVectorSpace):
            return self.dims == other.dims
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self.dims.items()))

    def shift(self, n):
        """Dimensions of ``V[n]``, where ``(V[n])^i = V^{i+n}``."""
        return GradedVectorSpace({k - n: v for k, v in self.dims.items()})

    def negate(self):
        return GradedVectorSpace({-k: v for k, v in self.dims.items()})

    @property
    def total(self):
        return sum(self.dims.values())

    def is_zero(self):
        return not self.dims

    def euler_characteristic(self):
        return sum((-1) ** (k % 2) * v for k, v in self.dims.items())

    def as_rows(self):
        return list(self.dims.items())

    def to_dict(self):
        return {str(k): v for k, v in self.dims.items()}

    def __repr__(self):
        return f"GradedVectorSpace({self.dims})"


@dataclass(frozen=True, eq=False)
class FiniteComplex:
    """A finite cochain complex with a flat basis.

    ``differential[j]`` is ``d(e_j)`` as a sparse vector; ``d`` raises the
    degree by one.
    """

    field: Field
    degrees: tuple
    differential: tuple
    labels: tuple = None

    def __post_init__(self):
        if len(self.differential) != len(self.degrees):
            raise ValueError("one differential column per basis vector required")
        for j, col in enumerate(self.differential):
            for i in col:
                if self.degrees[i] != self.degrees[j] + 1:
                    raise ValueError(
                        f"differential of basis vector {j} (degree {self.degrees[j]}) "
                        f"hits basis vector {i} of degree {self.degrees[i]}"
                    )

    @classmethod
    def zero(cls, field, degrees, labels=None):
        return cls(field, tuple(degrees), tuple({} for _ in degrees), labels)

    @property
    def dimension(self):
        return len(self.degrees)

    @cached_property
    def indices_by_degree(self):
        out = {}
        for i, deg in enumerate(self.degrees):
            out.setdefault(deg, []).append(i)
        return out

    @cached_property
    def local_index(self):
        pos = {}
        for deg, idx in self.indices_by_degree.items():
            for k, i in enumerate(idx):
                pos[i] = k
        return pos

    def dims(self):
        return GradedVectorSpace.from_degrees(self.degrees)

    def apply(self, vec):
        return apply_columns(self.differential, vec)

    def block(self, n):
        """Matrix of ``d: C^n -> C^{n+1}`` in the degree-local bases."""
        cols = self.indices_by_degree.get(n, [])
        rows = self.indices_by_degree.get(n + 1, [])
        pos = self.local_index
        dok = {}
        for k, j in enumerate(cols):
            for i, x in self.differential[j].items():
                dok[(pos[i], k)] = x
        return DomainMatrix.from_dok(dok, (len(rows), len(cols)), self.field.domain)

    @cached_property
    def _ranks(self):
        return {n: rank(self.block(n)) for n in self.indices_by_degree}

    def block_rank(self, n):
        return self._ranks.get(n, 0)

    def square_zero_violations(self):
        """Basis indices ``j`` with ``d(d(e_j)) != 0``."""
        return [
            j for j, col in enumerate(self.differential) if col and self.apply(col)
        ]

    def homology(self):
        """Dimensions of ``H^n = ker d_n / im d_{n-1}``."""
        dims = {}
        for n, idx in self.indices_by_degree.items():
            h = len(idx) - self.block_rank(n) - self.block_rank(n - 1)
            if h:
                dims[n] = h
        return GradedVectorSpace(dims)

    def is_acyclic(self):
        return all(
            len(idx) == self.block_rank(n) + self.block_rank(n - 1)
            for n, idx in self.indices_by_degree.items()
        )

    def homology_data(self):
        return HomologyData.compute(self)

    def shift(self, n):
        """``C[n]``: degrees drop by ``n`` and the differential picks up ``(-1)^n``."""
        sign = -1 if n % 2 else 1
        diff = tuple(scaled(col, sign) if sign < 0 else dict(col) for col in self.differential)
        return FiniteComplex(
            self.field, tuple(deg - n for deg in self.degrees), diff, self.labels
        )

    def euler_characteristic(self):
        return self.dims().euler_characteristic()


def homology(c):
    """Homology of a finite complex; complexes with ``d^2 != 0`` are rejected.

    >>> c = FiniteComplex.zero(RATIONAL, (0, 1))
    >>> homology(c).dims
    {0: 1, 1: 1}
    """
    bad = c.square_zero_violations()
    if bad:
        raise ValueError(f"d^2 != 0 on basis vectors {bad[:5]}")
    return c.homology()


@dataclass(frozen=True, eq=False)
class HomologyData:
    """Cycle representatives of a homology basis, degree by degree."""

    complex: FiniteComplex
    representatives: dict

    @classmethod
    def compute(cls, c):
        reps = {}
        for n, idx in c.indices_by_degree.items():
            boundary = matrix_columns(c.block(n - 1)) if n - 1 in c.indices_by_degree else []
            cycles = kernel_vectors(c.block(n))
            if not cycles:
                continue
            columns = boundary + cycles
            m = matrix_from_columns(c.field, len(idx), columns)
            picked = [p - len(boundary) for p in independent_columns(m) if p >= len(boundary)]
            if picked:
                reps[n] = [{idx[k]: x for k, x in cycles[p].items()} for p in picked]
        return cls(c, reps)

    def dims(self):
        return GradedVectorSpace({n: len(r) for n, r in self.representatives.items()})

    @cached_property
    def _systems(self):
        c = self.complex
        out = {}
        for n, reps in self.representatives.items():
            idx = c.indices_by_degree[n]
            pos = c.local_index
            boundary = matrix_columns(c.block(n - 1)) if n - 1 in c.indices_by_degree else []
            local_reps = [{pos[i]: x for i, x in r.items()} for r in reps]
            m = matrix_from_columns(c.field, len(idx), boundary + local_reps)
            out[n] = (m, len(boundary))
        return out

    def is_cycle(self, vec):
        return not self.complex.apply(vec)

    def classify(self, vec, degree):
        """Coordinates of the class of the cycle ``vec`` in the basis of ``H^degree``.

        Returns ``None`` when ``vec`` is not a cycle.
        """
        if not self.is_cycle(vec):
            return None
        zero = self.complex.field.zero
        if degree not in self._systems:
            return []
        m, nb = self._systems[degree]
        pos = self.complex.local_index
        local = {pos[i]: x for i, x in vec.items()}
        sol = solve_columns(m, [local])[0]
        if sol is None:
            return None
        return [sol.get(nb + k, zero) for k in range(m.shape[1] - nb)]

    def is_boundary(self, vec, degree):
        coords = self.classify(vec, degree)
        return coords is not None and not any(coords)


def mapping_cone_complex(source, target, columns):
    """Cone of a degree-0 chain map given by sparse ``columns`` (one per source basis vector).

    The basis is the shifted source followed by the target, with
    ``d(x, y) = (-dx, f(x) + dy)``.
    """
    ns = source.dimension
    degrees = tuple(deg - 1 for deg in source.degrees) + tuple(target.degrees)
    diff = []
    for j in range(ns):
        col = scaled(source.differential[j], -1)
        for i, x in columns[j].items():
            col[ns + i] = x
        diff.append(col)
    for j in range(target.dimension):
        diff.append({ns + i: x for i, x in target.differential[j].items()})
    return FiniteComplex(source.field, degrees, tuple(diff))


def is_chain_map(source, target, columns):
    """True when ``d f == f d`` for a degree-0 map given by sparse columns."""
    for j in range(source.dimension):
        lhs = target.apply(columns[j])
        rhs = apply_columns(columns, source.differential[j])
        add_scaled(lhs, rhs, -1)
        if lhs:
            return False
    return True
