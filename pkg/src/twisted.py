"""One-sided twisted complexes over a finite dg-category.

A :class:`TwistedComplex` over ``C`` is a finite list of shifted
representables ``(object, shift)`` together with a strictly lower-triangular
twisting matrix ``delta``; ``delta[(i, j)]`` is an element of
``hom(object_j, object_i)``. Perfect modules and bimodules are modelled this
way so plain tensor and Hom already compute their derived versions.

Sign conventions
----------------
An entry of intrinsic degree ``p`` from generator ``(x, s)`` to generator
``(y, t)`` has total degree ``p + s - t``. On a morphism ``f`` of degree ``e``::

    D(f)_ij = (-1)^{t_i} d f_ij + (delta_Y f)_ij - (-1)^e (f delta_X)_ij

and the Maurer-Cartan equation reads
``(-1)^{s_i} d delta_ij + sum_k delta_ik delta_kj = 0``.
"""

import logging
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property, lru_cache

from exactlinalg import (
    FiniteComplex,
    add_scaled,
    independent_columns,
    inverse_columns,
    kernel_vectors,
    matrix_from_columns,
    scaled,
    solve_columns,
)
from dgcat import (
    BimoduleMap,
    DGCategory,
    ValidationReport,
    build_bimodule,
    diagonal_bimodule,
    field_category,
    opposite,
)

logger = logging.getLogger(__name__)


class NotSemifreeError(ValueError):
    """A module is not graded-free over the radical, so it has no finite semifree model."""


def _sign(n):
    return -1 if n % 2 else 1


@lru_cache(maxsize=None)
def _opposite(c):
    return opposite(c)


@lru_cache(maxsize=None)
def _ground(field):
    return field_category(field)


########################################################################################
## Twisted complexes and morphisms
########################################################################################


@dataclass(frozen=True, eq=False)
class TwistedComplex:
    category: DGCategory
    generators: tuple
    delta: dict = dataclass_field(default_factory=dict)
    name: str = "X"

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple((x, int(s)) for x, s in self.generators))
        object.__setattr__(self, "delta", {k: v for k, v in self.delta.items() if v})

    def __repr__(self):
        gens = ", ".join(f"{x}[{s}]" for x, s in self.generators)
        return f"TwistedComplex({self.name}: {gens})"

    @property
    def rank(self):
        return len(self.generators)

    @property
    def field(self):
        return self.category.field

    def obj(self, i):
        return self.generators[i][0]

    def shift_of(self, i):
        return self.generators[i][1]

    @cached_property
    def delta_by_source(self):
        out = {}
        for (i, j), vec in self.delta.items():
            out.setdefault(j, []).append((i, vec))
        return out

    @cached_property
    def delta_by_target(self):
        out = {}
        for (i, j), vec in self.delta.items():
            out.setdefault(i, []).append((j, vec))
        return out

    def structurally_equal(self, other):
        return (
            self.category == other.category
            and self.generators == other.generators
            and self.delta == other.delta
        )


def representable(C, x, shift=0, name=None):
    """``h^x[shift]`` as a one-generator twisted complex."""
    if x not in C.objects:
        raise ValueError(f"{x!r} is not an object of {C.name}")
    return TwistedComplex(C, ((x, shift),), {}, name or f"h^{x}")


def zero_complex(C):
    return TwistedComplex(C, (), {}, "0")


def validate_tc(X):
    """Lower-triangularity, entry degrees and the Maurer-Cartan equation."""
    C = X.category
    report = ValidationReport(f"twisted complex {X.name}")
    for x, _ in X.generators:
        if x not in C.objects:
            report.add("generator", f"{x!r} is not an object of {C.name}")
            return report
    for (i, j), vec in X.delta.items():
        report.checked += 1
        if not i > j:
            report.add("lower-triangular", f"delta[{i},{j}] is on or above the diagonal")
            continue
        want = 1 + X.shift_of(i) - X.shift_of(j)
        for k in vec:
            if C.degree(X.obj(j), X.obj(i), k) != want:
                report.add("delta degree", f"delta[{i},{j}] has an entry not of degree {want}")
    if not report.passed:
        return report
    mc = maurer_cartan(X)
    for (i, j), vec in mc.items():
        if vec:
            report.add("Maurer-Cartan", f"entry ({i},{j}) is {vec}")
    return report


def maurer_cartan(X):
    """Entries of ``(-1)^{s_i} d delta + delta^2``; all zero for a twisted complex."""
    C = X.category
    out = {}
    for (i, j), vec in X.delta.items():
        acc = out.setdefault((i, j), {})
        add_scaled(acc, C.d(X.obj(j), X.obj(i), vec), _sign(X.shift_of(i)))
    for (k, j), inner in X.delta.items():
        for i, outer in X.delta_by_source.get(k, ()):
            acc = out.setdefault((i, j), {})
            add_scaled(acc, C.compose(X.obj(j), X.obj(k), X.obj(i), outer, inner))
    return {key: v for key, v in out.items() if v}


@dataclass(eq=False)
class ChainMorphism:
    """A morphism of twisted complexes: ``entries[(i, j)]`` is in ``hom(source_j, target_i)``."""

    source: TwistedComplex
    target: TwistedComplex
    degree: int
    entries: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        self.entries = {k: v for k, v in self.entries.items() if v}
        if self.source.category != self.target.category:
            raise ValueError("morphism between twisted complexes over different categories")

    @property
    def category(self):
        return self.source.category

    def differential(self):
        return tc_differential(self)

    def is_closed(self):
        return not tc_differential(self).entries

    def is_zero(self):
        return not self.entries

    def __add__(self, other):
        return add_morphisms(self, other)

    def __sub__(self, other):
        return add_morphisms(self, other, -1)

    def scaled(self, coeff):
        return ChainMorphism(
            self.source,
            self.target,
            self.degree,
            {k: scaled(v, coeff) for k, v in self.entries.items()},
        )

    def __eq__(self, other):
        if not isinstance(other, ChainMorphism):
            return NotImplemented
        return (
            self.source is other.source or self.source.structurally_equal(other.source)
        ) and (
            self.target is other.target or self.target.structurally_equal(other.target)
        ) and self.degree == other.degree and self.entries == other.entries

    __hash__ = None


def add_morphisms(f, g, coeff=1):
    if f.degree != g.degree:
        raise ValueError("cannot add morphisms of different degrees")
    entries = {k: dict(v) for k, v in f.entries.items()}
    for k, v in g.entries.items():
        add_scaled(entries.setdefault(k, {}), v, coeff)
    return ChainMorphism(f.source, f.target, f.degree, entries)


def tc_differential(f):
    X, Y, e = f.source, f.target, f.degree
    C = X.category
    out = {}
    for (i, j), vec in f.entries.items():
        add_scaled(out.setdefault((i, j), {}), C.d(X.obj(j), Y.obj(i), vec), _sign(Y.shift_of(i)))
        for i2, dvec in Y.delta_by_source.get(i, ()):
            add_scaled(out.setdefault((i2, j), {}), C.compose(X.obj(j), Y.obj(i), Y.obj(i2), dvec, vec))
        for j2, dvec in X.delta_by_target.get(j, ()):
            add_scaled(
                out.setdefault((i, j2), {}),
                C.compose(X.obj(j2), X.obj(j), Y.obj(i), vec, dvec),
                -_sign(e),
            )
    return ChainMorphism(X, Y, e + 1, out)


def compose(g, f):
    """``g o f``; plain matrix composition."""
    C = f.category
    X, Y, Z = f.source, f.target, g.target
    by_col = {}
    for (i, k), vec in g.entries.items():
        by_col.setdefault(k, []).append((i, vec))
    out = {}
    for (k, j), fvec in f.entries.items():
        for i, gvec in by_col.get(k, ()):
            add_scaled(out.setdefault((i, j), {}), C.compose(X.obj(j), Y.obj(k), Z.obj(i), gvec, fvec))
    return ChainMorphism(X, Z, f.degree + g.degree, out)


def identity(X):
    return ChainMorphism(
        X, X, 0, {(i, i): X.category.unit(x) for i, (x, _) in enumerate(X.generators)}
    )


def zero_morphism(X, Y, degree=0):
    return ChainMorphism(X, Y, degree, {})


########################################################################################
## Shift, sum, cone
########################################################################################


def shift(X, n):
    """``X[n]``: every shift grows by ``n`` and ``delta`` picks up ``(-1)^n``."""
    if n == 0:
        return X
    sign = _sign(n)
    return TwistedComplex(
        X.category,
        tuple((x, s + n) for x, s in X.generators),
        {k: scaled(v, sign) for k, v in X.delta.items()},
        f"{X.name}[{n}]",
    )


def shift_morphism(f, n, source=None, target=None):
    """The shift functor on morphisms: ``g -> (-1)^{n |g|} g``."""
    sign = _sign(n * f.degree)
    return ChainMorphism(
        source or shift(f.source, n),
        target or shift(f.target, n),
        f.degree,
        {k: scaled(v, sign) for k, v in f.entries.items()},
    )


def direct_sum(X, Y, name=None):
    n = X.rank
    delta = dict(X.delta)
    delta.update({(i + n, j + n): v for (i, j), v in Y.delta.items()})
    return TwistedComplex(X.category, X.generators + Y.generators, delta, name or f"{X.name}+{Y.name}")


def block_morphism(source, target, blocks):
    """Assemble a morphism from ``{(row offset, col offset): ChainMorphism}``."""
    degrees = {b.degree for b in blocks.values()}
    if len(degrees) > 1:
        raise ValueError("blocks of different degrees")
    entries = {}
    for (r, c), b in blocks.items():
        for (i, j), v in b.entries.items():
            add_scaled(entries.setdefault((i + r, j + c), {}), v)
    return ChainMorphism(source, target, degrees.pop() if degrees else 0, entries)


def cone(f, name=None):
    """``cone(f)`` with generators ``src[1]`` then ``tgt`` and ``delta = [[-d_src, 0], [f, d_tgt]]``."""
    if f.degree != 0:
        raise ValueError("cone needs a degree-0 morphism")
    if not f.is_closed():
        raise ValueError("cone needs a closed morphism")
    X, Y = f.source, f.target
    n = X.rank
    sx = shift(X, 1)
    delta = dict(sx.delta)
    for (i, j), v in f.entries.items():
        delta[(i + n, j)] = v
    for (i, j), v in Y.delta.items():
        delta[(i + n, j + n)] = v
    return TwistedComplex(
        X.category, sx.generators + Y.generators, delta, name or f"cone({X.name}->{Y.name})"
    )


def cone_inclusion(f, C=None):
    """``tgt -> cone(f)``."""
    C = C or cone(f)
    n = f.source.rank
    return ChainMorphism(
        f.target, C, 0, {(i + n, i): f.category.unit(x) for i, (x, _) in enumerate(f.target.generators)}
    )


def cone_projection(f, C=None):
    """``cone(f) -> src[1]``."""
    C = C or cone(f)
    return ChainMorphism(
        C, shift(f.source, 1), 0, {(i, i): f.category.unit(x) for i, (x, _) in enumerate(f.source.generators)}
    )


def cone_map(f, f2, g, h, source=None, target=None):
    """The map ``cone(f) -> cone(f2)`` induced by a strictly commuting square ``f2 g = h f``.

    ``g`` and ``h`` are closed of the same degree ``p``; the result is
    ``[[(-1)^p g, 0], [0, h]]``.
    """
    if g.degree != h.degree:
        raise ValueError("square maps must share a degree")
    lhs = compose(f2, g)
    rhs = compose(h, f)
    if (lhs - rhs).entries:
        raise ValueError("square does not commute")
    source = source or cone(f)
    target = target or cone(f2)
    sign = _sign(g.degree)
    entries = {k: scaled(v, sign) for k, v in g.entries.items()}
    n, m = f.source.rank, f2.source.rank
    for (i, j), v in h.entries.items():
        entries[(i + m, j + n)] = v
    return ChainMorphism(source, target, g.degree, entries)


########################################################################################
## Hom complexes
########################################################################################


class HomSpace:
    """The complex ``Hom(X, Y)`` with an explicit basis of matrix entries.

    Basis vectors are triples ``(i, j, k)``: the ``k``-th basis element of
    ``hom(x_j, y_i)`` placed in entry ``(i, j)``.
    """

    def __init__(self, X, Y):
        if X.category != Y.category:
            raise ValueError("Hom between twisted complexes over different categories")
        self.source = X
        self.target = Y
        C = X.category
        basis, degrees = [], []
        for i, (y, t) in enumerate(Y.generators):
            for j, (x, s) in enumerate(X.generators):
                for k, b in enumerate(C.hom(x, y)):
                    basis.append((i, j, k))
                    degrees.append(b.degree + s - t)
        self.basis = basis
        self.degrees = tuple(degrees)
        self.index = {key: n for n, key in enumerate(basis)}

    def __len__(self):
        return len(self.basis)

    def label(self, n):
        i, j, k = self.basis[n]
        C = self.source.category
        return f"{j}>{i}:{C.label(self.source.obj(j), self.target.obj(i), k)}"

    def to_vector(self, f):
        out = {}
        for (i, j), vec in f.entries.items():
            for k, x in vec.items():
                out[self.index[(i, j, k)]] = x
        return out

    def to_morphism(self, vec, degree=None):
        if degree is None:
            degs = {self.degrees[n] for n in vec}
            degree = degs.pop() if len(degs) == 1 else 0
        entries = {}
        for n, x in vec.items():
            i, j, k = self.basis[n]
            entries.setdefault((i, j), {})[k] = x
        return ChainMorphism(self.source, self.target, degree, entries)

    def basis_morphism(self, n):
        i, j, k = self.basis[n]
        return ChainMorphism(
            self.source, self.target, self.degrees[n], {(i, j): {k: self.source.field.one}}
        )

    @cached_property
    def complex(self):
        cols = []
        for n in range(len(self.basis)):
            cols.append(self.to_vector(tc_differential(self.basis_morphism(n))))
        labels = tuple(self.label(n) for n in range(len(self.basis)))
        return FiniteComplex(self.source.field, self.degrees, tuple(cols), labels)

    def closed_basis(self, degree=0):
        """Basis of closed morphisms of the given degree, as morphisms."""
        c = self.complex
        idx = c.indices_by_degree.get(degree, [])
        if not idx:
            return []
        ker = kernel_vectors(c.block(degree))
        return [self.to_morphism({idx[k]: x for k, x in v.items()}, degree) for v in ker]


def hom_complex(X, Y):
    """``Hom(X, Y)`` as a finite complex; Yoneda gives ``hom(h^a, h^b) = hom(a, b)``."""
    return HomSpace(X, Y).complex


@dataclass
class Homotopy:
    """A degree ``e - 1`` morphism ``h`` with ``f - g = D(h)``."""

    f: ChainMorphism
    g: ChainMorphism
    h: ChainMorphism

    def verify(self):
        return not ((self.f - self.g) - tc_differential(self.h)).entries


def find_homotopy(f, g):
    """Solve ``f - g = D(h)`` exactly; ``None`` when ``f`` and ``g`` are not homotopic."""
    space = HomSpace(f.source, f.target)
    c = space.complex
    e = f.degree
    diff = space.to_vector(f - g)
    src = c.indices_by_degree.get(e - 1, [])
    if not diff:
        return Homotopy(f, g, zero_morphism(f.source, f.target, e - 1))
    if not src:
        return None
    pos = c.local_index
    m = c.block(e - 1)
    sol = solve_columns(m, [{pos[n]: x for n, x in diff.items()}])[0]
    if sol is None:
        return None
    h = space.to_morphism({src[k]: x for k, x in sol.items()}, e - 1)
    return Homotopy(f, g, h)


########################################################################################
## Bimodules given by twisted complexes
########################################################################################


@dataclass(eq=False)
class TCBimodule:
    """A dg functor ``A -> Tw(C)``: a perfect ``C``-module for every object of ``A``.

    ``action[(a, a2)][k]`` is the closed-up-to-``M(d alpha)`` morphism
    ``M(a) -> M(a2)`` of degree ``|alpha|`` for the ``k``-th basis element
    ``alpha`` of ``A(a, a2)``.
    """

    left: DGCategory
    category: DGCategory
    values: dict
    action: dict
    name: str = "M"

    def value(self, a):
        return self.values[a]

    def act(self, a, a2, alpha):
        """``M(alpha)`` for a sparse element of ``A(a, a2)``."""
        acc = None
        for k, x in alpha.items():
            term = self.action[(a, a2)][k].scaled(x)
            acc = term if acc is None else acc + term
        if acc is None:
            return zero_morphism(self.values[a], self.values[a2], 0)
        return acc

    @property
    def field(self):
        return self.category.field

    def __repr__(self):
        return f"TCBimodule({self.name!r}: {self.left.name} -> Tw({self.category.name}))"


def validate_tc_bimodule(M):
    """Every value is a twisted complex and ``M`` is a strict dg functor."""
    A = M.left
    report = ValidationReport(f"bimodule {M.name}")
    for a in A.objects:
        sub = validate_tc(M.values[a])
        for v in sub.violations:
            report.add(f"value {a}: {v['axiom']}", v["witness"])
    for a in A.objects:
        for a2 in A.objects:
            for k in range(A.dim(a, a2)):
                report.checked += 1
                m = M.action[(a, a2)][k]
                if m.degree != A.degree(a, a2, k):
                    report.add("action degree", f"{A.label(a, a2, k)}")
                if tc_differential(m).entries != M.act(a, a2, A.d_basis(a, a2, k)).entries:
                    report.add("action commutes with d", f"{A.label(a, a2, k)}")
                if A.is_unit(a, a2, k) and (m - identity(M.values[a])).entries:
                    report.add("unit acts as identity", a)
                for a3 in A.objects:
                    for k2 in range(A.dim(a2, a3)):
                        lhs = compose(M.action[(a2, a3)][k2], m)
                        prod = A.compose_basis(a, a2, a3, k2, k)
                        rhs = M.act(a, a3, prod)
                        if lhs.entries != rhs.entries:
                            report.add(
                                "functoriality",
                                f"{A.label(a2, a3, k2)} o {A.label(a, a2, k)}",
                            )
    return report


def from_object(X, left=None, obj=None):
    """An object-type bimodule over ``k``: the single value ``X``."""
    left = left or _ground(X.field)
    obj = obj if obj is not None else left.objects[0]
    return TCBimodule(left, X.category, {obj: X}, {(obj, obj): (identity(X),)}, name=X.name)


def diagonal_tc(C):
    """``c -> h^c`` with ``gamma`` acting by the entry ``gamma``."""
    values = {c: representable(C, c) for c in C.objects}
    action = {}
    for a in C.objects:
        for a2 in C.objects:
            if C.dim(a, a2):
                action[(a, a2)] = tuple(
                    ChainMorphism(values[a], values[a2], C.degree(a, a2, k), {(0, 0): {k: C.field.one}})
                    for k in range(C.dim(a, a2))
                )
    return TCBimodule(C, C, values, action, name=f"Delta({C.name})")


def shift_tc_bimodule(M, n):
    values = {a: shift(X, n) for a, X in M.values.items()}
    action = {
        key: tuple(shift_morphism(m, n, values[key[0]], values[key[1]]) for m in ms)
        for key, ms in M.action.items()
    }
    return TCBimodule(M.left, M.category, values, action, name=f"{M.name}[{n}]")


########################################################################################
## Tensor product (generator substitution)
########################################################################################


def flatten(T, X, name=None):
    """``T (x) X`` for a twisted complex ``T`` over ``C`` and ``X: C -> Tw(D)``.

    Each generator ``(c, s)`` of ``T`` becomes ``X(c)`` shifted by ``s``;
    diagonal blocks carry ``(-1)^s delta_{X(c)}`` and ``delta_ij`` acts
    through ``X(delta_ij)``.
    """
    offsets, gens = [], []
    for c, s in T.generators:
        offsets.append(len(gens))
        gens.extend((y, u + s) for y, u in X.values[c].generators)
    delta = {}
    for j, (c, s) in enumerate(T.generators):
        sign = _sign(s)
        for (p, q), v in X.values[c].delta.items():
            delta[(offsets[j] + p, offsets[j] + q)] = scaled(v, sign)
    for (i, j), vec in T.delta.items():
        block = X.act(T.obj(j), T.obj(i), vec)
        for (p, q), v in block.entries.items():
            delta[(offsets[i] + p, offsets[j] + q)] = v
    out = TwistedComplex(X.category, tuple(gens), delta, name or f"{T.name}(x){X.name}")
    object.__setattr__(out, "block_offsets", tuple(offsets))
    return out


def flatten_morphism(f, X, source=None, target=None):
    """Blocks ``X(f_ij)``; a chain map whenever ``f`` is."""
    source = source or flatten(f.source, X)
    target = target or flatten(f.target, X)
    so, to = source.block_offsets, target.block_offsets
    entries = {}
    for (i, j), vec in f.entries.items():
        block = X.act(f.source.obj(j), f.target.obj(i), vec)
        for (p, q), v in block.entries.items():
            entries[(to[i] + p, so[j] + q)] = v
    return ChainMorphism(source, target, f.degree, entries)


def tensor(M, X):
    """``M (x)_C X`` for ``M: A -> Tw(C)`` and ``X: C -> Tw(D)``."""
    if M.category != X.left:
        raise ValueError("tensor needs M over C and X with left category C")
    values = {a: flatten(T, X, f"{M.name}(x){X.name}({a})") for a, T in M.values.items()}
    action = {
        key: tuple(flatten_morphism(m, X, values[key[0]], values[key[1]]) for m in ms)
        for key, ms in M.action.items()
    }
    return TCBimodule(M.left, X.category, values, action, name=f"{M.name}(x){X.name}")


def tensor_explicit(F, V, name=None):
    """``F (x)_C V`` for ``F: A -> Tw(C)`` and an explicit ``(C, D)``-bimodule ``V``.

    Slot ``(a, d)`` is ``sum_j V(c_j, d)`` over the generators ``(c_j, s_j)``
    of ``F(a)``; ``(j, v)`` has degree ``|v| - s_j`` and
    ``d(j, v) = (-1)^{s_j} (j, dv) + sum_i (i, delta_ij v)``.
    """
    if F.category != V.left:
        raise ValueError("tensor_explicit needs V with left category equal to F's target")
    A, D = F.left, V.right
    field = F.field
    one = field.one
    slots, layouts, owners = {}, {}, {}
    for a in A.objects:
        T = F.values[a]
        for d in D.objects:
            layout, degrees, labels = [], [], []
            for j, (c, s) in enumerate(T.generators):
                slot = V.slot(c, d)
                layout.append(len(degrees))
                degrees.extend(deg - s for deg in slot.degrees)
                labels.extend(f"{j}:{lab}" for lab in V.labels(c, d))
            layouts[(a, d)] = layout
            owners[(a, d)] = [
                (j, v) for j, (c, _) in enumerate(T.generators) for v in range(V.slot(c, d).dimension)
            ]
            if not degrees:
                continue
            diff = [None] * len(degrees)
            for j, (c, s) in enumerate(T.generators):
                slot = V.slot(c, d)
                for v in range(slot.dimension):
                    col = {}
                    add_scaled(col, {layout[j] + k: x for k, x in slot.differential[v].items()}, _sign(s))
                    for i, dvec in T.delta_by_source.get(j, ()):
                        img = V.act_left(c, T.obj(i), d, dvec, {v: one})
                        add_scaled(col, {layout[i] + k: x for k, x in img.items()})
                    diff[layout[j] + v] = col
            slots[(a, d)] = FiniteComplex(field, tuple(degrees), tuple(diff), tuple(labels))

    def locate(a, d, n):
        return owners[(a, d)][n]

    def left_fn(a, a2, d, k, n):
        j, v = locate(a, d, n)
        m = F.action[(a, a2)][k]
        out = {}
        layout2 = layouts[(a2, d)]
        for (i, jj), vec in m.entries.items():
            if jj != j:
                continue
            img = V.act_left(F.values[a].obj(j), F.values[a2].obj(i), d, vec, {v: one})
            add_scaled(out, {layout2[i] + p: x for p, x in img.items()})
        return out

    def right_fn(d2, d, a, k, n):
        j, v = locate(a, d, n)
        img = V.act_right(d2, d, F.values[a].obj(j), {k: one}, {v: one})
        base = layouts[(a, d2)][j]
        return {base + p: x for p, x in img.items()}

    out = build_bimodule(A, D, slots, left_fn, right_fn, name=name or f"{F.name}(x){V.name}")
    out.layouts = layouts
    out.owners = owners
    return out


def expand(F):
    """The explicit bimodule ``F (x)_C Delta_C``: slot ``(a, c)`` is ``Hom(h^c, F(a))``."""
    return tensor_explicit(F, _diagonal_bimodule(F.category), name=f"|{F.name}|")


@lru_cache(maxsize=None)
def _diagonal_bimodule(C):
    return diagonal_bimodule(C)


def expand_complex(X):
    """``Hom(h^c, X)`` for every object ``c`` as finite complexes."""
    return {c: hom_complex(representable(X.category, c), X) for c in X.category.objects}


########################################################################################
## Duals
########################################################################################


def dual_tc(X):
    """``X^v`` over ``C^op``: generators reversed with negated shifts.

    The entry from ``i`` to ``j`` is ``(-1)^{s_i s_j + s_i + 1} delta_ij``.
    """
    n = X.rank
    Cop = _opposite(X.category)
    gens = tuple((x, -s) for x, s in reversed(X.generators))
    delta = {}
    for (i, j), v in X.delta.items():
        si, sj = X.shift_of(i), X.shift_of(j)
        delta[(n - 1 - j, n - 1 - i)] = scaled(v, _sign(si * sj + si + 1))
    return TwistedComplex(Cop, gens, delta, f"{X.name}^v")


def dual_morphism(f, source=None, target=None):
    """``f^v: Y^v -> X^v``; the entry sign is ``(-1)^{s t + s + e (s + t)}``."""
    X, Y, e = f.source, f.target, f.degree
    n, m = X.rank, Y.rank
    entries = {}
    for (i, j), v in f.entries.items():
        s, t = X.shift_of(j), Y.shift_of(i)
        entries[(n - 1 - j, m - 1 - i)] = scaled(v, _sign(s * t + s + e * (s + t)))
    return ChainMorphism(source or dual_tc(Y), target or dual_tc(X), e, entries)


def dual_bimodule_tc(M):
    """``M^v`` over ``(A^op, C^op)`` with ``alpha^op`` acting by ``M(alpha)^v``."""
    Aop = _opposite(M.left)
    values = {a: dual_tc(X) for a, X in M.values.items()}
    action = {}
    for (a, a2), ms in M.action.items():
        action[(a2, a)] = tuple(dual_morphism(m, values[a2], values[a]) for m in ms)
    return TCBimodule(Aop, _opposite(M.category), values, action, name=f"{M.name}^v")


def double_dual_map(X):
    """The canonical isomorphism ``X -> X^vv``, ``diag((-1)^{s_j})``."""
    XX = dual_tc(dual_tc(X))
    if XX.category != X.category:
        raise ValueError("double opposite did not return the original category")
    XX = TwistedComplex(X.category, XX.generators, XX.delta, XX.name)
    return ChainMorphism(
        X,
        XX,
        0,
        {(j, j): scaled(X.category.unit(x), _sign(s)) for j, (x, s) in enumerate(X.generators)},
    )


########################################################################################
## Hom bimodules and the coaction
########################################################################################


def hom_bimodule(N, M, name=None):
    """``Hom_C(N, M)`` over ``(A, B)`` for ``N: B -> Tw(C)`` and ``M: A -> Tw(C)``.

    Slot ``(a, b)`` is ``Hom(N(b), M(a))``; ``alpha`` acts by ``M(alpha) o -``
    and ``beta`` by ``- o N(beta)``.
    """
    if N.category != M.category:
        raise ValueError("hom_bimodule needs bimodules over the same category")
    A, B = M.left, N.left
    spaces, slots = {}, {}
    for a in A.objects:
        for b in B.objects:
            sp = HomSpace(N.values[b], M.values[a])
            spaces[(a, b)] = sp
            if len(sp):
                slots[(a, b)] = sp.complex

    def left_fn(a, a2, b, k, n):
        f = spaces[(a, b)].basis_morphism(n)
        return spaces[(a2, b)].to_vector(compose(M.action[(a, a2)][k], f))

    def right_fn(b2, b, a, k, n):
        f = spaces[(a, b)].basis_morphism(n)
        return spaces[(a, b2)].to_vector(compose(f, N.action[(b2, b)][k]))

    out = build_bimodule(A, B, slots, left_fn, right_fn, name=name or f"Hom({N.name},{M.name})")
    out.hom_spaces = spaces
    return out


def hom_module(M, Y, name=None):
    """``Hom_C(M, Y)`` as a right module over ``A``, an explicit ``(k, A)``-bimodule."""
    return hom_bimodule(M, from_object(Y), name=name or f"Hom({M.name},{Y.name})")


def coaction(M):
    """The unit ``Delta_A -> Hom_C(M, M)``, ``alpha -> M(alpha)``."""
    A = M.left
    delta = _diagonal_bimodule(A)
    target = hom_bimodule(M, M, name=f"End({M.name})")
    components = {}
    for (a2, a), slot in delta.slots.items():
        # slot (a2, a) of Delta is A(a, a2)
        sp = target.hom_spaces[(a2, a)]
        components[(a2, a)] = [sp.to_vector(M.action[(a, a2)][k]) for k in range(slot.dimension)]
    return BimoduleMap(delta, target, components, 0)


########################################################################################
## Semifree models
########################################################################################


@dataclass(eq=False)
class SemifreeModel:
    """A twisted complex ``complex`` with a strict isomorphism onto ``module``.

    ``images[j]`` is the generator ``z_j`` in slot ``(pt, c_j)``;
    ``columns[x]`` lists ``(j, u)`` with ``u`` a basis index of
    ``hom(x, c_j)``, the basis on which ``theta[x]`` sends ``(j, u)`` to
    ``z_j . u``.
    """

    module: object
    complex: TwistedComplex
    images: list
    columns: dict
    theta: dict
    theta_inv: dict

    @property
    def point(self):
        return self.module.left.objects[0]

    def to_morphism(self, x, vec, degree):
        """The morphism ``h^x -> complex`` corresponding to ``vec`` in slot ``(pt, x)``."""
        T = self.complex
        entries = {}
        for n, coeff in apply_sparse(self.theta_inv[x], vec).items():
            j, u = self.columns[x][n]
            entries.setdefault((j, 0), {})[u] = coeff
        return ChainMorphism(representable(T.category, x), T, degree, entries)

    def coordinates(self, x, vec):
        """``theta^{-1}(vec)`` as ``{(j, u): scalar}``."""
        return {self.columns[x][n]: c for n, c in apply_sparse(self.theta_inv[x], vec).items()}

    def lift(self, other, f):
        """The strict lift of a module map ``f: module -> other.module`` to the models."""
        T, T2 = self.complex, other.complex
        pt = self.point
        entries = {}
        for j, z in enumerate(self.images):
            c = T.obj(j)
            img = f.apply(pt, c, z)
            for (i, u), coeff in other.coordinates(c, img).items():
                entries.setdefault((i, j), {})[u] = coeff
        return ChainMorphism(T, T2, f.degree, entries)


def apply_sparse(columns, vec):
    acc = {}
    for j, x in vec.items():
        add_scaled(acc, columns[j], x)
    return acc


def semifree_model(V, name=None):
    """A finite semifree model of a graded-free right module.

    ``V`` is an explicit ``(k, A)``-bimodule; generators complement the
    radical ``sum V(a') . alpha`` over non-unit basis elements ``alpha``.
    Raises :class:`NotSemifreeError` when the comparison is not bijective or
    the generators cannot be ordered triangularly.
    """
    A = V.right
    pt = V.left.objects[0]
    field = V.field
    one = field.one

    gens = []
    for a in A.objects:
        slot = V.slot(pt, a)
        n = slot.dimension
        if not n:
            continue
        radical = []
        for a2 in A.objects:
            acts = V.right_action.get((a, a2, pt))
            if not acts:
                continue
            for k in A.nonunit_basis(a, a2):
                radical.extend(col for col in acts[k] if col)
        m = matrix_from_columns(field, n, radical + [{v: one} for v in range(n)])
        picked = [p - len(radical) for p in independent_columns(m) if p >= len(radical)]
        gens.extend((a, v) for v in picked)

    def theta_columns(x, order):
        cols, keys = [], []
        for j, (c, v) in enumerate(order):
            for u in range(A.dim(x, c)):
                cols.append(V.act_right(x, c, pt, {u: one}, {v: one}))
                keys.append((j, u))
        return cols, keys

    def invert(x, order):
        cols, keys = theta_columns(x, order)
        n = V.slot(pt, x).dimension
        if len(cols) != n:
            raise NotSemifreeError(
                f"{V.name}: {len(cols)} free generators at {x} against a slot of dimension {n}"
            )
        try:
            inv = inverse_columns(field, cols)
        except ValueError:
            raise NotSemifreeError(f"{V.name} is not free over {A.name} at {x}") from None
        return cols, keys, inv

    # provisional order to read off the differential
    provisional = {}
    for x in A.objects:
        provisional[x] = invert(x, gens)
    deps = {g: set() for g in range(len(gens))}
    raw_delta = {}
    for g, (c, v) in enumerate(gens):
        dz = V.slot(pt, c).differential[v]
        cols, keys, inv = provisional[c]
        for n, coeff in apply_sparse(inv, dz).items():
            i, u = keys[n]
            raw_delta.setdefault((i, g), {})[u] = coeff
            deps[g].add(i)

    # Kahn: g must precede every i appearing in d z_g
    indeg = {g: 0 for g in deps}
    for g, targets in deps.items():
        for i in targets:
            indeg[i] += 1
    ready = sorted(g for g, k in indeg.items() if k == 0)
    order = []
    while ready:
        g = ready.pop(0)
        order.append(g)
        for i in sorted(deps[g]):
            indeg[i] -= 1
            if indeg[i] == 0:
                ready.append(i)
                ready.sort()
    if len(order) != len(gens):
        raise NotSemifreeError(f"{V.name}: generator differential is not triangular")
    pos = {g: n for n, g in enumerate(order)}
    ordered = [gens[g] for g in order]

    def z_degree(c, v):
        return V.slot(pt, c).degrees[v]

    T = TwistedComplex(
        A,
        tuple((c, -z_degree(c, v)) for c, v in ordered),
        {(pos[i], pos[g]): vec for (i, g), vec in raw_delta.items()},
        name or f"model({V.name})",
    )
    columns, theta, theta_inv = {}, {}, {}
    for x in A.objects:
        cols, keys, inv = invert(x, ordered)
        columns[x], theta[x], theta_inv[x] = keys, cols, inv
    images = [{v: one} for _, v in ordered]
    logger.debug("semifree model of %s: %d generators", V.name, len(ordered))
    return SemifreeModel(V, T, images, columns, theta, theta_inv)


def complex_as_twisted(field, V, name="V"):
    """A finite complex over ``k`` as a twisted complex of shifted points, ordered by degree."""
    k = _ground(field)
    pt = k.objects[0]
    order = sorted(range(V.dimension), key=lambda j: (V.degrees[j], j))
    pos = {j: n for n, j in enumerate(order)}
    delta = {}
    for j in order:
        for i, x in V.differential[j].items():
            delta[(pos[i], pos[j])] = {0: x}
    T = TwistedComplex(k, tuple((pt, -V.degrees[j]) for j in order), delta, name)
    object.__setattr__(T, "basis_order", tuple(order))
    return T


########################################################################################
## Natural transformations
########################################################################################


@dataclass(eq=False)
class TCBimoduleMap:
    """A natural transformation ``F -> G`` of dg functors ``A -> Tw(C)``."""

    source: TCBimodule
    target: TCBimodule
    components: dict
    degree: int = 0

    def component(self, a):
        return self.components[a]


def validate_tc_bimodule_map(eta):
    F, G, e = eta.source, eta.target, eta.degree
    A = F.left
    report = ValidationReport(f"natural map {F.name} -> {G.name}")
    for a in A.objects:
        report.checked += 1
        if not eta.components[a].is_closed():
            report.add("closed", a)
    for a in A.objects:
        for a2 in A.objects:
            for k in A.nonunit_basis(a, a2):
                lhs = compose(G.action[(a, a2)][k], eta.components[a])
                rhs = compose(eta.components[a2], F.action[(a, a2)][k])
                diff = add_morphisms(lhs, rhs, -_sign(e * A.degree(a, a2, k)))
                if diff.entries:
                    report.add("natural", A.label(a, a2, k))
    return report


def whisker_right(eta, K):
    """``eta (x) K: F (x) K -> G (x) K``."""
    S, T = tensor(eta.source, K), tensor(eta.target, K)
    comps = {
        a: flatten_morphism(eta.components[a], K, S.values[a], T.values[a])
        for a in eta.source.left.objects
    }
    return TCBimoduleMap(S, T, comps, eta.degree)


def whisker_left(K, eta):
    """``K (x) eta: K (x) F -> K (x) G`` for a degree-0 ``eta``."""
    if eta.degree != 0:
        raise ValueError("whisker_left is implemented for degree-0 maps")
    S, T = tensor(K, eta.source), tensor(K, eta.target)
    comps = {}
    for a, X in K.values.items():
        src, tgt = S.values[a], T.values[a]
        entries = {}
        for j, (c, s) in enumerate(X.generators):
            comp = eta.components[c]
            for (p, q), v in comp.entries.items():
                entries[(tgt.block_offsets[j] + p, src.block_offsets[j] + q)] = v
        comps[a] = ChainMorphism(src, tgt, 0, entries)
    return TCBimoduleMap(S, T, comps, 0)


def cone_tc_bimodule(eta, name=None):
    """``a -> cone(eta_a)`` with ``alpha`` acting by ``[[(-1)^{|alpha|} F(alpha), 0], [0, G(alpha)]]``."""
    F, G = eta.source, eta.target
    values = {a: cone(eta.components[a]) for a in F.left.objects}
    action = {}
    for (a, a2), ms in F.action.items():
        gs = G.action[(a, a2)]
        n, n2 = F.values[a].rank, F.values[a2].rank
        out = []
        for m, g in zip(ms, gs):
            entries = {k: scaled(v, _sign(m.degree)) for k, v in m.entries.items()}
            for (i, j), v in g.entries.items():
                entries[(i + n2, j + n)] = v
            out.append(ChainMorphism(values[a], values[a2], m.degree, entries))
        action[(a, a2)] = tuple(out)
    return TCBimodule(F.left, F.category, values, action, name=name or f"cone({F.name}->{G.name})")


def identity_transformation(F):
    return TCBimoduleMap(F, F, {a: identity(X) for a, X in F.values.items()}, 0)


########################################################################################
## Trace and its companions
########################################################################################


@dataclass(eq=False)
class TraceData:
    """The evaluation ``flatten(model, M) -> Y`` together with the model it uses."""

    bimodule: TCBimodule
    module: object
    model: SemifreeModel
    source: TwistedComplex
    map: ChainMorphism


def trace_data(M, Y):
    H = hom_module(M, Y)
    model = semifree_model(H)
    src = flatten(model.complex, M)
    pt = model.point
    entries = {}
    for j, z in enumerate(model.images):
        psi = H.hom_spaces[(pt, model.complex.obj(j))].to_morphism(z)
        off = src.block_offsets[j]
        for (i, q), v in psi.entries.items():
            entries[(i, off + q)] = v
    return TraceData(M, H, model, src, ChainMorphism(src, Y, 0, entries))


def trace(M, Y):
    """The evaluation ``Hom_C(M, Y) (x)_A M -> Y`` on the semifree model of ``Hom_C(M, Y)``."""
    return trace_data(M, Y).map


def insertion(data, a, psi):
    """The map ``M(a) -> flatten(model, M)`` classifying ``psi`` in ``Hom(M(a), Y)``."""
    pt = data.model.point
    vec = data.module.hom_spaces[(pt, a)].to_vector(psi)
    f = data.model.to_morphism(a, vec, psi.degree)
    return flatten_morphism(f, data.bimodule, flatten(f.source, data.bimodule), data.source)


def zigzag_check(M):
    """``trace o insertion(id) = id`` on every value, strictly and on homology."""
    report = ValidationReport(f"zig-zag for {M.name}")
    for a, X in M.values.items():
        report.checked += 1
        data = trace_data(M, X)
        ins = insertion(data, a, identity(X))
        if not ins.is_closed():
            report.add("insertion closed", a)
        comp = compose(data.map, ins)
        if comp.entries != identity(X).entries:
            report.add("strict identity", a)
    return report


def adjunction_check(M, X, Y):
    """``H Hom_C(X (x)_A M, Y)`` against ``H Hom_A(X, model of Hom_C(M, Y))``."""
    left = hom_complex(flatten(X, M), Y).homology()
    model = semifree_model(hom_module(M, Y))
    right = hom_complex(X, model.complex).homology()
    report = ValidationReport(f"adjunction for {M.name}")
    report.checked = 1
    if left != right:
        report.add("dimensions", f"{left.dims} != {right.dims}")
    report.left = left
    report.right = right
    return report
