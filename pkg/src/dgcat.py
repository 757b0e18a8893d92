"""Finite dg-categories given by structure constants, and explicit bimodules over them.

A :class:`DGCategory` stores, for every ordered pair of objects ``(x, y)``,
a graded basis of ``hom(x, y)`` (morphisms ``x -> y``), the differential of
each basis element, and composition constants
``hom(y, z) x hom(x, y) -> hom(x, z)``. Elements are sparse
``{basis index: scalar}`` dicts.

An :class:`ExplicitBimodule` over ``(A, B)`` stores one finite complex per
slot ``(a, b)``; the slot is covariant in ``a`` (left action of
``A(a, a2)``) and contravariant in ``b`` (right action of ``B(b2, b)``).
The diagonal bimodule has slot ``(a, b) = hom(b, a)``.
"""

import logging
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property

from exactlinalg import (
    FiniteComplex,
    add_scaled,
    apply_columns,
    matrix_from_sparse_rows,
    scaled,
)

logger = logging.getLogger(__name__)

MAX_WITNESSES = 20


class NonHomogeneousRelationError(ValueError):
    """A quiver relation mixes paths of different length, degree or endpoints."""


class InfiniteHomError(ValueError):
    """A quiver path category does not saturate within the length bound."""


@dataclass(frozen=True)
class BasisElement:
    label: str
    degree: int


@dataclass
class ValidationReport:
    """Outcome of an axiom check; never raised, always returned."""

    subject: str
    violations: list = dataclass_field(default_factory=list)
    checked: int = 0

    @property
    def passed(self):
        return not self.violations

    @property
    def status(self):
        return "pass" if self.passed else "fail"

    def add(self, axiom, witness):
        if len(self.violations) < MAX_WITNESSES:
            self.violations.append({"axiom": axiom, "witness": witness})
        else:
            self.violations[-1] = {"axiom": axiom, "witness": witness, "truncated": True}

    def to_dict(self):
        return {
            "subject": self.subject,
            "status": self.status,
            "checked": self.checked,
            "violations": list(self.violations),
        }


########################################################################################
## Categories
########################################################################################


class DGCategory:
    """A finite dg-category.

    Parameters
    ----------
    field : Field
    objects : sequence of str
    basis : dict mapping ``(x, y)`` to a sequence of :class:`BasisElement`
    differential : dict mapping ``(x, y)`` to one sparse vector per basis element
    composition : dict mapping ``(x, y, z)`` to ``{(i_g, j_f): sparse vector}``
        where ``g`` is the ``i_g``-th basis element of ``hom(y, z)`` and ``f``
        the ``j_f``-th of ``hom(x, y)``; missing pairs compose to zero.
    units : dict mapping ``x`` to the basis index of its identity
    """

    def __init__(self, field, objects, basis, differential, composition, units, name="C"):
        self.field = field
        self.objects = tuple(objects)
        self.basis = {
            key: tuple(elems) for key, elems in basis.items() if len(elems)
        }
        self.differential = {
            key: tuple(dict(v) for v in cols)
            for key, cols in differential.items()
            if key in self.basis
        }
        self.composition = {
            key: table for key, table in composition.items() if table
        }
        self.units = dict(units)
        self.name = name
        for x in self.objects:
            if x not in self.units:
                raise ValueError(f"object {x!r} of {name} has no unit")

    def __repr__(self):
        return f"DGCategory({self.name!r}, objects={list(self.objects)}, dim={self.total_dimension})"

    @cached_property
    def fingerprint(self):
        def vec(v):
            return tuple(sorted((i, str(x)) for i, x in v.items()))

        return (
            self.field.name,
            self.objects,
            tuple(sorted((k, v) for k, v in self.basis.items())),
            tuple(
                sorted((k, tuple(vec(c) for c in cols)) for k, cols in self.differential.items())
            ),
            tuple(
                sorted(
                    (k, tuple(sorted((pair, vec(v)) for pair, v in table.items())))
                    for k, table in self.composition.items()
                )
            ),
            tuple(sorted(self.units.items())),
        )

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, DGCategory):
            return NotImplemented
        return self.fingerprint == other.fingerprint

    def __hash__(self):
        return hash(self.fingerprint)

    # -- basis bookkeeping ---------------------------------------------------------

    def hom(self, x, y):
        return self.basis.get((x, y), ())

    def dim(self, x, y):
        return len(self.hom(x, y))

    def degree(self, x, y, i):
        return self.basis[(x, y)][i].degree

    def label(self, x, y, i):
        return self.basis[(x, y)][i].label

    def index(self, x, y, label):
        for i, b in enumerate(self.hom(x, y)):
            if b.label == label:
                return i
        raise KeyError(f"no basis element {label!r} in hom({x}, {y}) of {self.name}")

    def element(self, x, y, coefficients):
        """Sparse vector from ``{label: scalar}``."""
        out = {}
        for lab, c in coefficients.items():
            add_scaled(out, {self.index(x, y, lab): self.field(c)})
        return out

    def unit(self, x):
        return {self.units[x]: self.field.one}

    def is_unit(self, x, y, i):
        return x == y and self.units[x] == i

    def nonunit_basis(self, x, y):
        return [i for i in range(self.dim(x, y)) if not self.is_unit(x, y, i)]

    @property
    def total_dimension(self):
        return sum(len(v) for v in self.basis.values())

    def pairs(self):
        return [(x, y) for x in self.objects for y in self.objects]

    # -- structure -----------------------------------------------------------------

    def d_basis(self, x, y, i):
        cols = self.differential.get((x, y))
        return cols[i] if cols else {}

    def d(self, x, y, vec):
        cols = self.differential.get((x, y))
        if not cols:
            return {}
        return apply_columns(cols, vec)

    def compose_basis(self, x, y, z, ig, jf):
        """``g o f`` for basis ``g`` of ``hom(y, z)`` and ``f`` of ``hom(x, y)``."""
        table = self.composition.get((x, y, z))
        if not table:
            return {}
        return table.get((ig, jf), {})

    def compose(self, x, y, z, g, f):
        """``g o f`` for ``f`` in ``hom(x, y)`` and ``g`` in ``hom(y, z)``."""
        table = self.composition.get((x, y, z))
        if not table or not g or not f:
            return {}
        acc = {}
        for ig, a in g.items():
            for jf, b in f.items():
                prod = table.get((ig, jf))
                if prod:
                    add_scaled(acc, prod, a * b)
        return acc

    def hom_complex(self, x, y):
        elems = self.hom(x, y)
        return FiniteComplex(
            self.field,
            tuple(b.degree for b in elems),
            tuple(self.d_basis(x, y, i) for i in range(len(elems))),
            tuple(b.label for b in elems),
        )

    def homology_table(self):
        return {(x, y): self.hom_complex(x, y).homology() for x, y in self.pairs()}


def _sign(n):
    return -1 if n % 2 else 1


def validate(c):
    """Check every dg-category axiom exhaustively on basis elements."""
    report = ValidationReport(f"category {c.name}")
    one = c.field.one
    for x in c.objects:
        u = c.units[x]
        if u >= c.dim(x, x) or c.degree(x, x, u) != 0:
            report.add("unit", f"unit of {x} is not a degree-0 basis element")
        elif c.d_basis(x, x, u):
            report.add("unit", f"unit of {x} is not closed")
    for x, y in c.pairs():
        for i in range(c.dim(x, y)):
            report.checked += 1
            di = c.d_basis(x, y, i)
            for k in di:
                if c.degree(x, y, k) != c.degree(x, y, i) + 1:
                    report.add("differential degree", f"d({c.label(x, y, i)}) in hom({x},{y})")
            if di and c.d(x, y, di):
                report.add("d^2 = 0", f"d(d({c.label(x, y, i)})) != 0 in hom({x},{y})")
    for x in c.objects:
        for y in c.objects:
            if x not in c.units or y not in c.units:
                continue
            ex, ey = c.units[x], c.units[y]
            for i in range(c.dim(x, y)):
                f = {i: one}
                if c.compose(x, x, y, f, {ex: one}) != f or c.compose(x, y, y, {ey: one}, f) != f:
                    report.add("unit law", f"{c.label(x, y, i)} in hom({x},{y})")
    for x in c.objects:
        for y in c.objects:
            for z in c.objects:
                for ig in range(c.dim(y, z)):
                    dg = c.degree(y, z, ig)
                    for jf in range(c.dim(x, y)):
                        df = c.degree(x, y, jf)
                        report.checked += 1
                        prod = c.compose_basis(x, y, z, ig, jf)
                        if any(c.degree(x, z, k) != dg + df for k in prod):
                            report.add(
                                "composition degree",
                                f"{c.label(y, z, ig)} o {c.label(x, y, jf)}",
                            )
                        lhs = c.d(x, z, prod)
                        rhs = c.compose(x, y, z, c.d_basis(y, z, ig), {jf: one})
                        add_scaled(rhs, c.compose(x, y, z, {ig: one}, c.d_basis(x, y, jf)), _sign(dg))
                        add_scaled(lhs, rhs, -1)
                        if lhs:
                            report.add(
                                "Leibniz",
                                f"d({c.label(y, z, ig)} o {c.label(x, y, jf)})",
                            )
    for w in c.objects:
        for x in c.objects:
            for y in c.objects:
                for z in c.objects:
                    if not (c.dim(w, x) and c.dim(x, y) and c.dim(y, z)):
                        continue
                    for ih in range(c.dim(y, z)):
                        for ig in range(c.dim(x, y)):
                            hg = c.compose_basis(x, y, z, ih, ig)
                            for jf in range(c.dim(w, x)):
                                report.checked += 1
                                left = c.compose(w, x, z, hg, {jf: one})
                                right = c.compose(w, y, z, {ih: one}, c.compose_basis(w, x, y, ig, jf))
                                if left != right:
                                    report.add(
                                        "associativity",
                                        f"({c.label(y, z, ih)}, {c.label(x, y, ig)}, {c.label(w, x, jf)})",
                                    )
    return report


########################################################################################
## Constructors
########################################################################################


def field_category(field, obj="pt"):
    """The ground field as a one-object dg-category."""
    return DGCategory(
        field,
        [obj],
        {(obj, obj): [BasisElement("1", 0)]},
        {(obj, obj): [{}]},
        {(obj, obj, obj): {(0, 0): {0: field.one}}},
        {obj: 0},
        name="k",
    )


def truncated_polynomial(n, deg_t, field, variable="t", obj="pt"):
    """``k[t]/t^{n+1}`` with ``deg t = deg_t`` and zero differential."""
    if n < 1:
        raise ValueError(f"truncated polynomial needs n >= 1, got {n}")

    def label(k):
        if k == 0:
            return "1"
        return variable if k == 1 else f"{variable}^{k}"

    basis = [BasisElement(label(k), k * deg_t) for k in range(n + 1)]
    table = {
        (i, j): {i + j: field.one} for i in range(n + 1) for j in range(n + 1) if i + j <= n
    }
    return DGCategory(
        field,
        [obj],
        {(obj, obj): basis},
        {(obj, obj): [{} for _ in basis]},
        {(obj, obj, obj): table},
        {obj: 0},
        name=f"k[{variable}]/{variable}^{n + 1}",
    )


def _path_label(path):
    return "*".join(name for name, _, _, _ in reversed(path))


def quiver_path_category(field, vertices, arrows, relations=(), max_length=6, name="kQ"):
    """Path category of a graded quiver modulo homogeneous relations.

    Parameters
    ----------
    arrows : sequence of ``(name, source, target, degree)``
    relations : sequence of ``{path label: scalar}``; a path label lists its
        arrows in composition order, so ``"b*a"`` means ``a`` then ``b``.
    max_length : saturation bound; every path of length ``max_length + 1``
        must vanish modulo the relations.

    The hom basis from ``x`` to ``y`` is a set of path classes; units are
    labelled ``e_<vertex>``.
    """
    vertices = [str(v) for v in vertices]
    arrows = [(str(a), str(s), str(t), int(deg)) for a, s, t, deg in arrows]
    names = [a[0] for a in arrows]
    if len(set(names)) != len(names):
        raise ValueError("arrow names must be unique")
    for a, s, t, _ in arrows:
        if s not in vertices or t not in vertices:
            raise ValueError(f"arrow {a} uses an unknown vertex")

    # paths[L] : list of tuples of arrows, composable left to right
    paths = {0: [((), v) for v in vertices]}
    by_source = {}
    for arrow in arrows:
        by_source.setdefault(arrow[1], []).append(arrow)
    for L in range(1, max_length + 2):
        nxt = []
        for seq, end in paths[L - 1]:
            if L == 1:
                start_arrows = by_source.get(end, [])
            else:
                start_arrows = by_source.get(seq[-1][2], [])
            for arrow in start_arrows:
                nxt.append((seq + (arrow,), arrow[2]))
        paths[L] = nxt

    def endpoints(seq, vertex):
        if not seq:
            return vertex, vertex
        return seq[0][1], seq[-1][2]

    catalogue = {}
    for L, plist in paths.items():
        for seq, v in plist:
            s, t = endpoints(seq, v)
            lab = f"e_{v}" if not seq else _path_label(seq)
            catalogue[lab] = (seq, s, t, L, sum(a[3] for a in seq))

    # relations, checked for homogeneity
    rels = []
    for rel in relations:
        items = [(str(lab), field(c)) for lab, c in dict(rel).items()]
        items = [(lab, c) for lab, c in items if c]
        if not items:
            continue
        keys = set()
        for lab, _ in items:
            if lab not in catalogue:
                raise ValueError(f"relation mentions unknown path {lab!r}")
            _, s, t, L, deg = catalogue[lab]
            keys.add((s, t, L, deg))
        if len(keys) != 1:
            raise NonHomogeneousRelationError(
                f"relation {dict(rel)} mixes endpoints, lengths or degrees: {sorted(keys)}"
            )
        rels.append(items)

    # ideal spanned by p * r * q, organised by (source, target, length)
    groups = {}
    for lab, (seq, s, t, L, deg) in catalogue.items():
        groups.setdefault((s, t, L), []).append(lab)
    ideal = {key: [] for key in groups}
    for items in rels:
        lab0 = items[0][0]
        _, rs, rt, rL, _ = catalogue[lab0]
        for pre_L in range(0, max_length + 2 - rL):
            for post_L in range(0, max_length + 2 - rL - pre_L):
                for pre_seq, pv in paths[pre_L]:
                    ps, pt = endpoints(pre_seq, pv)
                    if pt != rs:
                        continue
                    for post_seq, qv in paths[post_L]:
                        qs, qt = endpoints(post_seq, qv)
                        if qs != rt:
                            continue
                        vec = {}
                        for lab, c in items:
                            full = pre_seq + catalogue[lab][0] + post_seq
                            flab = _path_label(full) if full else f"e_{ps}"
                            vec[flab] = vec.get(flab, 0) + c
                        ideal[(ps, qt, pre_L + rL + post_L)].append(vec)

    normal_forms = {}
    quotient = {}
    for key, labs in groups.items():
        pos = {lab: k for k, lab in enumerate(labs)}
        rows = [{pos[lab]: c for lab, c in vec.items() if c} for vec in ideal[key]]
        rows = [r for r in rows if r]
        if rows:
            m = matrix_from_sparse_rows(field, len(labs), rows)
            reduced, pivots = m.rref()
            dok = reduced.to_dok()
        else:
            dok, pivots = {}, ()
        pivot_rows = {p: r for r, p in enumerate(pivots)}
        keep = [lab for k, lab in enumerate(labs) if k not in pivot_rows]
        quotient[key] = keep
        for k, lab in enumerate(labs):
            if k in pivot_rows:
                r = pivot_rows[k]
                nf = {}
                for (rr, cc), x in dok.items():
                    if rr == r and cc != k and x:
                        nf[labs[cc]] = -x
                normal_forms[lab] = nf
            else:
                normal_forms[lab] = {lab: field.one}

    for (s, t, L), keep in quotient.items():
        if L == max_length + 1 and keep:
            raise InfiniteHomError(
                f"paths of length {L} from {s} to {t} survive the relations; "
                f"hom spaces are infinite or max_length={max_length} is too small"
            )

    basis = {}
    where = {}
    for (s, t, L), keep in sorted(quotient.items(), key=lambda kv: kv[0][2]):
        if L > max_length:
            continue
        for lab in keep:
            elems = basis.setdefault((s, t), [])
            where[lab] = (s, t, len(elems))
            elems.append(BasisElement(lab, catalogue[lab][4]))

    def reduce(lab):
        out = {}
        for q, c in normal_forms.get(lab, {}).items():
            if q in where:
                add_scaled(out, {where[q][2]: c})
        return out

    composition = {}
    for (x, y), fs in basis.items():
        for (y2, z), gs in basis.items():
            if y2 != y:
                continue
            table = {}
            for jf, f in enumerate(fs):
                fseq = catalogue[f.label][0]
                for ig, g in enumerate(gs):
                    gseq = catalogue[g.label][0]
                    full = fseq + gseq
                    if len(full) > max_length + 1:
                        continue
                    flab = _path_label(full) if full else f"e_{x}"
                    prod = reduce(flab)
                    if prod:
                        table[(ig, jf)] = prod
            composition[(x, y, z)] = table

    units = {v: where[f"e_{v}"][2] for v in vertices}
    differential = {key: [{} for _ in elems] for key, elems in basis.items()}
    return DGCategory(field, vertices, basis, differential, composition, units, name=name)


def kronecker(field, arrow_degree=0):
    """The Kronecker quiver ``2 => 1`` with arrows ``a, b`` of the given degree."""
    return quiver_path_category(
        field,
        ["1", "2"],
        [("a", "2", "1", arrow_degree), ("b", "2", "1", arrow_degree)],
        name="Kronecker" if arrow_degree == 0 else f"Kronecker(deg {arrow_degree})",
    )


def opposite(c):
    """``C^op``: ``hom_op(x, y) = hom(y, x)`` and ``g o_op f = (-1)^{|f||g|} f o g``."""
    basis = {(y, x): elems for (x, y), elems in c.basis.items()}
    differential = {(y, x): cols for (x, y), cols in c.differential.items()}
    composition = {}
    for (x, y, z), table in c.composition.items():
        # f in hom(x,y) = op(y,x), g in hom(y,z) = op(z,y); f o g in op(z,x)
        new = {}
        for (ig, jf), prod in table.items():
            sign = _sign(c.degree(y, z, ig) * c.degree(x, y, jf))
            new[(jf, ig)] = scaled(prod, sign) if sign < 0 else prod
        composition[(z, y, x)] = new
    name = c.name[:-3] if c.name.endswith("^op") else f"{c.name}^op"
    return DGCategory(c.field, c.objects, basis, differential, composition, c.units, name=name)


def tensor_cat(A, B):
    """Tensor product category with Koszul-signed composition and differential.

    Objects are named ``"a|b"`` and basis labels ``"f|g"``.
    """
    if A.field != B.field:
        raise ValueError("tensor_cat needs categories over the same field")
    field = A.field
    objects = [f"{a}|{b}" for a in A.objects for b in B.objects]
    pairs = {f"{a}|{b}": (a, b) for a in A.objects for b in B.objects}
    basis, index = {}, {}
    for X in objects:
        for Y in objects:
            (a, b), (a2, b2) = pairs[X], pairs[Y]
            elems = []
            for i, f in enumerate(A.hom(a, a2)):
                for j, g in enumerate(B.hom(b, b2)):
                    index[(X, Y, i, j)] = len(elems)
                    elems.append(BasisElement(f"{f.label}|{g.label}", f.degree + g.degree))
            if elems:
                basis[(X, Y)] = elems

    differential = {}
    for (X, Y), elems in basis.items():
        (a, b), (a2, b2) = pairs[X], pairs[Y]
        cols = []
        for i in range(A.dim(a, a2)):
            di = A.d_basis(a, a2, i)
            deg_i = A.degree(a, a2, i)
            for j in range(B.dim(b, b2)):
                col = {}
                for k, x in di.items():
                    add_scaled(col, {index[(X, Y, k, j)]: x})
                for k, x in B.d_basis(b, b2, j).items():
                    add_scaled(col, {index[(X, Y, i, k)]: x}, _sign(deg_i))
                cols.append(col)
        differential[(X, Y)] = cols

    composition = {}
    for X in objects:
        for Y in objects:
            for Z in objects:
                if (X, Y) not in basis or (Y, Z) not in basis:
                    continue
                (a, b), (a2, b2), (a3, b3) = pairs[X], pairs[Y], pairs[Z]
                table = {}
                for i1 in range(A.dim(a2, a3)):
                    for j1 in range(B.dim(b2, b3)):
                        for i0 in range(A.dim(a, a2)):
                            gf = A.compose_basis(a, a2, a3, i1, i0)
                            if not gf:
                                continue
                            for j0 in range(B.dim(b, b2)):
                                g2f2 = B.compose_basis(b, b2, b3, j1, j0)
                                if not g2f2:
                                    continue
                                sign = _sign(B.degree(b2, b3, j1) * A.degree(a, a2, i0))
                                prod = {}
                                for p, x in gf.items():
                                    for q, y in g2f2.items():
                                        add_scaled(prod, {index[(X, Z, p, q)]: x * y}, sign)
                                if prod:
                                    table[(index[(Y, Z, i1, j1)], index[(X, Y, i0, j0)])] = prod
                composition[(X, Y, Z)] = table
    units = {X: index[(X, X, A.units[pairs[X][0]], B.units[pairs[X][1]])] for X in objects}
    return DGCategory(field, objects, basis, differential, composition, units, name=f"{A.name}(x){B.name}")


def square_zero_extension(A, W, name=None):
    """``A`` extended by an ``(A, A)``-bimodule ``W`` with ``W o W = 0``.

    ``hom'(x, y) = A(x, y) + W(y, x)``; ``A`` acts on ``W`` through the
    bimodule actions.
    """
    field = A.field
    basis, differential, composition = {}, {}, {}
    for x in A.objects:
        for y in A.objects:
            elems = list(A.hom(x, y))
            na = len(elems)
            slot = W.slot(y, x)
            elems += [BasisElement(lab, deg) for lab, deg in zip(W.labels(y, x), slot.degrees)]
            if not elems:
                continue
            basis[(x, y)] = elems
            cols = [dict(A.d_basis(x, y, i)) for i in range(na)]
            cols += [{na + k: c for k, c in col.items()} for col in slot.differential]
            differential[(x, y)] = cols
    for x in A.objects:
        for y in A.objects:
            for z in A.objects:
                if (x, y) not in basis or (y, z) not in basis:
                    continue
                na_xy, na_yz, na_xz = A.dim(x, y), A.dim(y, z), A.dim(x, z)
                table = {}
                for (ig, jf), prod in A.composition.get((x, y, z), {}).items():
                    table[(ig, jf)] = dict(prod)
                # g in A(y,z) acting on w in W(y,x): left action into W(z,x)
                for ig in range(na_yz):
                    acts = W.left_action.get((y, z, x))
                    if not acts:
                        continue
                    for k, col in enumerate(acts[ig]):
                        if col:
                            table[(ig, na_xy + k)] = {na_xz + m: c for m, c in col.items()}
                # w in W(z,y) after f in A(x,y): right action into W(z,x)
                for jf in range(na_xy):
                    acts = W.right_action.get((x, y, z))
                    if not acts:
                        continue
                    for k, col in enumerate(acts[jf]):
                        if col:
                            table[(na_yz + k, jf)] = {na_xz + m: c for m, c in col.items()}
                composition[(x, y, z)] = table
    return DGCategory(field, A.objects, basis, differential, composition, A.units, name=name or f"{A.name}+W")


def trivial_extension(c, pairing_degree):
    """``A + A^*`` with the dual part placed so the pairing has degree ``pairing_degree``.

    The dual of ``f`` in ``hom(y, x)`` is the element ``f*`` in ``hom(x, y)``
    of degree ``pairing_degree - |f|``.

    >>> from exactlinalg import RATIONAL
    >>> t = trivial_extension(field_category(RATIONAL), 2)
    >>> [(b.label, b.degree) for b in t.hom("pt", "pt")]
    [('1', 0), ('1*', 2)]
    """
    W = shift_bimodule(dual_bimodule(diagonal_bimodule(c)), -pairing_degree)
    return square_zero_extension(c, W, name=f"T({c.name},{pairing_degree})")


def glue(B, A, phi, prefixes=("B:", "A:")):
    """Upper-triangular gluing of ``B`` and ``A`` along the ``(A, B)``-bimodule ``phi``.

    Objects are ``B:<b>`` and ``A:<a>``; ``hom(B:b, A:a) = phi(a, b)`` and
    nothing goes from ``A``-objects to ``B``-objects.
    """
    if phi.left != A or phi.right != B:
        raise ValueError("gluing bimodule must be over (A, B)")
    report = validate_bimodule(phi)
    if not report.passed:
        raise ValueError(f"gluing bimodule fails its axioms: {report.violations[:3]}")
    pb, pa = prefixes
    field = A.field
    bn = {b: f"{pb}{b}" for b in B.objects}
    an = {a: f"{pa}{a}" for a in A.objects}
    objects = [bn[b] for b in B.objects] + [an[a] for a in A.objects]
    basis, differential, composition = {}, {}, {}
    for cat, names in ((B, bn), (A, an)):
        for (x, y), elems in cat.basis.items():
            basis[(names[x], names[y])] = elems
            differential[(names[x], names[y])] = cat.differential.get((x, y), [{} for _ in elems])
        for (x, y, z), table in cat.composition.items():
            composition[(names[x], names[y], names[z])] = table
    for a in A.objects:
        for b in B.objects:
            slot = phi.slot(a, b)
            if not slot.dimension:
                continue
            basis[(bn[b], an[a])] = [
                BasisElement(lab, deg) for lab, deg in zip(phi.labels(a, b), slot.degrees)
            ]
            differential[(bn[b], an[a])] = slot.differential
    for b in B.objects:
        for a in A.objects:
            for a2 in A.objects:
                acts = phi.left_action.get((a, a2, b))
                if acts:
                    # alpha in A(a,a2) o u in phi(a,b)
                    composition[(bn[b], an[a], an[a2])] = {
                        (ia, k): col
                        for ia, cols in enumerate(acts)
                        for k, col in enumerate(cols)
                        if col
                    }
    for b2 in B.objects:
        for b in B.objects:
            for a in A.objects:
                acts = phi.right_action.get((b2, b, a))
                if acts:
                    # u in phi(a,b) o beta in B(b2,b)
                    composition[(bn[b2], bn[b], an[a])] = {
                        (k, ib): col
                        for ib, cols in enumerate(acts)
                        for k, col in enumerate(cols)
                        if col
                    }
    units = {bn[b]: B.units[b] for b in B.objects}
    units.update({an[a]: A.units[a] for a in A.objects})
    return DGCategory(field, objects, basis, differential, composition, units, name=f"{B.name}|_phi|{A.name}")


def category_from_structure(field, objects, homs, products=None, differential=None, units=None, name="C"):
    """A category from raw structure constants with globally unique basis labels.

    Parameters
    ----------
    homs : ``{"x->y": [[label, degree], ...]}``
    products : ``{"g*f": {label: scalar}}``; unlisted products of non-units vanish
    differential : ``{label: {label: scalar}}``
    units : ``{object: label}``; defaults to ``"e_<object>"``
    """
    products = products or {}
    differential = differential or {}
    units = units or {x: f"e_{x}" for x in objects}
    basis, where = {}, {}
    for key, elems in homs.items():
        x, y = [s.strip() for s in key.split("->")]
        if x not in objects or y not in objects:
            raise ValueError(f"hom key {key!r} uses an unknown object")
        basis[(x, y)] = [BasisElement(str(lab), int(deg)) for lab, deg in elems]
        for i, (lab, _) in enumerate(elems):
            if lab in where:
                raise ValueError(f"basis label {lab!r} is used twice")
            where[str(lab)] = (x, y, i)
    for x in objects:
        if units[x] not in where or where[units[x]][:2] != (x, x):
            raise ValueError(f"unit {units[x]!r} of {x} is not a basis element of hom({x},{x})")
    unit_labels = {units[x] for x in objects}
    diff = {key: [{} for _ in elems] for key, elems in basis.items()}
    for lab, image in differential.items():
        x, y, i = where[lab]
        for lab2, c in image.items():
            x2, y2, k = where[lab2]
            if (x2, y2) != (x, y):
                raise ValueError(f"d({lab}) leaves hom({x},{y})")
            add_scaled(diff[(x, y)][i], {k: field(c)})
    composition = {}
    for (x, y), fs in basis.items():
        for (y2, z), gs in basis.items():
            if y2 != y:
                continue
            table = {}
            for jf, f in enumerate(fs):
                for ig, g in enumerate(gs):
                    if f.label in unit_labels:
                        table[(ig, jf)] = {ig: field.one}
                    elif g.label in unit_labels:
                        table[(ig, jf)] = {jf: field.one}
                    else:
                        image = products.get(f"{g.label}*{f.label}", {})
                        vec = {}
                        for lab, c in image.items():
                            x3, z3, k = where[lab]
                            if (x3, z3) != (x, z):
                                raise ValueError(f"product {g.label}*{f.label} lands outside hom({x},{z})")
                            add_scaled(vec, {k: field(c)})
                        if vec:
                            table[(ig, jf)] = vec
            composition[(x, y, z)] = table
    return DGCategory(
        field, objects, basis, diff, composition, {x: where[units[x]][2] for x in objects}, name=name
    )


########################################################################################
## Explicit bimodules
########################################################################################


class ExplicitBimodule:
    """Finite-dimensional ``(A, B)``-bimodule given slot by slot.

    ``left_action[(a, a2, b)][alpha][v]`` is ``alpha . v`` in slot ``(a2, b)``
    for ``alpha`` in ``A(a, a2)`` and ``v`` a basis vector of slot ``(a, b)``.
    ``right_action[(b2, b, a)][beta][v]`` is ``v . beta`` in slot ``(a, b2)``
    for ``beta`` in ``B(b2, b)``.
    """

    def __init__(self, left, right, slots, left_action, right_action, name="V"):
        self.left = left
        self.right = right
        self.slots = dict(slots)
        self.left_action = left_action
        self.right_action = right_action
        self.name = name

    def __repr__(self):
        return f"ExplicitBimodule({self.name!r} over ({self.left.name}, {self.right.name}))"

    @property
    def field(self):
        return self.left.field

    def slot(self, a, b):
        s = self.slots.get((a, b))
        if s is None:
            return FiniteComplex.zero(self.field, ())
        return s

    def labels(self, a, b):
        s = self.slot(a, b)
        if s.labels is None:
            return tuple(f"v{k}" for k in range(s.dimension))
        return s.labels

    def slot_keys(self):
        return [(a, b) for a in self.left.objects for b in self.right.objects]

    def act_left(self, a, a2, b, alpha, vec):
        acts = self.left_action.get((a, a2, b))
        if not acts or not alpha or not vec:
            return {}
        acc = {}
        for i, x in alpha.items():
            add_scaled(acc, apply_columns(acts[i], vec), x)
        return acc

    def act_right(self, b2, b, a, beta, vec):
        acts = self.right_action.get((b2, b, a))
        if not acts or not beta or not vec:
            return {}
        acc = {}
        for i, x in beta.items():
            add_scaled(acc, apply_columns(acts[i], vec), x)
        return acc

    def homology_table(self):
        return {key: self.slot(*key).homology() for key in self.slot_keys()}

    def structurally_equal(self, other):
        if self.left != other.left or self.right != other.right:
            return False
        for key in self.slot_keys():
            s, t = self.slot(*key), other.slot(*key)
            if s.degrees != t.degrees or list(s.differential) != list(t.differential):
                return False
        return self.left_action == other.left_action and self.right_action == other.right_action


def build_bimodule(left, right, slots, left_fn, right_fn, name="V"):
    """Tabulate actions from ``left_fn(a, a2, b, i_alpha, v)`` and ``right_fn(b2, b, a, i_beta, v)``."""
    def slot_dim(a, b):
        s = slots.get((a, b))
        return s.dimension if s is not None else 0

    left_action = {}
    for a in left.objects:
        for a2 in left.objects:
            n_alpha = left.dim(a, a2)
            if not n_alpha:
                continue
            for b in right.objects:
                n = slot_dim(a, b)
                if not n or not slot_dim(a2, b):
                    continue
                left_action[(a, a2, b)] = tuple(
                    tuple(left_fn(a, a2, b, i, v) for v in range(n)) for i in range(n_alpha)
                )
    right_action = {}
    for b2 in right.objects:
        for b in right.objects:
            n_beta = right.dim(b2, b)
            if not n_beta:
                continue
            for a in left.objects:
                n = slot_dim(a, b)
                if not n or not slot_dim(a, b2):
                    continue
                right_action[(b2, b, a)] = tuple(
                    tuple(right_fn(b2, b, a, i, v) for v in range(n)) for i in range(n_beta)
                )
    return ExplicitBimodule(left, right, slots, left_action, right_action, name=name)


def diagonal_bimodule(C):
    """``Delta_C(a, b) = hom(b, a)`` with composition on both sides."""
    slots = {(a, b): C.hom_complex(b, a) for a in C.objects for b in C.objects if C.dim(b, a)}
    return build_bimodule(
        C,
        C,
        slots,
        lambda a, a2, b, i, v: C.compose_basis(b, a, a2, i, v),
        lambda b2, b, a, i, v: C.compose_basis(b2, b, a, v, i),
        name=f"Delta({C.name})",
    )


def vector_space_bimodule(A, B, degrees, a=None, b=None, labels=None):
    """A graded vector space in one slot, acted on by units only (``A``, ``B`` one-object)."""
    a = a if a is not None else A.objects[0]
    b = b if b is not None else B.objects[0]
    degrees = tuple(int(d) for d in degrees)
    labels = tuple(labels) if labels else tuple(f"u{k}" for k in range(len(degrees)))
    slots = {(a, b): FiniteComplex.zero(A.field, degrees, labels)} if degrees else {}
    if A.total_dimension != 1 or B.total_dimension != 1:
        raise ValueError("vector_space_bimodule expects one-object categories equal to k")
    one = A.field.one
    return build_bimodule(
        A, B, slots,
        lambda a_, a2, b_, i, v: {v: one},
        lambda b2, b_, a_, i, v: {v: one},
        name="V",
    )


def dual_bimodule(V):
    """``V^*`` over ``(B, A)`` with ``V^*(b, a) = V(a, b)^*``.

    Pairings: ``<beta xi, v> = (-1)^{|beta|} <xi, v beta>``,
    ``<xi alpha, v> = <xi, alpha v>`` and ``<d xi, v> = -(-1)^{|xi|} <xi, d v>``.
    """
    A, B = V.left, V.right
    field = V.field
    slots = {}
    for (a, b), s in V.slots.items():
        if not s.dimension:
            continue
        n = s.dimension
        diff = [{} for _ in range(n)]
        for w in range(n):
            for u, c in s.differential[w].items():
                # <xi_u, d v_w> = c contributes to d xi_u along xi_w
                sign = -_sign(-s.degrees[u])
                add_scaled(diff[u], {w: c}, sign)
        labels = tuple(f"{lab}*" for lab in V.labels(a, b))
        slots[(b, a)] = FiniteComplex(field, tuple(-d for d in s.degrees), tuple(diff), labels)

    def left_fn(b, b2, a, i, u):
        # beta in B(b, b2) on xi_u in V*(b, a); lands in V*(b2, a) = V(a, b2)^*
        acts = V.right_action.get((b, b2, a))
        if not acts:
            return {}
        sign = _sign(B.degree(b, b2, i))
        out = {}
        for w, col in enumerate(acts[i]):
            c = col.get(u)
            if c:
                out[w] = c if sign > 0 else -c
        return out

    def right_fn(a2, a, b, i, u):
        # alpha in A(a2, a) on xi_u in V*(b, a); lands in V*(b, a2) = V(a2, b)^*
        acts = V.left_action.get((a2, a, b))
        if not acts:
            return {}
        out = {}
        for w, col in enumerate(acts[i]):
            c = col.get(u)
            if c:
                out[w] = c
        return out

    return build_bimodule(B, A, slots, left_fn, right_fn, name=f"{V.name}*")


def linear_dual_bimodule(R):
    """The Serre bimodule ``R^* = Hom_k(Delta_R, k)``; slot ``(x, y)`` is ``hom(x, y)^*``."""
    out = dual_bimodule(diagonal_bimodule(R))
    out.name = f"{R.name}*"
    return out


def shift_bimodule(V, n):
    """``V[n]``: degrees drop by ``n``, ``d -> (-1)^n d``, left action picks up ``(-1)^{n|alpha|}``."""
    if n == 0:
        return V
    A = V.left
    slots = {key: s.shift(n) for key, s in V.slots.items()}

    def left_fn(a, a2, b, i, v):
        col = V.act_left(a, a2, b, {i: V.field.one}, {v: V.field.one})
        if n % 2 and A.degree(a, a2, i) % 2:
            return scaled(col, -1)
        return col

    def right_fn(b2, b, a, i, v):
        return V.act_right(b2, b, a, {i: V.field.one}, {v: V.field.one})

    return build_bimodule(V.left, V.right, slots, left_fn, right_fn, name=f"{V.name}[{n}]")


########################################################################################
## Bimodule maps
########################################################################################


@dataclass
class BimoduleMap:
    """A map of explicit bimodules; ``components[(a, b)]`` are sparse columns."""

    source: ExplicitBimodule
    target: ExplicitBimodule
    components: dict
    degree: int = 0

    def apply(self, a, b, vec):
        cols = self.components.get((a, b))
        if not cols:
            return {}
        return apply_columns(cols, vec)


def zero_bimodule_map(source, target, degree=0):
    return BimoduleMap(
        source,
        target,
        {key: [{} for _ in range(s.dimension)] for key, s in source.slots.items()},
        degree,
    )


def validate_bimodule(V):
    """Check differential, Leibniz, associativity, unitality and commuting actions."""
    A, B = V.left, V.right
    report = ValidationReport(f"bimodule {V.name}")
    one = V.field.one
    for key, s in V.slots.items():
        if s.square_zero_violations():
            report.add("d^2 = 0", f"slot {key}")
    for a in A.objects:
        for b in B.objects:
            s = V.slot(a, b)
            n = s.dimension
            if not n:
                continue
            for v in range(n):
                if V.act_left(a, a, b, A.unit(a), {v: one}) != {v: one}:
                    report.add("left unit", f"slot ({a},{b}) basis {v}")
                if V.act_right(b, b, a, B.unit(b), {v: one}) != {v: one}:
                    report.add("right unit", f"slot ({a},{b}) basis {v}")
            for a2 in A.objects:
                for i in range(A.dim(a, a2)):
                    deg_a = A.degree(a, a2, i)
                    for v in range(n):
                        report.checked += 1
                        av = V.act_left(a, a2, b, {i: one}, {v: one})
                        if any(V.slot(a2, b).degrees[k] != deg_a + s.degrees[v] for k in av):
                            report.add("left action degree", f"({a}->{a2}, {b}) basis {v}")
                        lhs = V.slot(a2, b).apply(av)
                        rhs = V.act_left(a, a2, b, A.d_basis(a, a2, i), {v: one})
                        add_scaled(rhs, V.act_left(a, a2, b, {i: one}, s.differential[v]), _sign(deg_a))
                        add_scaled(lhs, rhs, -1)
                        if lhs:
                            report.add("left Leibniz", f"{A.label(a, a2, i)} on ({a},{b}) basis {v}")
                        for a3 in A.objects:
                            for i2 in range(A.dim(a2, a3)):
                                left = V.act_left(a2, a3, b, {i2: one}, av)
                                right = V.act_left(
                                    a, a3, b, A.compose_basis(a, a2, a3, i2, i), {v: one}
                                )
                                if left != right:
                                    report.add(
                                        "left associativity",
                                        f"{A.label(a2, a3, i2)}, {A.label(a, a2, i)} on ({a},{b}) basis {v}",
                                    )
                        for b2 in B.objects:
                            for j in range(B.dim(b2, b)):
                                left = V.act_right(b2, b, a2, {j: one}, av)
                                right = V.act_left(a, a2, b2, {i: one}, V.act_right(b2, b, a, {j: one}, {v: one}))
                                if left != right:
                                    report.add(
                                        "actions commute",
                                        f"{A.label(a, a2, i)}, {B.label(b2, b, j)} on ({a},{b}) basis {v}",
                                    )
            for b2 in B.objects:
                for j in range(B.dim(b2, b)):
                    for v in range(n):
                        report.checked += 1
                        vb = V.act_right(b2, b, a, {j: one}, {v: one})
                        deg_b = B.degree(b2, b, j)
                        if any(V.slot(a, b2).degrees[k] != deg_b + s.degrees[v] for k in vb):
                            report.add("right action degree", f"({a}, {b2}->{b}) basis {v}")
                        lhs = V.slot(a, b2).apply(vb)
                        rhs = V.act_right(b2, b, a, {j: one}, s.differential[v])
                        add_scaled(rhs, V.act_right(b2, b, a, B.d_basis(b2, b, j), {v: one}), _sign(s.degrees[v]))
                        add_scaled(lhs, rhs, -1)
                        if lhs:
                            report.add("right Leibniz", f"{B.label(b2, b, j)} on ({a},{b}) basis {v}")
                        for b3 in B.objects:
                            for j2 in range(B.dim(b3, b2)):
                                left = V.act_right(b3, b2, a, {j2: one}, vb)
                                right = V.act_right(
                                    b3, b, a, B.compose_basis(b3, b2, b, j, j2), {v: one}
                                )
                                if left != right:
                                    report.add(
                                        "right associativity",
                                        f"{B.label(b2, b, j)}, {B.label(b3, b2, j2)} on ({a},{b}) basis {v}",
                                    )
    return report


def validate_bimodule_map(f):
    """Closedness and strict compatibility with both actions."""
    V, W = f.source, f.target
    A, B = V.left, V.right
    e = f.degree
    one = V.field.one
    report = ValidationReport(f"map {V.name} -> {W.name}")
    for a in A.objects:
        for b in B.objects:
            s = V.slot(a, b)
            for v in range(s.dimension):
                report.checked += 1
                fv = f.apply(a, b, {v: one})
                if any(W.slot(a, b).degrees[k] != s.degrees[v] + e for k in fv):
                    report.add("degree", f"slot ({a},{b}) basis {v}")
                lhs = W.slot(a, b).apply(fv)
                add_scaled(lhs, f.apply(a, b, s.differential[v]), -_sign(e))
                if lhs:
                    report.add("closed", f"slot ({a},{b}) basis {v}")
                for a2 in A.objects:
                    for i in range(A.dim(a, a2)):
                        if A.is_unit(a, a2, i):
                            continue
                        lhs = f.apply(a2, b, V.act_left(a, a2, b, {i: one}, {v: one}))
                        rhs = W.act_left(a, a2, b, {i: one}, fv)
                        add_scaled(lhs, rhs, -_sign(e * A.degree(a, a2, i)))
                        if lhs:
                            report.add("left linear", f"{A.label(a, a2, i)} on ({a},{b}) basis {v}")
                for b2 in B.objects:
                    for j in range(B.dim(b2, b)):
                        if B.is_unit(b2, b, j):
                            continue
                        lhs = f.apply(a, b2, V.act_right(b2, b, a, {j: one}, {v: one}))
                        add_scaled(lhs, W.act_right(b2, b, a, {j: one}, fv), -1)
                        if lhs:
                            report.add("right linear", f"{B.label(b2, b, j)} on ({a},{b}) basis {v}")
    return report


def bimodule_cone(f):
    """``cone(f) = V[1] + W`` with ``d = [[-d_V, 0], [f, d_W]]`` for a closed degree-0 map."""
    if f.degree != 0:
        raise ValueError("bimodule_cone needs a degree-0 map")
    report = validate_bimodule_map(f)
    if not report.passed:
        raise ValueError(f"bimodule_cone needs a closed bimodule map: {report.violations[:3]}")
    V, W = f.source, f.target
    A = V.left
    field = V.field
    slots, offsets = {}, {}
    for a in A.objects:
        for b in V.right.objects:
            sv, sw = V.slot(a, b), W.slot(a, b)
            nv = sv.dimension
            if not nv + sw.dimension:
                continue
            offsets[(a, b)] = nv
            diff = []
            for j in range(nv):
                col = scaled(sv.differential[j], -1)
                for i, x in f.apply(a, b, {j: field.one}).items():
                    col[nv + i] = x
                diff.append(col)
            for j in range(sw.dimension):
                diff.append({nv + i: x for i, x in sw.differential[j].items()})
            labels = tuple(f"s({lab})" for lab in V.labels(a, b)) + tuple(W.labels(a, b))
            slots[(a, b)] = FiniteComplex(
                field,
                tuple(d - 1 for d in sv.degrees) + tuple(sw.degrees),
                tuple(diff),
                labels,
            )

    def left_fn(a, a2, b, i, v):
        nv, nv2 = offsets[(a, b)], offsets[(a2, b)]
        if v < nv:
            col = V.act_left(a, a2, b, {i: field.one}, {v: field.one})
            return scaled(col, _sign(A.degree(a, a2, i)))
        col = W.act_left(a, a2, b, {i: field.one}, {v - nv: field.one})
        return {nv2 + k: x for k, x in col.items()}

    def right_fn(b2, b, a, i, v):
        nv, nv2 = offsets[(a, b)], offsets[(a, b2)]
        if v < nv:
            return V.act_right(b2, b, a, {i: field.one}, {v: field.one})
        col = W.act_right(b2, b, a, {i: field.one}, {v - nv: field.one})
        return {nv2 + k: x for k, x in col.items()}

    out = build_bimodule(A, V.right, slots, left_fn, right_fn, name=f"cone({V.name}->{W.name})")
    out.cone_offsets = offsets
    return out


__all__ = [
    "BasisElement",
    "BimoduleMap",
    "DGCategory",
    "ExplicitBimodule",
    "InfiniteHomError",
    "NonHomogeneousRelationError",
    "ValidationReport",
    "bimodule_cone",
    "build_bimodule",
    "category_from_structure",
    "diagonal_bimodule",
    "dual_bimodule",
    "field_category",
    "glue",
    "kronecker",
    "linear_dual_bimodule",
    "opposite",
    "quiver_path_category",
    "shift_bimodule",
    "square_zero_extension",
    "tensor_cat",
    "trivial_extension",
    "truncated_polynomial",
    "validate",
    "validate_bimodule",
    "validate_bimodule_map",
    "vector_space_bimodule",
    "zero_bimodule_map",
]
