"""Homology tables and quasi-isomorphism certificates.

A certificate is an explicit closed degree-0 map whose mapping cone has been
checked acyclic by exact homology. Searches are one-sided: ``pass`` comes
with a certified map, ``fail`` is only reported when the homology dimensions
already differ, and an exhausted budget is ``inconclusive``.

Random candidates are integer combinations of a basis of closed degree-0
maps, drawn with ``numpy.random.default_rng([seed, direction])`` so a run is
reproducible from its seed.
"""

import logging
from dataclasses import asdict, dataclass, field as dataclass_field

import numpy as np

from exactlinalg import (
    FiniteComplex,
    GradedVectorSpace,
    add_scaled,
    kernel_vectors,
    mapping_cone_complex,
    matrix_from_sparse_rows,
)
from dgcat import (
    BimoduleMap,
    ExplicitBimodule,
    diagonal_bimodule,
    linear_dual_bimodule,
    shift_bimodule,
    validate_bimodule_map,
)
from twisted import (
    ChainMorphism,
    HomSpace,
    TCBimodule,
    TCBimoduleMap,
    TwistedComplex,
    compose,
    cone,
    expand_complex,
    identity,
    identity_transformation,
    tc_differential,
    validate_tc_bimodule_map,
)
from settings import config

logger = logging.getLogger(__name__)

COEFFICIENT_BOUND = config("COEFFICIENT_BOUND")

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass
class Certificate:
    method: str
    seed: int = None
    attempt: int = None
    direction: str = "forward"
    note: str = ""

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class QuasiIsoResult:
    status: str
    morphism: object = None
    certificate: Certificate = None
    log: list = dataclass_field(default_factory=list)

    @property
    def passed(self):
        return self.status == PASS

    def to_dict(self):
        out = {"status": self.status, "log": list(self.log)}
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        return out


########################################################################################
## Homology
########################################################################################


def homology_dims(x):
    """Homology dimensions of a complex, twisted complex or bimodule.

    Twisted complexes are read through ``Hom(h^c, -)`` object by object and
    bimodules slot by slot, so the result of a bimodule is a dict of
    :class:`GradedVectorSpace` keyed by slot.
    """
    if isinstance(x, FiniteComplex):
        return x.homology()
    if isinstance(x, TwistedComplex):
        return {c: comp.homology() for c, comp in expand_complex(x).items()}
    if isinstance(x, TCBimodule):
        out = {}
        for a, X in x.values.items():
            for c, comp in expand_complex(X).items():
                out[(a, c)] = comp.homology()
        return out
    if isinstance(x, ExplicitBimodule):
        return {key: x.slot(*key).homology() for key in x.slot_keys()}
    raise TypeError(f"no homology for {type(x).__name__}")


def total_homology(x):
    dims = homology_dims(x)
    if isinstance(dims, GradedVectorSpace):
        return dims
    out = GradedVectorSpace()
    for v in dims.values():
        out = out + v
    return out


def homology_rows(x):
    """``[(key, degree, dim)]`` rows for reports."""
    dims = homology_dims(x)
    if isinstance(dims, GradedVectorSpace):
        return [("", deg, n) for deg, n in dims.as_rows()]
    rows = []
    for key, v in dims.items():
        label = key if isinstance(key, str) else ",".join(str(k) for k in key)
        rows.extend((label, deg, n) for deg, n in v.as_rows())
    return rows


########################################################################################
## Quasi-isomorphism tests
########################################################################################


def is_quasi_iso(f):
    """True iff ``f`` is closed of degree 0 and its cone is acyclic."""
    if isinstance(f, ChainMorphism):
        if f.degree != 0 or not f.is_closed():
            return False
        C = cone(f)
        return all(comp.is_acyclic() for comp in expand_complex(C).values())
    if isinstance(f, TCBimoduleMap):
        if f.degree != 0 or not validate_tc_bimodule_map(f).passed:
            return False
        return all(is_quasi_iso(c) for c in f.components.values())
    if isinstance(f, BimoduleMap):
        if f.degree != 0 or not validate_bimodule_map(f).passed:
            return False
        V, W = f.source, f.target
        for key in V.slot_keys():
            s, t = V.slot(*key), W.slot(*key)
            cols = f.components.get(key) or [{} for _ in range(s.dimension)]
            if not mapping_cone_complex(s, t, cols).is_acyclic():
                return False
        return True
    raise TypeError(f"cannot test {type(f).__name__} for quasi-isomorphism")


def certify(f, method="given", note=""):
    """Wrap a fixed comparison map into a :class:`QuasiIsoResult`."""
    if is_quasi_iso(f):
        return QuasiIsoResult(PASS, f, Certificate(method, note=note), [f"{method}: cone acyclic"])
    return QuasiIsoResult(INCONCLUSIVE, None, None, [f"{method}: map is not a quasi-isomorphism"])


def _identity_map(X):
    if isinstance(X, TwistedComplex):
        return identity(X)
    if isinstance(X, TCBimodule):
        return identity_transformation(X)
    return BimoduleMap(
        X, X, {key: [{j: X.field.one} for j in range(s.dimension)] for key, s in X.slots.items()}, 0
    )


def _structurally_equal(X, Y):
    if type(X) is not type(Y):
        return False
    if isinstance(X, TwistedComplex):
        return X.structurally_equal(Y)
    if isinstance(X, TCBimodule):
        if X.left != Y.left or X.category != Y.category:
            return False
        if any(not X.values[a].structurally_equal(Y.values[a]) for a in X.left.objects):
            return False
        return all(
            [m.entries for m in X.action[key]] == [m.entries for m in Y.action.get(key, ())]
            for key in X.action
        )
    return X.structurally_equal(Y)


def _same_values(X, Y, f):
    """Retarget an identity map of ``X`` at the structurally equal ``Y``."""
    if isinstance(f, ChainMorphism):
        return ChainMorphism(X, Y, 0, f.entries)
    if isinstance(f, TCBimoduleMap):
        return TCBimoduleMap(
            X, Y, {a: ChainMorphism(X.values[a], Y.values[a], 0, c.entries) for a, c in f.components.items()}, 0
        )
    return BimoduleMap(X, Y, f.components, 0)


########################################################################################
## Spaces of closed degree-0 maps
########################################################################################


class _LinearSystem:
    """Columns indexed by unknowns, rows by constraint keys."""

    def __init__(self):
        self.rows = {}
        self.columns = []

    def add_column(self, entries):
        col = {}
        for key, x in entries:
            r = self.rows.setdefault(key, len(self.rows))
            add_scaled(col, {r: x})
        self.columns.append(col)

    def kernel(self, field):
        n = len(self.columns)
        if not n:
            return []
        if not self.rows:
            return [{j: field.one} for j in range(n)]
        rows = [{} for _ in range(len(self.rows))]
        for j, col in enumerate(self.columns):
            for r, x in col.items():
                rows[r][j] = x
        return kernel_vectors(matrix_from_sparse_rows(field, n, rows))


class MapSpace:
    """A basis of closed degree-0 maps ``X -> Y`` and a way to build combinations."""

    def __init__(self, X, Y):
        self.source = X
        self.target = Y
        if isinstance(X, TwistedComplex):
            self._init_tc(X, Y)
        elif isinstance(X, TCBimodule):
            self._init_natural(X, Y)
        elif isinstance(X, ExplicitBimodule):
            self._init_explicit(X, Y)
        else:
            raise TypeError(f"no map space for {type(X).__name__}")

    @property
    def dimension(self):
        return len(self.basis)

    # -- twisted complexes ---------------------------------------------------------

    def _init_tc(self, X, Y):
        self.space = HomSpace(X, Y)
        self.basis = [self.space.to_vector(m) for m in self.space.closed_basis(0)]

    def _combine_tc(self, coeffs):
        acc = {}
        for c, v in zip(coeffs, self.basis):
            add_scaled(acc, v, c)
        return self.space.to_morphism(acc, 0)

    # -- natural transformations ---------------------------------------------------

    def _init_natural(self, F, G):
        A = F.left
        self.spaces = {a: HomSpace(F.values[a], G.values[a]) for a in A.objects}
        self.unknowns = []
        for a in A.objects:
            sp = self.spaces[a]
            self.unknowns.extend((a, n) for n, deg in enumerate(sp.degrees) if deg == 0)
        cross = {}
        system = _LinearSystem()
        for a, n in self.unknowns:
            b = self.spaces[a].basis_morphism(n)
            entries = [(("d", a, m), x) for m, x in self.spaces[a].to_vector(tc_differential(b)).items()]
            for a2 in A.objects:
                for k in A.nonunit_basis(a, a2):
                    sp = cross.setdefault((a, a2), HomSpace(F.values[a], G.values[a2]))
                    img = compose(G.action[(a, a2)][k], b)
                    entries += [(("n", a, a2, k, m), x) for m, x in sp.to_vector(img).items()]
                for k in A.nonunit_basis(a2, a):
                    sp = cross.setdefault((a2, a), HomSpace(F.values[a2], G.values[a]))
                    img = compose(b, F.action[(a2, a)][k])
                    entries += [(("n", a2, a, k, m), -x) for m, x in sp.to_vector(img).items()]
            system.add_column(entries)
        self.basis = system.kernel(F.field)

    def _combine_natural(self, coeffs):
        acc = {}
        for c, v in zip(coeffs, self.basis):
            add_scaled(acc, v, c)
        per = {a: {} for a in self.source.left.objects}
        for idx, x in acc.items():
            a, n = self.unknowns[idx]
            per[a][n] = x
        comps = {
            a: ChainMorphism(self.source.values[a], self.target.values[a], 0, self.spaces[a].to_morphism(v, 0).entries)
            for a, v in per.items()
        }
        return TCBimoduleMap(self.source, self.target, comps, 0)

    # -- explicit bimodules --------------------------------------------------------

    def _init_explicit(self, V, W):
        A, B = V.left, V.right
        one = V.field.one
        self.unknowns = []
        for key in V.slot_keys():
            s, t = V.slot(*key), W.slot(*key)
            for deg, src in s.indices_by_degree.items():
                for v in src:
                    for w in t.indices_by_degree.get(deg, ()):
                        self.unknowns.append((key, v, w))

        # d_V transposed: for slot and v, the pairs (u, c) with (d e_u)_v = c
        d_t = {}
        for key in V.slot_keys():
            s = V.slot(*key)
            for u, col in enumerate(s.differential):
                for v, c in col.items():
                    d_t.setdefault((key, v), []).append((u, c))
        left_t, right_t = {}, {}
        for (a, a2, b), acts in V.left_action.items():
            for k, cols in enumerate(acts):
                if A.is_unit(a, a2, k):
                    continue
                for u, col in enumerate(cols):
                    for v, c in col.items():
                        left_t.setdefault(((a2, b), v), []).append((a, a2, b, k, u, c))
        for (b2, b, a), acts in V.right_action.items():
            for k, cols in enumerate(acts):
                if B.is_unit(b2, b, k):
                    continue
                for u, col in enumerate(cols):
                    for v, c in col.items():
                        right_t.setdefault(((a, b2), v), []).append((b2, b, a, k, u, c))

        system = _LinearSystem()
        for key, v, w in self.unknowns:
            a, b = key
            t = W.slot(a, b)
            entries = []
            for m, x in t.differential[w].items():
                entries.append((("c", key, v, m), x))
            for u, c in d_t.get((key, v), ()):
                entries.append((("c", key, u, w), -c))
            # f(alpha u) - alpha f(u)
            for a2 in A.objects:
                for k in A.nonunit_basis(a, a2):
                    img = W.act_left(a, a2, b, {k: one}, {w: one})
                    for m, x in img.items():
                        entries.append((("l", a, a2, b, k, v, m), -x))
            for a0, a_, b_, k, u, c in left_t.get((key, v), ()):
                entries.append((("l", a0, a_, b_, k, u, w), c))
            # f(u beta) - f(u) beta
            for b2 in B.objects:
                for k in B.nonunit_basis(b2, b):
                    img = W.act_right(b2, b, a, {k: one}, {w: one})
                    for m, x in img.items():
                        entries.append((("r", b2, b, a, k, v, m), -x))
            for b2_, b_, a_, k, u, c in right_t.get((key, v), ()):
                entries.append((("r", b2_, b_, a_, k, u, w), c))
            system.add_column(entries)
        self.basis = system.kernel(V.field)

    def _combine_explicit(self, coeffs):
        acc = {}
        for c, v in zip(coeffs, self.basis):
            add_scaled(acc, v, c)
        comps = {key: [{} for _ in range(s.dimension)] for key, s in self.source.slots.items()}
        for idx, x in acc.items():
            key, v, w = self.unknowns[idx]
            comps[key][v][w] = x
        return BimoduleMap(self.source, self.target, comps, 0)

    def combination(self, coeffs):
        if isinstance(self.source, TwistedComplex):
            return self._combine_tc(coeffs)
        if isinstance(self.source, TCBimodule):
            return self._combine_natural(coeffs)
        return self._combine_explicit(coeffs)

    def zero(self):
        return self.combination([])


########################################################################################
## Search
########################################################################################


def _homology_key(x):
    dims = homology_dims(x)
    if isinstance(dims, GradedVectorSpace):
        return dims
    return {k: v for k, v in dims.items() if not v.is_zero()}


def find_quasi_iso(X, Y, attempts=16, seed=0, candidates=(), bound=None, both_directions=True):
    """Search for a certified quasi-isomorphism between ``X`` and ``Y``.

    Order of trials: homology precheck, identity when ``X`` and ``Y`` are
    structurally equal, supplied candidates, then ``attempts`` random
    combinations of closed degree-0 maps ``X -> Y`` and, if none works,
    ``Y -> X``.

    Coefficients are drawn from ``[-bound, bound]``, by default the
    ``COEFFICIENT_BOUND`` setting.
    """
    log = []
    bound = COEFFICIENT_BOUND if bound is None else bound
    hx, hy = _homology_key(X), _homology_key(Y)
    if hx != hy:
        log.append("homology dimensions differ")
        logger.info("quasi-iso search refuted by homology: %s vs %s", hx, hy)
        return QuasiIsoResult(FAIL, None, Certificate("homology", note="dimensions differ"), log)

    if _structurally_equal(X, Y):
        f = _same_values(X, Y, _identity_map(X))
        if is_quasi_iso(f):
            log.append("identity")
            return QuasiIsoResult(PASS, f, Certificate("identity", seed, 0), log)

    for n, f in enumerate(candidates):
        if f is None:
            continue
        if is_quasi_iso(f):
            log.append(f"candidate {n} certified")
            direction = "forward" if f.source is X else "backward"
            return QuasiIsoResult(PASS, f, Certificate("candidate", seed, n, direction), log)
        log.append(f"candidate {n} rejected")

    directions = [("forward", X, Y)]
    if both_directions:
        directions.append(("backward", Y, X))
    field = X.field
    for d_index, (direction, S, T) in enumerate(directions):
        space = MapSpace(S, T)
        log.append(f"{direction}: {space.dimension} closed degree-0 maps")
        logger.debug("%s map space of dimension %d", direction, space.dimension)
        if not space.dimension:
            f = space.zero()
            if is_quasi_iso(f):
                log.append(f"{direction}: zero map certified")
                return QuasiIsoResult(PASS, f, Certificate("zero", seed, 0, direction), log)
            continue
        rng = np.random.default_rng([seed, d_index])
        for attempt in range(attempts):
            raw = rng.integers(-bound, bound + 1, size=space.dimension)
            if attempt == 0 and space.dimension == 1:
                raw = np.ones(1, dtype=int)
            coeffs = [field(int(c)) for c in raw]
            if not any(coeffs):
                continue
            f = space.combination(coeffs)
            if is_quasi_iso(f):
                log.append(f"{direction}: attempt {attempt} certified")
                logger.info("quasi-isomorphism certified on attempt %d (%s)", attempt, direction)
                return QuasiIsoResult(PASS, f, Certificate("random", seed, attempt, direction), log)
        log.append(f"{direction}: {attempts} attempts without success")
    logger.warning("quasi-isomorphism search inconclusive after %d attempts", attempts)
    return QuasiIsoResult(INCONCLUSIVE, None, None, log)


def find_valuewise_quasi_iso(F, G, attempts=16, seed=0, bound=None):
    """Certify ``F(a) ~ G(a)`` for every object ``a`` of two bimodules ``A -> Tw(C)``.

    Hom between twisted complexes is already derived, so each value search is
    exact. The components are returned as ``{a: ChainMorphism}``.
    """
    log, comps, methods = [], {}, []
    status = PASS
    for n, a in enumerate(F.left.objects):
        res = find_quasi_iso(F.values[a], G.values[a], attempts, seed + n, bound=bound)
        log.extend(f"{a}: {line}" for line in res.log)
        if res.status == FAIL:
            return QuasiIsoResult(FAIL, None, res.certificate, log)
        if res.status == INCONCLUSIVE:
            status = INCONCLUSIVE
            continue
        comps[a] = res.morphism
        methods.append(f"{a}:{res.certificate.method}")
    if status == INCONCLUSIVE:
        return QuasiIsoResult(INCONCLUSIVE, None, None, log)
    return QuasiIsoResult(PASS, comps, Certificate("valuewise", seed, note=" ".join(methods)), log)


def dims_table(dims):
    """JSON-ready form of :func:`homology_dims` output."""
    if isinstance(dims, GradedVectorSpace):
        return dims.to_dict()
    out = {}
    for key, v in dims.items():
        label = key if isinstance(key, str) else ",".join(str(k) for k in key)
        out[label] = v.to_dict()
    return out


########################################################################################
## Check reports
########################################################################################


@dataclass
class CheckReport:
    """Outcome of one verification: table rows, certificates and failures.

    The status is ``fail`` as soon as one failure is recorded, ``inconclusive``
    when some certificate search ran out of budget, and ``pass`` otherwise.
    """

    name: str
    rows: list = dataclass_field(default_factory=list)
    certificates: dict = dataclass_field(default_factory=dict)
    failures: list = dataclass_field(default_factory=list)
    notes: list = dataclass_field(default_factory=list)

    def fail(self, what, witness=""):
        self.failures.append({"check": what, "witness": str(witness)})

    def add_certificate(self, key, result):
        self.certificates[key] = result
        if result.status == FAIL:
            self.fail(key, "; ".join(result.log[-1:]) or "certificate refuted")
        return result

    def add_report(self, key, report):
        """Fold a :class:`dgcat.ValidationReport` or a nested :class:`CheckReport` into this one."""
        if isinstance(report, CheckReport):
            self.rows.extend({"part": key, **row} for row in report.rows)
            for k, v in report.certificates.items():
                self.certificates[f"{key}/{k}"] = v
            self.failures.extend({**f, "check": f"{key}/{f['check']}"} for f in report.failures)
            self.notes.extend(f"{key}: {n}" for n in report.notes)
        elif not report.passed:
            for v in report.violations:
                self.fail(f"{key}: {v['axiom']}", v["witness"])
        return report

    def compare(self, label, lhs, rhs):
        """Record a row comparing two homology tables; a mismatch is a failure."""
        row = {"check": label, "lhs": dims_table(lhs), "rhs": dims_table(rhs), "passed": lhs == rhs}
        self.rows.append(row)
        if not row["passed"]:
            self.fail(label, f"{row['lhs']} != {row['rhs']}")
        return row["passed"]

    @property
    def status(self):
        if self.failures:
            return FAIL
        if any(c.status == INCONCLUSIVE for c in self.certificates.values()):
            return INCONCLUSIVE
        return PASS

    @property
    def passed(self):
        return self.status == PASS

    def to_dict(self):
        return {
            "name": self.name,
            "status": self.status,
            "rows": list(self.rows),
            "certificates": {k: v.to_dict() for k, v in self.certificates.items()},
            "failures": list(self.failures),
            "notes": list(self.notes),
        }


def check_graded_symmetry(C, degree, attempts=16, seed=0):
    """``C^* ~ C[degree]`` as ``(C, C)``-bimodules, as for ``trivial_extension(c, degree)``."""
    report = CheckReport(f"{C.name} is {degree}-symmetric")
    dual = linear_dual_bimodule(C)
    shifted = shift_bimodule(diagonal_bimodule(C), degree)
    if report.compare("slot dims", homology_dims(dual), homology_dims(shifted)):
        report.add_certificate(f"C* ~ C[{degree}]", find_quasi_iso(dual, shifted, attempts, seed))
    return report
