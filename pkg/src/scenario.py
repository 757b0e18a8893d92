"""Scenario files: parsing, validation, serialization and execution.

A scenario is a TOML document (grammar version 1) naming a field, some
categories, twisted complexes and bimodules, and an ordered list of tasks.
Every name must be defined before it is referenced, which also rules out
cycles. Running a scenario produces a report dict with schema
``dgtwist-report/1``; everything in it except ``generated`` and ``timings``
is a function of the scenario, the seed and the attempt budget.

Example
-------
```
version = 1
name = "spherical_kt2"
field = "rational"

[categories.kt2]
constructor = "truncated_polynomial"
n = 1
deg_t = 2

[objects.E]
category = "kt2"
representable = "pt"

[[tasks]]
name = "E is 2-spherical"
check = "verify-spherical"
object = "E"
d = 2
```
"""

import logging
import re
import time
from dataclasses import dataclass, field as dataclass_field
from datetime import datetime, timezone

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from exactlinalg import parse_field
from dgcat import (
    category_from_structure,
    field_category,
    kronecker,
    opposite,
    quiver_path_category,
    tensor_cat,
    trivial_extension,
    truncated_polynomial,
    validate,
)
from twisted import (
    TwistedComplex,
    from_object,
    hom_complex,
    representable,
    validate_tc,
    validate_tc_bimodule,
)
from certify import FAIL, INCONCLUSIVE, PASS, CheckReport, dims_table, homology_dims
from glued import check_adjunctions, check_gluing_hom_identities, kronecker_context, point, sod_project
from spherical import (
    check_p_object,
    check_p_prime_cotwist,
    check_serre_duality,
    check_sigma,
    check_spherical_object,
    check_twist_on_object,
    cotwist_matrix,
    glue_many,
    glue_spherical,
    glued_many_twist,
    glued_twist,
    p_prime,
    p_prime_serre_table,
    serre_shift_check,
    spherical_certificates,
    verify_commutativity,
    verify_degenerate,
    zero_bimodule,
)
from settings import config

logger = logging.getLogger(__name__)

SCHEMA = "dgtwist-report/1"
TOOL_VERSION = "0.1.0"
GRAMMAR_VERSION = 1

CONSTRUCTORS = (
    "field",
    "truncated_polynomial",
    "quiver",
    "kronecker",
    "trivial_extension",
    "opposite",
    "tensor",
    "glue_vector_space",
    "structure",
)
MODULE_KINDS = ("object", "p_prime", "zero")

# check name -> required arguments; "modules" is a list of at least two module names
CHECKS = {
    "validate": (),
    "homology": (),
    "glue": ("modules",),
    "verify-spherical": ("object", "d"),
    "verify-pobject": ("object", "n"),
    "verify-pprime-cotwist": ("module", "n"),
    "verify-composition": ("modules",),
    "verify-cotwist-matrix": ("modules",),
    "verify-cotwist-serre": ("d",),
    "verify-commutativity": ("modules",),
    "verify-sod": (),
    "serre-duality": (),
    "spherical-certificates": ("modules",),
    "verify-degenerate": ("module",),
    "verify-sigma": ("module",),
    "verify-twist": ("module", "object"),
    "pprime-serre-table": ("modules", "n"),
}
INT_ARGS = ("d", "n")


class ScenarioError(ValueError):
    """A parse or validation error, located in the scenario text when possible."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


def _locate(text, needle, after=None):
    """Line and column (1-based) of the first occurrence of ``needle``, optionally after ``after``."""
    start = 0
    if after is not None:
        pos = text.find(after)
        start = pos if pos >= 0 else 0
    pos = text.find(needle, start)
    if pos < 0:
        return None, None
    line = text.count("\n", 0, pos) + 1
    column = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, column


@dataclass
class Scenario:
    """A validated scenario; the tables are kept as parsed so they serialize back unchanged."""

    name: str
    field: str = "rational"
    seed: int = None
    attempts: int = None
    categories: dict = dataclass_field(default_factory=dict)
    objects: dict = dataclass_field(default_factory=dict)
    modules: dict = dataclass_field(default_factory=dict)
    tasks: list = dataclass_field(default_factory=list)
    version: int = GRAMMAR_VERSION
    text: str = dataclass_field(default="", repr=False, compare=False)

    def to_document(self):
        doc = {"version": self.version, "name": self.name, "field": self.field}
        if self.seed is not None:
            doc["seed"] = self.seed
        if self.attempts is not None:
            doc["attempts"] = self.attempts
        for key in ("categories", "objects", "modules"):
            if getattr(self, key):
                doc[key] = getattr(self, key)
        if self.tasks:
            doc["tasks"] = self.tasks
        return doc


########################################################################################
## Parsing and validation
########################################################################################


def _decode_error(err):
    line = getattr(err, "lineno", None)
    column = getattr(err, "colno", None)
    if line is None:
        m = re.search(r"line (\d+), column (\d+)", str(err))
        if m:
            line, column = int(m.group(1)), int(m.group(2))
    message = getattr(err, "msg", None) or re.sub(r"\s*\(at line.*\)$", "", str(err))
    return ScenarioError(f"malformed scenario: {message}", line, column)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _check_table(text, kind, name, table):
    if not isinstance(table, dict):
        raise ScenarioError(f"{kind}.{name} must be a table", *_locate(text, f"{kind}.{name}"))


def _require_defined(text, ref, known, what, after=None):
    if not isinstance(ref, str) or ref not in known:
        line, column = _locate(text, f'"{ref}"', after) if isinstance(ref, str) else (None, None)
        raise ScenarioError(f"undefined {what} {ref!r}", line, column)


def _require_int(text, value, what, after=None):
    if not _is_int(value):
        raise ScenarioError(f"malformed degree for {what}: {value!r}", *_locate(text, what.split(".")[-1], after))


def _validate_category(text, name, spec, known):
    header = f"categories.{name}"
    ctor = spec.get("constructor")
    if ctor not in CONSTRUCTORS:
        raise ScenarioError(f"unknown constructor {ctor!r} for category {name!r}", *_locate(text, header))
    for key in ("base", "left", "right"):
        if key in spec:
            _require_defined(text, spec[key], known, "category", after=header)
    for key in ("n", "deg_t", "pairing_degree", "arrow_degree", "max_length"):
        if key in spec:
            _require_int(text, spec[key], f"{header}.{key}", after=header)
    for arrow in spec.get("arrows", ()):
        if len(arrow) != 4 or not _is_int(arrow[3]):
            raise ScenarioError(f"malformed degree in arrow {arrow!r} of {name!r}", *_locate(text, header))
    for deg in spec.get("degrees", ()):
        _require_int(text, deg, f"{header}.degrees", after=header)
    for key, elems in spec.get("homs", {}).items():
        for elem in elems:
            if len(elem) != 2 or not _is_int(elem[1]):
                raise ScenarioError(f"malformed degree in hom {key!r} of {name!r}", *_locate(text, key))


def _validate_object(text, name, spec, categories):
    header = f"objects.{name}"
    _require_defined(text, spec.get("category"), categories, "category", after=header)
    if "representable" in spec:
        if "shift" in spec:
            _require_int(text, spec["shift"], f"{header}.shift", after=header)
        return
    for gen in spec.get("generators", ()):
        if len(gen) != 2 or not _is_int(gen[1]):
            raise ScenarioError(f"malformed degree in generator {gen!r} of {name!r}", *_locate(text, header))
    for entry in spec.get("delta", ()):
        if not _is_int(entry.get("row")) or not _is_int(entry.get("col")):
            raise ScenarioError(f"delta entries of {name!r} need integer row and col", *_locate(text, header))


def _validate_module(text, name, spec, objects, categories):
    header = f"modules.{name}"
    kind = spec.get("kind")
    if kind not in MODULE_KINDS:
        raise ScenarioError(f"unknown module kind {kind!r} for {name!r}", *_locate(text, header))
    if kind == "zero":
        _require_defined(text, spec.get("category"), categories, "category", after=header)
    else:
        _require_defined(text, spec.get("object"), objects, "object", after=header)


def _validate_task(text, n, task, scope):
    name = task.get("name")
    if not isinstance(name, str):
        raise ScenarioError(f"task {n} needs a name", *_locate(text, "[[tasks]]"))
    after = f'"{name}"'
    check = task.get("check")
    if check not in CHECKS:
        raise ScenarioError(f"unknown check {check!r} in task {name!r}", *_locate(text, f'"{check}"', after))
    if task.get("expect", PASS) not in (PASS, FAIL):
        raise ScenarioError(f"expect must be 'pass' or 'fail' in task {name!r}", *_locate(text, "expect", after))
    for arg in CHECKS[check]:
        if arg not in task:
            raise ScenarioError(f"task {name!r} ({check}) needs {arg!r}", *_locate(text, after))
    for arg in INT_ARGS:
        if arg in task:
            _require_int(text, task[arg], f"tasks.{arg}", after=after)
    if "modules" in task:
        mods = task["modules"]
        if not isinstance(mods, list) or len(mods) < 2:
            raise ScenarioError(f"task {name!r} needs at least two modules", *_locate(text, "modules", after))
        for ref in mods:
            _require_defined(text, ref, scope["modules"], "module", after=after)
    for arg, kind in (("module", "modules"), ("object", "objects"), ("target", "objects"), ("category", "categories")):
        if arg in task:
            _require_defined(text, task[arg], scope[kind], kind.rstrip("s"), after=after)


def parse_scenario(text):
    """Parse and validate scenario text; every problem is a :class:`ScenarioError`."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise _decode_error(err) from None
    version = doc.get("version", GRAMMAR_VERSION)
    if version != GRAMMAR_VERSION:
        raise ScenarioError(f"unsupported scenario version {version!r}", *_locate(text, "version"))
    try:
        parse_field(doc.get("field", "rational"))
    except ValueError as err:
        raise ScenarioError(str(err), *_locate(text, "field")) from None
    for key in ("seed", "attempts"):
        if key in doc and not _is_int(doc[key]):
            raise ScenarioError(f"{key} must be an integer", *_locate(text, key))

    scope = {"categories": [], "objects": [], "modules": []}
    for name, spec in doc.get("categories", {}).items():
        _check_table(text, "categories", name, spec)
        _validate_category(text, name, spec, scope["categories"])
        scope["categories"].append(name)
    for name, spec in doc.get("objects", {}).items():
        _check_table(text, "objects", name, spec)
        _validate_object(text, name, spec, scope["categories"])
        scope["objects"].append(name)
    for name, spec in doc.get("modules", {}).items():
        _check_table(text, "modules", name, spec)
        _validate_module(text, name, spec, scope["objects"], scope["categories"])
        scope["modules"].append(name)
    seen = set()
    for n, task in enumerate(doc.get("tasks", [])):
        _validate_task(text, n, task, scope)
        if task["name"] in seen:
            raise ScenarioError(f"duplicate task name {task['name']!r}", *_locate(text, f'"{task["name"]}"'))
        seen.add(task["name"])

    scenario = Scenario(
        name=doc.get("name", "scenario"),
        field=str(doc.get("field", "rational")),
        seed=doc.get("seed"),
        attempts=doc.get("attempts"),
        categories=doc.get("categories", {}),
        objects=doc.get("objects", {}),
        modules=doc.get("modules", {}),
        tasks=doc.get("tasks", []),
        version=version,
        text=text,
    )
    # construction errors (non-homogeneous relations, bad labels) surface at parse time
    Workspace(scenario, parse_field(scenario.field))
    return scenario


def load_scenario(path):
    with open(path, encoding="utf-8") as f:
        return parse_scenario(f.read())


def serialize_scenario(scenario):
    return tomli_w.dumps(scenario.to_document())


########################################################################################
## Building the named data
########################################################################################


class Workspace:
    """The categories, objects and bimodules of a scenario over a given field."""

    def __init__(self, scenario, field):
        self.scenario = scenario
        self.field = field
        self.categories, self.objects, self.modules = {}, {}, {}
        text = scenario.text
        for name, spec in scenario.categories.items():
            try:
                self.categories[name] = self._category(name, spec)
            except ValueError as err:
                raise ScenarioError(f"category {name!r}: {err}", *_locate(text, f"categories.{name}")) from None
        for name, spec in scenario.objects.items():
            try:
                self.objects[name] = self._object(name, spec)
            except (ValueError, KeyError) as err:
                raise ScenarioError(f"object {name!r}: {err}", *_locate(text, f"objects.{name}")) from None
        for name, spec in scenario.modules.items():
            try:
                self.modules[name] = self._module(name, spec)
            except ValueError as err:
                raise ScenarioError(f"module {name!r}: {err}", *_locate(text, f"modules.{name}")) from None

    def _category(self, name, spec):
        k = self.field
        ctor = spec["constructor"]
        if ctor == "field":
            return field_category(k, spec.get("object", "pt"))
        if ctor == "truncated_polynomial":
            return truncated_polynomial(spec["n"], spec["deg_t"], k, spec.get("variable", "t"))
        if ctor == "quiver":
            return quiver_path_category(
                k,
                spec["vertices"],
                spec["arrows"],
                spec.get("relations", ()),
                spec.get("max_length", config("QUIVER_MAX_LENGTH")),
                name=name,
            )
        if ctor == "kronecker":
            return kronecker(k, spec.get("arrow_degree", 0))
        if ctor == "trivial_extension":
            return trivial_extension(self.categories[spec["base"]], spec["pairing_degree"])
        if ctor == "opposite":
            return opposite(self.categories[spec["base"]])
        if ctor == "tensor":
            return tensor_cat(self.categories[spec["left"]], self.categories[spec["right"]])
        if ctor == "glue_vector_space":
            return kronecker_context(k, tuple(spec.get("degrees", (0, 0)))).R
        return category_from_structure(
            k,
            spec["objects"],
            spec["homs"],
            spec.get("products"),
            spec.get("differential"),
            spec.get("units"),
            name=name,
        )

    def _object(self, name, spec):
        C = self.categories[spec["category"]]
        if "representable" in spec:
            return representable(C, spec["representable"], spec.get("shift", 0), name=name)
        gens = [tuple(g) for g in spec.get("generators", ())]
        delta = {}
        for entry in spec.get("delta", ()):
            i, j = entry["row"], entry["col"]
            src, tgt = gens[j][0], gens[i][0]
            vec = {}
            for lab, x in entry["element"].items():
                vec[C.index(src, tgt, lab)] = self.field(x)
            delta[(i, j)] = vec
        return TwistedComplex(C, tuple(gens), delta, name)

    def _module(self, name, spec):
        kind = spec["kind"]
        if kind == "zero":
            return zero_bimodule(self.categories[spec["category"]])
        X = self.objects[spec["object"]]
        if kind == "p_prime":
            return p_prime(X)
        M = from_object(X)
        M.name = name
        return M


########################################################################################
## Running tasks
########################################################################################


def _validation_check(name, report):
    out = CheckReport(name)
    out.rows.append({"check": report.subject, "checked": report.checked, "passed": report.passed})
    out.add_report(report.subject, report)
    return out


def _run_validate(ws, task, attempts, seed):
    if "category" in task:
        return _validation_check(task["name"], validate(ws.categories[task["category"]]))
    if "object" in task:
        return _validation_check(task["name"], validate_tc(ws.objects[task["object"]]))
    if "module" in task:
        return _validation_check(task["name"], validate_tc_bimodule(ws.modules[task["module"]]))
    out = CheckReport(task["name"])
    for name, C in ws.categories.items():
        out.add_report(name, validate(C))
    return out


def _hom_rows(report, C):
    for x in C.objects:
        for y in C.objects:
            report.rows.append({"check": f"hom({x},{y})", "dims": dims_table(C.hom_complex(x, y).homology())})


def _run_homology(ws, task, attempts, seed):
    report = CheckReport(task["name"])
    if "object" in task:
        X = ws.objects[task["object"]]
        Y = ws.objects[task.get("target", task["object"])]
        report.rows.append({"check": f"Hom({X.name},{Y.name})", "dims": dims_table(hom_complex(X, Y).homology())})
    elif "module" in task:
        report.rows.append({"check": task["module"], "dims": dims_table(homology_dims(ws.modules[task["module"]]))})
    else:
        _hom_rows(report, ws.categories[task["category"]])
    return report


def _pair(ws, task):
    return [ws.modules[m] for m in task["modules"]]


def _datum(ws, task):
    mods = _pair(ws, task)
    return glue_many(mods) if len(mods) > 2 else glue_spherical(*mods)


def _run_glue(ws, task, attempts, seed):
    report = CheckReport(task["name"])
    datum = _datum(ws, task)
    R = datum.ctx.R
    report.add_report("glued category", validate(R))
    _hom_rows(report, R)
    degrees = sorted({b.degree for elems in R.basis.values() for b in elems})
    report.rows.append({"check": "glued algebra", "total_dim": R.total_dimension, "degrees": degrees})
    return report


def _run_verify_composition(ws, task, attempts, seed):
    mods = _pair(ws, task)
    if len(mods) > 2:
        return glued_many_twist(mods, attempts, seed, natural=task.get("natural", True))
    return glued_twist(glue_spherical(*mods), attempts, seed, natural=task.get("natural", True)).report


def _run_cotwist_serre(ws, task, attempts, seed):
    target = _datum(ws, task) if "modules" in task else ws.modules[task["module"]]
    return serre_shift_check(target, task["d"], attempts, seed)


def _run_sod(ws, task, attempts, seed):
    ctx = kronecker_context(ws.field, tuple(task.get("degrees", (0, 0))))
    report = CheckReport(task["name"])
    X, Y = point(ctx, "A"), point(ctx, "B")
    for key, sub in (
        ("hom identities", check_gluing_hom_identities(ctx, X, Y)),
        ("adjunctions", check_adjunctions(ctx, ctx.ind_A(X), X, Y)),
    ):
        report.rows.extend({"part": key, "check": row["identity"], **row} for row in sub.rows)
        report.add_report(key, sub)
    for kind, F in (("ind_A", ctx.ind_A(X)), ("res_proj_A", ctx.res_proj_A(X))):
        proj = sod_project(ctx, F, attempts, seed)
        report.add_certificate(f"triangle {kind}", proj.certificate)
    return report


def _run_serre_duality(ws, task, attempts, seed):
    if "modules" in task:
        return check_serre_duality(_datum(ws, task).ctx.R)
    return check_serre_duality(ws.categories[task["category"]])


RUNNERS = {
    "validate": _run_validate,
    "homology": _run_homology,
    "glue": _run_glue,
    "verify-spherical": lambda ws, t, a, s: check_spherical_object(ws.objects[t["object"]], t["d"], a, s),
    "verify-pobject": lambda ws, t, a, s: check_p_object(ws.objects[t["object"]], t["n"], a, s),
    "verify-pprime-cotwist": lambda ws, t, a, s: check_p_prime_cotwist(ws.modules[t["module"]], t["n"], a, s),
    "verify-composition": _run_verify_composition,
    "verify-cotwist-matrix": lambda ws, t, a, s: cotwist_matrix(_datum(ws, t), a, s).report,
    "verify-cotwist-serre": _run_cotwist_serre,
    "verify-commutativity": lambda ws, t, a, s: verify_commutativity(*_pair(ws, t)[:2], a, s),
    "verify-sod": _run_sod,
    "serre-duality": _run_serre_duality,
    "spherical-certificates": lambda ws, t, a, s: spherical_certificates(
        _datum(ws, t), t.get("d"), t.get("n"), a, s
    ),
    "verify-degenerate": lambda ws, t, a, s: verify_degenerate(ws.modules[t["module"]], a, s),
    "verify-sigma": lambda ws, t, a, s: check_sigma(ws.modules[t["module"]], a, s),
    "verify-twist": lambda ws, t, a, s: check_twist_on_object(ws.modules[t["module"]], ws.objects[t["object"]], a, s),
    "pprime-serre-table": lambda ws, t, a, s: p_prime_serre_table(_datum(ws, t), t["n"]),
}


def _met(status, expect):
    if status == INCONCLUSIVE:
        return None
    return status == expect


def exit_code(report):
    """0 when every task met its expectation, 1 when one did not, 3 when only inconclusive tasks remain."""
    tasks = report["tasks"]
    if any(t["met"] is False for t in tasks):
        return 1
    if any(t["met"] is None for t in tasks):
        return 3
    return 0


def run(scenario, field=None, seed=None, attempts=None, only=None, time_budget=None):
    """Execute the tasks in order and return the report dict.

    ``field``, ``seed`` and ``attempts`` override the scenario, which overrides
    the settings. ``only`` restricts the run to the tasks with the given
    checks. Once ``time_budget`` seconds have passed the remaining tasks are
    reported inconclusive.
    """
    k = parse_field(field or scenario.field or config("FIELD"))
    seed = seed if seed is not None else (scenario.seed if scenario.seed is not None else config("SEED"))
    if attempts is None:
        attempts = scenario.attempts if scenario.attempts is not None else config("ATTEMPTS")
    ws = Workspace(scenario, k)
    started = time.perf_counter()
    tasks, timings = [], {}
    for task in scenario.tasks:
        if only and task["check"] not in only:
            continue
        expect = task.get("expect", PASS)
        t0 = time.perf_counter()
        if time_budget is not None and t0 - started > time_budget:
            result = CheckReport(task["name"])
            result.notes.append("aborted: time budget exhausted")
            status = INCONCLUSIVE
        else:
            result = RUNNERS[task["check"]](ws, task, attempts, seed)
            status = result.status
            logger.info("task %r (%s): %s", task["name"], task["check"], status)
        timings[task["name"]] = round(time.perf_counter() - t0, 3)
        entry = {"name": task["name"], "check": task["check"], "expect": expect, "status": status}
        entry["met"] = _met(status, expect)
        entry.update({k2: v for k2, v in result.to_dict().items() if k2 not in ("name", "status")})
        tasks.append(entry)
    report = {
        "schema": SCHEMA,
        "tool": {"name": "dgtwist", "version": TOOL_VERSION},
        "scenario": scenario.name,
        "field": str(k),
        "seed": seed,
        "attempts": attempts,
        "coefficient_bound": config("COEFFICIENT_BOUND"),
        "generated": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "tasks": tasks,
        "timings": timings,
    }
    counts = {s: sum(t["status"] == s for t in tasks) for s in (PASS, FAIL, INCONCLUSIVE)}
    report["summary"] = {**counts, "exit_code": exit_code(report)}
    return report


def empty_report(name="empty", field="rational"):
    """The report skeleton of a scenario without tasks."""
    return run(Scenario(name=name, field=field))
