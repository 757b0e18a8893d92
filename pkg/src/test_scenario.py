import json
from pathlib import Path

import pytest

from settings import config
from scenario import (
    ScenarioError,
    empty_report,
    exit_code,
    load_scenario,
    parse_scenario,
    run,
    serialize_scenario,
)

MANUAL_DATA_DIR = Path(config("MANUAL_DATA_DIR"))

MINIMAL = """
version = 1
name = "minimal"
field = "rational"

[categories.kt2]
constructor = "truncated_polynomial"
n = 1
deg_t = 2

[objects.E]
category = "kt2"
representable = "pt"

[[tasks]]
name = "End(E)"
check = "homology"
object = "E"
"""


def test_minimal_scenario_parses():
    s = parse_scenario(MINIMAL)
    assert s.name == "minimal"
    assert list(s.categories) == ["kt2"]
    assert s.tasks[0]["check"] == "homology"


def test_homology_of_end_complex():
    report = run(parse_scenario(MINIMAL))
    (task,) = report["tasks"]
    assert task["status"] == "pass"
    assert task["rows"][0]["dims"] == {"0": 1, "2": 1}


def test_undefined_module_is_named():
    text = MINIMAL + '\n[[tasks]]\nname = "twist"\ncheck = "verify-degenerate"\nmodule = "ghost"\n'
    with pytest.raises(ScenarioError, match="ghost") as err:
        parse_scenario(text)
    assert err.value.line == text[: text.index('"ghost"')].count("\n") + 1


def test_malformed_degree():
    text = MINIMAL.replace("deg_t = 2", 'deg_t = "two"')
    with pytest.raises(ScenarioError, match="malformed degree"):
        parse_scenario(text)


def test_toml_syntax_error_has_position():
    with pytest.raises(ScenarioError) as err:
        parse_scenario('version = 1\nname = "x"\nfield = \n')
    assert err.value.line == 3


def test_non_homogeneous_relation():
    text = """
version = 1
name = "bad"

[categories.q]
constructor = "quiver"
vertices = ["1", "2", "3"]
arrows = [["a", "1", "2", 0], ["b", "2", "3", 0], ["c", "1", "3", 0]]
relations = [{ "b*a" = 1, "c" = 1 }]
"""
    with pytest.raises(ScenarioError, match="category 'q'"):
        parse_scenario(text)


def test_names_must_be_defined_before_use():
    text = """
version = 1
name = "order"

[categories.te]
constructor = "trivial_extension"
base = "kron"
pairing_degree = 2

[categories.kron]
constructor = "kronecker"
"""
    with pytest.raises(ScenarioError, match="undefined category 'kron'"):
        parse_scenario(text)


@pytest.mark.parametrize("path", sorted(MANUAL_DATA_DIR.glob("*.scn")), ids=lambda p: p.stem)
def test_bundled_scenarios_parse(path):
    s = load_scenario(path)
    assert s.tasks


def test_zigzag_scenario_round_trips():
    s = load_scenario(MANUAL_DATA_DIR / "zigzag_pair.scn")
    again = parse_scenario(serialize_scenario(s))
    assert again == s


def test_empty_report_skeleton():
    report = empty_report()
    assert report["schema"] == "dgtwist-report/1"
    assert report["tasks"] == []
    assert report["summary"] == {"pass": 0, "fail": 0, "inconclusive": 0, "exit_code": 0}


def test_negative_controls_fail_as_expected():
    report = run(load_scenario(MANUAL_DATA_DIR / "negative_controls.scn"))
    assert [t["status"] for t in report["tasks"]] == ["fail"] * len(report["tasks"])
    assert all(t["met"] for t in report["tasks"])
    assert exit_code(report) == 0


def test_unmet_expectation_exits_one():
    text = MINIMAL.replace('object = "E"', 'object = "E"\nexpect = "fail"')
    assert exit_code(run(parse_scenario(text))) == 1


def test_time_budget_marks_remaining_tasks_inconclusive():
    report = run(parse_scenario(MINIMAL), time_budget=-1)
    assert report["tasks"][0]["status"] == "inconclusive"
    assert report["summary"]["exit_code"] == 3


def test_same_seed_same_report():
    s = load_scenario(MANUAL_DATA_DIR / "spherical_kt2.scn")

    def body():
        report = run(s, seed=5, only=("verify-spherical", "verify-sigma"))
        report.pop("generated")
        report.pop("timings")
        return json.dumps(report, sort_keys=True)

    assert body() == body()


def test_field_override():
    report = run(parse_scenario(MINIMAL), field="prime:101")
    assert report["field"] == "prime:101"
    assert report["tasks"][0]["rows"][0]["dims"] == {"0": 1, "2": 1}


def test_glue_task_summarizes_the_glued_algebra():
    s = load_scenario(MANUAL_DATA_DIR / "zigzag_pair.scn")
    report = run(s, only=("glue",))
    (task,) = report["tasks"]
    summary = [row for row in task["rows"] if row.get("check") == "glued algebra"][0]
    assert summary["total_dim"] == 4
    assert summary["degrees"] == [0]


def test_zero_attempts_are_kept():
    assert run(parse_scenario(MINIMAL), attempts=0)["attempts"] == 0
    from_file = parse_scenario(MINIMAL.replace('field = "rational"', 'field = "rational"\nattempts = 0'))
    assert run(from_file)["attempts"] == 0
    assert run(from_file, attempts=3)["attempts"] == 3


def test_report_records_the_coefficient_bound():
    assert run(parse_scenario(MINIMAL))["coefficient_bound"] == config("COEFFICIENT_BOUND")
