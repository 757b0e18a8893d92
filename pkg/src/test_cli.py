import json

import pandas as pd

from dgtwist import main
from generate_report import collect_reports, emit_report, homology_frame, summary_frame
from scenario import empty_report


def test_run_negative_controls(tmp_path):
    out = tmp_path / "negative.json"
    assert main(["run", "negative_controls", "--output", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["scenario"] == "negative_controls"
    assert {t["expect"] for t in report["tasks"]} == {"fail"}


def test_single_check_command(capsys):
    assert main(["homology", "spherical_kt2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert [t["check"] for t in report["tasks"]] == ["homology"]


def test_table_format(capsys):
    assert main(["run", "kronecker_sod", "--format", "table"]) == 0
    text = capsys.readouterr().out
    assert "Kronecker homs" in text
    assert "semiorthogonal decomposition" in text


def test_scenario_error_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text('version = 1\nname = "bad"\n\n[[tasks]]\nname = "t"\ncheck = "glue"\nmodules = ["M", "N"]\n')
    assert main(["run", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "undefined module 'M'" in err
    assert ":7:" in err


def test_missing_scenario_exits_two(capsys):
    assert main(["run", "no_such_scenario"]) == 2
    assert "no_such_scenario" in capsys.readouterr().err


def test_empty_report_table():
    text = emit_report(empty_report(), "table")
    assert "(no tasks)" in text


def test_homology_table_pivots_degrees():
    task = {"rows": [{"check": "Hom(E,E)", "dims": {"0": 1, "2": 1}}]}
    frame = homology_frame(task)
    assert list(frame.columns) == [0, 2]
    assert frame.values.tolist() == [[1, 1]]


def test_slot_tables_keep_slots():
    task = {"rows": [{"check": "slot dims", "lhs": {"pt,pt": {"3": 1}}, "rhs": {"pt,pt": {"3": 1}}}]}
    frame = homology_frame(task).reset_index()
    assert frame["side"].tolist() == ["lhs", "rhs"]
    assert frame["slot"].tolist() == ["pt,pt", "pt,pt"]


def test_summary_frame_and_collection(tmp_path):
    report = {
        "schema": "dgtwist-report/1",
        "scenario": "s",
        "tasks": [{"name": "a", "check": "homology", "expect": "pass", "status": "pass", "met": True}],
        "timings": {"a": 0.5},
    }
    expected = pd.DataFrame(
        [["a", "homology", "pass", "pass", True]], columns=["task", "check", "expect", "status", "met"]
    )
    pd.testing.assert_frame_equal(summary_frame(report), expected)
    (tmp_path / "s.json").write_text(json.dumps(report))
    df = collect_reports(tmp_path)
    assert df["seconds"].tolist() == [0.5]
    assert df["scenario"].tolist() == ["s"]
