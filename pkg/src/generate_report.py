"""Render run reports as JSON or text tables, and aggregate saved reports into CSV.

Run as a script, every ``*.json`` report in OUTPUT_DIR is collected into
``report_summary.csv`` and ``report_summary.txt``.
"""

import json
from pathlib import Path

import pandas as pd

from settings import config

OUTPUT_DIR = Path(config("OUTPUT_DIR"))

TABLE_KEYS = ("dims", "lhs", "rhs", "cotwist", "serre")


def summary_frame(report):
    """One row per task: name, check, expectation, status and whether it was met."""
    columns = ["task", "check", "expect", "status", "met"]
    rows = [[t["name"], t["check"], t["expect"], t["status"], t["met"]] for t in report["tasks"]]
    return pd.DataFrame(rows, columns=columns)


def _long_rows(task):
    for row in task.get("rows", ()):
        label = row.get("check") or row.get("slot") or ""
        for key in TABLE_KEYS:
            table = row.get(key)
            if not isinstance(table, dict):
                continue
            if all(isinstance(v, dict) for v in table.values()) and table:
                for slot, dims in table.items():
                    for deg, n in dims.items():
                        yield label, key, slot, int(deg), n
            else:
                for deg, n in table.items():
                    yield label, key, "", int(deg), n


def homology_frame(task):
    """Homology tables of a task with degrees as columns.

    >>> task = {"rows": [{"check": "Hom(E,E)", "dims": {"0": 1, "2": 1}}]}
    >>> homology_frame(task).values.tolist()
    [[1, 1]]
    """
    long = pd.DataFrame(list(_long_rows(task)), columns=["row", "side", "slot", "degree", "dim"])
    if long.empty:
        return long
    return long.pivot_table(
        index=["row", "side", "slot"], columns="degree", values="dim", aggfunc="sum", fill_value=0
    )


def emit_report(report, fmt="json"):
    """The report as text; ``json`` is the versioned schema, ``table`` is for people."""
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [
        f"{report['scenario']}  field={report['field']}  seed={report['seed']}  attempts={report['attempts']}",
        "",
    ]
    summary = summary_frame(report)
    lines.append(summary.to_string(index=False) if not summary.empty else "(no tasks)")
    for task in report["tasks"]:
        frame = homology_frame(task)
        if frame.empty:
            continue
        lines += ["", f"== {task['name']} ({task['status']})", frame.to_string()]
    for task in report["tasks"]:
        for failure in task.get("failures", ()):
            lines.append(f"FAILED {task['name']}: {failure['check']}: {failure['witness']}")
    return "\n".join(lines) + "\n"


def collect_reports(output_dir=OUTPUT_DIR):
    """Task rows of every saved report, tagged with the scenario name."""
    frames = []
    for path in sorted(Path(output_dir).glob("*.json")):
        with open(path, encoding="utf-8") as f:
            report = json.load(f)
        if report.get("schema", "").split("/")[0] != "dgtwist-report":
            continue
        frame = summary_frame(report)
        frame.insert(0, "scenario", report["scenario"])
        frame["seconds"] = frame["task"].map(report.get("timings", {}))
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=["scenario", "task", "check", "expect", "status", "met", "seconds"])
    return pd.concat(frames, ignore_index=True)


def write_summary(output_dir=OUTPUT_DIR):
    df = collect_reports(output_dir)
    output_dir = Path(output_dir)
    df.to_csv(output_dir / "report_summary.csv", index=False)
    with open(output_dir / "report_summary.txt", "w", encoding="utf-8") as f:
        f.write(df.to_string(index=False) + "\n")
    return df


if __name__ == "__main__":
    df = write_summary()
    print(f"Summarized {df['scenario'].nunique()} reports, {len(df)} tasks into {OUTPUT_DIR}")
