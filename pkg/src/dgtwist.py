"""Command-line front end.

    dgtwist run data_manual/zigzag_pair.scn --format table
    dgtwist verify-spherical spherical_kt2 --seed 3

``run`` executes every task of a scenario; the other commands run only the
tasks of one check. A bare name is looked up as ``<name>.scn`` in
MANUAL_DATA_DIR. Exit codes: 0 every task met its expectation, 1 some task
did not, 2 usage or scenario error, 3 only inconclusive tasks remain.
"""

import argparse
import logging
import sys
from pathlib import Path

from generate_report import emit_report
from scenario import ScenarioError, exit_code, load_scenario, run
from settings import config

MANUAL_DATA_DIR = Path(config("MANUAL_DATA_DIR"))

COMMANDS = {
    "run": None,
    "homology": ("homology",),
    "glue": ("glue",),
    "verify-spherical": ("verify-spherical",),
    "verify-pobject": ("verify-pobject", "verify-pprime-cotwist"),
    "verify-composition": ("verify-composition",),
    "verify-cotwist-matrix": ("verify-cotwist-matrix",),
    "verify-cotwist-serre": ("verify-cotwist-serre",),
    "verify-commutativity": ("verify-commutativity",),
    "verify-sod": ("verify-sod",),
    "verify-degenerate": ("verify-degenerate",),
    "spherical-certificates": ("spherical-certificates",),
}


def scenario_path(name):
    path = Path(name)
    if path.exists():
        return path
    bundled = MANUAL_DATA_DIR / f"{name}.scn"
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"no scenario file {name!r} (also looked for {bundled})")


def build_parser():
    parser = argparse.ArgumentParser(prog="dgtwist", description="Verify glued spherical functors on finite models.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario file, or the name of a bundled scenario")
    common.add_argument("--field", help="rational or prime:<p>; overrides the scenario")
    common.add_argument("--seed", type=int, help="search seed; overrides the scenario")
    common.add_argument("--attempts", type=int, help="random attempts per search direction")
    common.add_argument("--format", choices=["json", "table"], default=config("REPORT_FORMAT"))
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--time-budget", type=float, help="seconds before remaining tasks are skipped as inconclusive")
    common.add_argument("--log-level", default=config("LOG_LEVEL"))
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sub.add_parser(command, parents=[common])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        path = scenario_path(args.scenario)
        scenario = load_scenario(path)
        report = run(
            scenario,
            field=args.field,
            seed=args.seed,
            attempts=args.attempts,
            only=COMMANDS[args.command],
            time_budget=args.time_budget,
        )
    except ScenarioError as err:
        where = f"{err.line}:{err.column}:" if err.line is not None else ""
        print(f"{args.scenario}:{where} {err.message}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as err:
        print(f"dgtwist: {err}", file=sys.stderr)
        return 2
    text = emit_report(report, args.format)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
