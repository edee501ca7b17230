"""flow: explicit-Euler generalized Ricci flow, one JSON record per line."""

from __future__ import annotations

import argparse
import sys

import pandas as pd

from nq_ricci.commands._common import add_input_arguments
from nq_ricci.errors import StepRejected
from nq_ricci.flow import run_flow, scenario_from_data
from nq_ricci.report import dumps_report
from nq_ricci.schemas import load_json


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_input_arguments(parser, points=False)
    parser.add_argument("--direction", choices=("forward", "backward"), default=None,
                        help="Flow sign (default: the scenario's, else settings.yaml)")


def _write(trajectory: list[dict], args: argparse.Namespace) -> None:
    lines = [dumps_report(rec) for rec in trajectory]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    if args.pretty:
        print(pd.DataFrame([{"t": r["t"], "ric_norm": r["ric_norm"]} for r in trajectory])
              .to_string(index=False))
    else:
        print("\n".join(lines))


def run(args: argparse.Namespace) -> int:
    scenario = scenario_from_data(load_json(args.input, "flow"))
    direction = args.direction or scenario.direction
    try:
        trajectory = run_flow(scenario.state, scenario.steps, scenario.dt, direction, args.tol)
    except StepRejected as exc:
        _write(exc.trajectory, args)
        raise
    _write(trajectory, args)
    print(f"✅ {scenario.steps} flow steps ({direction})", file=sys.stderr)
    return 0
