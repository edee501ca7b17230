"""exact-compare: engine, closed form and the classical torsionful Ricci tensor side by side."""

from __future__ import annotations

import argparse

from nq_ricci.commands._common import add_input_arguments, emit, per_point, status
from nq_ricci.exactcase import check_closed, compare_exact, exact_model_from_data
from nq_ricci.schemas import load_json
from nq_ricci.settings import load_settings


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_input_arguments(parser)


def run(args: argparse.Namespace) -> int:
    data = load_json(args.input, "exact")
    tol = args.tol if args.tol is not None else load_settings().compare_exact

    def at(point):
        M = exact_model_from_data(data, point)
        closed = check_closed(M)
        if not closed.closed:
            report = {
                "base_point": list(point),
                "closed": False,
                "d_eta": [{"indices": [i + 1 for i in key], "value": v}
                          for key, v in sorted(closed.residual.items()) if v != 0.0],
            }
            return report, False
        result = compare_exact(M)
        report = {"base_point": list(point), **result.as_dict(), "lambda": result.lambda_values}
        return report, result.max_deviation <= tol

    report, ok = per_point(args, data["base_point"], data["dim"], at)
    emit(report, args)
    return status(ok, "graded and classical Ricci agree", "exact-case comparison failed")
