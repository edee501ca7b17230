"""validate: the classical master equation, grouped by monomial shape."""

from __future__ import annotations

import argparse

from nq_ricci.commands._common import add_input_arguments, emit, per_point, status
from nq_ricci.nq import check_master_equation, structure_from_model
from nq_ricci.schemas import load_json


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_input_arguments(parser)


def run(args: argparse.Namespace) -> int:
    data = load_json(args.input, "model")

    def at(point):
        S = structure_from_model(data, point)
        residual = check_master_equation(S, args.tol)
        return {"base_point": list(point), "master_equation": residual.as_dict()}, residual.valid

    report, ok = per_point(args, data["base_point"], data["base_dim"], at)
    emit(report, args)
    return status(ok, "master equation holds", "master equation violated")
