"""ricci: generalized Ricci tensor through the derivation engine, the closed form, or both."""

from __future__ import annotations

import argparse

import numpy as np

from nq_ricci.commands._common import add_input_arguments, emit, per_point, status
from nq_ricci.connection import connection_from_model, ricci_closed_form, ricci_engine
from nq_ricci.errors import SchemaError
from nq_ricci.nq import check_master_equation, structure_from_model
from nq_ricci.schemas import load_json
from nq_ricci.settings import load_settings


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_input_arguments(parser)
    parser.add_argument("--path", choices=("engine", "closed", "both"), default="both",
                        help="Computation path (default: both, with an agreement check)")


def run(args: argparse.Namespace) -> int:
    data = load_json(args.input, "model")
    settings = load_settings()

    def at(point):
        S = structure_from_model(data, point)
        master = check_master_equation(S)
        report: dict = {"base_point": list(point)}
        if not master.valid:
            report["master_equation"] = master.as_dict()
            return report, False
        Q = connection_from_model(S, data)
        if Q is None:
            raise SchemaError("ricci needs a 'psi' or 'invariant_torsion' block in the model")
        results = {}
        if args.path in ("engine", "both"):
            results["engine"] = ricci_engine(Q)
        if args.path in ("closed", "both"):
            results["closed_form"] = ricci_closed_form(S, Q.lambda_fields())
        if args.path != "both":
            (only,) = results.values()
            report.update(only.as_dict())
            return report, True
        tol = args.tol
        if tol is None:
            tol = settings.agreement_transcendental if S.is_transcendental else settings.agreement
        deviation = float(np.max(np.abs(results["engine"].matrix - results["closed_form"].matrix),
                                 initial=0.0))
        report.update({name: r.as_dict() for name, r in results.items()})
        report["max_deviation"] = deviation
        report["tol"] = tol
        return report, deviation <= tol

    report, ok = per_point(args, data["base_point"], data["base_dim"], at)
    emit(report, args)
    return status(ok, "Ricci tensor computed", "Ricci computation failed validation")
