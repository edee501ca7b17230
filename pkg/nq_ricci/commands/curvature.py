"""curvature: Q² on each ξ^a, its anti-self-dual part and contraction."""

from __future__ import annotations

import argparse

from nq_ricci.commands._common import add_input_arguments, emit, per_point, status
from nq_ricci.connection import connection_from_model, contract, curvature, project_antiselfdual
from nq_ricci.errors import SchemaError
from nq_ricci.nq import structure_from_model
from nq_ricci.schemas import load_json
from nq_ricci.superalgebra import GradedElement, monomial_name


def _terms(u: GradedElement) -> list[dict]:
    return [{"monomial": monomial_name(u.chart, key), "value": c.value} for key, c in u]


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_input_arguments(parser)


def run(args: argparse.Namespace) -> int:
    data = load_json(args.input, "model")

    def at(point):
        S = structure_from_model(data, point)
        Q = connection_from_model(S, data)
        if Q is None:
            raise SchemaError("curvature needs a 'psi' or 'invariant_torsion' block in the model")
        D = curvature(Q, args.tol)
        pi = project_antiselfdual(D)
        report = {
            "base_point": list(point),
            "components": [
                {"xi": a + 1, "terms": _terms(comp), "antiselfdual": _terms(pi.components[a])}
                for a, comp in enumerate(D.components)
            ],
            "sector_residuals": D.sector_residuals,
            "contraction": contract(D).tolist(),
        }
        return report, True

    report, ok = per_point(args, data["base_point"], data["base_dim"], at)
    emit(report, args)
    return status(ok, "curvature lies in End2", "curvature check failed")
