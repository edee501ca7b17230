"""torsion: Qτ and whether the involution leaves it invariant."""

from __future__ import annotations

import argparse

from nq_ricci.commands._common import add_input_arguments, emit, per_point, status
from nq_ricci.connection import check_torsion_invariance, connection_from_model, torsion
from nq_ricci.errors import SchemaError
from nq_ricci.nq import structure_from_model
from nq_ricci.schemas import load_json
from nq_ricci.superalgebra import monomial_name, render_element


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_input_arguments(parser)


def run(args: argparse.Namespace) -> int:
    data = load_json(args.input, "model")

    def at(point):
        S = structure_from_model(data, point)
        Q = connection_from_model(S, data)
        if Q is None:
            raise SchemaError("torsion needs a 'psi' or 'invariant_torsion' block in the model")
        t = torsion(Q)
        verdict = check_torsion_invariance(Q, args.tol)
        report = {
            "base_point": list(point),
            "torsion": render_element(t, values_only=True),
            "terms": [{"monomial": monomial_name(S.chart, key), "value": c.value} for key, c in t],
            "invariance": verdict.as_dict(),
        }
        return report, verdict.invariant

    report, ok = per_point(args, data["base_point"], data["base_dim"], at)
    emit(report, args)
    return status(ok, "torsion is invariant", "torsion is not invariant under the involution")
