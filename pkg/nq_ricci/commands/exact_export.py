"""exact-export: the jet-valued NQ model (with its Levi-Civita connection) of an exact model."""

from __future__ import annotations

import argparse

from nq_ricci.commands._common import add_input_arguments, check_point, emit
from nq_ricci.exactcase import (
    build_frame,
    build_nq_from_exact,
    exact_model_from_data,
    levi_civita_connection,
)
from nq_ricci.nq import field_source, model_from_structure
from nq_ricci.schemas import load_json


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_input_arguments(parser)


def run(args: argparse.Namespace) -> int:
    data = load_json(args.input, "exact")
    point = args.point[0] if args.point else tuple(data["base_point"])
    check_point(point, data["dim"])
    M = exact_model_from_data(data, point)
    F = build_frame(M)
    N = build_nq_from_exact(M, F)
    Q = levi_civita_connection(M, N, F)
    model = model_from_structure(N)
    r = N.chart.r
    model["invariant_torsion"] = {
        "psi_plus": [[[field_source(Q.psi[a][b][c]) for c in range(r)] for b in range(r)]
                     for a in range(r)]
    }
    emit(model, args)
    return 0
