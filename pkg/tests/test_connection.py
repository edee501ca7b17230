from __future__ import annotations

import numpy as np
import pytest

from nq_ricci.connection import (
    Connection,
    check_torsion_invariance,
    connection_from_model,
    contract,
    curvature,
    divergence,
    export_generalized_connection,
    general_contraction,
    lambda_values,
    make_invariant_torsion,
    project_antiselfdual,
    project_antiselfdual_filter,
    ricci_closed_form,
    ricci_engine,
    torsion,
    torsion_closed_form,
)
from nq_ricci.errors import End2ViolationError, JetOrderExhausted, SchemaError
from nq_ricci.exactcase import build_nq_from_exact
from nq_ricci.nq import structure_from_model
from nq_ricci.scalar import ZERO, const, evaluate_value, field_sum, parse_expression
from nq_ricci.schemas import load_json, validate

from conftest import FIXTURES, random_polynomial_source

POINT_SHAPES = [(2, 1), (1, 2), (2, 2), (3, 1), (1, 3)]


def _from_fixture(name: str) -> Connection:
    data = load_json(FIXTURES / name, "model")
    return connection_from_model(structure_from_model(data), data)


def _random_constant_psi(rng, S):
    r, rank = S.chart.r, S.chart.rank
    return tuple(tuple(tuple(const(float(rng.uniform(-1, 1))) for _ in range(rank))
                       for _ in range(r)) for _ in range(r))


def _random_polynomial_psi(rng, S, width: int | None = None):
    n, r = S.chart.n, S.chart.r
    width = S.chart.rank if width is None else width
    return [[[parse_expression(random_polynomial_source(rng, n, terms=2), n) for _ in range(width)]
             for _ in range(r)] for _ in range(r)]


def _random_lambda(rng, S):
    n = S.chart.n
    return [parse_expression(random_polynomial_source(rng, n, terms=2), n) for _ in range(S.chart.r)]


@pytest.fixture
def exact_structure(polynomial_exact_model):
    return build_nq_from_exact(polynomial_exact_model(m=2, jet_order=3))


# --- torsion ---

@pytest.mark.parametrize("r, s", POINT_SHAPES)
def test_torsion_matches_closed_form_on_point_models(rng, random_point_structure, r, s):
    S = random_point_structure(r, s, signed=True)
    Q = Connection(S, _random_constant_psi(rng, S))
    assert torsion(Q).almost_equal(torsion_closed_form(Q), 1e-12)


def test_torsion_matches_closed_form_with_anchor(rng, exact_structure):
    S = exact_structure
    Q = Connection(S, tuple(tuple(tuple(row) for row in block)
                            for block in _random_polynomial_psi(rng, S)))
    assert torsion(Q).almost_equal(torsion_closed_form(Q), 1e-10)


def test_torsion_has_degree_three(rng, random_point_structure):
    S = random_point_structure(2, 1)
    assert torsion(Connection(S, _random_constant_psi(rng, S))).degree() == 3


@pytest.mark.parametrize("r, s", POINT_SHAPES)
def test_invariant_torsion_passes_both_checks(rng, random_point_structure, r, s):
    S = random_point_structure(r, s, signed=True)
    Q = make_invariant_torsion(S, [[[const(float(v)) for v in rng.uniform(-1, 1, size=r)]
                                    for _ in range(r)] for _ in range(r)])
    report = check_torsion_invariance(Q)
    assert report.invariant
    assert report.components_agree
    assert np.all(np.abs(report.component_residual) <= 1e-12)


def test_perturbed_torsion_fails_both_checks():
    report = check_torsion_invariance(_from_fixture("torsion_perturbed.json"))
    assert not report.invariant
    assert report.components_agree
    assert report.component_residual.shape == (2, 2, 1)
    assert report.component_residual[0, 1, 0] == pytest.approx(1.0)
    assert report.component_residual[1, 0, 0] == pytest.approx(0.0)
    assert report.max_abs > 0.5
    assert report.as_dict()["invariant"] is False


@pytest.mark.parametrize("r, s", POINT_SHAPES)
def test_random_dotted_psi_is_detected(rng, random_point_structure, r, s):
    S = random_point_structure(r, s)
    report = check_torsion_invariance(Connection(S, _random_constant_psi(rng, S)))
    assert not report.invariant
    assert report.components_agree


@pytest.mark.parametrize("r, s", POINT_SHAPES)
def test_small_dotted_perturbation_is_detected(rng, random_point_structure, r, s):
    S = random_point_structure(r, s, signed=True)
    base = make_invariant_torsion(S, [[[const(float(v)) for v in rng.uniform(-1, 1, size=r)]
                                       for _ in range(r)] for _ in range(r)])
    assert check_torsion_invariance(base).invariant
    a, b, d = int(rng.integers(0, r)), int(rng.integers(0, r)), int(rng.integers(0, s))
    psi = [[list(row) for row in block] for block in base.psi]
    psi[a][b][r + d] = field_sum([psi[a][b][r + d], const(1e-3)])
    report = check_torsion_invariance(Connection(S, psi))
    assert not report.invariant
    assert report.components_agree
    assert report.component_residual[a, b, d] == pytest.approx(1e-3, abs=1e-12)
    assert report.max_abs > 1e-4


# --- curvature and its contraction ---

@pytest.mark.parametrize("r, s", POINT_SHAPES)
def test_curvature_is_xi_linear(rng, random_point_structure, r, s):
    S = random_point_structure(r, s)
    D = curvature(Connection(S, _random_constant_psi(rng, S)))
    assert len(D.components) == r
    assert D.is_xi_linear()
    assert all(comp.degree() in (3, None) for comp in D.components)


def test_curvature_rejects_broken_jacobi():
    with pytest.raises(End2ViolationError):
        curvature(_from_fixture("broken_jacobi.json"))


def test_curvature_needs_undotted_sector(point_structure):
    S = point_structure(0, 3, {(0, 1, 2): 1.0})
    with pytest.raises(SchemaError):
        curvature(Connection(S, ()))


@pytest.mark.parametrize("r, s", POINT_SHAPES)
def test_projection_is_idempotent_and_matches_filter(rng, random_point_structure, r, s):
    S = random_point_structure(r, s, signed=True)
    D = curvature(Connection(S, _random_constant_psi(rng, S)))
    once = project_antiselfdual(D)
    twice = project_antiselfdual(once)
    filtered = project_antiselfdual_filter(D)
    for a, b, c in zip(once.components, twice.components, filtered.components):
        assert a.almost_equal(b, 1e-14)
        assert a.almost_equal(c, 1e-14)


@pytest.mark.parametrize("r, s", POINT_SHAPES)
def test_contraction_ignores_the_selfdual_part(rng, random_point_structure, r, s):
    S = random_point_structure(r, s)
    D = curvature(Connection(S, _random_constant_psi(rng, S)))
    assert np.allclose(contract(D), contract(project_antiselfdual(D)), atol=1e-14)
    assert contract(D).shape == (r, s)


@pytest.mark.parametrize("r, s", POINT_SHAPES)
def test_general_contraction_matches_engine_on_point_models(rng, random_point_structure, r, s):
    for _ in range(5):
        S = random_point_structure(r, s, signed=True)
        Q = Connection(S, _random_constant_psi(rng, S))
        assert np.allclose(general_contraction(Q).matrix, ricci_engine(Q).matrix, atol=1e-12)


def test_general_contraction_matches_engine_with_anchor(rng, exact_structure):
    S = exact_structure
    Q = Connection(S, tuple(tuple(tuple(row) for row in block)
                            for block in _random_polynomial_psi(rng, S)))
    assert np.allclose(general_contraction(Q).matrix, ricci_engine(Q).matrix, atol=1e-9)


# --- Ricci ---

@pytest.mark.parametrize("r, s", POINT_SHAPES)
def test_engine_matches_closed_form_on_point_models(rng, random_point_structure, r, s):
    for _ in range(5):
        S = random_point_structure(r, s, signed=True)
        lam = [const(float(v)) for v in rng.uniform(-1, 1, size=r)]
        engine = ricci_engine(Connection.from_lambda(S, lam))
        closed = ricci_closed_form(S, lam)
        assert np.allclose(engine.matrix, closed.matrix, atol=1e-9)


def test_engine_matches_closed_form_with_anchor(rng, exact_structure):
    S = exact_structure
    lam = _random_lambda(rng, S)
    engine = ricci_engine(Connection.from_lambda(S, lam))
    closed = ricci_closed_form(S, lam)
    assert np.allclose(engine.matrix, closed.matrix, atol=1e-7)


def test_ricci_depends_only_on_the_trace(rng, exact_structure):
    S = exact_structure
    r = S.chart.r
    lam = _random_lambda(rng, S)
    base = Connection.from_lambda(S, lam)

    # trace-free perturbation of the undotted block
    raw = _random_polynomial_psi(rng, S, width=r)
    psi_plus = []
    for a in range(r):
        block = []
        for b in range(r):
            row = []
            for c in range(r):
                entry = base.psi[a][b][c] + raw[a][b][c]
                if a == c:
                    trace = raw[0][b][0]
                    for d in range(1, r):
                        trace = trace + raw[d][b][d]
                    entry = entry - trace * (1 / r)
                row.append(entry)
            block.append(row)
        psi_plus.append(block)
    other = make_invariant_torsion(S, psi_plus)

    assert np.allclose(lambda_values(other), lambda_values(base), atol=1e-12)
    assert not np.allclose(
        [[other.psi_jet(a, b, c).value for c in range(r)] for a in range(r) for b in range(r)],
        [[base.psi_jet(a, b, c).value for c in range(r)] for a in range(r) for b in range(r)],
    )
    assert np.allclose(ricci_engine(other).matrix, ricci_engine(base).matrix, atol=1e-9)


def test_invariant_torsion_fixture_values():
    Q = _from_fixture("invariant_torsion.json")
    expected = np.array([[2.0], [1.0]])
    engine = ricci_engine(Q)
    closed = ricci_closed_form(Q.structure, Q.lambda_fields())
    assert np.allclose(engine.matrix, expected, atol=1e-12)
    assert np.allclose(closed.matrix, expected, atol=1e-12)
    assert engine.lambda_values == pytest.approx((0.5, -1.0))
    assert engine.as_dict()["path"] == "engine"


def test_so3_double_has_vanishing_ricci():
    R = ricci_engine(_from_fixture("so3_double.json"))
    assert R.matrix.shape == (3, 3)
    assert np.allclose(R.matrix, 0.0, atol=1e-12)


def test_closed_form_rejects_wrong_lambda_length(random_point_structure):
    S = random_point_structure(2, 1)
    with pytest.raises(SchemaError):
        ricci_closed_form(S, [ZERO])


def test_divergence_is_minus_lambda(rng, exact_structure):
    S = exact_structure
    Q = Connection.from_lambda(S, _random_lambda(rng, S))
    values = [evaluate_value(f, S.chart.base_point) for f in divergence(Q)]
    assert np.allclose(values, [-v for v in lambda_values(Q)], atol=1e-12)


# --- export ---

def test_export_of_invariant_connection():
    Q = _from_fixture("invariant_torsion.json")
    data = export_generalized_connection(Q)
    assert data["invariant_torsion"] is True
    assert np.array(data["gamma"]).shape == (2, 3, 2)
    assert np.array(data["restricted"]).shape == (2, 2, 2)
    assert data["gamma"][0][2][1] == pytest.approx(2.0)


def test_export_of_perturbed_connection_has_no_restriction():
    data = export_generalized_connection(_from_fixture("torsion_perturbed.json"))
    assert data["invariant_torsion"] is False
    assert "restricted" not in data


def test_connection_from_model_without_block():
    data = load_json(FIXTURES / "isotropy_violation.json", "model")
    assert connection_from_model(structure_from_model(data), data) is None


def _quadratic_anchor_model(jet_order: int) -> dict:
    return validate({
        "base_dim": 1, "rank_plus": 1, "rank_minus": 1,
        "signature_plus": [1], "signature_minus": [-1],
        "base_point": [0.5], "jet_order": jet_order,
        "rho": [["x1^2", "x1^2"]],
        "invariant_torsion": {"lambda": ["0"]},
    }, "model")


def test_curvature_raises_when_the_jet_budget_runs_out():
    data = _quadratic_anchor_model(jet_order=1)
    Q = connection_from_model(structure_from_model(data), data)
    with pytest.raises(JetOrderExhausted):
        curvature(Q)


def test_curvature_checks_every_sector_with_enough_jet_order():
    data = _quadratic_anchor_model(jet_order=2)
    Q = connection_from_model(structure_from_model(data), data)
    D = curvature(Q)
    assert set(D.sector_residuals) == {"x", "e", "p"}
