from __future__ import annotations

import numpy as np
import pytest

from nq_ricci.errors import SchemaError
from nq_ricci.nq import (
    NQStructure,
    apply_q_e,
    build_hamiltonian,
    check_master_equation,
    export_courant_data,
    model_from_structure,
    p_p_matrix,
    permutation_sign,
    q_e_derivation,
    structure_from_model,
    tautological_section,
)
from nq_ricci.schemas import load_json, validate
from nq_ricci.scalar import ZERO, const, field_scale
from nq_ricci.superalgebra import GradedChart, GradedElement, MetricSplit

from conftest import FIXTURES


def _load(name: str) -> NQStructure:
    return structure_from_model(load_json(FIXTURES / name, "model"))


def test_permutation_sign():
    assert permutation_sign((0, 1, 2)) == (1, (0, 1, 2))
    assert permutation_sign((1, 0, 2)) == (-1, (0, 1, 2))
    assert permutation_sign((2, 0, 1)) == (1, (0, 1, 2))
    assert permutation_sign((1, 1, 0))[0] == 0


def test_c_jet_is_antisymmetric(point_structure):
    S = point_structure(3, 0, {(0, 1, 2): 1.5})
    assert S.c_jet(0, 1, 2).value == 1.5
    assert S.c_jet(1, 0, 2).value == -1.5
    assert S.c_jet(2, 0, 1).value == 1.5
    assert S.c_jet(0, 0, 2).value == 0.0


def test_structure_rejects_unsorted_c_keys():
    chart = GradedChart(0, 3, 0, (), 1)
    with pytest.raises(SchemaError):
        NQStructure(chart, MetricSplit((1, 1, 1), ()), (), {(1, 0, 2): const(1)})


RANKS = [(r, s) for total in range(1, 5) for r in range(total, -1, -1) for s in [total - r]]
Q_E_SHAPES = [(n, r, s) for n in (1, 2, 3) for r, s in RANKS][::2][:20]


@pytest.mark.parametrize("n, r, s", Q_E_SHAPES)
def test_q_e_acts_on_generators_as_anchor_and_bracket(polynomial_structure, n, r, s):
    S = polynomial_structure(n=n, r=r, s=s)
    chart, g = S.chart, S.metric
    D = q_e_derivation(S)
    for i in range(chart.n):
        expected_x = GradedElement.from_terms(
            chart, [((), (alpha,), S.rho_jet(i, alpha)) for alpha in range(chart.rank)])
        assert D.action(("x", i)).almost_equal(expected_x, 1e-12)

        terms = [((j,), (alpha,), -S.rho_jet(j, alpha).partial_derivative(i))
                 for j in range(chart.n) for alpha in range(chart.rank)]
        terms += [((), key, S.c_jet(*key).partial_derivative(i)) for key in S.c]
        expected_p = GradedElement.from_terms(chart, terms)
        assert D.action(("p", i)).almost_equal(expected_p, 1e-12)

    for alpha in range(chart.rank):
        sign = float(g.sign(alpha))
        terms = [((i,), (), S.rho_jet(i, alpha) * sign) for i in range(chart.n)]
        terms += [((), (beta, gamma), S.c_jet(alpha, beta, gamma) * (-0.5 * sign))
                  for beta in range(chart.rank) for gamma in range(chart.rank) if beta != gamma]
        expected_e = GradedElement.from_terms(chart, terms)
        assert D.action(("odd", alpha)).almost_equal(expected_e, 1e-12)


def test_apply_q_e_on_a_function_is_the_anchor(polynomial_structure):
    S = polynomial_structure(n=2, r=1, s=1)
    chart = S.chart
    f = chart.x(0) * chart.x(1)
    expected = GradedElement.from_terms(chart, [
        ((), (alpha,), S.rho_jet(0, alpha) * chart.x(1).coefficient((), ())
         + S.rho_jet(1, alpha) * chart.x(0).coefficient((), ()))
        for alpha in range(chart.rank)
    ])
    assert apply_q_e(S, f).almost_equal(expected, 1e-12)


def test_hamiltonian_has_degree_three(polynomial_structure):
    S = polynomial_structure(n=2, r=2, s=2)
    assert build_hamiltonian(S).degree() == 3


def test_so3_point_satisfies_master_equation():
    report = check_master_equation(_load("so3_point.json"))
    assert report.valid
    assert all(group.max_abs == 0.0 for group in report.groups.values())


def test_so3_double_squares_to_zero():
    S = _load("so3_double.json")
    assert check_master_equation(S).valid
    for image in q_e_derivation(S).compose_square().values():
        assert image.max_abs_value() <= 1e-12


def test_isotropy_violation_lands_in_p_p_group():
    S = _load("isotropy_violation.json")
    report = check_master_equation(S)
    assert not report.valid
    assert report.groups["p.p"].max_abs == pytest.approx(1.0)
    assert report.groups["p.e.e"].max_abs == 0.0
    assert report.groups["e^4"].max_abs == 0.0
    assert report.groups["p.p"].entries == [("p1*p1", pytest.approx(1.0))]
    assert np.allclose(p_p_matrix(S), [[1.0]])


def test_broken_jacobi_lands_in_e4_group():
    report = check_master_equation(_load("broken_jacobi.json"))
    assert not report.valid
    assert report.groups["p.p"].max_abs == 0.0
    assert report.groups["e^4"].max_abs == pytest.approx(2.0)
    names = [name for name, _ in report.groups["e^4"].entries]
    assert names == ["e2*e3*e4*e5"]


def test_small_rank_point_structures_are_always_valid(random_point_structure):
    for r, s in [(2, 1), (1, 2), (2, 2), (3, 1)]:
        S = random_point_structure(r, s, signed=True)
        assert check_master_equation(S).valid


def test_master_report_serializes():
    data = check_master_equation(_load("broken_jacobi.json")).as_dict()
    assert data["valid"] is False
    assert set(data["groups"]) == {"p.p", "p.e.e", "e^4"}
    assert data["groups"]["e^4"]["entries"][0]["monomial"] == "e2*e3*e4*e5"


def test_tautological_section_uses_plus_signature():
    chart = GradedChart(0, 2, 1, (), 1)
    tau = tautological_section(chart, MetricSplit((1, -1), (1,)))
    assert tau.value_terms() == {((), (0, 3)): 1.0, ((), (1, 4)): -1.0}
    assert tau.degree() == 2


def test_export_courant_data():
    data = export_courant_data(_load("isotropy_violation.json"))
    assert data["anchor"] == [[1.0, 0.0]]
    assert data["bracket"] == []
    assert data["pairing"] == {"plus": [1], "minus": [-1]}
    bracket = export_courant_data(_load("so3_point.json"))["bracket"]
    assert bracket == [{"indices": [1, 2, 3], "value": 1.0}]


def test_model_dict_survives_structure_round_trip(polynomial_structure):
    S = polynomial_structure(n=2, r=2, s=1)
    data = validate(model_from_structure(S), "model")
    back = structure_from_model(data)
    for key in S.c:
        assert back.c_jet(*key).almost_equal(S.c_jet(*key), 1e-12)
    for i in range(S.chart.n):
        for alpha in range(S.chart.rank):
            assert back.rho_jet(i, alpha).almost_equal(S.rho_jet(i, alpha), 1e-12)


def test_base_point_override():
    data = load_json(FIXTURES / "isotropy_violation.json", "model")
    S = structure_from_model(data, base_point=(2.5,))
    assert S.chart.base_point == (2.5,)
    with pytest.raises(SchemaError):
        structure_from_model(data, base_point=(1.0, 2.0))


def test_schema_rejects_bad_models():
    data = load_json(FIXTURES / "so3_point.json", "model")
    broken = dict(data, jet_order=-1)
    with pytest.raises(SchemaError):
        validate(broken, "model")
    both = dict(data, psi=[])
    with pytest.raises(SchemaError):
        validate(both, "model")


def test_duplicate_c_component_is_rejected():
    data = load_json(FIXTURES / "so3_point.json", "model")
    data = dict(data, c=data["c"] + data["c"])
    with pytest.raises(SchemaError):
        structure_from_model(data)


def test_hamiltonian_is_linear_in_the_structure_functions(polynomial_structure):
    S = polynomial_structure(n=2, r=2, s=1)
    doubled = NQStructure(S.chart, S.metric,
                          tuple(tuple(field_scale(f, 2.0) for f in row) for row in S.rho),
                          {key: field_scale(f, 2.0) for key, f in S.c.items()})
    assert build_hamiltonian(doubled).almost_equal(build_hamiltonian(S).scale(2.0), 1e-12)

    anchor_only = NQStructure(S.chart, S.metric, S.rho, {})
    zero_rho = tuple(tuple(ZERO for _ in row) for row in S.rho)
    bracket_only = NQStructure(S.chart, S.metric, zero_rho, S.c)
    assert build_hamiltonian(S).almost_equal(
        build_hamiltonian(anchor_only) + build_hamiltonian(bracket_only), 1e-12)


def test_p_p_residual_is_the_anchor_gram_matrix(polynomial_structure):
    S = polynomial_structure(n=3, r=2, s=2)
    residual = check_master_equation(S).residual
    M = p_p_matrix(S)
    assert np.allclose(M, M.T)
    for i in range(3):
        for j in range(i, 3):
            expected = M[i, j] if i == j else 2.0 * M[i, j]
            assert residual.coefficient((i, j), ()).value == pytest.approx(expected, abs=1e-12)


def test_zero_rank_model_is_a_schema_error():
    data = load_json(FIXTURES / "isotropy_violation.json", "model")
    data = dict(data, rank_plus=0, rank_minus=0, signature_plus=[], signature_minus=[],
                rho=[[]], c=[])
    with pytest.raises(SchemaError):
        structure_from_model(data)
