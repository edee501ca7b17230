from __future__ import annotations

import itertools

import pytest

from nq_ricci.errors import ChartMismatch
from nq_ricci.scalar import evaluate_jet, parse_expression
from nq_ricci.superalgebra import (
    Derivation,
    GradedChart,
    GradedElement,
    MetricSplit,
    apply_derivation,
    apply_involution,
    derivation_from_hamiltonian,
    multiply,
    poisson_bracket,
    render_element,
)

from conftest import random_polynomial_source

CHART = GradedChart(2, 2, 1, (0.3, -0.6), 3)
METRIC = MetricSplit((1, -1), (-1,))


def _field(rng, chart=CHART):
    src = random_polynomial_source(rng, chart.n)
    return evaluate_jet(parse_expression(src, chart.n), chart.base_point, chart.jet_order)


def _random_even(rng, chart=CHART):
    """Degree-2 element: a p-linear part plus an e·e part."""
    terms = [((i,), (), _field(rng, chart)) for i in range(chart.n)]
    terms += [((), (a, b), _field(rng, chart))
              for a, b in itertools.combinations(range(chart.rank), 2)]
    return GradedElement.from_terms(chart, terms)


def _random_cubic(rng, chart=CHART):
    """Degree-3 element shaped like a Hamiltonian: p·e plus e·e·e."""
    terms = [((i,), (a,), _field(rng, chart)) for i in range(chart.n) for a in range(chart.rank)]
    terms += [((), t, _field(rng, chart)) for t in itertools.combinations(range(chart.rank), 3)]
    return GradedElement.from_terms(chart, terms)


def _random_odd(rng, chart=CHART):
    terms = [((), (k,), _field(rng, chart)) for k in range(chart.odd_count)]
    return GradedElement.from_terms(chart, terms)


def test_odd_generators_anticommute():
    e1, e2 = CHART.e(0), CHART.e(1)
    assert e1 * e2 == -(e2 * e1)
    assert (e1 * e1).is_zero()


def test_from_terms_absorbs_permutation_sign():
    u = GradedElement.from_terms(CHART, [((), (2, 0, 1), CHART.jet(1.0))])
    assert u.coefficient((), (0, 1, 2)).value == 1.0
    v = GradedElement.from_terms(CHART, [((), (1, 0), CHART.jet(2.0))])
    assert v.coefficient((), (0, 1)).value == -2.0


def test_degrees():
    assert CHART.p(0).degree() == 2
    assert (CHART.e(0) * CHART.xi(0)).degree() == 2
    assert CHART.zero().degree() is None
    with pytest.raises(ValueError):
        (CHART.p(0) + CHART.e(0)).degree()


def test_canonical_bracket_on_coordinates():
    assert poisson_bracket(CHART.x(0), CHART.p(0), METRIC) == -CHART.constant(1.0)
    assert poisson_bracket(CHART.p(0), CHART.x(0), METRIC) == CHART.constant(1.0)
    assert poisson_bracket(CHART.p(0), CHART.x(1), METRIC).is_zero()


@pytest.mark.parametrize("alpha, beta", list(itertools.product(range(3), repeat=2)))
def test_bracket_of_e_generators_is_the_pairing(alpha, beta):
    got = poisson_bracket(CHART.e(alpha), CHART.e(beta), METRIC)
    if alpha == beta:
        assert got == CHART.constant(float(METRIC.sign(alpha)))
    else:
        assert got.is_zero()


def test_xi_is_inert():
    for k in range(CHART.odd_count):
        assert poisson_bracket(CHART.xi(0), CHART.odd(k), METRIC).is_zero()


def test_bracket_rejects_mixed_charts():
    other = CHART.with_base_point((0.0, 0.0))
    with pytest.raises(ChartMismatch):
        poisson_bracket(CHART.e(0), other.e(0), METRIC)


def test_jacobi_for_even_elements(rng):
    u, v, w = _random_even(rng), _random_even(rng), _random_cubic(rng)
    left = poisson_bracket(u, poisson_bracket(v, w, METRIC), METRIC)
    right = (poisson_bracket(poisson_bracket(u, v, METRIC), w, METRIC)
             + poisson_bracket(v, poisson_bracket(u, w, METRIC), METRIC))
    assert left.almost_equal(right, 1e-10)


def test_leibniz_for_even_bracket(rng):
    u, v, w = _random_even(rng), _random_odd(rng), _random_odd(rng)
    left = poisson_bracket(u, multiply(v, w), METRIC)
    right = multiply(poisson_bracket(u, v, METRIC), w) + multiply(v, poisson_bracket(u, w, METRIC))
    assert left.almost_equal(right, 1e-10)


def test_hamiltonian_derivation_extends_the_bracket(rng):
    h = _random_cubic(rng)
    D = derivation_from_hamiltonian(h, METRIC, parity=1, degree=1)
    u = multiply(_random_even(rng), _random_odd(rng))
    assert apply_derivation(D, u).almost_equal(poisson_bracket(h, u, METRIC), 1e-10)


def test_odd_derivative_on_xi():
    chart = GradedChart(0, 2, 1, (), 1)
    D = Derivation(chart, 1, -1, {("odd", chart.xi_index(0)): chart.constant(1.0)})
    assert D(chart.xi(0) * chart.e(1)) == chart.e(1)
    assert D(chart.e(1) * chart.xi(0)) == -chart.e(1)


def test_derivation_rejects_wrong_degree():
    chart = GradedChart(0, 2, 1, (), 1)
    with pytest.raises(ValueError):
        Derivation(chart, 1, 1, {("odd", 0): chart.e(1)})


def test_compose_square_of_de_rham_like_derivation_vanishes():
    chart = GradedChart(0, 3, 0, (), 1)
    # d e1 = e2 e3 and friends define a derivation whose square is zero iff Jacobi holds
    table = {("odd", 0): chart.e(1) * chart.e(2),
             ("odd", 1): chart.e(2) * chart.e(0),
             ("odd", 2): chart.e(0) * chart.e(1)}
    D = Derivation(chart, 1, 1, table)
    for image in D.compose_square().values():
        assert image.is_zero()


def test_involution_flips_dotted_generators_only(rng):
    e1, ed = CHART.e(0), CHART.e(2)
    assert apply_involution(ed) == -ed
    assert apply_involution(e1) == e1
    assert apply_involution(e1 * ed) == -(e1 * ed)
    u = _random_cubic(rng)
    assert apply_involution(apply_involution(u)) == u


def test_render_element_names_generators():
    text = render_element(CHART.e(0) * CHART.e(2) * CHART.xi(0), values_only=True)
    assert text == "(1.0)*e1*ed1*xi1"
    assert render_element(CHART.zero()) == "0"


def test_involution_preserves_the_bracket(rng):
    u, v = _random_cubic(rng), _random_even(rng)
    left = apply_involution(poisson_bracket(u, v, METRIC))
    right = poisson_bracket(apply_involution(u), apply_involution(v), METRIC)
    assert left.almost_equal(right, 1e-12)


def test_jacobi_with_odd_arguments(rng):
    u, v, w = _random_odd(rng), _random_cubic(rng), _random_cubic(rng)
    left = poisson_bracket(u, poisson_bracket(v, w, METRIC), METRIC)
    right = (poisson_bracket(poisson_bracket(u, v, METRIC), w, METRIC)
             - poisson_bracket(v, poisson_bracket(u, w, METRIC), METRIC))
    scale = max(1.0, left.max_abs_value(), right.max_abs_value())
    assert left.almost_equal(right, 1e-10 * scale)


def test_square_of_odd_derivation_is_an_even_derivation(rng):
    D = derivation_from_hamiltonian(_random_cubic(rng), METRIC, parity=1, degree=1)

    def square(x):
        return apply_derivation(D, apply_derivation(D, x))

    u, v = _random_odd(rng), _random_even(rng)
    left = square(multiply(u, v))
    right = multiply(square(u), v) + multiply(u, square(v))
    scale = max(1.0, left.max_abs_value(), right.max_abs_value())
    assert left.almost_equal(right, 1e-9 * scale)
