from __future__ import annotations

import itertools
import sys
from pathlib import Path

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from nq_ricci.exactcase import ExactModel  # noqa: E402
from nq_ricci.nq import NQStructure  # noqa: E402
from nq_ricci.scalar import Jet, const, parse_expression  # noqa: E402
from nq_ricci.superalgebra import GradedChart, MetricSplit  # noqa: E402

FIXTURES = REPO_ROOT / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def random_polynomial_source(rng, n: int, terms: int = 3, max_power: int = 2) -> str:
    """e.g. '0.25*x1^2*x2 + -0.5*x2' over x1..xn (a constant when n == 0)."""
    parts = []
    for _ in range(terms):
        coeff = round(float(rng.uniform(-1, 1)), 3)
        factors = [f"({coeff})"]
        for i in range(n):
            power = int(rng.integers(0, max_power + 1))
            if power:
                factors.append(f"x{i + 1}^{power}")
        parts.append("*".join(factors))
    return " + ".join(parts)


def make_point_structure(r: int, s: int, c: dict, g_plus=None, g_minus=None) -> NQStructure:
    chart = GradedChart(0, r, s, (), 1)
    metric = MetricSplit(tuple(g_plus or [1] * r), tuple(g_minus or [-1] * s))
    return NQStructure(chart, metric, (), {k: const(float(v)) for k, v in c.items()})


@pytest.fixture
def point_structure():
    return make_point_structure


@pytest.fixture
def random_point_structure(rng):
    """Point-base structures of rank <= 4, which satisfy the master equation for any c."""
    def build(r: int, s: int, signed: bool = False) -> NQStructure:
        rank = r + s
        assert rank <= 4
        c = {key: float(rng.uniform(-1, 1)) for key in itertools.combinations(range(rank), 3)}
        g_plus = [int(v) for v in rng.choice([1, -1], size=r)] if signed else None
        g_minus = [int(v) for v in rng.choice([1, -1], size=s)] if signed else None
        return make_point_structure(r, s, c, g_plus, g_minus)

    return build


@pytest.fixture
def polynomial_structure(rng):
    """Random polynomial ρ and c; no master equation implied."""
    def build(n: int, r: int, s: int, jet_order: int = 2, base_point=None) -> NQStructure:
        rank = r + s
        point = tuple(base_point) if base_point is not None else tuple(
            float(v) for v in rng.uniform(-1, 1, size=n))
        chart = GradedChart(n, r, s, point, jet_order)
        g_plus = tuple(int(v) for v in rng.choice([1, -1], size=r))
        g_minus = tuple(int(v) for v in rng.choice([1, -1], size=s))
        rho = tuple(tuple(parse_expression(random_polynomial_source(rng, n), n) for _ in range(rank))
                    for _ in range(n))
        c = {key: parse_expression(random_polynomial_source(rng, n), n)
             for key in itertools.combinations(range(rank), 3)}
        return NQStructure(chart, MetricSplit(g_plus, g_minus), rho, c)

    return build


@pytest.fixture
def polynomial_exact_model(rng):
    """g = I + small symmetric quadratic perturbation, η = 0."""
    def build(m: int = 3, scale: float = 0.05, jet_order: int = 2) -> ExactModel:
        metric = [["" for _ in range(m)] for _ in range(m)]
        for i in range(m):
            for j in range(i, m):
                pieces = []
                for k in range(m):
                    for l in range(k, m):
                        coeff = round(float(rng.uniform(-scale, scale)), 4)
                        pieces.append(f"({coeff})*x{k + 1}*x{l + 1}")
                src = " + ".join(pieces)
                if i == j:
                    src = "1 + " + src
                metric[i][j] = metric[j][i] = src
        parsed = tuple(tuple(parse_expression(src, m) for src in row) for row in metric)
        point = tuple(float(v) for v in rng.uniform(-0.5, 0.5, size=m))
        return ExactModel(m, parsed, {}, point, jet_order)

    return build


def jet_at(value: float, n: int = 0, order: int = 1) -> Jet:
    return Jet.constant(value, (0.0,) * n, order)
