from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np

from nq_ricci.errors import SchemaError
from nq_ricci.scalar import (
    ZERO,
    Expression,
    Field,
    Func,
    Jet,
    field_jet,
    format_expression,
    jet_to_expression,
    parse_expression,
)
from nq_ricci.scalar.expression import Add, Div, Mul, Neg, Pow, Sub
from nq_ricci.settings import load_settings
from nq_ricci.superalgebra import (
    Derivation,
    GradedChart,
    GradedElement,
    MetricSplit,
    apply_derivation,
    derivation_from_hamiltonian,
    monomial_name,
    poisson_bracket,
)

log = logging.getLogger(__name__)

Triple = tuple[int, int, int]


def permutation_sign(indices: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """(sign, sorted indices); sign 0 when an index repeats."""
    if len(set(indices)) != len(indices):
        return 0, tuple(sorted(indices))
    idx = list(indices)
    inversions = sum(1 for i in range(len(idx)) for j in range(i + 1, len(idx)) if idx[i] > idx[j])
    return (-1 if inversions % 2 else 1), tuple(sorted(idx))


@dataclass(frozen=True, eq=False)
class NQStructure:
    """Structure functions ρ^i_α, c_{αβγ} (stored for α<β<γ) and the metric split."""

    chart: GradedChart
    metric: MetricSplit
    rho: tuple[tuple[Field, ...], ...]
    c: Mapping[Triple, Field] = field(default_factory=dict)

    def __post_init__(self):
        chart = self.chart
        if len(self.metric.g_plus) != chart.r or len(self.metric.g_minus) != chart.s:
            raise SchemaError("metric split sizes do not match the chart ranks")
        rho = tuple(tuple(row) for row in self.rho)
        if len(rho) != chart.n or any(len(row) != chart.rank for row in rho):
            raise SchemaError(f"rho must be {chart.n} x {chart.rank}")
        object.__setattr__(self, "rho", rho)
        c = dict(self.c)
        for key in c:
            if len(key) != 3 or not (0 <= key[0] < key[1] < key[2] < chart.rank):
                raise SchemaError(f"c component {key} must satisfy 0 <= α < β < γ < {chart.rank}")
        object.__setattr__(self, "c", c)

    # --- jets at the base point ---
    @cached_property
    def _rho_jets(self) -> list[list[Jet]]:
        x0, k = self.chart.base_point, self.chart.jet_order
        return [[field_jet(f, x0, k) for f in row] for row in self.rho]

    @cached_property
    def _c_jets(self) -> dict[Triple, Jet]:
        x0, k = self.chart.base_point, self.chart.jet_order
        return {key: field_jet(f, x0, k) for key, f in self.c.items()}

    def rho_jet(self, i: int, alpha: int) -> Jet:
        return self._rho_jets[i][alpha]

    def c_jet(self, alpha: int, beta: int, gamma: int) -> Jet:
        """c_{αβγ} for any index order (antisymmetric; repeated index reads 0)."""
        sign, key = permutation_sign((alpha, beta, gamma))
        jet = self._c_jets.get(key)  # type: ignore[arg-type]
        if sign == 0 or jet is None:
            return self.chart.jet(0.0)
        return jet if sign > 0 else -jet

    def c_field(self, alpha: int, beta: int, gamma: int) -> tuple[int, Field]:
        sign, key = permutation_sign((alpha, beta, gamma))
        f = self.c.get(key)  # type: ignore[arg-type]
        if sign == 0 or f is None:
            return 0, ZERO
        return sign, f

    def with_base_point(self, base_point: Sequence[float]) -> "NQStructure":
        if any(isinstance(f, Jet) for row in self.rho for f in row) or any(
            isinstance(f, Jet) for f in self.c.values()
        ):
            raise ValueError("jet-valued structures are tied to their base point")
        return NQStructure(self.chart.with_base_point(base_point), self.metric, self.rho, self.c)

    @property
    def is_transcendental(self) -> bool:
        fields = [f for row in self.rho for f in row] + list(self.c.values())
        return any(isinstance(f, Jet) or _has_function(f) for f in fields)


def _has_function(e: Expression) -> bool:
    if isinstance(e, Func):
        return True
    if isinstance(e, Neg):
        return _has_function(e.arg)
    if isinstance(e, Pow):
        return _has_function(e.base)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return _has_function(e.left) or _has_function(e.right)
    return False


def build_hamiltonian(S: NQStructure) -> GradedElement:
    """H = ρ^i_α p_i e^α − (1/6) c_{αβγ} e^α e^β e^γ."""
    chart = S.chart
    terms = []
    for i in range(chart.n):
        for alpha in range(chart.rank):
            terms.append(((i,), (chart.e_index(alpha),), S.rho_jet(i, alpha)))
    for (a, b, g) in S.c:
        # the 1/6 cancels against the 3! orderings of an antisymmetric c
        terms.append(((), (a, b, g), -S.c_jet(a, b, g)))
    return GradedElement.from_terms(chart, terms)


def q_e_derivation(S: NQStructure) -> Derivation:
    """Q_E = {H, ·} as a generator action table."""
    return derivation_from_hamiltonian(build_hamiltonian(S), S.metric, parity=1, degree=1)


def apply_q_e(S: NQStructure, u: GradedElement) -> GradedElement:
    return apply_derivation(q_e_derivation(S), u)


SHAPE_GROUPS = {(2, 0): "p.p", (1, 2): "p.e.e", (0, 4): "e^4"}


@dataclass
class GroupReport:
    max_abs: float = 0.0
    entries: list[tuple[str, float]] = field(default_factory=list)


@dataclass
class MasterResidual:
    residual: GradedElement
    groups: dict[str, GroupReport]
    tol: float

    @property
    def valid(self) -> bool:
        return all(g.max_abs <= self.tol for g in self.groups.values())

    def as_dict(self) -> dict[str, Any]:
        return {
            "valid": self.valid,
            "tol": self.tol,
            "groups": {
                name: {"max_abs": g.max_abs, "entries": [{"monomial": m, "value": v} for m, v in g.entries]}
                for name, g in self.groups.items()
            },
        }


def default_master_tol(S: NQStructure) -> float:
    settings = load_settings()
    return settings.master_transcendental if S.is_transcendental else settings.master_constant


def check_master_equation(S: NQStructure, tol: float | None = None) -> MasterResidual:
    """{H, H} grouped by monomial shape; valid iff every base-point value is within tol."""
    if tol is None:
        tol = default_master_tol(S)
    h = build_hamiltonian(S)
    residual = poisson_bracket(h, h, S.metric)
    log.debug("{H,H} has %d terms", len(residual))
    groups = {name: GroupReport() for name in SHAPE_GROUPS.values()}
    for key, c in residual:
        shape = (len(key[0]), len(key[1]))
        name = SHAPE_GROUPS.get(shape, "other")
        report = groups.setdefault(name, GroupReport())
        value = c.value
        if not abs(value) <= report.max_abs:
            report.max_abs = abs(value)
        if not abs(value) <= tol:
            report.entries.append((monomial_name(S.chart, key), value))
    return MasterResidual(residual, groups, tol)


def p_p_matrix(S: NQStructure) -> np.ndarray:
    """ρ g^{-1} ρᵀ at the base point."""
    rho = np.array([[S.rho_jet(i, a).value for a in range(S.chart.rank)] for i in range(S.chart.n)])
    ginv = np.diag(np.array(S.metric.signs, dtype=float))
    return rho @ ginv @ rho.T if S.chart.n else np.zeros((0, 0))


def tautological_section(chart: GradedChart, metric: MetricSplit) -> GradedElement:
    """τ = e_a ξ^a = Σ_a g_a e^a ξ^a over the undotted sector."""
    return GradedElement.from_terms(
        chart,
        [((), (chart.e_index(a), chart.xi_index(a)), chart.jet(float(metric.g_plus[a])))
         for a in range(chart.r)],
    )


def export_courant_data(S: NQStructure) -> dict[str, Any]:
    """Anchor, bracket structure functions and pairing at the base point."""
    chart = S.chart
    bracket = []
    for (a, b, g) in sorted(S.c):
        value = S.c_jet(a, b, g).value
        if value != 0.0:
            bracket.append({"indices": [a + 1, b + 1, g + 1], "value": value})
    return {
        "base_point": list(chart.base_point),
        "anchor": [[S.rho_jet(i, a).value for a in range(chart.rank)] for i in range(chart.n)],
        "bracket": bracket,
        "pairing": {"plus": list(S.metric.g_plus), "minus": list(S.metric.g_minus)},
    }


# --- model files ---

def structure_from_model(data: Mapping[str, Any], base_point: Sequence[float] | None = None
                         ) -> NQStructure:
    """NQStructure from an already schema-validated model dict."""
    n, r, s = data["base_dim"], data["rank_plus"], data["rank_minus"]
    point = tuple(base_point) if base_point is not None else tuple(data["base_point"])
    if len(point) != n:
        raise SchemaError(f"base point has {len(point)} entries, expected {n}")
    if len(data["signature_plus"]) != r or len(data["signature_minus"]) != s:
        raise SchemaError("signature lengths must equal rank_plus / rank_minus")
    if r + s < 1:
        raise SchemaError("rank_plus + rank_minus must be at least 1")
    chart = GradedChart(n, r, s, point, data["jet_order"])
    metric = MetricSplit(tuple(data["signature_plus"]), tuple(data["signature_minus"]))
    rows = data["rho"]
    if len(rows) != n or any(len(row) != r + s for row in rows):
        raise SchemaError(f"rho must have {n} rows of {r + s} expressions")
    rho = tuple(tuple(parse_expression(src, n) for src in row) for row in rows)
    c: dict[Triple, Field] = {}
    for entry in data.get("c", []):
        a, b, g = (i - 1 for i in entry["indices"])
        if not (0 <= a < b < g < r + s):
            raise SchemaError(f"c indices {entry['indices']} must be 1-based and strictly increasing")
        if (a, b, g) in c:
            raise SchemaError(f"duplicate c component {entry['indices']}")
        c[(a, b, g)] = parse_expression(entry["expr"], n)
    return NQStructure(chart, metric, rho, c)


def field_source(f: Field) -> str:
    return format_expression(jet_to_expression(f) if isinstance(f, Jet) else f)


def model_from_structure(S: NQStructure) -> dict[str, Any]:
    chart = S.chart
    return {
        "base_dim": chart.n,
        "rank_plus": chart.r,
        "rank_minus": chart.s,
        "signature_plus": list(S.metric.g_plus),
        "signature_minus": list(S.metric.g_minus),
        "base_point": list(chart.base_point),
        "jet_order": chart.jet_order,
        "rho": [[field_source(f) for f in row] for row in S.rho],
        "c": [{"indices": [a + 1, b + 1, g + 1], "expr": field_source(S.c[(a, b, g)])}
              for (a, b, g) in sorted(S.c)],
    }
