"""
Connections Q = Q_E + ψ^a_{bα} e^α ξ^b ∂_{ξ^a}, their torsion and curvature,
and the generalized Ricci tensor.

Ric is stored against the monomial ξ^b e^ȧ; the contraction itself reads
coefficients against e^ȧ ξ^b, so the two differ by a sign of -1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np

from nq_ricci.errors import End2ViolationError, SchemaError
from nq_ricci.nq import NQStructure, q_e_derivation, tautological_section
from nq_ricci.scalar import ZERO, Field, Jet, field_jet, field_scale, field_sum, parse_expression
from nq_ricci.settings import load_settings
from nq_ricci.superalgebra import (
    Derivation,
    GradedElement,
    apply_derivation,
    apply_involution,
    left_derivative_odd,
)

log = logging.getLogger(__name__)

PsiArray = tuple[tuple[tuple[Field, ...], ...], ...]


@dataclass(frozen=True, eq=False)
class Connection:
    """ψ[a][b][α]: a, b over the undotted sector, α over all r+s directions."""

    structure: NQStructure
    psi: PsiArray

    def __post_init__(self):
        chart = self.structure.chart
        psi = tuple(tuple(tuple(row) for row in block) for block in self.psi)
        if len(psi) != chart.r or any(len(block) != chart.r for block in psi) or any(
            len(row) != chart.rank for block in psi for row in block
        ):
            raise SchemaError(f"psi must be {chart.r} x {chart.r} x {chart.rank}")
        object.__setattr__(self, "psi", psi)

    @property
    def chart(self):
        return self.structure.chart

    @cached_property
    def _psi_jets(self) -> list[list[list[Jet]]]:
        x0, k = self.chart.base_point, self.chart.jet_order
        return [[[field_jet(f, x0, k) for f in row] for row in block] for block in self.psi]

    def psi_jet(self, a: int, b: int, alpha: int) -> Jet:
        return self._psi_jets[a][b][alpha]

    def lambda_fields(self) -> list[Field]:
        """λ_b = ψ^a_{ba}."""
        r = self.chart.r
        return [field_sum([self.psi[a][b][a] for a in range(r)]) for b in range(r)]

    def lambda_jets(self) -> list[Jet]:
        r = self.chart.r
        out = []
        for b in range(r):
            total = self.chart.jet(0.0)
            for a in range(r):
                total = total + self.psi_jet(a, b, a)
            out.append(total)
        return out

    @classmethod
    def from_lambda(cls, S: NQStructure, lam: Sequence[Field]) -> "Connection":
        """Invariant-torsion connection with the pure-trace block ψ^a_{bc} = δ^a_c λ_b / r."""
        r = S.chart.r
        if len(lam) != r:
            raise SchemaError(f"lambda needs {r} entries, got {len(lam)}")
        psi_plus = [[[field_scale(lam[b], 1.0 / r) if a == c else ZERO for c in range(r)]
                     for b in range(r)] for a in range(r)]
        return make_invariant_torsion(S, psi_plus)


def raised_c_field(S: NQStructure, a: int, b: int, alpha: int) -> Field:
    """c^a_{bα} = g^{aa} c_{abα}."""
    sign, f = S.c_field(a, b, alpha)
    return field_scale(f, sign * S.metric.sign(a)) if sign else ZERO


def make_invariant_torsion(S: NQStructure, psi_plus: Sequence[Sequence[Sequence[Field]]]
                           ) -> Connection:
    """Fill the dotted block from ψ^a_{bȧ} = c^a_{bȧ}."""
    chart = S.chart
    r, s = chart.r, chart.s
    psi = []
    for a in range(r):
        block = []
        for b in range(r):
            undotted = [psi_plus[a][b][c] for c in range(r)]
            dotted = [raised_c_field(S, a, b, r + d) for d in range(s)]
            block.append(tuple(undotted + dotted))
        psi.append(tuple(block))
    return Connection(S, tuple(psi))


def lambda_values(Q: Connection) -> list[float]:
    return [j.value for j in Q.lambda_jets()]


def divergence(Q: Connection) -> list[Field]:
    """div(e_b) = -λ_b."""
    return [field_scale(f, -1) for f in Q.lambda_fields()]


# --- derivations ---

def xi_action(Q: Connection, a: int) -> GradedElement:
    """ψ^a_{bα} e^α ξ^b."""
    chart = Q.chart
    terms = [((), (chart.e_index(alpha), chart.xi_index(b)), Q.psi_jet(a, b, alpha))
             for b in range(chart.r) for alpha in range(chart.rank)]
    return GradedElement.from_terms(chart, terms)


def connection_derivation(Q: Connection) -> Derivation:
    qe = q_e_derivation(Q.structure)
    table = dict(qe.table)
    for a in range(Q.chart.r):
        table[("odd", Q.chart.xi_index(a))] = xi_action(Q, a)
    return Derivation(Q.chart, parity=1, degree=1, table=table)


# --- torsion ---

def torsion(Q: Connection) -> GradedElement:
    return apply_derivation(connection_derivation(Q), tautological_section(Q.chart, Q.structure.metric))


def torsion_closed_form(Q: Connection) -> GradedElement:
    """ρ^i_a p_i ξ^a − ½ c_{aβγ} e^β e^γ ξ^a − ψ^a_{bα} e^α ξ^b e_a, built directly."""
    S, chart = Q.structure, Q.chart
    terms = []
    for a in range(chart.r):
        xa = chart.xi_index(a)
        for i in range(chart.n):
            terms.append(((i,), (xa,), S.rho_jet(i, a)))
        for beta in range(chart.rank):
            for gamma in range(chart.rank):
                if beta != gamma:
                    terms.append(((), (beta, gamma, xa), S.c_jet(a, beta, gamma) * -0.5))
        for b in range(chart.r):
            for alpha in range(chart.rank):
                coeff = Q.psi_jet(a, b, alpha) * float(-S.metric.sign(a))
                terms.append(((), (chart.e_index(alpha), chart.xi_index(b), chart.e_index(a)), coeff))
    return GradedElement.from_terms(chart, terms)


@dataclass
class TorsionInvariance:
    invariant: bool
    residual: GradedElement  # ½(Qτ − ι Qτ)
    component_residual: np.ndarray  # ψ^a_{bȧ} − c^a_{bȧ}, shape r × r × s
    tol: float

    @property
    def max_abs(self) -> float:
        return self.residual.max_abs_value()

    @property
    def components_agree(self) -> bool:
        by_components = bool(np.all(np.abs(self.component_residual) <= self.tol))
        return by_components == self.invariant

    def as_dict(self) -> dict[str, Any]:
        return {
            "invariant": self.invariant,
            "max_abs": self.max_abs,
            "tol": self.tol,
            "component_residual": self.component_residual.tolist(),
        }


def check_torsion_invariance(Q: Connection, tol: float | None = None) -> TorsionInvariance:
    if tol is None:
        tol = load_settings().torsion_invariance
    S, chart = Q.structure, Q.chart
    t = torsion(Q)
    residual = (t - apply_involution(t)).scale(0.5)
    diff = np.zeros((chart.r, chart.r, chart.s))
    for a in range(chart.r):
        for b in range(chart.r):
            for d in range(chart.s):
                alpha = chart.r + d
                sign, _ = S.c_field(a, b, alpha)
                expected = S.c_jet(a, b, alpha).value * S.metric.sign(a) if sign else 0.0
                diff[a, b, d] = Q.psi_jet(a, b, alpha).value - expected
    invariant = residual.max_abs_value() <= tol
    result = TorsionInvariance(invariant, residual, diff, tol)
    if not result.components_agree:
        log.warning("torsion invariance: element and component checks disagree")
    return result


# --- curvature ---

@dataclass
class End2Element:
    """Components D(ξ^a), each ξ-linear of degree 3."""

    components: tuple[GradedElement, ...]
    sector_residuals: dict[str, float] = field(default_factory=dict)

    @property
    def chart(self):
        return self.components[0].chart

    def is_xi_linear(self) -> bool:
        for comp in self.components:
            for (p, o), _ in comp:
                if sum(1 for k in o if comp.chart.is_xi(k)) != 1:
                    return False
        return True

    def map(self, fn) -> "End2Element":
        return End2Element(tuple(fn(c) for c in self.components), dict(self.sector_residuals))


def curvature(Q: Connection, tol: float | None = None) -> End2Element:
    """Q² on ξ^a, after checking that Q² vanishes on x, e and p."""
    if tol is None:
        tol = load_settings().end2
    if Q.chart.r == 0:
        raise SchemaError("curvature needs a non-empty undotted sector")
    D = connection_derivation(Q)
    chart = Q.chart
    sectors = {
        "x": [("x", i) for i in range(chart.n)],
        "e": [("odd", chart.e_index(alpha)) for alpha in range(chart.rank)],
        "p": [("p", i) for i in range(chart.n)],
    }
    residuals: dict[str, float] = {}
    for name, gens in sectors.items():
        if not gens:
            continue
        worst = float(np.max([apply_derivation(D, D.action(g)).max_abs_value() for g in gens]))
        residuals[name] = worst
        if not worst <= tol:
            raise End2ViolationError(
                f"Q^2 has a {name}-direction component of size {worst:.3g}; "
                "the structure does not satisfy the master equation"
            )
    components = tuple(apply_derivation(D, D.action(("odd", chart.xi_index(a))))
                       for a in range(chart.r))
    result = End2Element(components, residuals)
    if not result.is_xi_linear():
        raise End2ViolationError("Q^2(ξ) is not ξ-linear")
    return result


def project_antiselfdual(D: End2Element) -> End2Element:
    """πD = ½(D − ι∘D∘ι); on components this is ½(D(ξ^a) − ι D(ξ^a))."""
    return D.map(lambda c: (c - apply_involution(c)).scale(0.5))


def project_antiselfdual_filter(D: End2Element) -> End2Element:
    """Keep exactly the e^c e^ḋ ξ^b terms."""
    def keep(comp: GradedElement) -> GradedElement:
        chart = comp.chart
        kept = {}
        for (p, o), c in comp:
            es = [k for k in o if chart.is_e(k)]
            if not p and len(es) == 2 and sum(1 for k in es if chart.is_dotted(k)) == 1:
                kept[(p, o)] = c
        return GradedElement(chart, kept)

    return D.map(keep)


def contract(D: End2Element) -> np.ndarray:
    """C(D) = Σ_a ∂⃗/∂e^a (πD)(ξ^a) as R_{bȧ} against ξ^b e^ȧ."""
    pi = project_antiselfdual(D)
    chart = D.chart
    total = chart.zero()
    for a, comp in enumerate(pi.components):
        total = total + left_derivative_odd(comp, chart.e_index(a))
    out = np.zeros((chart.r, chart.s))
    for (p, o), c in total:
        # o = (e^ȧ, ξ^b); flip to ξ^b e^ȧ
        dotted, xi = o
        out[xi - chart.rank, dotted - chart.r] = -c.value
    return out


@dataclass
class RicciTensor:
    matrix: np.ndarray
    base_point: tuple[float, ...]
    lambda_values: tuple[float, ...]
    path: str

    def as_dict(self) -> dict[str, Any]:
        return {
            "ric": self.matrix.tolist(),
            "lambda": list(self.lambda_values),
            "path": self.path,
            "base_point": list(self.base_point),
        }


def ricci_engine(Q: Connection) -> RicciTensor:
    R = contract(curvature(Q))
    return RicciTensor(R, Q.chart.base_point, tuple(lambda_values(Q)), "engine")


def ricci_closed_form(S: NQStructure, lam: Sequence[Field]) -> RicciTensor:
    """
    R_{bȧ} = c^c_{bȧ} λ_c − ρ^i_a c^a_{bȧ,i} + ρ^i_ȧ λ_{b,i} + c_{ċaȧ} c^{aċ}_b,
    with c^{aċ}_b = g^{aa} g^{ċċ} c_{abċ}.
    """
    chart, g = S.chart, S.metric
    r, s, n = chart.r, chart.s, chart.n
    x0, k = chart.base_point, chart.jet_order
    lam_jets = [field_jet(f, x0, k) for f in lam]
    if len(lam_jets) != r:
        raise SchemaError(f"lambda needs {r} entries, got {len(lam_jets)}")
    R = np.zeros((r, s))
    for b in range(r):
        for d in range(s):
            ad = r + d
            total = 0.0
            for c in range(r):
                total += g.sign(c) * S.c_jet(c, b, ad).value * lam_jets[c].value
            for i in range(n):
                for a in range(r):
                    rho = S.rho_jet(i, a).value
                    if rho:
                        total -= rho * g.sign(a) * S.c_jet(a, b, ad).partial_derivative(i).value
                rho_d = S.rho_jet(i, ad).value
                if rho_d:
                    total += rho_d * lam_jets[b].partial_derivative(i).value
            for e in range(s):
                ce = r + e
                for a in range(r):
                    total += (S.c_jet(ce, a, ad).value * g.sign(a) * g.sign(ce)
                              * S.c_jet(a, b, ce).value)
            R[b, d] = total
    return RicciTensor(R, chart.base_point, tuple(j.value for j in lam_jets), "closed_form")


def general_contraction(Q: Connection) -> RicciTensor:
    """
    CQ² for a general ψ, assembled directly from jets:
    −(ρ^i_a ψ^a_{bȧ,i} − ρ^i_ȧ λ_{b,i} + ψ^c_{ba} ψ^a_{cȧ} − ψ^c_{bȧ} λ_c − c_{αaȧ} ψ^{aα}_b)
    against ξ^b e^ȧ.
    """
    S, chart, g = Q.structure, Q.chart, Q.structure.metric
    r, s, n = chart.r, chart.s, chart.n
    lam = Q.lambda_jets()
    R = np.zeros((r, s))
    for b in range(r):
        for d in range(s):
            ad = r + d
            x = 0.0
            for i in range(n):
                for a in range(r):
                    rho = S.rho_jet(i, a).value
                    if rho:
                        x += rho * Q.psi_jet(a, b, ad).partial_derivative(i).value
                rho_d = S.rho_jet(i, ad).value
                if rho_d:
                    x -= rho_d * lam[b].partial_derivative(i).value
            for c in range(r):
                x -= Q.psi_jet(c, b, ad).value * lam[c].value
                for a in range(r):
                    x += Q.psi_jet(c, b, a).value * Q.psi_jet(a, c, ad).value
            for alpha in range(chart.rank):
                for a in range(r):
                    x -= S.c_jet(alpha, a, ad).value * g.sign(alpha) * Q.psi_jet(a, b, alpha).value
            R[b, d] = -x
    return RicciTensor(R, chart.base_point, tuple(j.value for j in lam), "general")


def export_generalized_connection(Q: Connection, tol: float | None = None) -> dict[str, Any]:
    """Γ^c_{αb} := ψ^c_{bα}; ∇(f u) = f ∇u + (Q_E f) ⊗ u."""
    chart = Q.chart
    r = chart.r
    gamma = [[[Q.psi_jet(c, b, alpha).value for b in range(r)] for alpha in range(chart.rank)]
             for c in range(r)]
    invariant = chart.s == 0 or check_torsion_invariance(Q, tol).invariant
    out: dict[str, Any] = {
        "gamma": gamma,
        "index_order": "gamma[c][alpha][b] = psi^c_{b alpha}",
        "leibniz": "nabla(f u) = f nabla(u) + (Q_E f) (x) u",
        "invariant_torsion": invariant,
    }
    if invariant:
        out["restricted"] = [[[gamma[c][a][b] for b in range(r)] for a in range(r)] for c in range(r)]
    return out


# --- model files ---

def connection_from_model(S: NQStructure, data: Mapping[str, Any]) -> Connection | None:
    """The connection block of a model dict, if any."""
    n, chart = S.chart.n, S.chart
    if "psi" in data:
        psi = data["psi"]
        if len(psi) != chart.r or any(len(block) != chart.r for block in psi) or any(
            len(row) != chart.rank for block in psi for row in block
        ):
            raise SchemaError(f"psi must be {chart.r} x {chart.r} x {chart.rank}")
        return Connection(S, tuple(tuple(tuple(parse_expression(src, n) for src in row)
                                         for row in block) for block in psi))
    block = data.get("invariant_torsion")
    if block is None:
        return None
    if "psi_plus" in block:
        pp = block["psi_plus"]
        if len(pp) != chart.r or any(len(b) != chart.r or any(len(row) != chart.r for row in b)
                                     for b in pp):
            raise SchemaError(f"psi_plus must be {chart.r} x {chart.r} x {chart.r}")
        return make_invariant_torsion(
            S, [[[parse_expression(src, n) for src in row] for row in b] for b in pp]
        )
    return Connection.from_lambda(S, [parse_expression(src, n) for src in block["lambda"]])
