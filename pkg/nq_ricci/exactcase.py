"""
The exact Courant algebroid T ⊕ T* twisted by a closed 3-form η.

Conventions frozen here (the master-equation check in `build_nq_from_exact`
and the sphere comparisons pin them):

  pairing     ⟨X+ξ, Y+ζ⟩ = ½(ξ(Y) + ζ(X))
  sections    s_a = E_a + F_a,  s_ȧ = E_a − F_a,  F_a = g(E_a, ·)
  signature   g_ab = ⟨E_a, E_a⟩ δ_ab,  g_ȧḃ = −⟨E_a, E_a⟩ δ_ab
  bracket     [X+ξ, Y+ζ] = [X,Y] + L_X ζ − i_Y dξ + i_X i_Y η
  connection  ψ^a_{bc} = −g^{aa} ⟨∇^LC_{E_c} E_b, E_a⟩, so λ_b = −div E_b
  torsion     T^k_ij = g^{kl} η_lij,  ∇ = ∇^LC + ½ T
  Ricci       R_{bȧ} = Ric_η(E_b, E_a),  Ric(Y, Z) = tr(X ↦ R(X, Y) Z)
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from nq_ricci.connection import Connection, make_invariant_torsion, ricci_closed_form, ricci_engine
from nq_ricci.errors import FrameDegenerate, JetOrderExhausted, MasterEquationFailure, SchemaError
from nq_ricci.nq import NQStructure, check_master_equation, permutation_sign
from nq_ricci.scalar import Field, Jet, field_jet, parse_expression
from nq_ricci.settings import load_settings
from nq_ricci.superalgebra import GradedChart, MetricSplit

log = logging.getLogger(__name__)

JetVector = tuple[Jet, ...]


@dataclass(frozen=True, eq=False)
class ExactModel:
    """Metric g_ij (upper triangle is authoritative) and η_ijk stored for i<j<k."""

    m: int
    metric: tuple[tuple[Field, ...], ...]
    eta: Mapping[tuple[int, int, int], Field]
    base_point: tuple[float, ...]
    jet_order: int

    def __post_init__(self):
        if self.m < 1:
            raise SchemaError("exact model needs dim >= 1")
        metric = tuple(tuple(row) for row in self.metric)
        if len(metric) != self.m or any(len(row) != self.m for row in metric):
            raise SchemaError(f"metric must be {self.m} x {self.m}")
        object.__setattr__(self, "metric", metric)
        object.__setattr__(self, "base_point", tuple(float(v) for v in self.base_point))
        if len(self.base_point) != self.m:
            raise SchemaError(f"base point has {len(self.base_point)} entries, expected {self.m}")
        if self.jet_order < 2:
            raise SchemaError("exact models need jet_order >= 2")
        eta = dict(self.eta)
        for key in eta:
            if not (0 <= key[0] < key[1] < key[2] < self.m):
                raise SchemaError(f"eta component {key} must satisfy 0 <= i < j < k < {self.m}")
        object.__setattr__(self, "eta", eta)

    def _jet(self, f: Field) -> Jet:
        return field_jet(f, self.base_point, self.jet_order)

    @cached_property
    def g(self) -> list[list[Jet]]:
        return [[self._jet(self.metric[min(i, j)][max(i, j)]) for j in range(self.m)]
                for i in range(self.m)]

    @cached_property
    def _eta_jets(self) -> dict[tuple[int, int, int], Jet]:
        return {k: self._jet(f) for k, f in self.eta.items()}

    def eta_jet(self, i: int, j: int, k: int) -> Jet:
        sign, key = permutation_sign((i, j, k))
        jet = self._eta_jets.get(key)  # type: ignore[arg-type]
        if sign == 0 or jet is None:
            return self.zero()
        return jet if sign > 0 else -jet

    def zero(self) -> Jet:
        return Jet.constant(0.0, self.base_point, self.jet_order)

    def pair(self, u: Sequence[Jet], v: Sequence[Jet]) -> Jet:
        """g(u, v) for coordinate component vectors."""
        total = self.zero()
        for i in range(self.m):
            for j in range(self.m):
                total = total + u[i] * self.g[i][j] * v[j]
        return total

    def pair_index(self, i: int, v: Sequence[Jet]) -> Jet:
        """g_ij v^j."""
        total = self.zero()
        for j in range(self.m):
            total = total + self.g[i][j] * v[j]
        return total

    def with_base_point(self, base_point: Sequence[float]) -> "ExactModel":
        return ExactModel(self.m, self.metric, self.eta, tuple(base_point), self.jet_order)


@dataclass(frozen=True)
class AdaptedFrame:
    """frame[a][i] = E_a^i; signs[a] = ⟨E_a, E_a⟩."""

    frame: tuple[JetVector, ...]
    signs: tuple[int, ...]

    def values(self) -> np.ndarray:
        return np.array([[c.value for c in vec] for vec in self.frame])

    def inverse_metric(self) -> list[list[Jet]]:
        """g^{ij} = Σ_a ±E_a^i E_a^j, from Eᵀ g E = diag(signs)."""
        m = len(self.frame)
        out = []
        for i in range(m):
            row = []
            for j in range(m):
                total = self.frame[0][0] * 0.0
                for a in range(m):
                    total = total + self.frame[a][i] * self.frame[a][j] * float(self.signs[a])
                row.append(total)
            out.append(row)
        return out


# --- closedness ---

def exterior_derivative_eta(M: ExactModel) -> dict[tuple[int, int, int, int], float]:
    """(dη)_ijkl at the base point for i<j<k<l."""
    out = {}
    for i, j, k, l in itertools.combinations(range(M.m), 4):
        value = (M.eta_jet(j, k, l).partial_derivative(i) - M.eta_jet(i, k, l).partial_derivative(j)
                 + M.eta_jet(i, j, l).partial_derivative(k) - M.eta_jet(i, j, k).partial_derivative(l))
        out[(i, j, k, l)] = value.value
    return out


@dataclass
class ClosedCheck:
    closed: bool
    residual: dict[tuple[int, int, int, int], float]

    @property
    def max_abs(self) -> float:
        return max((abs(v) for v in self.residual.values()), default=0.0)


def check_closed(M: ExactModel, tol: float = 1e-10) -> ClosedCheck:
    residual = exterior_derivative_eta(M)
    return ClosedCheck(all(abs(v) <= tol for v in residual.values()), residual)


# --- frames ---

def build_frame(M: ExactModel) -> AdaptedFrame:
    """Gram–Schmidt on ∂_1, ..., ∂_m in coordinate order, carried out on jets."""
    floor = load_settings().pivot_floor
    m = M.m
    frame: list[JetVector] = []
    signs: list[int] = []
    for k in range(m):
        v = [M.zero() + (1.0 if i == k else 0.0) for i in range(m)]
        for vec, sign in zip(frame, signs):
            proj = M.pair(v, vec) * float(sign)
            v = [vi - proj * ei for vi, ei in zip(v, vec)]
        norm2 = M.pair(v, v)
        if abs(norm2.value) <= floor:
            raise FrameDegenerate(
                f"Gram–Schmidt pivot {k + 1} vanishes at the base point; reorder coordinates"
            )
        sign = 1 if norm2.value > 0 else -1
        scale = (norm2 * float(sign)).sqrt().reciprocal()
        frame.append(tuple(vi * scale for vi in v))
        signs.append(sign)
    log.debug("adapted frame signs %s", signs)
    return AdaptedFrame(tuple(frame), tuple(signs))


def orthonormality_defect(M: ExactModel, F: AdaptedFrame) -> float:
    """Largest stored jet coefficient of ⟨E_a, E_b⟩ − ±δ_ab."""
    worst = 0.0
    for a in range(M.m):
        for b in range(M.m):
            target = float(F.signs[a]) if a == b else 0.0
            diff = M.pair(F.frame[a], F.frame[b]) - target
            worst = max(worst, float(np.max(np.abs(diff.valid_coeffs()))))
    return worst


# --- the Dorfman bracket on component jets ---

@dataclass(frozen=True)
class GeneralizedVector:
    vector: JetVector
    form: JetVector


def dorfman_bracket(M: ExactModel, u: GeneralizedVector, v: GeneralizedVector) -> GeneralizedVector:
    m = M.m
    X, xi = u.vector, u.form
    Y, zeta = v.vector, v.form
    dX = [[X[k].partial_derivative(i) for k in range(m)] for i in range(m)]  # dX[i][k] = ∂_i X^k
    dY = [[Y[k].partial_derivative(i) for k in range(m)] for i in range(m)]
    dxi = [[xi[k].partial_derivative(i) for k in range(m)] for i in range(m)]
    dzeta = [[zeta[k].partial_derivative(i) for k in range(m)] for i in range(m)]

    vec = []
    form = []
    for k in range(m):
        lie = M.zero()
        for i in range(m):
            lie = lie + X[i] * dY[i][k] - Y[i] * dX[i][k]
        vec.append(lie)

        w = M.zero()
        for i in range(m):
            w = w + X[i] * dzeta[i][k] + zeta[i] * dX[k][i]   # L_X ζ
            w = w - Y[i] * (dxi[i][k] - dxi[k][i])            # i_Y dξ
            for j in range(m):
                w = w + M.eta_jet(i, j, k) * Y[i] * X[j]      # η(Y, X, ∂_k)
        form.append(w)
    return GeneralizedVector(tuple(vec), tuple(form))


def courant_pairing(u: GeneralizedVector, v: GeneralizedVector) -> Jet:
    total = u.form[0] * 0.0
    for i in range(len(u.vector)):
        total = total + u.form[i] * v.vector[i] + v.form[i] * u.vector[i]
    return total * 0.5


def frame_sections(M: ExactModel, F: AdaptedFrame) -> list[GeneralizedVector]:
    """s_1..s_m (undotted) followed by s_1̇..s_ṁ (dotted)."""
    m = M.m
    covectors = []
    for a in range(m):
        covectors.append(tuple(M.pair_index(i, F.frame[a]) for i in range(m)))
    plus = [GeneralizedVector(F.frame[a], covectors[a]) for a in range(m)]
    minus = [GeneralizedVector(F.frame[a], tuple(-c for c in covectors[a])) for a in range(m)]
    return plus + minus


def build_nq_from_exact(M: ExactModel, F: AdaptedFrame | None = None) -> NQStructure:
    """Jet-valued NQ structure (r = s = m) read off the frame sections."""
    if F is None:
        F = build_frame(M)
    m = M.m
    sections = frame_sections(M, F)
    rho = tuple(tuple(sections[alpha].vector[i] for alpha in range(2 * m)) for i in range(m))
    c: dict[tuple[int, int, int], Field] = {}
    for a, b, g in itertools.combinations(range(2 * m), 3):
        value = courant_pairing(dorfman_bracket(M, sections[a], sections[b]), sections[g])
        if not value.is_zero():
            c[(a, b, g)] = value
    chart = GradedChart(m, m, m, M.base_point, M.jet_order)
    metric = MetricSplit(F.signs, tuple(-s for s in F.signs))
    S = NQStructure(chart, metric, rho, c)
    residual = check_master_equation(S)
    if not residual.valid:
        raise MasterEquationFailure(
            f"exact-case structure violates the master equation: {residual.as_dict()['groups']}"
        )
    return S


# --- connections ---

def christoffel_first_kind(M: ExactModel) -> list[list[list[Jet]]]:
    """Γ_lij = ½(∂_i g_lj + ∂_j g_li − ∂_l g_ij)."""
    m = M.m
    dg = [[[M.g[i][j].partial_derivative(k) for j in range(m)] for i in range(m)] for k in range(m)]
    return [[[(dg[i][l][j] + dg[j][l][i] - dg[l][i][j]) * 0.5 for j in range(m)] for i in range(m)]
            for l in range(m)]


def levi_civita_connection(M: ExactModel, N: NQStructure, F: AdaptedFrame | None = None
                           ) -> Connection:
    if F is None:
        F = build_frame(M)
    m = M.m
    gamma = christoffel_first_kind(M)
    E = F.frame
    # ⟨∇_{E_c} E_b, E_a⟩
    psi_plus: list[list[list[Field]]] = [[[M.zero()] * m for _ in range(m)] for _ in range(m)]
    for c in range(m):
        for b in range(m):
            nabla_lower = []  # g_lk (∇_{E_c} E_b)^k + Γ_lij E_c^i E_b^j, indexed by l
            for l in range(m):
                total = M.zero()
                for k in range(m):
                    deriv = M.zero()
                    for i in range(m):
                        deriv = deriv + E[c][i] * E[b][k].partial_derivative(i)
                    total = total + M.g[l][k] * deriv
                for i in range(m):
                    for j in range(m):
                        total = total + gamma[l][i][j] * E[c][i] * E[b][j]
                nabla_lower.append(total)
            for a in range(m):
                inner = M.zero()
                for l in range(m):
                    inner = inner + E[a][l] * nabla_lower[l]
                psi_plus[a][b][c] = inner * float(-N.metric.sign(a))
    return make_invariant_torsion(N, psi_plus)


def _torsionful_christoffel(M: ExactModel, F: AdaptedFrame) -> list[list[list[Jet]]]:
    """Γ'^k_ij with ∇_{∂_i} ∂_j = Γ'^k_ij ∂_k, ∇ = ∇^LC + ½ g^{-1} η."""
    m = M.m
    ginv = F.inverse_metric()
    first = christoffel_first_kind(M)
    out = []
    for k in range(m):
        block = []
        for i in range(m):
            row = []
            for j in range(m):
                total = M.zero()
                for l in range(m):
                    total = total + ginv[k][l] * (first[l][i][j] + M.eta_jet(l, i, j) * 0.5)
                row.append(total)
            block.append(row)
        out.append(block)
    return out


def classical_ricci_with_torsion(M: ExactModel, F: AdaptedFrame) -> np.ndarray:
    """Ric_η(E_a, E_b) from Christoffels, ∂Γ + ΓΓ and a trace."""
    m = M.m
    G = _torsionful_christoffel(M, F)  # G[k][i][j]
    ric = [[M.zero() for _ in range(m)] for _ in range(m)]
    for j in range(m):
        for k in range(m):
            total = M.zero()
            for i in range(m):
                total = total + G[i][j][k].partial_derivative(i) - G[i][i][k].partial_derivative(j)
                for l in range(m):
                    total = total + G[l][j][k] * G[i][i][l] - G[l][i][k] * G[i][j][l]
            ric[j][k] = total
    E = F.values()
    coords = np.array([[ric[j][k].value for k in range(m)] for j in range(m)])
    return E @ coords @ E.T


def frame_divergence(M: ExactModel, F: AdaptedFrame) -> list[float]:
    """div E_b = ∂_i E_b^i + Γ^i_ij E_b^j, with Γ^i_ij = ½ g^{il} ∂_j g_il."""
    m = M.m
    ginv = F.inverse_metric()
    out = []
    for b in range(m):
        total = M.zero()
        for i in range(m):
            total = total + F.frame[b][i].partial_derivative(i)
            for j in range(m):
                for l in range(m):
                    total = total + ginv[i][l] * M.g[i][l].partial_derivative(j) * F.frame[b][j] * 0.5
        out.append(total.value)
    return out


def scan_torsion_scale(builder: Callable[[float], ExactModel], lo: float, hi: float,
                       tol: float = 1e-12, max_iter: int = 200) -> float:
    """Bisect for the η scale at which the trace of Ric_η vanishes."""
    def trace(h: float) -> float:
        M = builder(h)
        return float(np.trace(classical_ricci_with_torsion(M, build_frame(M))))

    f_lo, f_hi = trace(lo), trace(hi)
    if f_lo == 0.0:
        return lo
    if f_lo * f_hi > 0:
        raise ValueError(f"no sign change of tr Ric_η on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = trace(mid)
        if f_mid == 0.0 or hi - lo < tol:
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


@dataclass
class ExactComparison:
    graded_engine: np.ndarray
    graded_closed_form: np.ndarray
    classical: np.ndarray
    lambda_values: list[float] = field(default_factory=list)

    @property
    def max_deviation(self) -> float:
        mats = (self.graded_engine, self.graded_closed_form, self.classical)
        return max(float(np.max(np.abs(a - b), initial=0.0)) for a, b in itertools.combinations(mats, 2))

    def as_dict(self) -> dict[str, Any]:
        return {
            "graded_engine": self.graded_engine.tolist(),
            "graded_closed_form": self.graded_closed_form.tolist(),
            "classical": self.classical.tolist(),
            "max_deviation": self.max_deviation,
        }


def compare_exact(M: ExactModel) -> ExactComparison:
    if M.jet_order < 3:
        raise JetOrderExhausted(
            f"comparing through the curvature needs jet_order >= 3, got {M.jet_order}"
        )
    F = build_frame(M)
    N = build_nq_from_exact(M, F)
    Q = levi_civita_connection(M, N, F)
    engine = ricci_engine(Q)
    closed = ricci_closed_form(N, Q.lambda_fields())
    classical = classical_ricci_with_torsion(M, F)
    result = ExactComparison(engine.matrix, closed.matrix, classical, list(engine.lambda_values))
    log.debug("exact comparison max deviation %.3g", result.max_deviation)
    return result


# --- model files ---

def exact_model_from_data(data: Mapping[str, Any], base_point: Sequence[float] | None = None
                          ) -> ExactModel:
    m = data["dim"]
    rows = data["metric"]
    if len(rows) != m or any(len(row) != m for row in rows):
        raise SchemaError(f"metric must be {m} x {m}")
    metric = [[parse_expression(src, m) for src in row] for row in rows]
    point = tuple(base_point) if base_point is not None else tuple(data["base_point"])
    if len(point) != m:
        raise SchemaError(f"base point has {len(point)} entries, expected {m}")
    order = data["jet_order"]
    for i, j in itertools.combinations(range(m), 2):
        upper = field_jet(metric[i][j], point, order)
        lower = field_jet(metric[j][i], point, order)
        scale = max(1.0, float(np.max(np.abs(upper.coeffs))))
        if not upper.almost_equal(lower, 1e-12 * scale):
            raise SchemaError(f"metric is not symmetric in entries ({i + 1},{j + 1})")
    eta: dict[tuple[int, int, int], Field] = {}
    for entry in data.get("eta", []):
        i, j, k = (v - 1 for v in entry["indices"])
        if not (0 <= i < j < k < m):
            raise SchemaError(f"eta indices {entry['indices']} must be 1-based and increasing")
        if (i, j, k) in eta:
            raise SchemaError(f"duplicate eta component {entry['indices']}")
        eta[(i, j, k)] = parse_expression(entry["expr"], m)
    return ExactModel(m, tuple(tuple(row) for row in metric), eta, point, data["jet_order"])
