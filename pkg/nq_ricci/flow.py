"""
Explicit-Euler generalized Ricci flow for point-base models.

The ambient quadratic Lie algebra (pairing G, structure tensor c0) is fixed;
only the adapted frame F moves. Its first r columns span V₊. Ric in the
current frame is turned into A ∈ Hom(V₊, V₋) and V₊ is rotated by dt·A
into V₋ (V₋ compensating), followed by Gram–Schmidt against G.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from nq_ricci.connection import RicciTensor, ricci_closed_form
from nq_ricci.errors import FrameDegenerate, MasterEquationFailure, SchemaError, StepRejected
from nq_ricci.nq import NQStructure, check_master_equation, structure_from_model
from nq_ricci.scalar import const
from nq_ricci.settings import load_settings
from nq_ricci.superalgebra import GradedChart, MetricSplit

log = logging.getLogger(__name__)

DIRECTIONS = ("forward", "backward")


@dataclass(frozen=True, eq=False)
class FlowState:
    metric: MetricSplit
    c0: np.ndarray  # d × d × d, ambient basis
    frame: np.ndarray  # d × d, columns are the adapted basis
    lam: tuple[float, ...]
    time: float = 0.0
    step_log: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        c0 = np.array(self.c0, dtype=float)
        c0.flags.writeable = False
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "frame", np.array(self.frame, dtype=float))

    @property
    def r(self) -> int:
        return len(self.metric.g_plus)

    @property
    def d(self) -> int:
        return len(self.metric.signs)

    @property
    def pairing(self) -> np.ndarray:
        return np.diag(np.array(self.metric.signs, dtype=float))

    def structure_constants(self) -> np.ndarray:
        """c(F·, F·, F·)."""
        F = self.frame
        return np.einsum("ijk,ia,jb,kc->abc", self.c0, F, F, F)

    def structure(self) -> NQStructure:
        c = self.structure_constants()
        chart = GradedChart(0, self.r, self.d - self.r, (), 1)
        comps = {}
        for a in range(self.d):
            for b in range(a + 1, self.d):
                for g in range(b + 1, self.d):
                    if c[a, b, g] != 0.0:
                        comps[(a, b, g)] = const(float(c[a, b, g]))
        return NQStructure(chart, self.metric, (), comps)

    def ricci(self) -> RicciTensor:
        return ricci_closed_form(self.structure(), [const(v) for v in self.lam])

    def ric_norm(self) -> float:
        return float(np.linalg.norm(self.ricci().matrix))

    def mixing(self) -> np.ndarray:
        """Components of the V₊ columns along the ambient minus directions."""
        return self.frame[self.r:, :self.r]

    def record(self) -> dict[str, Any]:
        return {
            "t": self.time,
            "ric_norm": self.ric_norm(),
            "mixing": self.mixing().tolist(),
            "frame": self.frame.tolist(),
        }


def deformation_from_ric(R: RicciTensor, metric: MetricSplit, direction: str = "forward"
                         ) -> np.ndarray:
    """A_{aȧ} = −g^{ȧȧ} R_{aȧ}; "backward" negates it."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    minus = np.array(metric.g_minus, dtype=float)
    A = -R.matrix * minus[np.newaxis, :]
    return A if direction == "forward" else -A


def reorthonormalize(F: np.ndarray, G: np.ndarray, signature: Sequence[int],
                     floor: float | None = None) -> np.ndarray:
    """Gram–Schmidt of the columns of F against G, with ⟨f_k, f_k⟩ = signature[k]."""
    if floor is None:
        floor = load_settings().pivot_floor
    out = np.zeros_like(F, dtype=float)
    for k in range(F.shape[1]):
        v = F[:, k].astype(float).copy()
        for j in range(k):
            v -= signature[j] * (out[:, j] @ G @ v) * out[:, j]
        norm2 = float(v @ G @ v)
        if abs(norm2) <= floor or (1 if norm2 > 0 else -1) != signature[k]:
            raise FrameDegenerate(f"column {k + 1} lost its signature during re-orthonormalization")
        out[:, k] = v / math.sqrt(abs(norm2))
    return out


def frame_velocity(st: FlowState, direction: str) -> np.ndarray:
    """dF/dt: δf_a = Σ_ȧ g^{ȧȧ} A_{aȧ} f_ȧ and δf_ȧ = −Σ_a g_a A_{aȧ} f_a."""
    r = st.r
    A = deformation_from_ric(st.ricci(), st.metric, direction)
    g_plus = np.array(st.metric.g_plus, dtype=float)
    g_minus = np.array(st.metric.g_minus, dtype=float)
    plus, minus = st.frame[:, :r], st.frame[:, r:]
    v_plus = minus @ (A * g_minus[np.newaxis, :]).T
    v_minus = -plus @ (A * g_plus[:, np.newaxis])
    return np.hstack([v_plus, v_minus])


def euler_step(st: FlowState, dt: float, direction: str | None = None,
               tol: float | None = None) -> FlowState:
    """One explicit Euler step; `tol` overrides the master-equation tolerance."""
    if direction is None:
        direction = load_settings().flow_direction
    master = check_master_equation(st.structure(), tol)
    if not master.valid:
        raise MasterEquationFailure("flow state violates the master equation")
    velocity = frame_velocity(st, direction)
    try:
        F = reorthonormalize(st.frame + dt * velocity, st.pairing, st.metric.signs)
    except FrameDegenerate as exc:
        raise StepRejected(f"step dt={dt} rejected: {exc}") from exc
    moved = replace(st, frame=F, time=st.time + dt)
    return replace(moved, step_log=st.step_log + ((moved.time, moved.ric_norm()),))


def run_flow(st: FlowState, steps: int, dt: float, direction: str | None = None,
             tol: float | None = None) -> list[dict[str, Any]]:
    """Records for the initial state and after every step."""
    trajectory = [st.record()]
    for k in range(steps):
        try:
            st = euler_step(st, dt, direction, tol)
        except StepRejected as exc:
            raise StepRejected(str(exc), trajectory) from exc
        trajectory.append(st.record())
        log.debug("step %d: t=%g |Ric|=%.6g", k + 1, st.time, trajectory[-1]["ric_norm"])
    return trajectory


def step_halving_order(st: FlowState, dt: float, direction: str | None = None) -> float:
    """log2 of the ratio of departures from the linear prediction at dt and dt/2."""
    if direction is None:
        direction = load_settings().flow_direction
    velocity = frame_velocity(st, direction)

    def departure(h: float) -> float:
        stepped = euler_step(st, h, direction).frame
        return float(np.linalg.norm(stepped - st.frame - h * velocity))

    full, half = departure(dt), departure(dt / 2)
    if half == 0.0:
        return math.inf
    return math.log2(full / half)


# --- scenarios ---

def so3_tensor(scale: float) -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for (i, j, k), sign in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
                            (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}.items():
        eps[i, j, k] = sign * scale
    return eps


def tilted_double(t: float, k1: float = 1.0, k2: float = 1.0,
                  lam: Sequence[float] = (0.0, 0.0, 0.0)) -> FlowState:
    """
    so(3) ⊕ so(3) with pairing diag(+,+,+,−,−,−); V₊ spanned by
    cosh(t) f_a + sinh(t) f_ȧ. t = 0 is the direct-sum double.
    """
    c0 = np.zeros((6, 6, 6))
    c0[:3, :3, :3] = so3_tensor(k1)
    c0[3:, 3:, 3:] = so3_tensor(-k2)
    ch, sh = math.cosh(t), math.sinh(t)
    eye = np.eye(3)
    F = np.block([[ch * eye, sh * eye], [sh * eye, ch * eye]])
    return FlowState(MetricSplit((1, 1, 1), (-1, -1, -1)), c0, F, tuple(float(v) for v in lam))


def flow_state_from_scenario(data: Mapping[str, Any]) -> FlowState:
    S = structure_from_model(data["model"])
    if S.chart.n != 0:
        raise SchemaError("flow scenarios need a point-base model (base_dim 0)")
    d, r = S.chart.rank, S.chart.r
    c0 = np.zeros((d, d, d))
    for a in range(d):
        for b in range(d):
            for g in range(d):
                c0[a, b, g] = S.c_jet(a, b, g).value
    lam = tuple(float(v) for v in data.get("lambda", [0.0] * r))
    if len(lam) != r:
        raise SchemaError(f"lambda needs {r} entries, got {len(lam)}")
    F = np.array(data.get("frame", np.eye(d).tolist()), dtype=float)
    if F.shape != (d, d):
        raise SchemaError(f"frame must be {d} x {d}")
    G = np.diag(np.array(S.metric.signs, dtype=float))
    if np.max(np.abs(F.T @ G @ F - G)) > load_settings().orthonormality:
        raise SchemaError("frame is not orthonormal for the model pairing")
    return FlowState(S.metric, c0, F, lam)


@dataclass
class FlowScenario:
    state: FlowState
    dt: float
    steps: int
    direction: str = field(default="forward")


def scenario_from_data(data: Mapping[str, Any]) -> FlowScenario:
    direction = data.get("direction", load_settings().flow_direction)
    return FlowScenario(flow_state_from_scenario(data), float(data["dt"]), int(data["steps"]),
                        direction)
