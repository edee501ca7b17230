"""
Truncated multivariate Taylor expansions ("jets") at a fixed base point.

A jet of order K over n variables stores c_m = ∂^m f(x0) / m! for every
multi-index |m| <= K, so products are truncated polynomial convolutions.
`budget` is the order up to which the stored coefficients are trustworthy;
it drops by one per partial derivative and never grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from nq_ricci.errors import (
    ChartMismatch,
    DivisionByZeroConstantTerm,
    DomainError,
    JetOrderExhausted,
    SqrtOfNonpositive,
)

MultiIndex = tuple[int, ...]


@dataclass(frozen=True)
class _Layout:
    n: int
    order: int
    indices: tuple[MultiIndex, ...]
    position: dict[MultiIndex, int]
    degree: np.ndarray
    factorial: np.ndarray  # m! per coefficient
    mul_left: np.ndarray
    mul_right: np.ndarray
    mul_target: np.ndarray
    # per variable: (target positions, source positions, factors) for ∂_i
    deriv: tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]


def _multi_indices(n: int, order: int) -> list[MultiIndex]:
    out: list[MultiIndex] = []

    def rec(prefix: list[int], remaining: int, slots: int):
        if slots == 0:
            out.append(tuple(prefix))
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, slots - 1)

    rec([], order, n)
    return sorted(out, key=lambda m: (sum(m), tuple(-v for v in m)))


@lru_cache(maxsize=None)
def layout(n: int, order: int) -> _Layout:
    indices = tuple(_multi_indices(n, order))
    position = {m: k for k, m in enumerate(indices)}
    degree = np.array([sum(m) for m in indices], dtype=int)
    factorial = np.array([math.prod(math.factorial(v) for v in m) for m in indices], dtype=float)

    left, right, target = [], [], []
    for i, a in enumerate(indices):
        for j, b in enumerate(indices):
            if degree[i] + degree[j] <= order:
                left.append(i)
                right.append(j)
                target.append(position[tuple(x + y for x, y in zip(a, b))])

    deriv = []
    for var in range(n):
        tgt, src, fac = [], [], []
        for k, m in enumerate(indices):
            if degree[k] < order:
                up = list(m)
                up[var] += 1
                tgt.append(k)
                src.append(position[tuple(up)])
                fac.append(float(up[var]))
        deriv.append((np.array(tgt, dtype=int), np.array(src, dtype=int), np.array(fac)))

    return _Layout(
        n=n,
        order=order,
        indices=indices,
        position=position,
        degree=degree,
        factorial=factorial,
        mul_left=np.array(left, dtype=int),
        mul_right=np.array(right, dtype=int),
        mul_target=np.array(target, dtype=int),
        deriv=tuple(deriv),
    )


def coefficient_count(n: int, order: int) -> int:
    return math.comb(n + order, order)


class Jet:
    __slots__ = ("base_point", "order", "coeffs", "budget")

    def __init__(self, base_point: Sequence[float], order: int, coeffs: Iterable[float],
                 budget: int | None = None):
        if order < 0:
            raise ValueError("jet order must be >= 0")
        self.base_point = tuple(float(v) for v in base_point)
        self.order = int(order)
        arr = np.array(coeffs, dtype=float)
        expected = coefficient_count(len(self.base_point), self.order)
        if arr.shape != (expected,):
            raise ValueError(f"expected {expected} coefficients, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("jet coefficients overflowed to a non-finite value")
        arr.flags.writeable = False
        self.coeffs = arr
        self.budget = self.order if budget is None else int(budget)
        if not 0 <= self.budget <= self.order:
            raise ValueError("budget must lie in [0, order]")

    # --- constructors ---
    @classmethod
    def constant(cls, value: float, base_point: Sequence[float], order: int) -> "Jet":
        c = np.zeros(coefficient_count(len(base_point), order))
        c[0] = value
        return cls(base_point, order, c)

    @classmethod
    def variable(cls, index: int, base_point: Sequence[float], order: int) -> "Jet":
        n = len(base_point)
        c = np.zeros(coefficient_count(n, order))
        c[0] = base_point[index]
        if order >= 1:
            unit = tuple(1 if k == index else 0 for k in range(n))
            c[layout(n, order).position[unit]] = 1.0
        return cls(base_point, order, c)

    # --- views ---
    @property
    def n(self) -> int:
        return len(self.base_point)

    @property
    def layout(self) -> _Layout:
        return layout(self.n, self.order)

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def coefficient(self, m: MultiIndex) -> float:
        self._require_order(sum(m))
        return float(self.coeffs[self.layout.position[tuple(m)]])

    def raw_partial(self, m: MultiIndex) -> float:
        """∂^m f(x0), i.e. the stored coefficient times m!."""
        return self.coefficient(m) * math.prod(math.factorial(v) for v in m)

    def valid_coeffs(self) -> np.ndarray:
        return self.coeffs[self.layout.degree <= self.budget]

    def is_zero(self, tol: float = 0.0) -> bool:
        valid = self.valid_coeffs()
        return bool(np.all(np.abs(valid) <= tol))

    def almost_equal(self, other: "Jet", tol: float) -> bool:
        self._check(other)
        mask = self.layout.degree <= min(self.budget, other.budget)
        return bool(np.all(np.abs(self.coeffs[mask] - other.coeffs[mask]) <= tol))

    def _require_order(self, k: int) -> None:
        if k > self.budget:
            raise JetOrderExhausted(
                f"order {k} requested from a jet with differentiation budget {self.budget}"
            )

    def _check(self, other: "Jet") -> None:
        if other.base_point != self.base_point or other.order != self.order:
            raise ChartMismatch("jets live at different base points or orders")

    def _new(self, coeffs: np.ndarray, budget: int) -> "Jet":
        return Jet(self.base_point, self.order, coeffs, budget)

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            self._check(other)
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet.constant(float(other), self.base_point, self.order)
        return NotImplemented  # type: ignore[return-value]

    # --- ring operations ---
    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return self._new(self.coeffs + o.coeffs, min(self.budget, o.budget))

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.coeffs, self.budget)

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return self._new(self.coeffs - o.coeffs, min(self.budget, o.budget))

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self._new(self.coeffs * float(other), self.budget)
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        lay = self.layout
        weights = self.coeffs[lay.mul_left] * o.coeffs[lay.mul_right]
        out = np.bincount(lay.mul_target, weights=weights, minlength=len(lay.indices))
        return self._new(out, min(self.budget, o.budget))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            if float(other) == 0.0:
                raise DivisionByZeroConstantTerm("division by the constant 0")
            return self._new(self.coeffs / float(other), self.budget)
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.reciprocal()

    def __pow__(self, exponent: int):
        if not isinstance(exponent, (int, np.integer)):
            raise TypeError("jets only support integer powers")
        if exponent < 0:
            return self.reciprocal() ** (-exponent)
        result = Jet.constant(1.0, self.base_point, self.order)
        base = self
        e = int(exponent)
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    # --- calculus ---
    def partial_derivative(self, var: int) -> "Jet":
        if not 0 <= var < self.n:
            raise IndexError(f"variable {var} out of range for a {self.n}-variable jet")
        self._require_order(1)
        tgt, src, fac = self.layout.deriv[var]
        out = np.zeros_like(self.coeffs)
        out[tgt] = self.coeffs[src] * fac
        return self._new(out, self.budget - 1)

    def _compose(self, derivatives: Sequence[float]) -> "Jet":
        """f(self) from the Taylor data d_k = f^(k)(a0)/k! of a univariate f at a0."""
        h = self - self.value
        result = Jet.constant(derivatives[0], self.base_point, self.order)
        power = Jet.constant(1.0, self.base_point, self.order)
        for k in range(1, self.order + 1):
            power = power * h
            result = result + power * derivatives[k]
        return self._new(result.coeffs, self.budget)

    def reciprocal(self) -> "Jet":
        a0 = self.value
        if a0 == 0.0:
            raise DivisionByZeroConstantTerm("division by a jet with zero constant term")
        return self._compose([(-1.0) ** k / a0 ** (k + 1) for k in range(self.order + 1)])

    def sqrt(self) -> "Jet":
        a0 = self.value
        if not a0 > 0.0:
            raise SqrtOfNonpositive(f"sqrt of a jet with constant term {a0!r}")
        root = math.sqrt(a0)
        # binomial series of sqrt(a0) (1 + h/a0)^(1/2)
        coeffs = []
        binom = 1.0
        for k in range(self.order + 1):
            coeffs.append(root * binom / a0 ** k)
            binom *= (0.5 - k) / (k + 1)
        return self._compose(coeffs)

    def exp(self) -> "Jet":
        try:
            e0 = math.exp(self.value)
        except OverflowError as exc:
            raise DomainError(f"exp overflow at {self.value!r}") from exc
        return self._compose([e0 / math.factorial(k) for k in range(self.order + 1)])

    def sin(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        cycle = (s, c, -s, -c)
        return self._compose([cycle[k % 4] / math.factorial(k) for k in range(self.order + 1)])

    def cos(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        cycle = (c, -s, -c, s)
        return self._compose([cycle[k % 4] / math.factorial(k) for k in range(self.order + 1)])

    def __repr__(self) -> str:
        return (f"Jet(base_point={self.base_point}, order={self.order}, "
                f"budget={self.budget}, coeffs={self.coeffs.tolist()})")
