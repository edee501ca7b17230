"""
Graded-commutative functions on the local model of 𝒱.

Generators: x^i (degree 0, carried inside jet coefficients), p_i (degree 2),
and the odd generators in the fixed order

    e^1 < ... < e^r < e^{1̇} < ... < e^{ṡ} < ξ^1 < ... < ξ^r

(odd index k: undotted e for k < r, dotted e for r <= k < r+s, ξ after).
An element is a dict (p_monomial, odd_monomial) -> Jet with sorted p
indices, strictly increasing odd indices, the permutation sign absorbed
into the coefficient, and no zero coefficients.

Bracket convention (pinned so that {H, ·} reproduces the Q_E coordinate
display): {p_i, x^j} = δ_i^j, {x^i, p_j} = -δ^i_j, {e^α, e^β} = g^{αβ};
ξ^a are inert.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from nq_ricci.errors import ChartMismatch
from nq_ricci.scalar import Jet, format_expression, jet_to_expression

log = logging.getLogger(__name__)

PMono = tuple[int, ...]
OddMono = tuple[int, ...]
Key = tuple[PMono, OddMono]


@dataclass(frozen=True)
class MetricSplit:
    """Diagonal constant pairing: g_ab = diag(g_plus), g_ȧḃ = diag(g_minus), g_aḃ = 0."""

    g_plus: tuple[int, ...]
    g_minus: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "g_plus", tuple(int(v) for v in self.g_plus))
        object.__setattr__(self, "g_minus", tuple(int(v) for v in self.g_minus))
        for v in self.g_plus + self.g_minus:
            if v not in (1, -1):
                raise ValueError(f"metric signs must be +1 or -1, got {v}")

    @property
    def signs(self) -> tuple[int, ...]:
        return self.g_plus + self.g_minus

    def sign(self, alpha: int) -> int:
        """g_{αα}; equal to g^{αα} since the diagonal is ±1."""
        return self.signs[alpha]


@dataclass(frozen=True)
class GradedChart:
    n: int
    r: int
    s: int
    base_point: tuple[float, ...]
    jet_order: int

    def __post_init__(self):
        object.__setattr__(self, "base_point", tuple(float(v) for v in self.base_point))
        if self.n < 0 or self.r < 0 or self.s < 0:
            raise ValueError("chart dimensions must be non-negative")
        if self.r + self.s < 1:
            raise ValueError("chart needs r + s >= 1")
        if len(self.base_point) != self.n:
            raise ValueError(f"base point has {len(self.base_point)} entries, expected {self.n}")
        if self.jet_order < 0:
            raise ValueError("jet order must be >= 0")

    # --- odd generator bookkeeping ---
    @property
    def rank(self) -> int:
        return self.r + self.s

    @property
    def odd_count(self) -> int:
        return self.r + self.s + self.r

    def e_index(self, alpha: int) -> int:
        return alpha

    def xi_index(self, a: int) -> int:
        return self.r + self.s + a

    def is_dotted(self, k: int) -> bool:
        return self.r <= k < self.r + self.s

    def is_e(self, k: int) -> bool:
        return k < self.r + self.s

    def is_xi(self, k: int) -> bool:
        return k >= self.r + self.s

    def odd_name(self, k: int) -> str:
        if k < self.r:
            return f"e{k + 1}"
        if k < self.r + self.s:
            return f"ed{k - self.r + 1}"
        return f"xi{k - self.r - self.s + 1}"

    def with_base_point(self, base_point: Sequence[float]) -> "GradedChart":
        return GradedChart(self.n, self.r, self.s, tuple(base_point), self.jet_order)

    # --- jets and generators ---
    def jet(self, value: float) -> Jet:
        return Jet.constant(value, self.base_point, self.jet_order)

    def zero(self) -> "GradedElement":
        return GradedElement(self, {})

    def constant(self, value: float | Jet) -> "GradedElement":
        c = value if isinstance(value, Jet) else self.jet(float(value))
        return GradedElement.from_terms(self, [((), (), c)])

    def x(self, i: int) -> "GradedElement":
        return GradedElement.from_terms(
            self, [((), (), Jet.variable(i, self.base_point, self.jet_order))]
        )

    def p(self, i: int) -> "GradedElement":
        return GradedElement.from_terms(self, [((i,), (), self.jet(1.0))])

    def odd(self, k: int) -> "GradedElement":
        return GradedElement.from_terms(self, [((), (k,), self.jet(1.0))])

    def e(self, alpha: int) -> "GradedElement":
        return self.odd(self.e_index(alpha))

    def xi(self, a: int) -> "GradedElement":
        return self.odd(self.xi_index(a))


def _sort_odd(odd: Iterable[int]) -> tuple[int, OddMono] | None:
    """(sign, sorted) for an odd word, or None if a generator repeats."""
    word = list(odd)
    if len(set(word)) != len(word):
        return None
    inversions = sum(1 for i in range(len(word)) for j in range(i + 1, len(word)) if word[i] > word[j])
    return (-1 if inversions % 2 else 1), tuple(sorted(word))


def term_degree(key: Key) -> int:
    p, odd = key
    return 2 * len(p) + len(odd)


class GradedElement:
    __slots__ = ("chart", "terms")

    def __init__(self, chart: GradedChart, terms: Mapping[Key, Jet]):
        self.chart = chart
        self.terms: dict[Key, Jet] = {k: c for k, c in terms.items() if not c.is_zero()}

    @classmethod
    def from_terms(cls, chart: GradedChart, terms: Iterable[tuple[Sequence[int], Sequence[int], Jet]]
                   ) -> "GradedElement":
        """Build from unsorted (p word, odd word, coefficient) triples."""
        acc: dict[Key, Jet] = {}
        for p, odd, c in terms:
            sorted_odd = _sort_odd(odd)
            if sorted_odd is None:
                continue
            sign, o = sorted_odd
            _accumulate(acc, (tuple(sorted(p)), o), c if sign > 0 else -c)
        return cls(chart, acc)

    # --- inspection ---
    def __iter__(self) -> Iterator[tuple[Key, Jet]]:
        return iter(sorted(self.terms.items(), key=lambda kv: kv[0]))

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(c.is_zero(tol) for c in self.terms.values())

    def degrees(self) -> set[int]:
        return {term_degree(k) for k in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def degree(self) -> int | None:
        """The common degree, or None for the zero element."""
        degs = self.degrees()
        if not self.is_homogeneous():
            raise ValueError(f"element is not homogeneous (degrees {sorted(degs)})")
        return next(iter(degs)) if degs else None

    def coefficient(self, p: Sequence[int], odd: Sequence[int]) -> Jet:
        key = (tuple(sorted(p)), tuple(odd))
        return self.terms.get(key, self.chart.jet(0.0))

    def value_terms(self) -> dict[Key, float]:
        return {k: c.value for k, c in self}

    def max_abs_value(self) -> float:
        values = np.array([c.value for c in self.terms.values()], dtype=float)
        return float(np.max(np.abs(values), initial=0.0))

    def almost_equal(self, other: "GradedElement", tol: float) -> bool:
        _same_chart(self, other)
        zero = self.chart.jet(0.0)
        for key in set(self.terms) | set(other.terms):
            if not self.terms.get(key, zero).almost_equal(other.terms.get(key, zero), tol):
                return False
        return True

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GradedElement):
            return NotImplemented
        return self.chart == other.chart and self.almost_equal(other, 0.0)

    __hash__ = None  # type: ignore[assignment]

    # --- linear structure ---
    def __add__(self, other: "GradedElement") -> "GradedElement":
        _same_chart(self, other)
        acc = dict(self.terms)
        for k, c in other.terms.items():
            _accumulate(acc, k, c)
        return GradedElement(self.chart, acc)

    def __neg__(self) -> "GradedElement":
        return GradedElement(self.chart, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "GradedElement") -> "GradedElement":
        return self + (-other)

    def scale(self, factor: float | Jet) -> "GradedElement":
        """Multiply every coefficient by an even degree-0 scalar."""
        return GradedElement(self.chart, {k: c * factor for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, GradedElement):
            return multiply(self, other)
        if isinstance(other, (int, float, Jet)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, Jet)):
            return self.scale(other)
        return NotImplemented

    def __repr__(self) -> str:
        return f"GradedElement({render_element(self, values_only=True)})"


def _accumulate(acc: dict[Key, Jet], key: Key, c: Jet) -> None:
    if key in acc:
        acc[key] = acc[key] + c
    else:
        acc[key] = c


def _same_chart(u: GradedElement, v: GradedElement) -> None:
    if u.chart != v.chart:
        raise ChartMismatch("graded elements belong to different charts or base points")


def multiply(u: GradedElement, v: GradedElement) -> GradedElement:
    """Graded-commutative product with Koszul signs from sorting odd generators."""
    _same_chart(u, v)
    acc: dict[Key, Jet] = {}
    for (p1, o1), c1 in u.terms.items():
        s1 = set(o1)
        for (p2, o2), c2 in v.terms.items():
            if s1.intersection(o2):
                continue
            inversions = sum(1 for a in o1 for b in o2 if a > b)
            c = c1 * c2
            _accumulate(acc, (tuple(sorted(p1 + p2)), tuple(sorted(o1 + o2))),
                        -c if inversions % 2 else c)
    return GradedElement(u.chart, acc)


# --- partial derivatives ---

def derivative_p(u: GradedElement, i: int) -> GradedElement:
    acc: dict[Key, Jet] = {}
    for (p, o), c in u.terms.items():
        count = p.count(i)
        if count:
            rest = list(p)
            rest.remove(i)
            _accumulate(acc, (tuple(rest), o), c * float(count))
    return GradedElement(u.chart, acc)


def derivative_x(u: GradedElement, i: int) -> GradedElement:
    return GradedElement(u.chart, {k: c.partial_derivative(i) for k, c in u.terms.items()})


def left_derivative_odd(u: GradedElement, k: int) -> GradedElement:
    """∂/∂θ_k acting from the left."""
    acc: dict[Key, Jet] = {}
    for (p, o), c in u.terms.items():
        if k in o:
            j = o.index(k)
            _accumulate(acc, (p, o[:j] + o[j + 1:]), -c if j % 2 else c)
    return GradedElement(u.chart, acc)


def right_derivative_odd(u: GradedElement, k: int) -> GradedElement:
    """∂/∂θ_k acting from the right."""
    acc: dict[Key, Jet] = {}
    for (p, o), c in u.terms.items():
        if k in o:
            j = o.index(k)
            _accumulate(acc, (p, o[:j] + o[j + 1:]), -c if (len(o) - 1 - j) % 2 else c)
    return GradedElement(u.chart, acc)


def poisson_bracket(u: GradedElement, v: GradedElement, g: MetricSplit) -> GradedElement:
    """The degree -2 bracket induced by ω (see module docstring for signs)."""
    _same_chart(u, v)
    chart = u.chart
    if len(g.signs) != chart.rank:
        raise ChartMismatch("metric split does not match the chart rank")
    result = chart.zero()
    for i in range(chart.n):
        dpu = derivative_p(u, i)
        if len(dpu):
            result = result + multiply(dpu, derivative_x(v, i))
        dpv = derivative_p(v, i)
        if len(dpv):
            result = result - multiply(derivative_x(u, i), dpv)
    for alpha in range(chart.rank):
        k = chart.e_index(alpha)
        ru = right_derivative_odd(u, k)
        if not len(ru):
            continue
        lv = left_derivative_odd(v, k)
        if len(lv):
            result = result + multiply(ru, lv).scale(float(g.sign(alpha)))
    return result


def apply_involution(u: GradedElement) -> GradedElement:
    """ι: e^ȧ -> -e^ȧ, everything else fixed."""
    chart = u.chart
    out = {}
    for (p, o), c in u.terms.items():
        dotted = sum(1 for k in o if chart.is_dotted(k))
        out[(p, o)] = -c if dotted % 2 else c
    return GradedElement(chart, out)


def render_element(u: GradedElement, values_only: bool = False) -> str:
    """Canonical text: terms sorted by (p monomial, odd monomial)."""
    if not len(u):
        return "0"
    parts = []
    for (p, o), c in u:
        coeff = repr(c.value) if values_only else format_expression(jet_to_expression(c))
        gens = [f"p{i + 1}" for i in p] + [u.chart.odd_name(k) for k in o]
        parts.append("*".join([f"({coeff})"] + gens))
    return " + ".join(parts)


def monomial_name(chart: GradedChart, key: Key) -> str:
    p, o = key
    names = [f"p{i + 1}" for i in p] + [chart.odd_name(k) for k in o]
    return "*".join(names) if names else "1"


# --- derivations ---

Generator = tuple[str, int]  # ("x", i) | ("p", i) | ("odd", k)


@dataclass(frozen=True)
class Derivation:
    """A graded derivation given by its action on generators (missing entries act as 0)."""

    chart: GradedChart
    parity: int
    degree: int
    table: Mapping[Generator, GradedElement] = field(default_factory=dict)

    def __post_init__(self):
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")
        for gen, image in self.table.items():
            _same_chart(image, self.chart.zero())
            expected = _generator_degree(gen) + self.degree
            degs = image.degrees()
            if degs and degs != {expected}:
                raise ValueError(
                    f"image of {gen} has degrees {sorted(degs)}, expected {expected}"
                )

    def action(self, gen: Generator) -> GradedElement:
        return self.table.get(gen, self.chart.zero())

    def __call__(self, u: GradedElement) -> GradedElement:
        return apply_derivation(self, u)

    def compose_square(self) -> dict[Generator, GradedElement]:
        """D(D(g)) for every generator of the chart."""
        return {gen: apply_derivation(self, self.action(gen)) for gen in generators(self.chart)}


def _generator_degree(gen: Generator) -> int:
    kind, _ = gen
    return {"x": 0, "p": 2, "odd": 1}[kind]


def generators(chart: GradedChart) -> list[Generator]:
    return ([("x", i) for i in range(chart.n)] + [("p", i) for i in range(chart.n)]
            + [("odd", k) for k in range(chart.odd_count)])


def generator_element(chart: GradedChart, gen: Generator) -> GradedElement:
    kind, idx = gen
    if kind == "x":
        return chart.x(idx)
    if kind == "p":
        return chart.p(idx)
    return chart.odd(idx)


def apply_derivation(D: Derivation, u: GradedElement) -> GradedElement:
    """Extend D from generators by the graded Leibniz rule."""
    _same_chart(u, D.chart.zero())
    chart = u.chart
    one = chart.jet(1.0)
    result = chart.zero()
    x_images = [(i, D.action(("x", i))) for i in range(chart.n)]
    x_images = [(i, img) for i, img in x_images if len(img)]
    for (p, o), c in u.terms.items():
        # x-dependence of the coefficient: Σ_i ∂_i c · D(x^i)
        for i, img in x_images:
            dc = c.partial_derivative(i)
            result = result + multiply(img.scale(dc), GradedElement(chart, {(p, o): one}))
        # momenta (even, no signs)
        for pos, i in enumerate(p):
            img = D.action(("p", i))
            if not len(img):
                continue
            rest = p[:pos] + p[pos + 1:]
            left = GradedElement(chart, {(rest, ()): c})
            result = result + multiply(multiply(left, img), GradedElement(chart, {((), o): one}))
        # odd generators, passing j odd factors on the left
        for j, k in enumerate(o):
            img = D.action(("odd", k))
            if not len(img):
                continue
            left = GradedElement(chart, {(p, o[:j]): c})
            right = GradedElement(chart, {((), o[j + 1:]): one})
            piece = multiply(multiply(left, img), right)
            result = result - piece if (D.parity and j % 2) else result + piece
    return result


def derivation_from_hamiltonian(h: GradedElement, g: MetricSplit, parity: int, degree: int
                                ) -> Derivation:
    """The Hamiltonian derivation f -> {h, f} on x, p and e generators."""
    chart = h.chart
    table: dict[Generator, GradedElement] = {}
    for gen in generators(chart):
        if gen[0] == "odd" and chart.is_xi(gen[1]):
            continue
        table[gen] = poisson_bracket(h, generator_element(chart, gen), g)
    log.debug("hamiltonian derivation built with %d table entries", len(table))
    return Derivation(chart, parity, degree, table)
