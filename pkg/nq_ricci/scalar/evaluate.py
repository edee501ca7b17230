from __future__ import annotations

import itertools
from typing import Callable, Sequence, Union

import numpy as np

from nq_ricci.errors import ChartMismatch, VariableOutOfRange
from nq_ricci.scalar.expression import (
    ZERO,
    Add,
    Const,
    Div,
    Expression,
    Func,
    Mul,
    Neg,
    Pow,
    Sub,
    Var,
    const,
    max_variable,
)
from nq_ricci.scalar.jets import Jet, coefficient_count, layout
from nq_ricci.settings import load_settings

Field = Union[Expression, Jet]

_FUNCS: dict[str, Callable[[Jet], Jet]] = {
    "sqrt": Jet.sqrt,
    "sin": Jet.sin,
    "cos": Jet.cos,
    "exp": Jet.exp,
}


def evaluate_jet(e: Expression, x0: Sequence[float], order: int) -> Jet:
    """Taylor coefficients of `e` at `x0` up to `order`."""
    x0 = tuple(float(v) for v in x0)
    if max_variable(e) >= len(x0):
        raise VariableOutOfRange(
            f"expression uses x{max_variable(e) + 1} but the base has dimension {len(x0)}"
        )
    cache: dict[int, Jet] = {}

    def ev(node: Expression) -> Jet:
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Const):
            out = Jet.constant(float(node.value), x0, order)
        elif isinstance(node, Var):
            out = Jet.variable(node.index, x0, order)
        elif isinstance(node, Neg):
            out = -ev(node.arg)
        elif isinstance(node, Func):
            out = _FUNCS[node.name](ev(node.arg))
        elif isinstance(node, Add):
            out = ev(node.left) + ev(node.right)
        elif isinstance(node, Sub):
            out = ev(node.left) - ev(node.right)
        elif isinstance(node, Mul):
            out = ev(node.left) * ev(node.right)
        elif isinstance(node, Div):
            out = ev(node.left) / ev(node.right)
        elif isinstance(node, Pow):
            out = ev(node.base) ** node.exponent
        else:
            raise TypeError(f"not an expression node: {node!r}")
        cache[key] = out
        return out

    return ev(e)


def evaluate_value(e: Expression, x: Sequence[float]) -> float:
    return evaluate_jet(e, x, 0).value


def default_steps(x0: Sequence[float], scale: float | None = None) -> tuple[float, ...]:
    if scale is None:
        scale = load_settings().fd_step_scale
    return tuple(scale * max(1.0, abs(v)) for v in x0)


def finite_difference_jet(e: Expression, x0: Sequence[float], order: int,
                          h: float | Sequence[float] | None = None) -> Jet:
    """
    Central-difference estimate of all partials of `e` up to `order` <= 2.
    Error is O(h^2); the default step is 1e-4 * max(1, |x0_i|) per axis.
    """
    if order > 2:
        raise ValueError("finite_difference_jet supports order <= 2")
    x0 = tuple(float(v) for v in x0)
    n = len(x0)
    if h is None:
        steps = default_steps(x0)
    elif isinstance(h, (int, float)):
        steps = tuple(float(h) for _ in x0)
    else:
        steps = tuple(float(v) for v in h)

    def f(offsets: dict[int, float]) -> float:
        pt = list(x0)
        for i, d in offsets.items():
            pt[i] += d
        return evaluate_value(e, pt)

    lay = layout(n, order)
    coeffs = np.zeros(coefficient_count(n, order))
    f0 = f({})
    coeffs[0] = f0
    for i in range(n if order >= 1 else 0):
        hi = steps[i]
        unit = tuple(1 if k == i else 0 for k in range(n))
        fp, fm = f({i: hi}), f({i: -hi})
        coeffs[lay.position[unit]] = (fp - fm) / (2 * hi)
        if order >= 2:
            twice = tuple(2 if k == i else 0 for k in range(n))
            coeffs[lay.position[twice]] = (fp - 2 * f0 + fm) / (2 * hi * hi)
    if order >= 2:
        for i, j in itertools.combinations(range(n), 2):
            hi, hj = steps[i], steps[j]
            mixed = (f({i: hi, j: hj}) - f({i: hi, j: -hj}) - f({i: -hi, j: hj})
                     + f({i: -hi, j: -hj})) / (4 * hi * hj)
            m = tuple(1 if k in (i, j) else 0 for k in range(n))
            coeffs[lay.position[m]] = mixed
    return Jet(x0, order, coeffs)


# --- fields: structure functions given either as expressions or as jets ---

def field_jet(f: Field, x0: Sequence[float], order: int) -> Jet:
    if isinstance(f, Jet):
        if f.base_point != tuple(float(v) for v in x0) or f.order != order:
            raise ChartMismatch("jet-valued field does not match the chart base point/order")
        return f
    return evaluate_jet(f, x0, order)


def field_scale(f: Field, k: float) -> Field:
    if isinstance(f, Jet):
        return f * k
    if k == 1:
        return f
    if k == -1:
        return Neg(f)
    if k == 0:
        return ZERO
    return Mul(const(int(k) if float(k).is_integer() else float(k)), f)


def field_sum(fields: Sequence[Field]) -> Field:
    if not fields:
        return ZERO
    if all(isinstance(f, Jet) for f in fields):
        total = fields[0]
        for f in fields[1:]:
            total = total + f
        return total
    if any(isinstance(f, Jet) for f in fields):
        raise TypeError("cannot mix jet-valued and expression-valued fields")
    total_e: Expression = fields[0]  # type: ignore[assignment]
    for f in fields[1:]:
        total_e = Add(total_e, f)  # type: ignore[arg-type]
    return total_e


def jet_to_expression(j: Jet) -> Expression:
    """The Taylor polynomial of `j` in (x - x0), truncated at its budget."""
    terms: list[Expression] = []
    lay = j.layout
    for k, m in enumerate(lay.indices):
        if lay.degree[k] > j.budget:
            continue
        c = float(j.coeffs[k])
        if c == 0.0:
            continue
        monomial: Expression | None = None
        for i, power in enumerate(m):
            if power == 0:
                continue
            x0 = j.base_point[i]
            shift: Expression
            if x0 == 0.0:
                shift = Var(i)
            elif x0 > 0:
                shift = Sub(Var(i), Const(x0))
            else:
                shift = Add(Var(i), Const(-x0))
            factor = shift if power == 1 else Pow(shift, power)
            monomial = factor if monomial is None else Mul(monomial, factor)
        magnitude: Expression = Const(abs(c))
        if monomial is not None:
            magnitude = monomial if abs(c) == 1.0 else Mul(magnitude, monomial)
        terms.append(Neg(magnitude) if c < 0 else magnitude)
    if not terms:
        return ZERO
    total = terms[0]
    for t in terms[1:]:
        total = Add(total, t)
    return total


__all__ = [
    "Field",
    "evaluate_jet",
    "evaluate_value",
    "finite_difference_jet",
    "field_jet",
    "field_scale",
    "field_sum",
    "jet_to_expression",
    "default_steps",
]
