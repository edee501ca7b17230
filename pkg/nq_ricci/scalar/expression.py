from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Number = Union[Fraction, float]

FUNCTIONS = ("sqrt", "sin", "cos", "exp")


class Expression:
    """Base node of the scalar-field expression tree."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_expression(self)

    # Convenience builders used by code that assembles fields programmatically.
    def __add__(self, other: "Expression") -> "Expression":
        return Add(self, _coerce(other))

    def __sub__(self, other: "Expression") -> "Expression":
        return Sub(self, _coerce(other))

    def __mul__(self, other: "Expression") -> "Expression":
        return Mul(self, _coerce(other))

    def __neg__(self) -> "Expression":
        return Neg(self)


@dataclass(frozen=True, eq=True)
class Const(Expression):
    value: Number

    def __post_init__(self):
        if isinstance(self.value, float) and not math.isfinite(self.value):
            raise ValueError("constants must be finite")


@dataclass(frozen=True, eq=True)
class Var(Expression):
    index: int  # 0-based; printed as x{index+1}


@dataclass(frozen=True, eq=True)
class Neg(Expression):
    arg: Expression


@dataclass(frozen=True, eq=True)
class Func(Expression):
    name: str
    arg: Expression

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")


@dataclass(frozen=True, eq=True)
class Add(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True, eq=True)
class Sub(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True, eq=True)
class Mul(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True, eq=True)
class Div(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True, eq=True)
class Pow(Expression):
    base: Expression
    exponent: int


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def _coerce(value) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, int):
        return Const(Fraction(value))
    if isinstance(value, float):
        return Const(value)
    raise TypeError(f"cannot use {type(value).__name__} as an expression")


def const(value: int | float | Fraction) -> Expression:
    """Constant node; negative values become Neg(Const) so printing round-trips."""
    if isinstance(value, int):
        value = Fraction(value)
    if value < 0:
        return Neg(Const(-value))
    return Const(value)


def max_variable(e: Expression) -> int:
    """Largest variable index used in `e`, or -1."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Const):
        return -1
    if isinstance(e, (Neg, Func)):
        return max_variable(e.arg)
    if isinstance(e, Pow):
        return max_variable(e.base)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return max(max_variable(e.left), max_variable(e.right))
    raise TypeError(f"not an expression node: {e!r}")


# --- canonical printer ---

_SUM, _PRODUCT, _FACTOR, _POWER, _ATOM = 1, 2, 3, 4, 5


def _format_number(value: Number) -> tuple[str, int]:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator), _ATOM
        # "p/q" lexes as one literal; keep it out of power bases
        return f"{value.numerator}/{value.denominator}", _POWER
    text = repr(float(value))
    return text, _ATOM


def _render(e: Expression) -> tuple[str, int]:
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Var):
        return f"x{e.index + 1}", _ATOM
    if isinstance(e, Func):
        return f"{e.name}({_render(e.arg)[0]})", _ATOM
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _FACTOR), _FACTOR
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _ATOM)}^{e.exponent}", _POWER
    if isinstance(e, (Add, Sub)):
        op = "+" if isinstance(e, Add) else "-"
        return f"{_wrap(e.left, _SUM)} {op} {_wrap(e.right, _PRODUCT)}", _SUM
    if isinstance(e, (Mul, Div)):
        op = "*" if isinstance(e, Mul) else "/"
        return f"{_wrap(e.left, _PRODUCT)} {op} {_wrap(e.right, _FACTOR)}", _PRODUCT
    raise TypeError(f"not an expression node: {e!r}")


def _wrap(e: Expression, minimum: int) -> str:
    text, level = _render(e)
    return text if level >= minimum else f"({text})"


def format_expression(e: Expression) -> str:
    """Canonical text in the same grammar the parser reads."""
    return _render(e)[0]
