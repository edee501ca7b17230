"""
Recursive-descent parser for the scalar-field mini-language.

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := atom ("^" int)? | "-" factor
    atom   := number | ident | "(" expr ")" | func "(" expr ")"
    func   := "sqrt" | "sin" | "cos" | "exp"
    ident  := "x" int            (1-based)
    number := decimal literal, or "p/q" written without spaces

Whitespace is insignificant except that it separates a fraction literal
"1/2" from the division "1 / 2"; both evaluate to the same value.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

from nq_ricci.errors import ParseError, VariableOutOfRange
from nq_ricci.scalar.expression import (
    FUNCTIONS,
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
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_OP_NAMES = {"+": "'+'", "-": "'-'", "*": "'*'", "/": "'/'", "^": "'^'", "(": "'('", ")": "')'"}


@dataclass(frozen=True)
class Token:
    kind: str  # num | var | func | op | end
    text: str
    start: int  # character offsets
    end: int


def _tokenize(src: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos),
                             ["number", "identifier", "operator"])
        kind = m.lastgroup
        text = m.group()
        if kind == "ident":
            if text in FUNCTIONS:
                kind = "func"
            elif re.fullmatch(r"x\d+", text):
                kind = "var"
            else:
                raise ParseError(f"unknown identifier {text!r}", _byte_offset(src, pos),
                                 ["x<int>", *FUNCTIONS])
        if kind != "ws":
            tokens.append(Token(kind, text, m.start(), m.end()))
        pos = m.end()
    tokens.append(Token("end", "", len(src), len(src)))
    return tokens


def _byte_offset(src: str, char_pos: int) -> int:
    return len(src[:char_pos].encode("utf-8"))


class _Parser:
    def __init__(self, src: str, n: int):
        self.src = src
        self.n = n
        self.tokens = _tokenize(src)
        self.pos = 0

    # --- helpers ---
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def _advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def _is_op(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def _fail(self, expected: list[str]) -> ParseError:
        t = self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        return ParseError(f"unexpected {what}", _byte_offset(self.src, t.start), expected)

    def _expect_op(self, text: str) -> Token:
        if not self._is_op(text):
            raise self._fail([_OP_NAMES[text]])
        return self._advance()

    # --- grammar ---
    def parse(self) -> Expression:
        e = self.expr()
        if self.tok.kind != "end":
            raise self._fail(["'+'", "'-'", "'*'", "'/'", "end of input"])
        return e

    def expr(self) -> Expression:
        left = self.term()
        while self._is_op("+") or self._is_op("-"):
            op = self._advance().text
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self) -> Expression:
        left = self.factor()
        while self._is_op("*") or self._is_op("/"):
            op = self._advance().text
            right = self.factor()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def factor(self) -> Expression:
        if self._is_op("-"):
            self._advance()
            return Neg(self.factor())
        base = self.atom()
        if self._is_op("^"):
            self._advance()
            return Pow(base, self._integer())
        return base

    def _integer(self) -> int:
        sign = 1
        if self._is_op("-"):
            self._advance()
            sign = -1
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise self._fail(["integer"])
        self._advance()
        return sign * int(t.text)

    def atom(self) -> Expression:
        t = self.tok
        if t.kind == "num":
            return self._number()
        if t.kind == "var":
            self._advance()
            index = int(t.text[1:]) - 1
            if index < 0 or index >= self.n:
                raise VariableOutOfRange(
                    f"{t.text} at byte {_byte_offset(self.src, t.start)} exceeds base dimension {self.n}"
                )
            return Var(index)
        if t.kind == "func":
            self._advance()
            self._expect_op("(")
            arg = self.expr()
            self._expect_op(")")
            return Func(t.text, arg)
        if self._is_op("("):
            self._advance()
            inner = self.expr()
            self._expect_op(")")
            return inner
        raise self._fail(["number", "x<int>", "'('", "'-'", *FUNCTIONS])

    def _number(self) -> Const:
        t = self._advance()
        slash, denom = self.tok, self._peek()
        if (
            t.text.isdigit()
            and slash.kind == "op" and slash.text == "/" and slash.start == t.end
            and denom.kind == "num" and denom.text.isdigit() and denom.start == slash.end
        ):
            self.pos += 2
            if int(denom.text) == 0:
                raise ParseError("zero denominator in fraction literal",
                                 _byte_offset(self.src, denom.start), ["nonzero integer"])
            return Const(Fraction(int(t.text), int(denom.text)))
        if t.text.isdigit():
            return Const(Fraction(int(t.text)))
        value = float(t.text)
        if not math.isfinite(value):
            raise ParseError(f"literal {t.text!r} is not a finite number",
                             _byte_offset(self.src, t.start), ["finite number"])
        return Const(value)


def parse_expression(src: str, n: int) -> Expression:
    """Parse `src` over a base of dimension `n` (variables x1..xn)."""
    if n < 0:
        raise ValueError("base dimension must be non-negative")
    return _Parser(src, n).parse()
