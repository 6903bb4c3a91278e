"""Recursive-descent parser for density and integrand expressions.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative, integer exponent
    atom    := NUMBER | 'x' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := 'exp' | 'sqrt'

Trees are immutable and evaluate either in big-float arithmetic (argument is
an mpmath number, functions come from its context) or exactly (argument is a
``Fraction``; only the rational subset is supported).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import DensitySyntaxError, NonFiniteValue, UnknownIdentifier

FUNCTIONS = ("exp", "sqrt")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


class Expr:
    """Base node.  Subclasses implement ``_eval`` and ``poly``."""

    def __call__(self, x):
        if isinstance(x, (int, Fraction)):
            return self._eval(Fraction(x), None)
        return self._eval(x, x.context)

    def evaluate(self, x, mp):
        return self._eval(mp.mpf(x), mp)

    def poly(self):
        """Exact monomial coefficients if the tree is a rational polynomial, else None."""
        raise NotImplementedError


@dataclass(frozen=True)
class Num(Expr):
    value: Fraction
    text: str

    def _eval(self, x, mp):
        if mp is None:
            return self.value
        if self.value.denominator == 1:
            return mp.mpf(self.value.numerator)
        return mp.mpf(self.value.numerator) / self.value.denominator

    def poly(self):
        return [self.value]

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class Var(Expr):
    def _eval(self, x, mp):
        return x

    def poly(self):
        return [Fraction(0), Fraction(1)]

    def __str__(self):
        return "x"


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def _eval(self, x, mp):
        return -self.arg._eval(x, mp)

    def poly(self):
        p = self.arg.poly()
        return None if p is None else [-c for c in p]

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def _eval(self, x, mp):
        a = self.left._eval(x, mp)
        b = self.right._eval(x, mp)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if b == 0:
            raise NonFiniteValue(f"division by zero evaluating {self} at x={x}")
        return a / b

    def poly(self):
        a, b = self.left.poly(), self.right.poly()
        if a is None or b is None:
            return None
        if self.op in "+-":
            sign = 1 if self.op == "+" else -1
            n = max(len(a), len(b))
            a = a + [Fraction(0)] * (n - len(a))
            b = b + [Fraction(0)] * (n - len(b))
            return _trim([u + sign * v for u, v in zip(a, b)])
        if self.op == "*":
            return _polymul(a, b)
        b = _trim(b)
        if len(b) != 1 or b[0] == 0:
            return None
        return [c / b[0] for c in a]

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def _eval(self, x, mp):
        b = self.base._eval(x, mp)
        if self.exponent < 0 and b == 0:
            raise NonFiniteValue(f"0 raised to negative power in {self}")
        return b**self.exponent

    def poly(self):
        if self.exponent < 0:
            return None
        b = self.base.poly()
        if b is None:
            return None
        out = [Fraction(1)]
        for _ in range(self.exponent):
            out = _polymul(out, b)
        return out

    def __str__(self):
        return f"({self.base}^{self.exponent})"


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def _eval(self, x, mp):
        a = self.arg._eval(x, mp)
        if mp is None:
            raise TypeError(f"{self.func} has no exact rational evaluation")
        if self.func == "sqrt" and a < 0:
            raise NonFiniteValue(f"sqrt of negative value in {self}")
        return getattr(mp, self.func)(a)

    def poly(self):
        return None

    def __str__(self):
        return f"{self.func}({self.arg})"


def _trim(c):
    c = list(c)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def _polymul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, u in enumerate(a):
        if u:
            for j, v in enumerate(b):
                out[i + j] += u * v
    return _trim(out)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise DensitySyntaxError(f"unexpected character {text[bad]!r}", self.byte(bad))
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), self.byte(start)))
            pos = m.end()
        self.tokens.append(("end", "", self.byte(len(text))))
        self.i = 0

    def byte(self, pos):
        return len(self.text[:pos].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, offset = self.take()
        if text != value or kind != "op":
            raise DensitySyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", offset)

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise DensitySyntaxError(f"unexpected token {text!r}", offset)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            offset = self.take()[2]
            exponent = self.unary()
            value = exponent.poly()
            if value is None or len(value) != 1 or value[0].denominator != 1:
                raise DensitySyntaxError("exponent must be a constant integer", offset + 1)
            return Pow(base, int(value[0]))
        return base

    def atom(self):
        kind, text, offset = self.take()
        if kind == "num":
            return Num(Fraction(text), text)
        if kind == "name":
            if text == "x":
                return Var()
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise UnknownIdentifier(text, offset)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        raise DensitySyntaxError(f"unexpected {text or 'end of input'!r}", offset)


def parse_density(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Offsets in :class:`DensitySyntaxError` are UTF-8 byte offsets into ``text``.
    """
    if not text or not text.strip():
        raise DensitySyntaxError("empty expression", 0)
    return _Parser(text).parse()


def constant(value) -> Num:
    value = Fraction(value)
    return Num(value, str(value))
