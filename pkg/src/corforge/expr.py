"""Tiny differentiable expression language for time-dependent coefficients.

Grammar (``^`` takes an integer exponent, possibly negative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' ['-'] INT)?
    atom   := NUMBER | 't' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sin | cos | exp | sqrt

Derivatives are symbolic, so ``CoefficientFn("0.3*t^2").derivative`` is the
exact expression ``0.6*t``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ParseError

FUNCTIONS = ("sin", "cos", "exp", "sqrt")
_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|([A-Za-z_]\w*)|(.))")


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


@dataclass(frozen=True)
class Div:
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


T = Var()
ZERO = Num(0.0)
ONE = Num(1.0)


# --- parsing ---------------------------------------------------------------


def _tokenize(text: str):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        number, name, other = m.groups()
        start = m.start(m.lastindex)
        if number is not None:
            tokens.append(("num", number, start))
        elif name is not None:
            tokens.append(("name", name, start))
        else:
            tokens.append(("op", other, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok):
        raise ParseError(f"{message} at column {tok[2] + 1} in {self.text!r}", token=tok[1] or "<end>")

    def expect(self, op):
        tok = self.take()
        if tok[1] != op:
            self.fail(f"expected {op!r}", tok)

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.fail("unexpected token", tok)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        if self.peek() == ("op", "-", self.peek()[2]):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                self.fail("exponent must be an integer", tok)
            return Pow(base, sign * int(tok[1]))
        return base

    def atom(self):
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value == "t":
                return T
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            self.fail("unknown name", tok)
        if value == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.fail("unexpected token", tok)


def parse(text: str):
    if not isinstance(text, str):
        raise ParseError(f"expression must be a string, got {type(text).__name__}")
    return _Parser(text).parse()


# --- simplification and differentiation ------------------------------------


def _is_num(node, value=None):
    return isinstance(node, Num) and (value is None or node.value == value)


def _factors(node):
    if isinstance(node, Mul):
        return _factors(node.left) + _factors(node.right)
    return [node]


def mul(a, b):
    factors = _factors(a) + _factors(b)
    coeff = 1.0
    rest = []
    for f in factors:
        if isinstance(f, Num):
            coeff *= f.value
        elif isinstance(f, Neg):
            coeff = -coeff
            rest.extend(_factors(f.arg))
        else:
            rest.append(f)
    if coeff == 0.0:
        return ZERO
    node = None
    for f in rest:
        node = f if node is None else Mul(node, f)
    if node is None:
        return Num(coeff)
    if coeff < 0:
        return Neg(node if coeff == -1.0 else Mul(Num(-coeff), node))
    return node if coeff == 1.0 else Mul(Num(coeff), node)


def add(a, b):
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add(a, b)


def sub(a, b):
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if isinstance(b, Neg):
        return add(a, b.arg)
    return Sub(a, b)


def neg(a):
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return mul(Num(-1.0), a)


def div(a, b):
    if _is_num(a, 0.0):
        return ZERO
    if _is_num(b, 1.0):
        return a
    if _is_num(b):
        return mul(Num(1.0 / b.value), a)
    return Div(a, b)


def power(base, k):
    if k == 0:
        return ONE
    if k == 1:
        return base
    if _is_num(base):
        return Num(base.value**k)
    return Pow(base, k)


def derivative(node):
    """d/dt of an AST node, simplified."""
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Add):
        return add(derivative(node.left), derivative(node.right))
    if isinstance(node, Sub):
        return sub(derivative(node.left), derivative(node.right))
    if isinstance(node, Neg):
        return neg(derivative(node.arg))
    if isinstance(node, Mul):
        return add(
            mul(derivative(node.left), node.right),
            mul(node.left, derivative(node.right)),
        )
    if isinstance(node, Div):
        u, v = node.left, node.right
        du, dv = derivative(u), derivative(v)
        if _is_num(dv, 0.0):
            return div(du, v)
        return div(sub(mul(du, v), mul(u, dv)), power(v, 2))
    if isinstance(node, Pow):
        return mul(mul(Num(float(node.exponent)), power(node.base, node.exponent - 1)), derivative(node.base))
    if isinstance(node, Call):
        inner = derivative(node.arg)
        if node.func == "sin":
            outer = Call("cos", node.arg)
        elif node.func == "cos":
            outer = neg(Call("sin", node.arg))
        elif node.func == "exp":
            outer = node
        else:
            outer = div(Num(0.5), node)
        return mul(outer, inner)
    raise TypeError(f"unknown node {node!r}")


# --- evaluation and printing -----------------------------------------------

_NUMPY_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}


def evaluate(node, t):
    if isinstance(node, Num):
        return node.value + 0.0 * t
    if isinstance(node, Var):
        return t + 0.0
    if isinstance(node, Add):
        return evaluate(node.left, t) + evaluate(node.right, t)
    if isinstance(node, Sub):
        return evaluate(node.left, t) - evaluate(node.right, t)
    if isinstance(node, Mul):
        return evaluate(node.left, t) * evaluate(node.right, t)
    if isinstance(node, Div):
        return evaluate(node.left, t) / evaluate(node.right, t)
    if isinstance(node, Neg):
        return -evaluate(node.arg, t)
    if isinstance(node, Pow):
        base = evaluate(node.base, t)
        return base**node.exponent if node.exponent >= 0 else 1.0 / base ** (-node.exponent)
    if isinstance(node, Call):
        return _NUMPY_FUNCS[node.func](evaluate(node.arg, t))
    raise TypeError(f"unknown node {node!r}")


_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _num_text(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def to_text(node, parent_prec=0, right=False) -> str:
    if isinstance(node, Num):
        text = _num_text(node.value)
        return f"({text})" if node.value < 0 and parent_prec else text
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    prec = _PREC[type(node)]
    if isinstance(node, Neg):
        text = "-" + to_text(node.arg, prec)
    elif isinstance(node, Pow):
        text = f"{to_text(node.base, prec + 1)}^{node.exponent}"
    else:
        sym = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
        text = f"{to_text(node.left, prec)}{sym}{to_text(node.right, prec, right=True)}"
    needs = prec < parent_prec or (right and prec == parent_prec and not isinstance(node, (Pow, Neg)))
    return f"({text})" if needs else text


class CoefficientFn:
    """Real function of time parsed from the expression grammar.

    >>> f = CoefficientFn("0.3*t^2")
    >>> f.derivative.text
    '0.6*t'
    >>> float(f(2.0))
    1.2
    """

    def __init__(self, source, _node=None):
        if _node is None:
            if isinstance(source, (int, float)):
                source = repr(float(source))
            _node = parse(source)
        self.node = _node
        self.source = source

    @property
    def text(self) -> str:
        return to_text(self.node)

    @cached_property
    def derivative(self) -> "CoefficientFn":
        node = derivative(self.node)
        return CoefficientFn(to_text(node), _node=node)

    def __call__(self, t):
        if np.ndim(t) == 0:
            return float(evaluate(self.node, float(t)))
        return evaluate(self.node, np.asarray(t, dtype=float))

    def is_constant(self) -> bool:
        return isinstance(derivative(self.node), Num) and derivative(self.node).value == 0.0

    def __repr__(self):
        return f"CoefficientFn({self.text!r})"
