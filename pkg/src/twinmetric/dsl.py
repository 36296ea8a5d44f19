"""Expression language for metric components, K-fields and warp functions.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" exponent ] ;
    exponent= [ "-" ] integer | "(" [ "-" ] integer ")" ;
    atom    = number | name | name "(" expr ")" | "(" expr ")" ;
    number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
    name    = letter { letter | digit | "_" } ;

Functions: ``sin cos exp sqrt log``.  Names resolve to chart coordinates,
then to bound parameters, then to the constants ``pi`` and ``I`` (the
imaginary unit, usable only under complex evaluation).  Parameters are
substituted by value at parse time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import (
    EvaluationDomainError,
    ExprSyntaxError,
    NonAnalyticError,
    UnknownSymbolError,
)
from .jets import Jet

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "log")
CONSTANTS = ("pi", "I")


@dataclass(frozen=True)
class ChartSpec:
    """A named coordinate chart with optional open sampling intervals."""

    name: str
    coords: tuple[str, ...]
    domain_hints: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if not self.coords:
            raise ValueError("chart needs at least one coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"duplicate coordinate names in chart {self.name!r}")
        for c in self.coords:
            if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", c) or c in FUNCTIONS or c in CONSTANTS:
                raise ValueError(f"invalid coordinate name {c!r}")
        if self.domain_hints is not None:
            hints = tuple((float(a), float(b)) for a, b in self.domain_hints)
            if len(hints) != len(self.coords):
                raise ValueError("one sampling interval per coordinate required")
            for lo, hi in hints:
                if not lo < hi:
                    raise ValueError(f"empty sampling interval ({lo}, {hi})")
            object.__setattr__(self, "domain_hints", hints)

    @property
    def dim(self) -> int:
        return len(self.coords)


# --------------------------------------------------------------------- AST
@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Coord:
    name: str
    index: int


@dataclass(frozen=True)
class Param:
    name: str
    value: float


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "I"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Coord, Param, Const, Neg, BinOp, Pow, Call]


@dataclass(frozen=True)
class ScalarExpr:
    """A parsed expression bound to the chart it was parsed against."""

    root: Expr
    coords: tuple[str, ...]

    def __str__(self) -> str:
        return to_text(self.root)

    @property
    def nvars(self) -> int:
        return len(self.coords)


# ------------------------------------------------------------------ parser
_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", text, bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, coords: Sequence[str], params: Mapping[str, float]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.coords = {c: k for k, c in enumerate(coords)}
        self.params = dict(params)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", self.text, pos)

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", self.text, pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        paren = False
        if self.peek()[:2] == ("op", "("):
            self.take()
            paren = True
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        kind, val, pos = self.take()
        if kind != "num" or not re.fullmatch(r"\d+", val):
            raise ExprSyntaxError("exponent must be an integer literal", self.text, pos)
        if paren:
            self.expect(")")
        return sign * int(val)

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(Fraction(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if self.peek()[:2] == ("op", "("):
                raise ExprSyntaxError(f"unknown function {val!r}", self.text, pos)
            if val in self.coords:
                return Coord(val, self.coords[val])
            if val in self.params:
                return Param(val, float(self.params[val]))
            if val in CONSTANTS:
                return Const(val)
            raise UnknownSymbolError(val)
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", self.text, pos)


def parse_scalar(text: str, chart: ChartSpec | Sequence[str], params: Mapping[str, float] | None = None) -> ScalarExpr:
    """Parse ``text`` against a chart's coordinates and bind parameters."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", text or "", 0)
    coords = chart.coords if isinstance(chart, ChartSpec) else tuple(chart)
    root = _Parser(text, coords, params or {}).parse()
    return ScalarExpr(root, tuple(coords))


# ----------------------------------------------------------------- printer
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _num_text(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    # parsed literals are finite decimals: denominator is 2^a 5^b
    digits = 0
    scaled = value
    while scaled.denominator != 1:
        scaled *= 10
        digits += 1
        if digits > 400:
            return f"({value.numerator}/{value.denominator})"
    sign = "-" if scaled < 0 else ""
    body = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{body[:-digits]}.{body[-digits:]}"


def to_text(node: Expr, parent: int = 0) -> str:
    """Render an AST so that parsing the text yields an equal AST."""
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, (Coord, Param, Const)):
        return node.name
    if isinstance(node, Neg):
        s = "-" + to_text(node.arg, 3)
        return f"({s})" if parent >= 2 else s
    if isinstance(node, Pow):
        base = to_text(node.base, 4)
        if isinstance(node.base, Pow):
            base = f"({base})"
        exp = str(node.exponent) if node.exponent >= 0 else f"(-{-node.exponent})"
        return f"{base}^{exp}"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, BinOp):
        prec = _PREC[node.op]
        left = to_text(node.left, prec)
        # left-associative: a right operand of equal precedence needs parens
        right = to_text(node.right, prec + 1)
        s = f"{left} {node.op} {right}"
        return f"({s})" if parent > prec else s
    raise TypeError(f"not an expression node: {node!r}")


# ----------------------------------------------------- AST-level builders
def add(a: Expr, b: Expr) -> Expr:
    return BinOp("+", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    return BinOp("*", a, b)


def num(value) -> Num:
    return Num(Fraction(value))


def rebind(expr: ScalarExpr, coords: Sequence[str]) -> ScalarExpr:
    """Re-index an expression's coordinates against a larger chart."""
    pos = {c: k for k, c in enumerate(coords)}

    def walk(node: Expr) -> Expr:
        if isinstance(node, Coord):
            if node.name not in pos:
                raise UnknownSymbolError(node.name)
            return Coord(node.name, pos[node.name])
        if isinstance(node, Neg):
            return Neg(walk(node.arg))
        if isinstance(node, BinOp):
            return BinOp(node.op, walk(node.left), walk(node.right))
        if isinstance(node, Pow):
            return Pow(walk(node.base), node.exponent)
        if isinstance(node, Call):
            return Call(node.func, walk(node.arg))
        return node

    return ScalarExpr(walk(expr.root), tuple(coords))


def uses_coordinate(expr: ScalarExpr, name: str) -> bool:
    def walk(node: Expr) -> bool:
        if isinstance(node, Coord):
            return node.name == name
        if isinstance(node, Neg):
            return walk(node.arg)
        if isinstance(node, BinOp):
            return walk(node.left) or walk(node.right)
        if isinstance(node, Pow):
            return walk(node.base)
        if isinstance(node, Call):
            return walk(node.arg)
        return False

    return walk(expr.root)


# -------------------------------------------------------------- evaluation
_TINY = 1e-300


def _func_taylor(func: str, a, order: int, complex_mode: bool, node, point):
    """Taylor coefficients f^(k)(a)/k! for the supported functions."""
    if func == "sin":
        derivs = [np.sin(a), np.cos(a), -np.sin(a), -np.cos(a)]
        return [derivs[k % 4] / math.factorial(k) for k in range(order + 1)]
    if func == "cos":
        derivs = [np.cos(a), -np.sin(a), -np.cos(a), np.sin(a)]
        return [derivs[k % 4] / math.factorial(k) for k in range(order + 1)]
    if func == "exp":
        e = np.exp(a)
        return [e / math.factorial(k) for k in range(order + 1)]
    if func == "log":
        if complex_mode:
            if a.imag == 0 and a.real <= 0:
                raise EvaluationDomainError("log on its branch cut", to_text(node), point)
        elif a <= 0:
            raise EvaluationDomainError("log of a non-positive value", to_text(node), point)
        return [np.log(a)] + [(-1.0) ** (k + 1) / (k * a ** k) for k in range(1, order + 1)]
    if func == "sqrt":
        if complex_mode:
            if a.imag == 0 and a.real <= 0:
                raise EvaluationDomainError("sqrt on its branch cut", to_text(node), point)
        elif a <= 0:
            raise EvaluationDomainError("sqrt of a non-positive value", to_text(node), point)
        coeffs, c = [], 1.0
        for k in range(order + 1):
            coeffs.append(c * a ** (0.5 - k))
            c = c * (0.5 - k) / (k + 1)
        return coeffs
    raise ValueError(func)


def evaluate(expr: ScalarExpr, point: Sequence, order: int = 2, complex_mode: bool = False) -> Jet:
    """Evaluate ``expr`` as an order-``order`` Taylor jet at ``point``."""
    dtype = complex if complex_mode else float
    point = np.asarray(point, dtype=dtype)
    n = expr.nvars
    if point.shape != (n,):
        raise ValueError(f"point has shape {point.shape}, chart has {n} coordinates")
    variables = [Jet.variable(point[k], k, n, order, dtype=dtype) for k in range(n)]
    return evaluate_with(expr, variables, complex_mode, point)


def evaluate_with(expr: ScalarExpr, variables: Sequence[Jet], complex_mode: bool = False,
                  point=None) -> Jet:
    """Evaluate ``expr`` with each coordinate replaced by the given jet.

    This is how an expression in z is pulled back to real coordinates:
    pass ``x + i y`` jets for the z variables.
    """
    if len(variables) != expr.nvars:
        raise ValueError(f"expected {expr.nvars} substitution jets, got {len(variables)}")
    dtype = complex if complex_mode else float
    n, order = variables[0].nvars, variables[0].order
    if point is None:
        point = np.array([v.value[()] for v in variables])

    def walk(node: Expr) -> Jet:
        if isinstance(node, Num):
            return Jet.constant(np.asarray(float(node.value), dtype=dtype), n, order)
        if isinstance(node, Coord):
            return variables[node.index]
        if isinstance(node, Param):
            return Jet.constant(np.asarray(node.value, dtype=dtype), n, order)
        if isinstance(node, Const):
            if node.name == "pi":
                return Jet.constant(np.asarray(math.pi, dtype=dtype), n, order)
            if not complex_mode:
                raise EvaluationDomainError("imaginary unit in real evaluation", "I", point)
            return Jet.constant(np.asarray(1j), n, order)
        if isinstance(node, Neg):
            return -walk(node.arg)
        if isinstance(node, BinOp):
            left, right = walk(node.left), walk(node.right)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if abs(right.value) <= _TINY:
                raise EvaluationDomainError("division by zero", to_text(node), point)
            return left * right.reciprocal()
        if isinstance(node, Pow):
            base = walk(node.base)
            if node.exponent < 0 and abs(base.value) <= _TINY:
                raise EvaluationDomainError("negative power of zero", to_text(node), point)
            return base ** node.exponent
        if isinstance(node, Call):
            arg = walk(node.arg)
            coeffs = _func_taylor(node.func, arg.value[()], order, complex_mode, node, point)
            return arg.series(coeffs)
        raise TypeError(f"not an expression node: {node!r}")

    return walk(expr.root)


@dataclass(frozen=True)
class Jet2Value:
    value: float
    grad: np.ndarray
    hess: np.ndarray


def eval_jet2(expr: ScalarExpr, point: Sequence[float]) -> Jet2Value:
    """Value, gradient and Hessian of a real expression at a point."""
    jet = evaluate(expr, point, order=2)
    return Jet2Value(float(jet.value), np.array(jet.gradient()), np.array(jet.hessian()))


def eval_complex_jet1(expr: ScalarExpr, point: Sequence[complex], conjugates: Sequence[str] = ()):
    """Holomorphic value and d/dz gradient at a complex point.

    ``conjugates`` lists coordinate names that stand for conjugate
    variables; an expression that depends on any of them is not analytic
    in the chart coordinates and is rejected.
    """
    for name in conjugates:
        if uses_coordinate(expr, name):
            raise NonAnalyticError(f"expression depends on conjugate variable {name!r}")
    jet = evaluate(expr, point, order=1, complex_mode=True)
    return complex(jet.value), np.array(jet.gradient())

