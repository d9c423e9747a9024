"""Infix expression surface syntax.

Standard precedence (``^`` above unary minus above ``* /`` above ``+ -``),
``^`` right-associative and restricted to integer literal exponents.
Subtraction, division, and negation are sugar: they lower onto the five
graph operations (``a - b`` as ``a + (-1) * b``, ``a / b`` as
``a * b^(-1)``, ``-a`` as ``(-1) * a``), so the graph never needs
dedicated edge kinds for them.

Number literals parse exactly: integers as int, decimals and scientific
notation as Fraction, which both float and exact graphs coerce losslessly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import ExprSyntaxError, NonIntegerExponent
from .graph import Graph, NodeId


@dataclass(frozen=True)
class Num:
    value: int | Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "ExprAst"


@dataclass(frozen=True)
class AddExpr:
    lhs: "ExprAst"
    rhs: "ExprAst"


@dataclass(frozen=True)
class SubExpr:
    lhs: "ExprAst"
    rhs: "ExprAst"


@dataclass(frozen=True)
class MulExpr:
    lhs: "ExprAst"
    rhs: "ExprAst"


@dataclass(frozen=True)
class DivExpr:
    lhs: "ExprAst"
    rhs: "ExprAst"


@dataclass(frozen=True)
class PowInt:
    base: "ExprAst"
    k: int


@dataclass(frozen=True)
class LogExpr:
    arg: "ExprAst"


@dataclass(frozen=True)
class ExpExpr:
    arg: "ExprAst"


ExprAst = (
    Num | Var | Neg | AddExpr | SubExpr | MulExpr | DivExpr | PowInt | LogExpr | ExpExpr
)

_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+[eE][+-]?\d+|\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", at)
        if m.group("number") is not None:
            tokens.append(("number", m.group("number"), m.start("number")))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, text, at = self.take()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}", at)

    def expr(self) -> ExprAst:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                rhs = self.term()
                node = AddExpr(node, rhs) if text == "+" else SubExpr(node, rhs)
            else:
                return node

    def term(self) -> ExprAst:
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.take()
                rhs = self.unary()
                node = MulExpr(node, rhs) if text == "*" else DivExpr(node, rhs)
            else:
                return node

    def unary(self) -> ExprAst:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> ExprAst:
        node = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            at = self.peek()[2]
            exponent = self.unary()
            return PowInt(node, _as_int(exponent, at))
        return node

    def atom(self) -> ExprAst:
        kind, text, at = self.take()
        if kind == "number":
            return Num(_parse_number(text))
        if kind == "name":
            if text in ("log", "exp"):
                self.expect_op("(")
                inner = self.expr()
                self.expect_op(")")
                return LogExpr(inner) if text == "log" else ExpExpr(inner)
            return Var(text)
        if kind == "op" and text == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ExprSyntaxError(
            "expected a number, variable, function, or '('", at
        )


def _parse_number(text: str) -> int | Fraction:
    if re.fullmatch(r"\d+", text):
        return int(text)
    return Fraction(text)


def _as_int(node: ExprAst, position: int) -> int:
    sign = 1
    while isinstance(node, Neg):
        sign = -sign
        node = node.arg
    if isinstance(node, Num):
        if isinstance(node.value, int):
            return sign * node.value
        if isinstance(node.value, Fraction) and node.value.denominator == 1:
            return sign * int(node.value)
    raise NonIntegerExponent(position)


def parse_expr(text: str) -> ExprAst:
    """Parse expression text, or raise ExprSyntaxError/NonIntegerExponent."""
    parser = _Parser(text)
    node = parser.expr()
    kind, text_, at = parser.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {text_!r}", at)
    return node


def lower(ast: ExprAst, graph: Graph) -> NodeId:
    """Build the expression in ``graph``; variables become (or reuse) inputs."""
    match ast:
        case Num(value):
            return graph.constant(value)
        case Var(name):
            nid = graph.lookup_input(name)
            return nid if nid is not None else graph.input(name)
        case Neg(arg):
            return graph.mul(graph.constant(-1), lower(arg, graph))
        case AddExpr(lhs, rhs):
            return graph.add(lower(lhs, graph), lower(rhs, graph))
        case SubExpr(lhs, rhs):
            return graph.add(
                lower(lhs, graph), graph.mul(graph.constant(-1), lower(rhs, graph))
            )
        case MulExpr(lhs, rhs):
            return graph.mul(lower(lhs, graph), lower(rhs, graph))
        case DivExpr(lhs, rhs):
            return graph.mul(lower(lhs, graph), graph.pow(-1, lower(rhs, graph)))
        case PowInt(base, k):
            return graph.pow(k, lower(base, graph))
        case LogExpr(arg):
            return graph.log(lower(arg, graph))
        case ExpExpr(arg):
            return graph.exp(lower(arg, graph))
    raise TypeError(f"not an expression node: {ast!r}")


def eval_ast(ast: ExprAst, env: Mapping[str, float]) -> float:
    """Reference float interpreter, independent of the graph machinery."""
    match ast:
        case Num(value):
            return float(value)
        case Var(name):
            return float(env[name])
        case Neg(arg):
            return -eval_ast(arg, env)
        case AddExpr(lhs, rhs):
            return eval_ast(lhs, env) + eval_ast(rhs, env)
        case SubExpr(lhs, rhs):
            return eval_ast(lhs, env) - eval_ast(rhs, env)
        case MulExpr(lhs, rhs):
            return eval_ast(lhs, env) * eval_ast(rhs, env)
        case DivExpr(lhs, rhs):
            return eval_ast(lhs, env) / eval_ast(rhs, env)
        case PowInt(base, k):
            return eval_ast(base, env) ** k
        case LogExpr(arg):
            return math.log(eval_ast(arg, env))
        case ExpExpr(arg):
            return math.exp(eval_ast(arg, env))
    raise TypeError(f"not an expression node: {ast!r}")


def variables(ast: ExprAst) -> tuple[str, ...]:
    """Variable names in first-appearance order."""
    seen: dict[str, None] = {}

    def walk(node: ExprAst) -> None:
        match node:
            case Var(name):
                seen.setdefault(name)
            case Num():
                pass
            case Neg(arg) | LogExpr(arg) | ExpExpr(arg):
                walk(arg)
            case PowInt(base, _):
                walk(base)
            case AddExpr(lhs, rhs) | SubExpr(lhs, rhs) | MulExpr(lhs, rhs) | DivExpr(
                lhs, rhs
            ):
                walk(lhs)
                walk(rhs)

    walk(ast)
    return tuple(seen)
