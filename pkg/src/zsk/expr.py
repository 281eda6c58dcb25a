"""Small arithmetic expression language for the CLI.

Grammar:  number | x | pi | e | s | n1..n4 | unary - | + - * / ^ |
calls of sin, cos, exp, log, abs, sqrt, frac, pow | parentheses.
'^' is right associative and binds tighter than unary minus on the left
(-x^2 is -(x^2)).  Parsing, printing and re-parsing is a fixed point on
the AST.  Evaluation is numpy-vectorized; out-of-domain points (log of a
nonpositive number, division by zero, ...) raise EvalDomainError instead
of leaking NaN.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "Expression",
    "ExpressionParseError",
    "EvalDomainError",
    "parse_expression",
]


class ExpressionParseError(ValueError):
    pass


class EvalDomainError(ValueError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Node = Num | Var | Neg | BinOp | Call

_VARIABLES = ("x", "s", "n1", "n2", "n3", "n4")
_CONSTANTS = {"pi": math.pi, "e": math.e}
_FUNCTIONS = {
    "sin": (np.sin, 1),
    "cos": (np.cos, 1),
    "exp": (np.exp, 1),
    "log": (np.log, 1),
    "abs": (np.abs, 1),
    "sqrt": (np.sqrt, 1),
    "frac": (lambda v: v - np.floor(v), 1),
    "pow": (np.power, 2),
}

_TOKEN_RE = re.compile(r"""
    (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
  | (?P<ws>\s+)
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExpressionParseError(f"unexpected character {text[pos]!r} at {pos}")
        pos = m.end()
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group()))
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> tuple[str, str]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, text = self.take()
        if text != value:
            raise ExpressionParseError(f"expected {value!r}, found {text or 'end'!r}")

    def parse(self) -> Node:
        node = self.expr()
        kind, text = self.peek()
        if kind != "end":
            raise ExpressionParseError(f"trailing input at {text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())  # right associative
        return base

    def atom(self) -> Node:
        kind, text = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[1] == "(":
                if text not in _FUNCTIONS:
                    raise ExpressionParseError(f"unknown function {text!r}")
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != _FUNCTIONS[text][1]:
                    raise ExpressionParseError(
                        f"{text} takes {_FUNCTIONS[text][1]} argument(s)")
                return Call(text, tuple(args))
            if text in _VARIABLES or text in _CONSTANTS:
                return Var(text)
            raise ExpressionParseError(f"unknown name {text!r}")
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExpressionParseError(f"unexpected token {text or 'end'!r}")


def _precedence(node: Node) -> int:
    if isinstance(node, BinOp):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[node.op]
    if isinstance(node, Neg):
        return 3
    return 9


def _to_source(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = _to_source(node.operand)
        if _precedence(node.operand) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(_to_source(a) for a in node.args)})"
    p = _precedence(node)
    left = _to_source(node.left)
    right = _to_source(node.right)
    # left operand needs parens when looser, or equal for the right-assoc '^'
    if _precedence(node.left) < p or (node.op == "^" and _precedence(node.left) == p):
        left = f"({left})"
    if _precedence(node.right) < p or (
            node.op in ("-", "/") and _precedence(node.right) == p):
        right = f"({right})"
    return f"{left} {node.op} {right}"


def _evaluate(node: Node, env: dict) -> np.ndarray:
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        if node.name in _CONSTANTS:
            return np.float64(_CONSTANTS[node.name])
        if node.name not in env:
            raise EvalDomainError(f"variable {node.name!r} not bound")
        return env[node.name]
    if isinstance(node, Neg):
        return -_evaluate(node.operand, env)
    if isinstance(node, Call):
        fn, _ = _FUNCTIONS[node.func]
        return fn(*(_evaluate(a, env) for a in node.args))
    left = _evaluate(node.left, env)
    right = _evaluate(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        return left / right
    return np.power(left, right)


@dataclass(frozen=True)
class Expression:
    """Parsed expression: print with str(), evaluate with __call__."""

    root: Node
    source: str

    def __str__(self) -> str:
        return _to_source(self.root)

    @property
    def variables(self) -> tuple[str, ...]:
        found: list[str] = []

        def walk(node: Node) -> None:
            if isinstance(node, Var) and node.name in _VARIABLES:
                if node.name not in found:
                    found.append(node.name)
            elif isinstance(node, Neg):
                walk(node.operand)
            elif isinstance(node, BinOp):
                walk(node.left)
                walk(node.right)
            elif isinstance(node, Call):
                for a in node.args:
                    walk(a)

        walk(self.root)
        return tuple(found)

    def __call__(self, **env):
        arrays = {k: np.asarray(v) for k, v in env.items()}
        with np.errstate(all="ignore"):
            out = _evaluate(self.root, arrays)
        out = np.asarray(out)
        if not np.all(np.isfinite(out)):
            raise EvalDomainError(
                f"expression {str(self)!r} left its domain (non-finite result)")
        return out


def parse_expression(text: str) -> Expression:
    """Parse; parse(print(parse(text))) is structurally identical."""
    root = _Parser(_tokenize(text)).parse()
    return Expression(root, text)
