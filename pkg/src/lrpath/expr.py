"""Arithmetic expressions over ``x`` and ``t`` for user-supplied potentials.

Grammar (``^`` and ``**`` are the same right-associative power)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Expressions compile to closures over numpy, so they broadcast like any
numpy function.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<op>\*\*|[-+*/^()])
""", re.VERBOSE)


class ExprError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at column {pos + 1} in {text!r}")
        self.text = text
        self.pos = pos


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    pos: int


def tokenize(text: str) -> list:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprError(f"unexpected character {text[pos]!r}", text, pos)
        if m.lastgroup != "ws":
            value = m.group()
            toks.append(_Tok(m.lastgroup, "^" if value == "**" else value, pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, variables):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.variables = tuple(variables)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ExprError(message, self.text, tok.pos)

    def accept(self, *ops):
        if self.tok.kind == "op" and self.tok.value in ops:
            self.i += 1
            return self.toks[self.i - 1].value
        return None

    def expect(self, op):
        if self.accept(op) is None:
            found = self.tok.value or "end of input"
            raise self.error(f"expected {op!r}, found {found!r}")

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.value!r}")
        return node

    def expr(self):
        node = self.term()
        while (op := self.accept("+", "-")) is not None:
            rhs = self.term()
            node = _binary(op, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while (op := self.accept("*", "/")) is not None:
            rhs = self.unary()
            node = _binary(op, node, rhs)
        return node

    def unary(self):
        if self.accept("-") is not None:
            inner = self.unary()
            return lambda env: -inner(env)
        if self.accept("+") is not None:
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^") is not None:
            exponent = self.unary()
            return _binary("^", base, exponent)
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            value = float(tok.value)
            return lambda env: value
        if tok.kind == "name":
            self.i += 1
            name = tok.value
            if name in FUNCTIONS:
                fn = FUNCTIONS[name]
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return lambda env: fn(arg(env))
            if name in self.variables:
                return lambda env: env[name]
            if name in CONSTANTS:
                value = CONSTANTS[name]
                return lambda env: value
            raise self.error(f"unknown name {name!r}", tok)
        if self.accept("(") is not None:
            node = self.expr()
            self.expect(")")
            return node
        found = tok.value or "end of input"
        raise self.error(f"unexpected {found!r}")


def _binary(op, a, b):
    if op == "+":
        return lambda env: a(env) + b(env)
    if op == "-":
        return lambda env: a(env) - b(env)
    if op == "*":
        return lambda env: a(env) * b(env)
    if op == "/":
        return lambda env: a(env) / b(env)
    return lambda env: np.power(a(env), b(env))


@dataclass(frozen=True)
class Expression:
    """A compiled expression; call it with the variables as keyword arguments."""

    text: str
    variables: tuple
    _fn: Callable

    def __call__(self, **values):
        missing = [v for v in self.variables if v not in values]
        if missing:
            raise TypeError(f"missing values for {missing}")
        env = {k: np.asarray(v, dtype=float) for k, v in values.items()}
        with np.errstate(all="ignore"):
            out = self._fn(env)
        shape = np.broadcast_shapes(*(np.shape(env[v]) for v in self.variables))
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy() if shape else \
            float(out)

    def __str__(self):
        return self.text


def compile_expression(text: str, variables=("x", "t")) -> Expression:
    """Parse ``text`` into an :class:`Expression`; raises :class:`ExprError`."""
    if not text or not text.strip():
        raise ExprError("empty expression", text or "", 0)
    return Expression(text.strip(), tuple(variables), _Parser(text, variables).parse())
