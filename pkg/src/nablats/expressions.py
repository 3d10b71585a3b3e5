"""A small expression language for Lagrangians and constraint integrands.

Variables: t, z, x1..xn (state sampled at rho(t)), v1..vn (nabla derivative).
Operators: + - * / ^ (right-associative power), unary minus.  Functions:
exp, log, sin, cos, sqrt.  Constants pi and e fold to numbers at parse time.

Precedence, tightest first:  ^  >  unary -  >  * /  >  + -.

``parse`` reports syntax problems with the byte offset of the offending
token.  ``evaluate`` is strict about domains (log of non-positive, division
by zero, ...) and names the offending subtree; ``evaluate_many`` is the
vectorized numpy twin used in hot paths, with IEEE semantics (non-finite
values propagate and are checked by callers).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

import numpy as np


class ExprSyntaxError(ValueError):
    """Parse failure; ``offset`` is the byte position in the source string."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExprDomainError(ValueError):
    """Evaluation failure, carrying the offending subtree's source form."""


class MissingVariableError(KeyError):
    pass


# -- nodes --------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str  # one of exp log sin cos sqrt
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")
CONSTANTS = {"pi": math.pi, "e": math.e}
_VAR_RE = re.compile(r"^(t|z|x[1-9][0-9]*|v[1-9][0-9]*)$")


# -- tokenizer ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(src) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {src[bad_at]!r}", bad_at)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


# -- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected {op!r}", off)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"trailing input {val!r}", off)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                e = BinOp(val, e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                e = BinOp(val, e, self.unary())
            else:
                return e

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            # right-associative; exponent may carry a unary minus
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, val, off = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if val in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(val, arg)
            if val in CONSTANTS:
                return Num(CONSTANTS[val])
            if _VAR_RE.match(val):
                return Var(val)
            raise ExprSyntaxError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", off)
        raise ExprSyntaxError(f"unexpected token {val!r}", off)


def parse(src: str) -> Expr:
    """Parse an expression string; raises ExprSyntaxError with byte offset."""
    return _Parser(src).parse()


# -- printer ------------------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PRECEDENCE[e.op]
    if isinstance(e, Neg):
        return _PRECEDENCE["neg"]
    return 9


def to_source(e: Expr) -> str:
    """Render with minimal parentheses; parse(to_source(e)) evaluates like e."""
    if isinstance(e, Num):
        if e.value < 0 or (e.value == 0 and math.copysign(1.0, e.value) < 0):
            return f"(-{-e.value!r})"
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        if _prec(e.arg) < _PRECEDENCE["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Call):
        return f"{e.fn}({to_source(e.arg)})"
    if isinstance(e, BinOp):
        p = _PRECEDENCE[e.op]
        ls = to_source(e.left)
        rs = to_source(e.right)
        # left operand: parenthesize on lower precedence ('^' is right-assoc,
        # so equal precedence on the left also needs parens)
        if _prec(e.left) < p or (e.op == "^" and _prec(e.left) == p):
            ls = f"({ls})"
        # right operand: '-' and '/' are left-associative
        rp = _prec(e.right)
        if rp < p or (rp == p and e.op in ("-", "/")):
            rs = f"({rs})"
        return f"{ls} {e.op} {rs}" if e.op in "+-" else f"{ls}{e.op}{rs}"
    raise TypeError(f"not an expression node: {e!r}")


# -- evaluation ---------------------------------------------------------------


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, Call):
        return variables(e.arg)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    return set()


def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    """Strict scalar evaluation with domain checks naming the subtree."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise MissingVariableError(e.name) from None
    if isinstance(e, Neg):
        return -evaluate(e.arg, env)
    if isinstance(e, Call):
        x = evaluate(e.arg, env)
        try:
            if e.fn == "exp":
                return math.exp(x)
            if e.fn == "log":
                if x <= 0:
                    raise ExprDomainError(f"log of non-positive ({x!r}) in '{to_source(e)}'")
                return math.log(x)
            if e.fn == "sin":
                return math.sin(x)
            if e.fn == "cos":
                return math.cos(x)
            if e.fn == "sqrt":
                if x < 0:
                    raise ExprDomainError(f"sqrt of negative ({x!r}) in '{to_source(e)}'")
                return math.sqrt(x)
        except OverflowError:
            raise ExprDomainError(f"overflow in '{to_source(e)}'") from None
        raise ValueError(f"unknown function {e.fn!r}")
    if isinstance(e, BinOp):
        a = evaluate(e.left, env)
        b = evaluate(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0:
                raise ExprDomainError(f"division by zero in '{to_source(e)}'")
            return a / b
        if e.op == "^":
            try:
                r = a**b
            except (OverflowError, ZeroDivisionError, ValueError):
                raise ExprDomainError(f"invalid power ({a!r})^({b!r}) in '{to_source(e)}'") from None
            if isinstance(r, complex):
                raise ExprDomainError(f"complex power ({a!r})^({b!r}) in '{to_source(e)}'")
            return r
    raise TypeError(f"not an expression node: {e!r}")


def evaluate_many(e: Expr, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorized evaluation over numpy arrays; non-finite values propagate."""
    with np.errstate(all="ignore"):
        return _eval_many(e, env)


def _eval_many(e: Expr, env) -> np.ndarray:
    if isinstance(e, Num):
        return np.asarray(e.value)
    if isinstance(e, Var):
        try:
            return np.asarray(env[e.name], dtype=float)
        except KeyError:
            raise MissingVariableError(e.name) from None
    if isinstance(e, Neg):
        return -_eval_many(e.arg, env)
    if isinstance(e, Call):
        x = _eval_many(e.arg, env)
        if e.fn == "exp":
            return np.exp(x)
        if e.fn == "log":
            return np.log(x)
        if e.fn == "sin":
            return np.sin(x)
        if e.fn == "cos":
            return np.cos(x)
        if e.fn == "sqrt":
            return np.sqrt(x)
        raise ValueError(f"unknown function {e.fn!r}")
    if isinstance(e, BinOp):
        a = _eval_many(e.left, env)
        b = _eval_many(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return a / b
        if e.op == "^":
            return np.power(a, b)
    raise TypeError(f"not an expression node: {e!r}")


# -- symbolic differentiation ---------------------------------------------------


def _is_num(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Num) and (value is None or e.value == value)


def _add(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return _neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return BinOp("-", a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return BinOp("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return Num(0.0)
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def _pow(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 1.0):
        return a
    if _is_num(b, 0.0):
        return Num(1.0)
    return BinOp("^", a, b)


def differentiate(e: Expr, var: str) -> Expr:
    """Symbolic partial derivative with light constant folding.

    Constant exponents use the power rule; a general f^g is rewritten as
    exp(g * log(f)) before differentiating.
    """
    if isinstance(e, Num):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0 if e.name == var else 0.0)
    if isinstance(e, Neg):
        return _neg(differentiate(e.arg, var))
    if isinstance(e, Call):
        du = differentiate(e.arg, var)
        if _is_num(du, 0.0):
            return Num(0.0)
        u = e.arg
        if e.fn == "exp":
            return _mul(Call("exp", u), du)
        if e.fn == "log":
            return _div(du, u)
        if e.fn == "sin":
            return _mul(Call("cos", u), du)
        if e.fn == "cos":
            return _neg(_mul(Call("sin", u), du))
        if e.fn == "sqrt":
            return _div(du, _mul(Num(2.0), Call("sqrt", u)))
        raise ValueError(f"unknown function {e.fn!r}")
    if isinstance(e, BinOp):
        if e.op == "+":
            return _add(differentiate(e.left, var), differentiate(e.right, var))
        if e.op == "-":
            return _sub(differentiate(e.left, var), differentiate(e.right, var))
        if e.op == "*":
            return _add(
                _mul(differentiate(e.left, var), e.right),
                _mul(e.left, differentiate(e.right, var)),
            )
        if e.op == "/":
            df, dg = differentiate(e.left, var), differentiate(e.right, var)
            if _is_num(dg, 0.0):
                return _div(df, e.right)
            num = _sub(_mul(df, e.right), _mul(e.left, dg))
            return _div(num, _mul(e.right, e.right))
        if e.op == "^":
            base, expo = e.left, e.right
            if isinstance(expo, Num):
                db = differentiate(base, var)
                if _is_num(db, 0.0):
                    return Num(0.0)
                return _mul(_mul(expo, _pow(base, Num(expo.value - 1.0))), db)
            # general base^exponent via exp(exponent * log(base))
            rewritten = Call("exp", _mul(expo, Call("log", base)))
            return differentiate(rewritten, var)
    raise TypeError(f"not an expression node: {e!r}")
