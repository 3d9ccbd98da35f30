"""Tiny arithmetic language for coefficient functions of ``x`` and ``t``.

Grammar (lowest to highest precedence)::

    expr      := term (('+' | '-') term)*
    term      := unary (('*' | '/') unary)*
    unary     := '-' unary | power
    power     := primary ('^' unary)?            # right associative
    primary   := NUMBER | 'x' | 't' | 'pi' | FUNC '(' expr ')'
               | 'piecewise' '(' branch (',' branch)* ',' expr ')'
               | '(' expr ')'
    branch    := cond ':' expr
    cond      := expr (CMP expr)+                # chained, all must hold
    CMP       := '<=' | '<' | '>=' | '>'

``piecewise`` takes the first branch whose condition holds, otherwise the
trailing default.  Evaluation accepts scalars or numpy arrays (broadcast).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .meshgrid import Field, Grid1D, SpaceProfile


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, source: str = ""):
        self.offset = offset
        self.source = source
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class EvalDivisionByZero(ExprError):
    def __init__(self, x, t, node=None):
        self.x = x
        self.t = t
        self.node = node
        where = f"x={x!r}, t={t!r}"
        if node is not None:
            where += f" (node i={node[0]}, n={node[1]})"
        super().__init__(f"division by zero at {where}")


# -- tree ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "x" or "t"


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


@dataclass(frozen=True)
class Condition:
    """Chained comparison ``operands[0] ops[0] operands[1] ops[1] ...``."""

    operands: tuple
    ops: tuple


@dataclass(frozen=True)
class Piecewise:
    branches: tuple  # of (Condition, Expr)
    default: "Expr"


Expr = Union[Num, Var, Pi, Neg, BinOp, Call, Piecewise]

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}
_CMP = {"<=": np.less_equal, "<": np.less, ">=": np.greater_equal, ">": np.greater}

# -- lexer --------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<cmp><=|>=|<|>)
  | (?P<op>[-+*/^(),:])
  """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", _byte_offset(source, pos), source)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), _byte_offset(source, pos)))
        pos = m.end()
    toks.append(_Tok("eof", "", _byte_offset(source, len(source))))
    return toks


def _byte_offset(source: str, char_pos: int) -> int:
    return len(source[:char_pos].encode("utf-8"))


# -- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.toks = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ExprSyntaxError(message, tok.offset, self.source)

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind == "eof":
            found = repr(self.tok.text) if self.tok.kind != "eof" else "end of input"
            raise self.error(f"expected {text!r}, found {found}")
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            name = tok.text
            if name in ("x", "t"):
                return Var(name)
            if name == "pi":
                return Pi()
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            if name == "piecewise":
                return self.piecewise()
            raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.offset, self.source)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "eof":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {tok.text!r}")

    def piecewise(self) -> Piecewise:
        self.expect("(")
        branches = []
        while True:
            first = self.expr()
            if self.tok.kind == "cmp":
                cond = self.condition_tail(first)
                self.expect(":")
                branches.append((cond, self.expr()))
                self.expect(",")
                continue
            # a bare expression is the default and must close the call
            if not branches:
                raise self.error("piecewise needs at least one 'condition: value' branch")
            self.expect(")")
            return Piecewise(tuple(branches), first)

    def condition_tail(self, first: Expr) -> Condition:
        operands = [first]
        ops = []
        while self.tok.kind == "cmp":
            ops.append(self.advance().text)
            operands.append(self.expr())
        return Condition(tuple(operands), tuple(ops))


def parse(source: str) -> Expr:
    """Parse ``source`` into an expression tree."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", 0, source if isinstance(source, str) else "")
    return _Parser(source).parse()


def parse_condition(source: str) -> Condition:
    """Parse a standalone (possibly chained) comparison such as ``0.25 <= x``."""
    if not source.strip():
        raise ExprSyntaxError("empty condition", 0, source)
    p = _Parser(source)
    first = p.expr()
    if p.tok.kind != "cmp":
        raise p.error("expected a comparison operator")
    cond = p.condition_tail(first)
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return cond


# -- evaluation ---------------------------------------------------------------


def evaluate(expr: Expr, x, t):
    """Evaluate at ``(x, t)``; scalars give a float, arrays broadcast.

    Raises :class:`EvalDivisionByZero` naming the first offending point.
    """
    scalar = np.ndim(x) == 0 and np.ndim(t) == 0
    xa = np.asarray(x, dtype=np.float64)
    ta = np.asarray(t, dtype=np.float64)
    with np.errstate(all="ignore"):
        val = _ev(expr, xa, ta)
    val = np.broadcast_to(val, np.broadcast_shapes(xa.shape, ta.shape))
    return float(val) if scalar else np.array(val, dtype=np.float64)


eval = evaluate  # noqa: A001 - public name from the expression API


def _ev(node, x, t):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return x if node.name == "x" else t
    if isinstance(node, Pi):
        return np.float64(math.pi)
    if isinstance(node, Neg):
        return -_ev(node.operand, x, t)
    if isinstance(node, BinOp):
        a = _ev(node.left, x, t)
        b = _ev(node.right, x, t)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            zero = np.broadcast_to(b == 0.0, np.broadcast_shapes(np.shape(a), np.shape(b), x.shape, t.shape))
            if np.any(zero):
                idx = tuple(int(k) for k in np.argwhere(zero)[0])
                xb = np.broadcast_to(x, zero.shape)
                tb = np.broadcast_to(t, zero.shape)
                raise EvalDivisionByZero(float(xb[idx]), float(tb[idx]))
            return a / b
        return np.power(a, b)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_ev(node.arg, x, t))
    if isinstance(node, Piecewise):
        # later branches first so earlier matches overwrite them
        out = _ev(node.default, x, t)
        for cond, value in reversed(node.branches):
            out = np.where(_ev_cond(cond, x, t), _ev(value, x, t), out)
        return out
    raise TypeError(f"not an expression node: {node!r}")


def _ev_cond(cond: Condition, x, t):
    vals = [_ev(o, x, t) for o in cond.operands]
    ok = np.bool_(True)
    for op, a, b in zip(cond.ops, vals, vals[1:]):
        ok = np.logical_and(ok, _CMP[op](a, b))
    return ok


def depends_on(expr: Expr, name: str) -> bool:
    if isinstance(expr, Var):
        return expr.name == name
    if isinstance(expr, Neg):
        return depends_on(expr.operand, name)
    if isinstance(expr, BinOp):
        return depends_on(expr.left, name) or depends_on(expr.right, name)
    if isinstance(expr, Call):
        return depends_on(expr.arg, name)
    if isinstance(expr, Piecewise):
        parts = [expr.default] + [v for _, v in expr.branches]
        parts += [o for c, _ in expr.branches for o in c.operands]
        return any(depends_on(p, name) for p in parts)
    return False


# -- grid sampling ------------------------------------------------------------


def sample_on_grid(expr: Expr, grid: Grid1D) -> Field:
    try:
        vals = evaluate(expr, grid.x[None, :], grid.t[:, None])
    except EvalDivisionByZero as exc:
        raise EvalDivisionByZero(exc.x, exc.t, (_index(grid.x, exc.x), _index(grid.t, exc.t))) from None
    return Field(grid, vals)


def sample_profile(expr: Expr, grid: Grid1D) -> SpaceProfile:
    """Sample at the space nodes with ``t = 0``."""
    try:
        vals = evaluate(expr, grid.x, 0.0)
    except EvalDivisionByZero as exc:
        raise EvalDivisionByZero(exc.x, exc.t, (_index(grid.x, exc.x), 0)) from None
    return SpaceProfile(grid, vals)


def _index(nodes, value) -> int:
    return int(np.argmin(np.abs(np.asarray(nodes) - value)))


# -- printing -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY = 3
_POW = 4
_ATOM = 5


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _POW if node.op == "^" else _PREC[node.op]
    if isinstance(node, Neg):
        return _UNARY
    if isinstance(node, Num) and node.value < 0:
        return 0
    return _ATOM


def _fmt_num(v: float) -> str:
    if math.isfinite(v) and v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_source(expr: Expr) -> str:
    """Render with minimal parentheses; ``parse(to_source(e)) == e``."""
    if isinstance(expr, Num):
        s = _fmt_num(expr.value)
        return f"({s})" if expr.value < 0 else s
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Pi):
        return "pi"
    if isinstance(expr, Neg):
        inner = to_source(expr.operand)
        if _prec(expr.operand) < _UNARY:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, BinOp):
        p = _prec(expr)
        left = to_source(expr.left)
        right = to_source(expr.right)
        if expr.op == "^":
            # left operand must be a primary; the right side parses as unary
            if _prec(expr.left) < _ATOM:
                left = f"({left})"
            if _prec(expr.right) < _UNARY:
                right = f"({right})"
        else:
            if _prec(expr.left) < p:
                left = f"({left})"
            if _prec(expr.right) <= p:
                right = f"({right})"
        return f"{left}{expr.op}{right}"
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    if isinstance(expr, Piecewise):
        parts = [f"{condition_source(c)}: {to_source(v)}" for c, v in expr.branches]
        parts.append(to_source(expr.default))
        return "piecewise(" + ", ".join(parts) + ")"
    raise TypeError(f"not an expression node: {expr!r}")


def condition_source(cond: Condition) -> str:
    out = to_source(cond.operands[0])
    for op, operand in zip(cond.ops, cond.operands[1:]):
        out += f" {op} {to_source(operand)}"
    return out
