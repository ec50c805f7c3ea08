"""Scalar expression trees with symbolic derivatives and rigorous interval evaluation.

Lifting dictionaries are defined over a small grammar (identifiers, ``+ - * ^``,
``exp``/``sin``/``cos``/``tan``) so that one representation serves point
evaluation, Jacobians, interval-bounded Hessians, and serialization.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from ._kernels import eval_bank
from ._kernels.program import (
    OP_ADD,
    OP_CONST,
    OP_COS,
    OP_EXP,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_SIN,
    OP_SUB,
    OP_TAN,
    OP_VAR,
    ProgramBank,
)

FUNCTIONS = ("exp", "sin", "cos", "tan")

# Outward inflation applied to every interval operation; stands in for
# directed rounding, so enclosures are only sound up to machine precision.
INTERVAL_EPS = 1e-12

_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


class ExprError(ValueError):
    """Malformed expression or unsupported construct."""


class IntervalDomainError(ArithmeticError):
    """The expression is not defined everywhere on the requested box (tan pole)."""


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    index: int
    name: str


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Fun(Expr):
    name: str
    arg: Expr


_ZERO = Const(0.0)
_ONE = Const(1.0)


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if a == b:
        return _ZERO
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return _ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Mul(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: Expr, n: int) -> Expr:
    if not isinstance(n, int) or n < 0:
        raise ExprError(f"exponent must be a nonnegative integer, got {n!r}")
    if n == 0:
        return _ONE
    if n == 1:
        return a
    if isinstance(a, Const):
        return Const(a.value**n)
    return Pow(a, n)


def fun(name: str, a: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ExprError(f"unknown function {name!r}")
    if isinstance(a, Const):
        return Const(getattr(math, name)(a.value))
    return Fun(name, a)


def diff(e: Expr, index: int) -> Expr:
    """Partial derivative with respect to variable `index`, simplified."""
    if isinstance(e, Const):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.index == index else _ZERO
    if isinstance(e, Add):
        return add(diff(e.left, index), diff(e.right, index))
    if isinstance(e, Sub):
        return sub(diff(e.left, index), diff(e.right, index))
    if isinstance(e, Mul):
        return add(
            mul(diff(e.left, index), e.right), mul(e.left, diff(e.right, index))
        )
    if isinstance(e, Neg):
        return neg(diff(e.arg, index))
    if isinstance(e, Pow):
        inner = diff(e.base, index)
        return mul(mul(Const(float(e.exponent)), power(e.base, e.exponent - 1)), inner)
    if isinstance(e, Fun):
        inner = diff(e.arg, index)
        if e.name == "exp":
            outer = Fun("exp", e.arg)
        elif e.name == "sin":
            outer = Fun("cos", e.arg)
        elif e.name == "cos":
            return neg(mul(Fun("sin", e.arg), inner))
        else:  # tan' = 1 + tan^2
            outer = add(_ONE, power(Fun("tan", e.arg), 2))
        return mul(outer, inner)
    raise ExprError(f"cannot differentiate {e!r}")


def variables(e: Expr) -> set:
    """Indices of all variables occurring in the expression."""
    if isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, (Add, Sub, Mul)):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.arg)


def is_affine(e: Expr) -> bool:
    """True iff every second partial derivative simplifies to the zero constant."""
    occurring = sorted(variables(e))
    for i in occurring:
        gi = diff(e, i)
        for j in occurring:
            if not _is_const(diff(gi, j), 0.0):
                return False
    return True


def affine_coefficients(e: Expr, n_vars: int):
    """Return (a, b) with e(x) = a @ x + b; raises ExprError if e is not affine."""
    if not is_affine(e):
        raise ExprError("expression is not affine")
    a = np.zeros(n_vars)
    for i in variables(e):
        d = diff(e, i)
        a[i] = d.value  # affine => derivative folded to a constant
    b = evaluate(e, np.zeros(n_vars))
    return a, float(b)


def evaluate(e: Expr, values) -> np.ndarray:
    """Tree-walk evaluation; `values` is (n_vars,) or (n_vars, m)."""
    values = np.asarray(values, dtype=float)
    if isinstance(e, Const):
        return np.broadcast_to(e.value, values.shape[1:]).copy() if values.ndim > 1 else np.float64(e.value)
    if isinstance(e, Var):
        return values[e.index]
    if isinstance(e, Add):
        return evaluate(e.left, values) + evaluate(e.right, values)
    if isinstance(e, Sub):
        return evaluate(e.left, values) - evaluate(e.right, values)
    if isinstance(e, Mul):
        return evaluate(e.left, values) * evaluate(e.right, values)
    if isinstance(e, Neg):
        return -evaluate(e.arg, values)
    if isinstance(e, Pow):
        return evaluate(e.base, values) ** e.exponent
    if isinstance(e, Fun):
        return getattr(np, e.name)(evaluate(e.arg, values))
    raise ExprError(f"cannot evaluate {e!r}")


# ---------------------------------------------------------------------------
# interval arithmetic
# ---------------------------------------------------------------------------


def _inflate(lo: float, hi: float):
    return lo - INTERVAL_EPS * abs(lo), hi + INTERVAL_EPS * abs(hi)


def _contains_shifted(lo, hi, anchor, period):
    # does [lo, hi] contain anchor + k*period for some integer k?
    k = math.ceil((lo - anchor) / period)
    return anchor + k * period <= hi


def _sin_range(lo, hi):
    if hi - lo >= _TWO_PI:
        return -1.0, 1.0
    s_lo, s_hi = math.sin(lo), math.sin(hi)
    out_hi = 1.0 if _contains_shifted(lo, hi, _HALF_PI, _TWO_PI) else max(s_lo, s_hi)
    out_lo = -1.0 if _contains_shifted(lo, hi, -_HALF_PI, _TWO_PI) else min(s_lo, s_hi)
    return out_lo, out_hi


def _cos_range(lo, hi):
    if hi - lo >= _TWO_PI:
        return -1.0, 1.0
    c_lo, c_hi = math.cos(lo), math.cos(hi)
    out_hi = 1.0 if _contains_shifted(lo, hi, 0.0, _TWO_PI) else max(c_lo, c_hi)
    out_lo = -1.0 if _contains_shifted(lo, hi, math.pi, _TWO_PI) else min(c_lo, c_hi)
    return out_lo, out_hi


def interval_range(e: Expr, lower, upper):
    """Rigorous enclosure (lo, hi) of e over the box [lower, upper].

    Uses standard interval rules with a relative outward inflation of
    ``INTERVAL_EPS`` per operation. Raises IntervalDomainError if a tan
    pole lies inside the box image.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return _interval(e, lower, upper)


def _interval(e, lower, upper):
    if isinstance(e, Const):
        return e.value, e.value
    if isinstance(e, Var):
        return lower[e.index], upper[e.index]
    if isinstance(e, Add):
        a_lo, a_hi = _interval(e.left, lower, upper)
        b_lo, b_hi = _interval(e.right, lower, upper)
        return _inflate(a_lo + b_lo, a_hi + b_hi)
    if isinstance(e, Sub):
        a_lo, a_hi = _interval(e.left, lower, upper)
        b_lo, b_hi = _interval(e.right, lower, upper)
        return _inflate(a_lo - b_hi, a_hi - b_lo)
    if isinstance(e, Mul):
        a_lo, a_hi = _interval(e.left, lower, upper)
        b_lo, b_hi = _interval(e.right, lower, upper)
        prods = (a_lo * b_lo, a_lo * b_hi, a_hi * b_lo, a_hi * b_hi)
        return _inflate(min(prods), max(prods))
    if isinstance(e, Neg):
        a_lo, a_hi = _interval(e.arg, lower, upper)
        return -a_hi, -a_lo
    if isinstance(e, Pow):
        a_lo, a_hi = _interval(e.base, lower, upper)
        n = e.exponent
        if n % 2 == 1:
            return _inflate(a_lo**n, a_hi**n)
        if a_lo >= 0.0:
            return _inflate(a_lo**n, a_hi**n)
        if a_hi <= 0.0:
            return _inflate(a_hi**n, a_lo**n)
        return _inflate(0.0, max(-a_lo, a_hi) ** n)
    if isinstance(e, Fun):
        a_lo, a_hi = _interval(e.arg, lower, upper)
        if e.name == "exp":
            return _inflate(math.exp(a_lo), math.exp(a_hi))
        if e.name == "sin":
            return _inflate(*_sin_range(a_lo, a_hi))
        if e.name == "cos":
            return _inflate(*_cos_range(a_lo, a_hi))
        # tan: monotone between poles at pi/2 + k*pi
        if _contains_shifted(a_lo, a_hi, _HALF_PI, math.pi):
            raise IntervalDomainError(
                f"tan is unbounded on [{a_lo}, {a_hi}] (pole inside interval)"
            )
        return _inflate(math.tan(a_lo), math.tan(a_hi))
    raise ExprError(f"cannot interval-evaluate {e!r}")


# ---------------------------------------------------------------------------
# parsing / printing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprError(f"unexpected character {text[pos]!r} in {text!r}")
        pos = m.end()
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident")))
        else:
            tokens.append(("op", m.group("op")))
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, tokens, var_indices):
        self.tokens = tokens
        self.pos = 0
        self.var_indices = var_indices

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, op):
        kind, val = self.next()
        if kind != "op" or val != op:
            raise ExprError(f"expected {op!r}, got {val!r}")

    def parse_expr(self):
        node = self.parse_term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            _, op = self.next()
            rhs = self.parse_term()
            node = add(node, rhs) if op == "+" else sub(node, rhs)
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.peek() == ("op", "*"):
            self.next()
            node = mul(node, self.parse_factor())
        return node

    def parse_factor(self):
        if self.peek() == ("op", "-"):
            self.next()
            return neg(self.parse_factor())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek() == ("op", "^"):
            self.next()
            kind, val = self.next()
            if kind != "num" or not re.fullmatch(r"\d+", val):
                raise ExprError(f"exponent must be a nonnegative integer, got {val!r}")
            return power(base, int(val))
        return base

    def parse_atom(self):
        kind, val = self.next()
        if kind == "num":
            return Const(float(val))
        if kind == "ident":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return fun(val, arg)
            if val not in self.var_indices:
                raise ExprError(f"unknown identifier {val!r}")
            return Var(self.var_indices[val], val)
        if kind == "op" and val == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        raise ExprError(f"unexpected token {val!r}")


def parse(text: str, var_names) -> Expr:
    """Parse an infix expression over the named variables (in index order)."""
    var_indices = {name: i for i, name in enumerate(var_names)}
    parser = _Parser(_tokenize(text), var_indices)
    node = parser.parse_expr()
    if parser.peek()[0] != "end":
        raise ExprError(f"trailing input in {text!r}")
    return node


_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(e):
    if isinstance(e, (Add, Sub)):
        return _PREC_ADD
    if isinstance(e, Mul):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def to_string(e: Expr) -> str:
    """Render to the infix grammar; parses back to an equal tree."""
    if isinstance(e, Const):
        if e.value < 0:
            return f"-{_wrap(Const(-e.value), _PREC_NEG)}"
        return repr(e.value) if e.value != int(e.value) else str(int(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        return f"{_wrap(e.left, _PREC_ADD)} + {_wrap(e.right, _PREC_ADD)}"
    if isinstance(e, Sub):
        return f"{_wrap(e.left, _PREC_ADD)} - {_wrap(e.right, _PREC_ADD + 1)}"
    if isinstance(e, Mul):
        return f"{_wrap(e.left, _PREC_MUL)}*{_wrap(e.right, _PREC_MUL)}"
    if isinstance(e, Neg):
        return f"-{_wrap(e.arg, _PREC_NEG)}"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _PREC_ATOM)}^{e.exponent}"
    if isinstance(e, Fun):
        return f"{e.name}({to_string(e.arg)})"
    raise ExprError(f"cannot print {e!r}")


def _wrap(e, min_prec):
    s = to_string(e)
    return f"({s})" if _prec(e) < min_prec else s


# ---------------------------------------------------------------------------
# compilation to postfix programs (consumed by the evaluation backends)
# ---------------------------------------------------------------------------

_FUN_OPS = {"exp": OP_EXP, "sin": OP_SIN, "cos": OP_COS, "tan": OP_TAN}


def _emit(e, codes, args, consts, const_index):
    if isinstance(e, Const):
        key = e.value
        if key not in const_index:
            const_index[key] = len(consts)
            consts.append(e.value)
        codes.append(OP_CONST)
        args.append(const_index[key])
        return 1
    if isinstance(e, Var):
        codes.append(OP_VAR)
        args.append(e.index)
        return 1
    if isinstance(e, (Add, Sub, Mul)):
        d1 = _emit(e.left, codes, args, consts, const_index)
        d2 = _emit(e.right, codes, args, consts, const_index)
        codes.append({Add: OP_ADD, Sub: OP_SUB, Mul: OP_MUL}[type(e)])
        args.append(0)
        return max(d1, 1 + d2)
    if isinstance(e, Neg):
        d = _emit(e.arg, codes, args, consts, const_index)
        codes.append(OP_NEG)
        args.append(0)
        return d
    if isinstance(e, Pow):
        d = _emit(e.base, codes, args, consts, const_index)
        codes.append(OP_POW)
        args.append(e.exponent)
        return d
    if isinstance(e, Fun):
        d = _emit(e.arg, codes, args, consts, const_index)
        codes.append(_FUN_OPS[e.name])
        args.append(0)
        return d
    raise ExprError(f"cannot compile {e!r}")


def compile_programs(exprs, n_vars: int) -> ProgramBank:
    """Compile expressions into one program bank for the evaluation backends."""
    codes: list = []
    args: list = []
    consts: list = []
    const_index: dict = {}
    offsets = [0]
    max_stack = 1
    for e in exprs:
        depth = _emit(e, codes, args, consts, const_index)
        max_stack = max(max_stack, depth)
        offsets.append(len(codes))
    return ProgramBank(
        codes=np.asarray(codes, dtype=np.int32),
        args=np.asarray(args, dtype=np.int32),
        consts=np.asarray(consts, dtype=np.float64),
        offsets=np.asarray(offsets, dtype=np.int32),
        n_vars=n_vars,
        max_stack=max_stack,
    )


def eval_programs(bank: ProgramBank, points) -> np.ndarray:
    """Evaluate a compiled bank at points (n_vars, m); returns (n_programs, m)."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] != bank.n_vars:
        raise ExprError(
            f"expected {bank.n_vars} variables, got points with {points.shape[0]} rows"
        )
    return eval_bank(bank, points)
