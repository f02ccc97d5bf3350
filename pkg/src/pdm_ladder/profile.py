"""Mass-profile expressions: parsing, symbolic differentiation, evaluation.

A profile is written in a small infix language::

    1 + x^2
    1.1 + cos(x)
    (1*1)/(1-exp(-1)) * exp(-1*x)

Supported: numeric literals, the variable ``x``, the constants ``pi`` and
``e``, the functions ``sqrt exp log sin cos sinh cosh asinh abs``, infix
``+ - * / ^`` and parentheses.  ``^`` binds tightest, associates to the right
and requires a constant exponent.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParseError, PositivityError

__all__ = [
    "Expr", "Const", "Var", "Unary", "Binary", "Power",
    "parse", "differentiate", "MassProfile", "make_profile",
]

FUNCTIONS = ("neg", "sqrt", "exp", "log", "sin", "cos", "sinh", "cosh", "asinh", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}


class Expr:
    """Base class of the immutable expression tree."""

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        raise NotImplementedError

    # operator sugar used by the differentiation rules
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __neg__(self):
        return unary("neg", self)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def evaluate(self, x):
        return np.full(np.shape(x), self.value, dtype=float)

    def __str__(self):
        return repr(self.value) if self.value >= 0 else f"({self.value!r})"


@dataclass(frozen=True)
class Var(Expr):
    def evaluate(self, x):
        return np.asarray(x, dtype=float)

    def __str__(self):
        return "x"


@dataclass(frozen=True)
class Unary(Expr):
    fn: str
    arg: Expr

    def evaluate(self, x):
        u = self.arg.evaluate(x)
        fn = self.fn
        if fn == "neg":
            return -u
        if fn == "sqrt":
            _require(u >= 0, x, "sqrt of a negative number")
            return np.sqrt(u)
        if fn == "log":
            _require(u > 0, x, "log of a non-positive number")
            return np.log(u)
        with np.errstate(over="ignore"):
            out = getattr(np, {"asinh": "arcsinh"}.get(fn, fn))(u)
        _require(np.isfinite(out), x, f"{fn} overflow")
        return out

    def __str__(self):
        if self.fn == "neg":
            return f"(-{self.arg})"
        return f"{self.fn}({self.arg})"


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, x):
        a = self.left.evaluate(x)
        b = self.right.evaluate(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        _require(b != 0, x, "division by zero")
        return a / b

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: float

    def evaluate(self, x):
        u = self.base.evaluate(x)
        p = self.exponent
        if not float(p).is_integer():
            _require(u >= 0, x, "fractional power of a negative number")
        if p < 0:
            _require(u != 0, x, "negative power of zero")
        with np.errstate(over="ignore"):
            out = np.power(u, p)
        _require(np.isfinite(out), x, "power overflow")
        return out

    def __str__(self):
        return f"({self.base})^{self.exponent!r}"


def _require(ok, x, message):
    ok = np.asarray(ok)
    if not ok.all():
        xs = np.broadcast_to(np.asarray(x, dtype=float), ok.shape)
        bad = float(xs[~ok].flat[0]) if ok.ndim else float(xs)
        raise DomainError(f"{message} at x = {bad:g}", x=bad)


def _wrap(v):
    return v if isinstance(v, Expr) else Const(float(v))


# --- smart constructors with constant folding --------------------------------

def _const(e):
    return e.value if isinstance(e, Const) else None


def _folded(fn, *args):
    """Constant-fold ``fn(*args)``; None when the result is not a finite float."""
    try:
        v = float(fn(*args))
    except (OverflowError, ZeroDivisionError, DomainError):
        return None
    return Const(v) if math.isfinite(v) else None


def add(a, b):
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None and (c := _folded(lambda: ca + cb)):
        return c
    if ca == 0:
        return b
    if cb == 0:
        return a
    return Binary("+", a, b)


def sub(a, b):
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None and (c := _folded(lambda: ca - cb)):
        return c
    if cb == 0:
        return a
    if ca == 0:
        return unary("neg", b)
    return Binary("-", a, b)


def mul(a, b):
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None and (c := _folded(lambda: ca * cb)):
        return c
    if ca == 0 or cb == 0:
        return Const(0.0)
    if ca == 1:
        return b
    if cb == 1:
        return a
    if ca == -1:
        return unary("neg", b)
    if cb == -1:
        return unary("neg", a)
    return Binary("*", a, b)


def div(a, b):
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None and (c := _folded(lambda: ca / cb)):
        return c
    if ca == 0 and cb != 0:
        return Const(0.0)
    if cb == 1:
        return a
    return Binary("/", a, b)


def power(base, p):
    cb = _const(base)
    if cb is not None and not (cb < 0 and not float(p).is_integer()) and not (cb == 0 and p < 0):
        c = _folded(lambda: cb ** p)
        if c is not None:
            return c
    if p == 0:
        return Const(1.0)
    if p == 1:
        return base
    return Power(base, float(p))


def unary(fn, arg):
    c = _const(arg)
    if fn == "neg":
        if c is not None:
            return Const(-c)
        if isinstance(arg, Unary) and arg.fn == "neg":
            return arg.arg
        return Unary("neg", arg)
    if c is not None:
        folded = _folded(lambda: Unary(fn, arg).evaluate(0.0))
        if folded is not None:
            return folded
    return Unary(fn, arg)


# --- differentiation ---------------------------------------------------------

def differentiate(e: Expr) -> Expr:
    """Exact derivative with respect to ``x`` (constant folding only)."""
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0)
    if isinstance(e, Binary):
        a, b = e.left, e.right
        da, db = differentiate(a), differentiate(b)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, b), mul(a, db))
        # quotient rule
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    if isinstance(e, Power):
        return mul(mul(Const(e.exponent), power(e.base, e.exponent - 1)),
                   differentiate(e.base))
    if isinstance(e, Unary):
        u = e.arg
        du = differentiate(u)
        fn = e.fn
        if fn == "neg":
            return unary("neg", du)
        if fn == "sqrt":
            return div(du, mul(Const(2.0), e))
        if fn == "exp":
            return mul(e, du)
        if fn == "log":
            return div(du, u)
        if fn == "sin":
            return mul(unary("cos", u), du)
        if fn == "cos":
            return unary("neg", mul(unary("sin", u), du))
        if fn == "sinh":
            return mul(unary("cosh", u), du)
        if fn == "cosh":
            return mul(unary("sinh", u), du)
        if fn == "asinh":
            return div(du, unary("sqrt", add(Const(1.0), power(u, 2))))
        if fn == "abs":
            # d|u| = u u' / |u|, undefined at u = 0 like the kink itself
            return div(mul(u, du), e)
    raise TypeError(f"cannot differentiate {e!r}")


# --- parser ------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        mt = _TOKEN.match(text, pos)
        if mt is None or mt.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = mt.lastgroup
        start = mt.start(kind)
        tokens.append((kind, mt.group(kind), start))
        pos = mt.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, value):
        kind, val, pos = self.tok
        if val != value or kind != "op":
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {what}", pos)
        self.advance()

    def parse(self):
        e = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            e = self.unary()
            return unary("neg", e) if op == "-" else e
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            pos = self.advance()[2]
            exponent = self.unary()
            if not isinstance(exponent, Const):
                raise ParseError("exponent of '^' must be a constant", pos)
            return power(base, exponent.value)
        return base

    def atom(self):
        kind, val, pos = self.tok
        if kind == "num":
            self.advance()
            return Const(float(val))
        if kind == "name":
            self.advance()
            if val == "x":
                return Var()
            if val in CONSTANTS:
                return Const(CONSTANTS[val])
            if val in FUNCTIONS and val != "neg":
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return unary(val, arg)
            raise ParseError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", pos)


def parse(text: str) -> Expr:
    """Parse profile text into an expression tree.

    Raises
    ------
    ParseError
        On malformed input, an unknown identifier, or a non-constant
        exponent.  ``err.offset`` is the byte offset of the offending token.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


# --- mass profiles ------------------------------------------------------------

@dataclass(frozen=True)
class MassProfile:
    """A strictly positive mass m(x) with its first two exact derivatives."""

    text: str
    m: Expr
    m1: Expr
    m2: Expr
    domain: tuple[float, float]
    floor: float = 1e-8
    name: str | None = field(default=None, compare=False)

    def __call__(self, x):
        return self.m.evaluate(x)

    def with_domain(self, domain):
        """Same expression re-validated on a different interval."""
        return make_profile(self.text, domain, self.floor, name=self.name)

    def check_positive(self, x, where="sample"):
        m = self.m.evaluate(x)
        ok = np.ravel(m >= self.floor)
        bad = np.flatnonzero(~ok)
        if bad.size:
            # on sorted samples, report the first failing point next to a valid
            # one: that is where m crosses the floor
            edge = [i for i in bad if (i > 0 and ok[i - 1]) or (i + 1 < ok.size and ok[i + 1])]
            i = edge[0] if edge and np.ndim(x) == 1 else bad[0]
            xb = float(np.asarray(x).flat[i])
            raise PositivityError(
                f"m(x) = {float(m.flat[i]):.6g} below floor {self.floor:g} "
                f"at {where} x = {xb:.6g}", x=xb)
        return m


def _five_point(f, x, h):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def make_profile(m_text, domain, floor=1e-8, *, name=None, probes=1001):
    """Parse, differentiate twice and validate a mass profile.

    Positivity is probed on ``probes`` uniform points of ``domain``; the
    symbolic derivatives are cross-checked against 5-point central
    differences at the same points (relative tolerance 1e-6).
    """
    lo, hi = (float(v) for v in domain)
    if not lo < hi:
        raise ValueError(f"empty domain [{lo}, {hi}]")
    if not floor > 0:
        raise ValueError("positivity floor must be > 0")
    m = parse(m_text)
    m1 = differentiate(m)
    m2 = differentiate(m1)
    prof = MassProfile(m_text, m, m1, m2, (lo, hi), float(floor), name)

    xs = np.linspace(lo, hi, max(int(probes), 1001))
    prof.check_positive(xs, where="probe")
    _check_derivatives(prof, xs[1:-1])
    return prof


def _check_derivatives(prof, xs, rtol=1e-6):
    width = prof.domain[1] - prof.domain[0]
    h = 1e-3 * min(1.0, width)
    for sym, num, label in (
        (prof.m1, prof.m, "m'"),
        (prof.m2, prof.m1, "m''"),
    ):
        exact = sym.evaluate(xs)
        try:
            approx = _five_point(num.evaluate, xs, h)
        except DomainError:
            # profile is only defined on the domain itself; skip the edges
            inner = xs[(xs - 2 * h > prof.domain[0]) & (xs + 2 * h < prof.domain[1])]
            exact = sym.evaluate(inner)
            approx = _five_point(num.evaluate, inner, h)
        scale = max(1.0, float(np.max(np.abs(exact))))
        err = float(np.max(np.abs(exact - approx)))
        if err > rtol * scale:
            raise ArithmeticError(
                f"symbolic {label} disagrees with finite differences (max error {err:.3g})")
