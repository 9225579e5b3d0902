"""Immutable expression trees over x1..xn and t.

Nodes are built through the module-level constructors (``const``, ``var``,
``add``, ``mul``, ``div``, ``power``, ``neg``, ``func``) which apply a small
set of normalizations.  The normal form is what makes ``parse(str(e)) == e``
hold for canonical expressions, so every constructor must preserve it:

* ``Add`` is flat, has no zero constants, and keeps a single constant last.
* ``Mul`` is flat, has at most one constant (first), never ``+-1``, and never
  contains a ``Neg``; a negative unit coefficient becomes ``Neg(Mul(...))``.
* ``Neg`` never wraps a constant, a ``Neg``, a ``Mul`` with a coefficient, or
  a ``Div`` (the sign moves into the numerator).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Union

FUNCTIONS = ("sin", "cos", "exp", "sqrt")

Number = Union[int, Fraction]


class Expr:
    """Base class of all expression nodes.

    Subclasses are immutable; equality is structural and the hash is cached.
    Arithmetic operators are overloaded and route through the normalizing
    constructors, so ``x1 * (1 + x2)`` builds a valid tree directly.
    """

    __slots__ = ("_hash",)

    def _key(self) -> tuple:
        raise NotImplementedError

    def __hash__(self) -> int:
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__, self._key()))
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return False
        if hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def __repr__(self) -> str:
        return f"Expr({to_string(self)!r})"

    def __str__(self) -> str:
        return to_string(self)

    # arithmetic sugar
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k: int):
        return power(self, k)

    @property
    def children(self) -> tuple["Expr", ...]:
        return ()


def _init(obj, **fields):
    for k, v in fields.items():
        object.__setattr__(obj, k, v)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Number):
        _init(self, value=Fraction(value))

    def _key(self):
        return (self.value,)


class Var(Expr):
    """Variable ``x<index>`` for index >= 1, or the time symbol for index 0."""

    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 0:
            raise ValueError("variable index must be >= 0")
        _init(self, index=index)

    def _key(self):
        return (self.index,)

    @property
    def name(self) -> str:
        return "t" if self.index == 0 else f"x{self.index}"


class Add(Expr):
    __slots__ = ("args",)

    def __init__(self, args: tuple[Expr, ...]):
        _init(self, args=tuple(args))

    def _key(self):
        return self.args

    @property
    def children(self):
        return self.args


class Mul(Expr):
    __slots__ = ("args",)

    def __init__(self, args: tuple[Expr, ...]):
        _init(self, args=tuple(args))

    def _key(self):
        return self.args

    @property
    def children(self):
        return self.args


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr):
        _init(self, num=num, den=den)

    def _key(self):
        return (self.num, self.den)

    @property
    def children(self):
        return (self.num, self.den)


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        _init(self, base=base, exp=int(exp))

    def _key(self):
        return (self.base, self.exp)

    @property
    def children(self):
        return (self.base,)


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        _init(self, arg=arg)

    def _key(self):
        return (self.arg,)

    @property
    def children(self):
        return (self.arg,)


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        _init(self, name=name, arg=arg)

    def _key(self):
        return (self.name, self.arg)

    @property
    def children(self):
        return (self.arg,)


ZERO = Const(0)
ONE = Const(1)
T = Var(0)


def x(i: int) -> Var:
    return Var(i)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a valid expression")
    if isinstance(value, (int, Fraction)):
        return Const(value)
    if isinstance(value, float):
        # exact binary value of the float; callers wanting decimals use Fraction(str)
        return Const(Fraction(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def const(value) -> Const:
    return Const(Fraction(value))


def var(i: int) -> Var:
    return Var(i)


def is_const(e: Expr, value=None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


def add(*args: Expr) -> Expr:
    flat: list[Expr] = []
    c = Fraction(0)
    for a in args:
        for b in (a.args if isinstance(a, Add) else (a,)):
            if isinstance(b, Const):
                c += b.value
            else:
                flat.append(b)
    if c != 0:
        flat.append(Const(c))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*args: Expr) -> Expr:
    flat: list[Expr] = []
    c = Fraction(1)
    for a in args:
        stack = [a]
        while stack:
            b = stack.pop()
            if isinstance(b, Mul):
                stack.extend(reversed(b.args))
            elif isinstance(b, Neg):
                c = -c
                stack.append(b.arg)
            elif isinstance(b, Const):
                c *= b.value
            else:
                flat.append(b)
    if c == 0:
        return ZERO
    if not flat:
        return Const(c)
    if c == 1 or c == -1:
        body = flat[0] if len(flat) == 1 else Mul(tuple(flat))
        return body if c == 1 else Neg(body)
    return Mul((Const(c), *flat))


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    if isinstance(a, Mul) and isinstance(a.args[0], Const):
        return mul(Const(-a.args[0].value), *a.args[1:])
    if isinstance(a, Div):
        return Div(neg(a.num), a.den)
    return Neg(a)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if b.value == 0:
            raise ZeroDivisionError("division by the zero constant")
        if b.value == 1:
            return a
        if isinstance(a, Const):
            return Const(a.value / b.value)
    if is_const(a, 0):
        return ZERO
    return Div(a, b)


def power(base: Expr, k: int) -> Expr:
    if not isinstance(k, int) or isinstance(k, bool):
        raise TypeError("exponents must be integers")
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and k < 0:
            raise ZeroDivisionError("zero raised to a negative power")
        return Const(base.value**k)
    if isinstance(base, Pow):
        return power(base.base, base.exp * k)
    return Pow(base, k)


def _perfect_square(q: Fraction):
    if q < 0:
        return None
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


def func(name: str, arg: Expr) -> Expr:
    if isinstance(arg, Const):
        v = arg.value
        if name == "sqrt":
            r = _perfect_square(v)
            if r is not None:
                return Const(r)
        elif v == 0:
            return ZERO if name == "sin" else ONE
    return Func(name, arg)


def sin(a) -> Expr:
    return func("sin", as_expr(a))


def cos(a) -> Expr:
    return func("cos", as_expr(a))


def exp(a) -> Expr:
    return func("exp", as_expr(a))


def sqrt(a) -> Expr:
    return func("sqrt", as_expr(a))


def total(items: Iterable[Expr]) -> Expr:
    return add(*items)


def rebuild(e: Expr, children: tuple[Expr, ...]) -> Expr:
    """Rebuild ``e`` with new children through the normalizing constructors."""
    if isinstance(e, Add):
        return add(*children)
    if isinstance(e, Mul):
        return mul(*children)
    if isinstance(e, Div):
        return div(*children)
    if isinstance(e, Pow):
        return power(children[0], e.exp)
    if isinstance(e, Neg):
        return neg(children[0])
    if isinstance(e, Func):
        return func(e.name, children[0])
    return e


def substitute(e: Expr, mapping: dict[int, Expr]) -> Expr:
    """Replace variables (by index, 0 = t) with expressions."""
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Var):
            out = mapping.get(node.index, node)
        elif isinstance(node, Const):
            out = node
        else:
            out = rebuild(node, tuple(go(c) for c in node.children))
        memo[key] = out
        return out

    return go(e)


def variables(e: Expr) -> frozenset[int]:
    seen: set[int] = set()
    out: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            out.add(node.index)
        stack.extend(node.children)
    return frozenset(out)


def is_rational(e: Expr) -> bool:
    """True when ``e`` contains no elementary function application."""
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Func):
            return False
        stack.extend(node.children)
    return True


# ---------------------------------------------------------------- printing

_PREC_ADD, _PREC_NEG, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _PREC_ADD
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, (Mul, Div)):
        return _PREC_MUL
    if isinstance(e, Const):
        if e.value < 0:
            return _PREC_NEG
        return _PREC_MUL if e.value.denominator != 1 else _PREC_ATOM
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _fmt_const(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _split_sign(e: Expr):
    """Return (negative, magnitude) with ``neg(magnitude) == e`` when negative."""
    if isinstance(e, Neg):
        return True, e.arg
    if isinstance(e, Const) and e.value < 0:
        return True, Const(-e.value)
    if isinstance(e, Mul) and isinstance(e.args[0], Const) and e.args[0].value < 0:
        return True, mul(Const(-e.args[0].value), *e.args[1:])
    if isinstance(e, Div):
        negative, mag = _split_sign(e.num)
        if negative:
            return True, Div(mag, e.den)
    return False, e


def _wrap(e: Expr, min_prec: int) -> str:
    s = to_string(e)
    return f"({s})" if _prec(e) < min_prec else s


def to_string(e: Expr) -> str:
    """Print ``e`` in the input grammar; canonical trees round-trip exactly."""
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Add):
        parts = [to_string(e.args[0])]
        for a in e.args[1:]:
            negative, mag = _split_sign(a)
            if negative:
                parts.append(" - " + _wrap(mag, _PREC_MUL))
            else:
                parts.append(" + " + to_string(a))
        return "".join(parts)
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _PREC_MUL)
    if isinstance(e, Mul):
        first = e.args[0]
        out = [to_string(first) if isinstance(first, Const) else _wrap(first, _PREC_POW)]
        out.extend(_wrap(a, _PREC_POW) for a in e.args[1:])
        return "*".join(out)
    if isinstance(e, Div):
        return f"{_wrap(e.num, _PREC_NEG)}/{_wrap(e.den, _PREC_POW)}"
    if isinstance(e, Pow):
        base = _wrap(e.base, _PREC_ATOM)
        return f"{base}^{e.exp}"
    raise TypeError(type(e))
