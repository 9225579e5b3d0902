"""Differentiation and floating-point evaluation of expression trees."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from . import nodes as N
from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Var

NONFINITE = math.nan


def diff(e: Expr, v: int) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``v`` (0 = t)."""
    memo: dict[int, Expr] = {}

    def d(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            out = N.ZERO
        elif isinstance(node, Var):
            out = N.ONE if node.index == v else N.ZERO
        elif isinstance(node, Add):
            out = N.add(*(d(a) for a in node.args))
        elif isinstance(node, Neg):
            out = N.neg(d(node.arg))
        elif isinstance(node, Mul):
            terms = []
            for i, a in enumerate(node.args):
                da = d(a)
                if N.is_const(da, 0):
                    continue
                terms.append(N.mul(*node.args[:i], da, *node.args[i + 1 :]))
            out = N.add(*terms)
        elif isinstance(node, Div):
            dn, dd = d(node.num), d(node.den)
            if N.is_const(dd, 0):
                out = N.div(dn, node.den)
            else:
                top = N.add(N.mul(dn, node.den), N.neg(N.mul(node.num, dd)))
                out = N.div(top, N.power(node.den, 2))
        elif isinstance(node, Pow):
            db = d(node.base)
            out = N.mul(N.Const(node.exp), N.power(node.base, node.exp - 1), db)
        elif isinstance(node, Func):
            da = d(node.arg)
            if N.is_const(da, 0):
                out = N.ZERO
            elif node.name == "sin":
                out = N.mul(N.cos(node.arg), da)
            elif node.name == "cos":
                out = N.neg(N.mul(N.sin(node.arg), da))
            elif node.name == "exp":
                out = N.mul(node, da)
            else:  # sqrt
                out = N.div(da, N.mul(N.Const(2), node))
        else:
            raise TypeError(type(node))
        memo[key] = out
        return out

    return d(e)


def gradient(e: Expr, n: int) -> list[Expr]:
    return [diff(e, i) for i in range(1, n + 1)]


def _point_lookup(point: Sequence[float], t: float):
    def value(idx: int) -> float:
        if idx == 0:
            return t
        if idx > len(point):
            raise IndexError(f"x{idx} has no coordinate in a {len(point)}-dimensional point")
        return float(point[idx - 1])

    return value


_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sqrt": math.sqrt,
}


def evaluate(e: Expr, point: Sequence[float], t: float = 0.0) -> float:
    """IEEE evaluation at (x, t); poles and domain errors give ``nan``."""
    return evaluate_with_scale(e, point, t)[0]


def evaluate_with_scale(e: Expr, point: Sequence[float], t: float = 0.0) -> tuple[float, float]:
    """Evaluate ``e`` and a magnitude scale for rounding-aware comparisons.

    The scale bounds the size of intermediate quantities that cancel in the
    final value: sums contribute the sum of their children's scales, so
    ``a - b`` with large ``a`` and ``b`` gets a large scale even when the
    value is tiny.
    """
    value_of = _point_lookup(point, t)
    memo: dict[int, tuple[float, float]] = {}

    def ev(node: Expr) -> tuple[float, float]:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            v = float(node.value)
            out = (v, abs(v))
        elif isinstance(node, Var):
            v = value_of(node.index)
            out = (v, abs(v))
        elif isinstance(node, Add):
            vs = [ev(a) for a in node.args]
            out = (math.fsum(v for v, _ in vs), sum(s for _, s in vs))
        elif isinstance(node, Neg):
            v, s = ev(node.arg)
            out = (-v, s)
        elif isinstance(node, Mul):
            v, s = 1.0, 1.0
            for a in node.args:
                av, as_ = ev(a)
                v *= av
                s *= as_
            out = (v, s)
        elif isinstance(node, Div):
            nv, ns = ev(node.num)
            dv, _ = ev(node.den)
            if dv == 0.0 or not math.isfinite(dv):
                out = (NONFINITE, NONFINITE)
            else:
                out = (nv / dv, ns / abs(dv))
        elif isinstance(node, Pow):
            bv, bs = ev(node.base)
            if node.exp < 0 and bv == 0.0:
                out = (NONFINITE, NONFINITE)
            else:
                try:
                    v = bv**node.exp
                    s = bs**node.exp if node.exp > 0 else abs(v)
                except OverflowError:
                    v = s = NONFINITE
                out = (v, s)
        elif isinstance(node, Func):
            av, as_ = ev(node.arg)
            try:
                v = _FUNCS[node.name](av)
            except (ValueError, OverflowError):
                v = NONFINITE
            if node.name in ("sin", "cos"):
                s = abs(v) + as_ * 1.0
            elif node.name == "exp":
                s = abs(v) * (1.0 + as_)
            else:
                s = abs(v) + (as_ / (2 * abs(v)) if v else 0.0)
            out = (v, s)
        else:
            raise TypeError(type(node))
        if not (math.isfinite(out[0]) and math.isfinite(out[1])):
            out = (NONFINITE, NONFINITE)
        memo[key] = out
        return out

    return ev(e)


# ------------------------------------------------------- numpy compilation

_NP_FUNCS = {"sin": "np.sin", "cos": "np.cos", "exp": "np.exp", "sqrt": "np.sqrt"}


def _np_source(e: Expr, names: dict[int, str]) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return names[e.index]
    if isinstance(e, Add):
        return "(" + " + ".join(_np_source(a, names) for a in e.args) + ")"
    if isinstance(e, Neg):
        return "(-" + _np_source(e.arg, names) + ")"
    if isinstance(e, Mul):
        return "(" + " * ".join(_np_source(a, names) for a in e.args) + ")"
    if isinstance(e, Div):
        return f"({_np_source(e.num, names)} / {_np_source(e.den, names)})"
    if isinstance(e, Pow):
        base = _np_source(e.base, names)
        if e.exp < 0:
            return f"(1.0 / {base} ** {-e.exp})"
        return f"({base} ** {e.exp})"
    if isinstance(e, Func):
        return f"{_NP_FUNCS[e.name]}({_np_source(e.arg, names)})"
    raise TypeError(type(e))


def compile_vector(exprs: Sequence[Expr], n: int) -> Callable[[float, np.ndarray], np.ndarray]:
    """Compile expressions into ``F(t, X)`` evaluated row-wise on ``X`` of shape (k, n).

    Returns an array of shape (k, len(exprs)).  Floating-point errors produce
    inf/nan entries rather than exceptions.
    """
    names = {0: "t"}
    names.update({i: f"X[:, {i - 1}]" for i in range(1, n + 1)})
    for e in exprs:
        bad = [i for i in N.variables(e) if i > n]
        if bad:
            raise ValueError(f"expression uses x{max(bad)} but n={n}")
    body = ", ".join(_np_source(e, names) for e in exprs)
    src = (
        "def _compiled(t, X):\n"
        "    X = np.asarray(X, dtype=float)\n"
        "    out = np.empty((X.shape[0], %d))\n"
        "    with np.errstate(all='ignore'):\n"
        "        cols = (%s%s)\n"
        "    for j, c in enumerate(cols):\n"
        "        out[:, j] = c\n"
        "    return out\n"
    ) % (len(exprs), body, "," if len(exprs) == 1 else "")
    scope: dict = {"np": np}
    exec(compile(src, "<drekit-compiled>", "exec"), scope)
    return scope["_compiled"]
