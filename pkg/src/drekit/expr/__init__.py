"""Symbolic scalars: expression trees, calculus, canonical forms, zero tests."""

from .calculus import NONFINITE, compile_vector, diff, evaluate, evaluate_with_scale, gradient
from .nodes import (
    FUNCTIONS,
    ONE,
    T,
    ZERO,
    Add,
    Const,
    Div,
    Expr,
    Func,
    Mul,
    Neg,
    Pow,
    Var,
    add,
    as_expr,
    const,
    cos,
    div,
    exp,
    func,
    is_const,
    is_rational,
    mul,
    neg,
    power,
    sin,
    sqrt,
    substitute,
    to_string,
    var,
    variables,
    x,
)
from .parse import ParseError, parse
from .poly import NotRationalError, RationalFunction, canonical, to_rational
from .zero import (
    DEFAULT_POLICY,
    DEFAULT_SEED,
    InconclusiveZeroTest,
    ZeroCertificate,
    ZeroTestPolicy,
    is_zero,
    is_zero_many,
    simplify,
)

__all__ = [name for name in dir() if not name.startswith("_")]
