"""Deciding equality to zero in the function field.

An expression is certified zero exactly when its canonical rational form
vanishes.  Anything else is decided by sampling: the expressions are
evaluated at ``samples`` random points and must stay within
``tol_abs + tol_rel * scale`` everywhere, where ``scale`` comes from
:func:`evaluate_with_scale`.  Points where any expression is non-finite are
redrawn up to ``max_retries`` times.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import nodes as N
from .calculus import evaluate_with_scale
from .poly import NotRationalError, canonical, to_rational

DEFAULT_SEED = 0x5EED_D2E


@dataclass(frozen=True)
class ZeroTestPolicy:
    samples: int = 20
    half_width: float = 1.0
    center: float | tuple[float, ...] = 0.0
    tol_abs: float = 1e-9
    tol_rel: float = 1e-9
    max_retries: int = 8
    seed: int = DEFAULT_SEED
    exact: bool = True

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.tol_abs <= 0 or self.tol_rel <= 0:
            raise ValueError("tolerances must be positive")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def sample_points(self, dim: int) -> "PointSampler":
        return PointSampler(self, dim)

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(self.center, tuple):
            d["center"] = list(self.center)
        return d


DEFAULT_POLICY = ZeroTestPolicy()


class PointSampler:
    """Deterministic stream of points (x1..x_dim, t) in the policy's box."""

    def __init__(self, policy: ZeroTestPolicy, dim: int):
        self.rng = np.random.default_rng(policy.seed)
        self.dim = dim
        c = policy.center
        if isinstance(c, (int, float)):
            self.center = np.full(dim + 1, float(c))
        else:
            vals = list(c) + [0.0] * (dim + 1 - len(c))
            self.center = np.asarray(vals[: dim + 1], dtype=float)
        self.hw = policy.half_width

    def draw(self) -> tuple[list[float], float]:
        p = self.center + self.rng.uniform(-self.hw, self.hw, size=self.dim + 1)
        return [float(v) for v in p[:-1]], float(p[-1])


class InconclusiveZeroTest(RuntimeError):
    """Too few finite evaluations to decide a zero test."""


@dataclass(frozen=True)
class ZeroCertificate:
    zero: bool
    exact: bool
    samples: int
    max_abs: float
    witness: tuple[float, ...] | None = None
    witness_index: int | None = None

    def __bool__(self) -> bool:
        return self.zero

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.witness is not None:
            d["witness"] = list(self.witness)
        return d


def _exactly_zero(e: N.Expr) -> bool:
    try:
        return to_rational(e).is_zero()
    except NotRationalError:
        return False


def max_var_index(exprs: Sequence[N.Expr]) -> int:
    return max((max(N.variables(e), default=0) for e in exprs), default=0)


def is_zero_many(exprs: Sequence[N.Expr], policy: ZeroTestPolicy = DEFAULT_POLICY) -> ZeroCertificate:
    """Joint zero test: every expression must vanish; points are shared."""
    exprs = list(exprs)
    pending = [(i, e) for i, e in enumerate(exprs) if not (policy.exact and _exactly_zero(e))]
    if not pending:
        return ZeroCertificate(True, True, 0, 0.0)

    sampler = policy.sample_points(max_var_index([e for _, e in pending]))
    max_abs = 0.0
    worst_excess = 0.0
    witness = None
    witness_index = None
    for _ in range(policy.samples):
        for _attempt in range(policy.max_retries + 1):
            point, t = sampler.draw()
            vals = [evaluate_with_scale(e, point, t) for _, e in pending]
            if all(math.isfinite(v) for v, _ in vals):
                break
        else:
            raise InconclusiveZeroTest(
                f"no finite evaluation after {policy.max_retries + 1} draws; "
                "expression may be singular everywhere on the sampling box"
            )
        for (i, _), (v, scale) in zip(pending, vals):
            a = abs(v)
            max_abs = max(max_abs, a)
            excess = a - (policy.tol_abs + policy.tol_rel * scale)
            if excess > worst_excess:
                worst_excess = excess
                witness = tuple(point) + (t,)
                witness_index = i
    return ZeroCertificate(witness is None, False, policy.samples, max_abs, witness, witness_index)


def is_zero(e: N.Expr, policy: ZeroTestPolicy = DEFAULT_POLICY) -> ZeroCertificate:
    return is_zero_many([e], policy)


def simplify(e: N.Expr) -> N.Expr:
    """Canonical form; trees with an identically vanishing denominator are returned as-is."""
    try:
        return canonical(e)
    except NotRationalError:
        return e
