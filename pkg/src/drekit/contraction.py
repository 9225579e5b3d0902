"""Controller synthesis from a Riccati solution and contraction-metric checks.

For constant B and a solution X whose entries satisfy (dX_ij/dx) B = 0, the
row B^T X is a gradient, and k = int_0^x B^T X dx gives the feedback u = -k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as E
from .expr import DEFAULT_POLICY, Expr, ZeroTestPolicy
from .expr.poly import Poly, RationalFunction, rational_to_expr, to_rational, var_key
from .field import CMatrix, DimensionError, is_constant, matrix_is_zero
from .lieop import VectorField, delta_f_matrix
from .report import Verdict

GAUSS_NODES = 32


class IntegrabilityError(ValueError):
    """B^T X is not a gradient field (or B is not constant)."""


@dataclass(frozen=True)
class ControlModel:
    f: VectorField
    B: CMatrix
    X: CMatrix
    Q: CMatrix

    def __post_init__(self):
        n = self.f.n
        if self.B.rows != n:
            raise DimensionError(f"B must have {n} rows")
        if self.X.shape != (n, n) or self.Q.shape != (n, n):
            raise DimensionError(f"X and Q must be {n}x{n}")
        if not is_constant(self.B):
            raise ValueError("B must be constant")
        if not (self.X.is_real() and self.Q.is_real() and self.B.is_real()):
            raise ValueError("controller synthesis needs real data")

    @property
    def n(self) -> int:
        return self.f.n

    @property
    def m(self) -> int:
        return self.B.cols

    def gain_rows(self) -> list[list[Expr]]:
        """Rows of B^T X as real expressions (one row per input)."""
        BtX = (self.B.T @ self.X).simplify()
        return [[BtX[i, j].re for j in range(self.n)] for i in range(self.m)]


def check_integrability(m: ControlModel, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    """(dX_ij/dx) B == 0 for every entry of X."""
    grads = CMatrix([[E.diff(m.X[i, j].re, k) for k in range(1, m.n + 1)] for i in range(m.n) for j in range(m.n)])
    res = grads @ m.B
    cert = matrix_is_zero(res, policy)
    entry = None
    if cert.witness_index is not None:
        flat = cert.witness_index // 2
        row = flat // res.cols
        entry = {"X_entry": [row // m.n, row % m.n], "B_column": flat % res.cols}
    return Verdict.from_zero("integrability", cert, entry=entry)


def _antiderivative(e: Expr, v: int) -> Expr | None:
    """Antiderivative in x_v when e is polynomial in x_v, else None."""
    r = to_rational(e)
    key = var_key(v)
    if key in r.den.symbols():
        return None
    out: dict = {}
    for mono, c in r.num.terms.items():
        d = dict(mono)
        for k in d:
            if k[0] == 2 and v in E.variables(k[3]):
                return None
        p = d.get(key, 0) + 1
        d[key] = p
        out[tuple(sorted(d.items(), key=lambda kv: kv[0][:3]))] = c / p
    return E.simplify(rational_to_expr(RationalFunction(Poly(out), r.den)))


def _iterated_integral(row: Sequence[Expr], n: int) -> Expr | None:
    """int_0^x of the gradient row, x1 first, later coordinates held at zero."""
    total = []
    for j in range(1, n + 1):
        g = E.substitute(row[j - 1], {i: E.ZERO for i in range(j + 1, n + 1)})
        F = _antiderivative(E.simplify(g), j)
        if F is None:
            return None
        total.append(E.add(F, E.neg(E.substitute(F, {j: E.ZERO}))))
    return E.simplify(E.add(*total))


@dataclass(frozen=True)
class Controller:
    """Feedback k(x, t); u = -k.  ``components`` is None for quadrature-only controllers."""

    components: tuple[Expr, ...] | None
    rows: tuple[tuple[Expr, ...], ...]
    n: int

    @property
    def symbolic(self) -> bool:
        return self.components is not None

    @property
    def m(self) -> int:
        return len(self.rows)

    def to_strings(self) -> list[str] | None:
        return None if self.components is None else [str(c) for c in self.components]

    def evaluate(self, x: Sequence[float], t: float = 0.0) -> np.ndarray:
        if self.components is not None:
            return np.array([E.evaluate(c, list(x), t) for c in self.components])
        return quadrature_controller(self.rows, x, t)


def quadrature_controller(rows, x: Sequence[float], t: float = 0.0, nodes: int = GAUSS_NODES) -> np.ndarray:
    """Straight-path line integral from the origin by Gauss-Legendre quadrature."""
    return line_integral(rows, [np.zeros(len(x)), np.asarray(x, dtype=float)], t, nodes)


def line_integral(rows, path: Sequence[Sequence[float]], t: float = 0.0, nodes: int = GAUSS_NODES) -> np.ndarray:
    """Integral of the gradient rows along a polygonal path."""
    n = len(path[0])
    g = E.compile_vector([e for r in rows for e in r], n)
    s, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    total = np.zeros(len(rows))
    for a, b in zip(path[:-1], path[1:]):
        a, b = np.asarray(a, float), np.asarray(b, float)
        pts = a[None, :] + s[:, None] * (b - a)[None, :]
        vals = g(t, pts).reshape(nodes, len(rows), n)
        total += np.einsum("q,qmn,n->m", w, vals, b - a)
    return total


def synthesize_controller(m: ControlModel, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Controller:
    """k = int_0^x B^T X dx, symbolic when each antiderivative is polynomial."""
    integ = check_integrability(m, policy)
    if not integ:
        raise IntegrabilityError("(dX_ij/dx) B does not vanish; B^T X is not a gradient")
    rows = m.gain_rows()
    comps = [_iterated_integral(r, m.n) for r in rows]
    frozen_rows = tuple(tuple(r) for r in rows)
    if any(c is None for c in comps):
        return Controller(None, frozen_rows, m.n)
    ctrl = Controller(tuple(comps), frozen_rows, m.n)
    grad = check_controller_gradient(ctrl, policy)
    if not grad:
        raise IntegrabilityError(f"dk/dx differs from B^T X (max {grad.max_residual:.3g})")
    return ctrl


def check_controller_gradient(k: Controller, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    """dk/dx == B^T X under the zero test (symbolic controllers only)."""
    if not k.symbolic:
        return Verdict("controller_gradient", False, details={"reason": "controller is quadrature-only"})
    res = CMatrix(
        [[E.add(E.diff(c, j + 1), E.neg(row[j])) for j in range(k.n)] for c, row in zip(k.components, k.rows)]
    )
    cert = matrix_is_zero(res, policy)
    return Verdict.from_zero("controller_gradient", cert)


def check_gradient_fd(
    k: Controller, samples: int = 50, h: float = 1e-5, rel_tol: float = 1e-6, seed: int = 0, half_width: float = 2.0
) -> Verdict:
    """Central differences of k against B^T X at random points."""
    rng = np.random.default_rng(seed)
    g = E.compile_vector([e for r in k.rows for e in r], k.n)
    worst = 0.0
    for _ in range(samples):
        x = rng.uniform(-half_width, half_width, k.n)
        exact = g(0.0, x[None, :]).reshape(k.m, k.n)
        fd = np.empty((k.m, k.n))
        for j in range(k.n):
            e = np.zeros(k.n)
            e[j] = h
            fd[:, j] = (k.evaluate(x + e) - k.evaluate(x - e)) / (2 * h)
        err = np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact)))
        worst = max(worst, float(err))
    return Verdict("controller_gradient_fd", worst <= rel_tol, samples=samples, max_residual=worst,
                   details={"step": h, "rel_tol": rel_tol})


def closed_loop_field(m: ControlModel, k: Controller) -> VectorField:
    """f - B k, componentwise."""
    if not k.symbolic:
        raise ValueError("closed-loop field needs a symbolic controller")
    if len(k.components) != m.m:
        raise DimensionError(f"controller has {len(k.components)} components, B has {m.m} columns")
    Bk = m.B @ CMatrix.column(k.components)
    return VectorField(tuple(E.simplify(E.add(fi, E.neg(Bk[i, 0].re))) for i, fi in enumerate(m.f)))


def contraction_residual(m: ControlModel, k: Controller) -> CMatrix:
    """delta_F(X) + X dF/dx + (dF/dx)^T X + Q + X B B^T X with F = f - B k."""
    F = closed_loop_field(m, k)
    Jf = F.jacobian()
    X = m.X
    return delta_f_matrix(X, F) + X @ Jf + Jf.T @ X + m.Q + X @ m.B @ m.B.T @ X


def metric_decay_matrix(m: ControlModel) -> CMatrix:
    """-Q - X B B^T X."""
    return -(m.Q + m.X @ m.B @ m.B.T @ m.X)


def check_contraction_identity(
    m: ControlModel,
    k: Controller,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
    grid: Sequence[Sequence[float]] | None = None,
    threshold: float = 1e-9,
) -> Verdict:
    """Identity under the zero test, plus grid negativity of -Q - X B B^T X."""
    res = contraction_residual(m, k)
    cert = matrix_is_zero(res, policy)
    details: dict = {}
    passed = cert.zero
    witness = None if cert.witness is None else {"point": list(cert.witness)}
    if grid is not None:
        D = metric_decay_matrix(m)
        worst = -np.inf
        worst_pt = None
        for pt in grid:
            vals = D.evaluate(list(pt)).real
            top = float(np.linalg.eigvalsh(0.5 * (vals + vals.T))[-1])
            if top > worst:
                worst, worst_pt = top, list(pt)
        negative = worst <= -threshold
        details.update({"max_eigenvalue": worst, "worst_point": worst_pt, "grid_points": len(grid),
                        "negative_definite": negative})
        passed = passed and negative
        if not negative and witness is None:
            witness = {"point": worst_pt, "max_eigenvalue": worst}
    return Verdict(
        "contraction_identity",
        passed,
        exact=cert.exact,
        samples=cert.samples,
        max_residual=cert.max_abs,
        witness=witness,
        details={"identity": cert.zero, **details},
    )



class QuadratureClosedLoop:
    """f - B k for a quadrature-only controller; usable wherever sim needs ``n`` and ``compiled()``."""

    def __init__(self, m: ControlModel, k: Controller):
        self.n = m.n
        self._f = m.f.compiled()
        self._B = np.real(m.B.evaluate([0.0] * m.n))
        self._k = k

    def compiled(self):
        def F(t, xs):
            ks = np.array([self._k.evaluate(x, t) for x in xs])
            return self._f(t, xs) - ks @ self._B.T

        return F
