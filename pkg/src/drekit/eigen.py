"""Nonlinear eigenpairs: verification, scaling, conjugacy and simplicity."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import DEFAULT_POLICY, ZeroTestPolicy
from .field import (
    CExpr,
    CMatrix,
    DimensionError,
    SingularMatrixError,
    c_is_zero,
    constant_values,
    locate,
    m_inverse,
    m_rank_numeric,
    matrix_is_zero,
)
from .lieop import VectorField, delta_f, delta_f_matrix
from .report import Verdict


class EigenpairError(ValueError):
    """A supplied eigenpair is malformed or fails verification."""


class DefectiveMatrixError(ArithmeticError):
    """Constant matrix lacks a full set of eigenvectors."""


@dataclass(frozen=True)
class EigenPair:
    side: str
    value: CExpr
    vector: CMatrix
    label: str = ""

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        object.__setattr__(self, "value", CExpr.lift(self.value))
        if self.vector.cols != 1:
            raise DimensionError("eigenvectors are column matrices")

    @classmethod
    def right(cls, value, vector: Sequence, label: str = "") -> "EigenPair":
        return cls("right", CExpr.lift(value), CMatrix.column(vector), label)

    @classmethod
    def left(cls, value, vector: Sequence, label: str = "") -> "EigenPair":
        return cls("left", CExpr.lift(value), CMatrix.column(vector), label)

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "lambda": str(self.value),
            "vector": [str(v) for v in self.vector.flat()],
            "label": self.label,
        }


def _nonzero_vector(w: CMatrix, policy: ZeroTestPolicy) -> bool:
    return not matrix_is_zero(w, policy)


def right_residual(m: CMatrix, p: EigenPair, f: VectorField) -> CMatrix:
    """M w - delta_f(w) - lambda w."""
    w = p.vector
    return m @ w - delta_f_matrix(w, f) - w.scale(p.value)


def left_residual(m: CMatrix, p: EigenPair, f: VectorField) -> CMatrix:
    """(v^T M + delta_f(v)^T - alpha v^T)^T, as a column."""
    v = p.vector
    return m.T @ v + delta_f_matrix(v, f) - v.scale(p.value)


def _check_pair(name: str, m: CMatrix, p: EigenPair, f, policy, side: str) -> Verdict:
    if p.side != side:
        raise EigenpairError(f"expected a {side} eigenpair, got {p.side}")
    if m.rows != m.cols or m.rows != p.vector.rows:
        raise DimensionError(f"matrix {m.shape} and vector of length {p.vector.rows} do not conform")
    if not _nonzero_vector(p.vector, policy):
        return Verdict(name, False, details={"reason": "eigenvector tests zero", "label": p.label})
    res = right_residual(m, p, f) if side == "right" else left_residual(m, p, f)
    cert = matrix_is_zero(res, policy)
    return Verdict.from_zero(name, cert, label=p.label, entry=locate(res, cert.witness_index))


def check_right_eigenpair(m: CMatrix, p: EigenPair, f: VectorField, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    return _check_pair("right_eigenpair", m, p, f, policy, "right")


def check_left_eigenpair(m: CMatrix, p: EigenPair, f: VectorField, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    return _check_pair("left_eigenpair", m, p, f, policy, "left")


def check_eigenpair(m, p, f, policy=DEFAULT_POLICY) -> Verdict:
    if p.side == "right":
        return check_right_eigenpair(m, p, f, policy)
    return check_left_eigenpair(m, p, f, policy)


def scale_eigenpair(p: EigenPair, a, f: VectorField, policy: ZeroTestPolicy = DEFAULT_POLICY) -> EigenPair:
    """Rescale a right pair: (lambda - delta_f(a)/a, a w)."""
    a = CExpr.lift(a)
    if p.side != "right":
        raise EigenpairError("scaling is defined here for right eigenpairs")
    if c_is_zero(a, policy):
        raise ZeroDivisionError("scaling factor tests zero")
    value = (p.value - delta_f(a, f) / a).simplify()
    vector = p.vector.scale(a).simplify()
    return EigenPair("right", value, vector, p.label)


def hamiltonian_j(n: int) -> CMatrix:
    """J = [[0, I], [-I, 0]] of size 2n."""
    eye = CMatrix.identity(n)
    zero = CMatrix.zeros(n, n)
    return CMatrix.block([[zero, eye], [-eye, zero]])


def hamiltonian_j_inv(n: int) -> CMatrix:
    eye = CMatrix.identity(n)
    zero = CMatrix.zeros(n, n)
    return CMatrix.block([[zero, -eye], [eye, zero]])


def reflect_pair(p: EigenPair) -> EigenPair:
    """Right pair (b, w) -> left pair (-b, J^-1 w); left (a, v) -> right (-a, J v)."""
    size = p.vector.rows
    if size % 2:
        raise DimensionError("reflection needs an even-dimensional Hamiltonian space")
    n = size // 2
    if p.side == "right":
        return EigenPair("left", -p.value, hamiltonian_j_inv(n) @ p.vector, p.label)
    return EigenPair("right", -p.value, hamiltonian_j(n) @ p.vector, p.label)


def check_scalar_conjugate(a, b, c, f: VectorField, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    """b == a + delta_f(c)/c for the witness c."""
    a, b, c = CExpr.lift(a), CExpr.lift(b), CExpr.lift(c)
    if c_is_zero(c, policy):
        raise ZeroDivisionError("conjugacy witness tests zero")
    res = b - a - delta_f(c, f) / c
    return Verdict.from_zero("scalar_conjugate", c_is_zero(res, policy))


def check_matrix_conjugate(m: CMatrix, n_: CMatrix, t: CMatrix, f: VectorField, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    """M T - T N - delta_f(T) == 0 for regular T."""
    if not (m.shape == n_.shape == t.shape) or m.rows != m.cols:
        raise DimensionError("conjugacy needs square matrices of equal size")
    if m_rank_numeric(t, policy) != t.rows:
        raise SingularMatrixError("conjugacy witness T is singular")
    res = m @ t - t @ n_ - delta_f_matrix(t, f)
    cert = matrix_is_zero(res, policy)
    return Verdict.from_zero("matrix_conjugate", cert, entry=locate(res, cert.witness_index))


def conjugate_by(n_: CMatrix, t: CMatrix, f: VectorField, policy: ZeroTestPolicy = DEFAULT_POLICY) -> CMatrix:
    """(T N + delta_f(T)) T^-1: the matrix conjugate to N with respect to T."""
    return ((t @ n_ + delta_f_matrix(t, f)) @ m_inverse(t, policy)).simplify()


def check_simple(m: CMatrix, pairs: Sequence[EigenPair], f: VectorField, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    """Verify every pair, then require the eigenvectors to span the space."""
    if not pairs:
        raise EigenpairError("no eigenpairs supplied")
    sides = {p.side for p in pairs}
    if len(sides) != 1:
        raise EigenpairError("all pairs must be on the same side")
    for k, p in enumerate(pairs):
        v = check_eigenpair(m, p, f, policy)
        if not v:
            raise EigenpairError(f"pair {k} ({p.label or p.side}) fails verification")
    stacked = CMatrix.hstack(*(p.vector for p in pairs))
    rank = m_rank_numeric(stacked, policy)
    return Verdict("simple", rank == m.rows, details={"rank": rank, "dimension": m.rows, "side": sides.pop()})


def constant_eigendecomposition(m: CMatrix, cond_limit: float = 1e10) -> list[EigenPair]:
    """Numeric eigendecomposition of a constant matrix lifted to field constants.

    Raises DefectiveMatrixError when the eigenvector matrix is numerically
    singular (geometric multiplicity deficit).
    """
    vals = constant_values(m)
    lam, vecs = np.linalg.eig(vals)
    n = vals.shape[0]
    s = np.linalg.svd(vecs, compute_uv=False)
    if s[-1] <= s[0] / cond_limit:
        raise DefectiveMatrixError("matrix is defective (eigenvectors do not span)")
    order = sorted(range(n), key=lambda i: (round(lam[i].real, 12), round(lam[i].imag, 12)))
    pairs = []
    for k in order:
        v = vecs[:, k]
        # real-normalize the largest component so real eigenvectors lift to real entries
        pivot = v[np.argmax(np.abs(v))]
        v = v / pivot * abs(pivot)
        value = complex(lam[k])
        entries = [complex(z) for z in v]
        if abs(value.imag) == 0.0 and all(z.imag == 0.0 for z in entries):
            pair = EigenPair.right(value.real, [z.real for z in entries], label=f"mode{k}")
        else:
            pair = EigenPair.right(value, entries, label=f"mode{k}")
        pairs.append(pair)
    return pairs


def numeric_value(c: CExpr) -> complex:
    return c.evaluate([], 0.0)


def eigenvalue_quadruples_present(values: Sequence[complex], tol: float = 1e-8) -> bool:
    """Every value's negation, conjugate and negated conjugate also occur."""
    vals = list(values)

    def present(z):
        return any(abs(z - w) <= tol * max(1.0, abs(z)) for w in vals)

    return all(present(-z) and present(z.conjugate()) and present(-z.conjugate()) for z in vals)

