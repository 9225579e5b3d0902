"""The complex function field a + bj and dense matrices over it."""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from . import expr as E
from .expr import DEFAULT_POLICY, Expr, ZeroCertificate, ZeroTestPolicy
from .expr.zero import max_var_index


class SingularMatrixError(ArithmeticError):
    """The matrix is not regular over the function field."""


class DimensionError(ValueError):
    pass


class CExpr:
    """Element ``re + im*j`` of the field; both parts are real expressions."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=E.ZERO):
        object.__setattr__(self, "re", E.as_expr(re))
        object.__setattr__(self, "im", E.as_expr(im))

    def __setattr__(self, name, value):
        raise AttributeError("CExpr is immutable")

    @classmethod
    def lift(cls, value) -> "CExpr":
        if isinstance(value, CExpr):
            return value
        if isinstance(value, complex):
            return cls(E.as_expr(value.real), E.as_expr(value.imag))
        if isinstance(value, np.complexfloating):
            return cls(E.as_expr(float(value.real)), E.as_expr(float(value.imag)))
        if isinstance(value, np.floating):
            return cls(E.as_expr(float(value)))
        if isinstance(value, np.integer):
            return cls(int(value))
        return cls(value)

    @classmethod
    def parse(cls, text: str, n: int) -> "CExpr":
        """Parse ``"re"`` or ``"re @ im"``."""
        if "@" in text:
            re_txt, _, im_txt = text.partition("@")
            if "@" in im_txt:
                raise E.ParseError("more than one '@' in complex literal", text, text.rindex("@"))
            return cls(E.parse(re_txt, n), E.parse(im_txt, n))
        return cls(E.parse(text, n))

    def is_real(self) -> bool:
        return E.is_const(self.im, 0)

    def __eq__(self, other):
        return isinstance(other, CExpr) and self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"CExpr({str(self)!r})"

    def __str__(self):
        if self.is_real():
            return str(self.re)
        return f"{self.re} @ {self.im}"

    def __add__(self, other):
        other = CExpr.lift(other)
        return CExpr(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return CExpr(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-CExpr.lift(other))

    def __rsub__(self, other):
        return CExpr.lift(other) - self

    def __mul__(self, other):
        o = CExpr.lift(other)
        if self.is_real() and o.is_real():
            return CExpr(self.re * o.re)
        return CExpr(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conj(self) -> "CExpr":
        return CExpr(self.re, -self.im)

    def abs2(self) -> Expr:
        return self.re * self.re + self.im * self.im

    def reciprocal(self) -> "CExpr":
        """Formal inverse; callers must have established the element is nonzero."""
        if self.is_real():
            return CExpr(E.ONE / self.re)
        d = self.abs2()
        return CExpr(self.re / d, -self.im / d)

    def __truediv__(self, other):
        o = CExpr.lift(other)
        if o.is_real():
            return CExpr(self.re / o.re, self.im / o.re)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return CExpr.lift(other) / self

    def simplify(self) -> "CExpr":
        return CExpr(E.simplify(self.re), E.simplify(self.im))

    def map(self, fn: Callable[[Expr], Expr]) -> "CExpr":
        return CExpr(fn(self.re), fn(self.im))

    def evaluate(self, point: Sequence[float], t: float = 0.0) -> complex:
        re = E.evaluate(self.re, point, t)
        if self.is_real():
            return complex(re, 0.0)
        return complex(re, E.evaluate(self.im, point, t))

    def exprs(self) -> tuple[Expr, Expr]:
        return (self.re, self.im)


C_ZERO = CExpr(E.ZERO)
C_ONE = CExpr(E.ONE)
J = CExpr(E.ZERO, E.ONE)


def c_add(a: CExpr, b: CExpr) -> CExpr:
    return CExpr.lift(a) + b


def c_mul(a: CExpr, b: CExpr) -> CExpr:
    return CExpr.lift(a) * b


def c_conj(a: CExpr) -> CExpr:
    return CExpr.lift(a).conj()


def c_is_zero(a: CExpr, policy: ZeroTestPolicy = DEFAULT_POLICY) -> ZeroCertificate:
    a = CExpr.lift(a)
    if a.is_real():
        return E.is_zero(a.re, policy)
    return E.is_zero_many(a.exprs(), policy)


def c_div(a: CExpr, b: CExpr, policy: ZeroTestPolicy = DEFAULT_POLICY) -> CExpr:
    if c_is_zero(b, policy):
        raise ZeroDivisionError("division by an element that tests zero")
    return CExpr.lift(a) / b


class CMatrix:
    """Dense, immutable matrix of field elements."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries: Iterable[Iterable]):
        grid = tuple(tuple(CExpr.lift(v) for v in row) for row in entries)
        if not grid or not grid[0]:
            raise DimensionError("matrices must have at least one row and one column")
        width = len(grid[0])
        if any(len(r) != width for r in grid):
            raise DimensionError("ragged matrix rows")
        object.__setattr__(self, "rows", len(grid))
        object.__setattr__(self, "cols", width)
        object.__setattr__(self, "entries", grid)

    def __setattr__(self, name, value):
        raise AttributeError("CMatrix is immutable")

    # construction helpers
    @classmethod
    def identity(cls, n: int) -> "CMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "CMatrix":
        return cls([[0] * cols for _ in range(rows)])

    @classmethod
    def diag(cls, values: Sequence) -> "CMatrix":
        n = len(values)
        return cls([[values[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def column(cls, values: Sequence) -> "CMatrix":
        return cls([[v] for v in values])

    @classmethod
    def parse(cls, rows: Sequence[Sequence[str]], n: int) -> "CMatrix":
        return cls([[CExpr.parse(s, n) for s in row] for row in rows])

    @classmethod
    def block(cls, blocks: Sequence[Sequence["CMatrix"]]) -> "CMatrix":
        out = []
        for brow in blocks:
            height = brow[0].rows
            if any(b.rows != height for b in brow):
                raise DimensionError("block row heights differ")
            for i in range(height):
                out.append([v for b in brow for v in b.entries[i]])
        return cls(out)

    @classmethod
    def vstack(cls, *mats: "CMatrix") -> "CMatrix":
        return cls.block([[m] for m in mats])

    @classmethod
    def hstack(cls, *mats: "CMatrix") -> "CMatrix":
        return cls.block([list(mats)])

    # access
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij) -> CExpr:
        i, j = ij
        return self.entries[i][j]

    def col(self, j: int) -> "CMatrix":
        return CMatrix([[r[j]] for r in self.entries])

    def row(self, i: int) -> "CMatrix":
        return CMatrix([self.entries[i]])

    def submatrix(self, rows: Sequence[int], cols: Sequence[int] | None = None) -> "CMatrix":
        cols = range(self.cols) if cols is None else cols
        return CMatrix([[self.entries[i][j] for j in cols] for i in rows])

    def flat(self) -> list[CExpr]:
        return [v for r in self.entries for v in r]

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other):
        return isinstance(other, CMatrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"CMatrix({self.to_strings()!r})"

    def to_strings(self) -> list[list[str]]:
        return [[str(v) for v in r] for r in self.entries]

    def is_real(self) -> bool:
        return all(v.is_real() for v in self.flat())

    # algebra
    def map(self, fn: Callable[[CExpr], CExpr]) -> "CMatrix":
        return CMatrix([[fn(v) for v in r] for r in self.entries])

    def _check_same(self, other: "CMatrix"):
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "CMatrix") -> "CMatrix":
        self._check_same(other)
        return CMatrix(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __sub__(self, other: "CMatrix") -> "CMatrix":
        self._check_same(other)
        return CMatrix(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)]
        )

    def __neg__(self) -> "CMatrix":
        return self.map(lambda v: -v)

    def scale(self, c) -> "CMatrix":
        c = CExpr.lift(c)
        return self.map(lambda v: c * v)

    def __matmul__(self, other: "CMatrix") -> "CMatrix":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.shape} by {other.shape}")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc_re, acc_im = [], []
                real = True
                for k in range(self.cols):
                    p = self.entries[i][k] * other.entries[k][j]
                    acc_re.append(p.re)
                    if not p.is_real():
                        real = False
                        acc_im.append(p.im)
                row.append(CExpr(E.add(*acc_re), E.add(*acc_im) if not real else E.ZERO))
            out.append(row)
        return CMatrix(out)

    @property
    def T(self) -> "CMatrix":
        return CMatrix(list(zip(*self.entries)))

    @property
    def H(self) -> "CMatrix":
        return CMatrix([[v.conj() for v in r] for r in zip(*self.entries)])

    def conj(self) -> "CMatrix":
        return self.map(CExpr.conj)

    def simplify(self) -> "CMatrix":
        return self.map(CExpr.simplify)

    def exprs(self) -> list[Expr]:
        out = []
        for v in self.flat():
            out.append(v.re)
            out.append(v.im)
        return out

    def evaluate(self, point: Sequence[float], t: float = 0.0) -> np.ndarray:
        return np.array([[v.evaluate(point, t) for v in r] for r in self.entries], dtype=complex)


def m_mul(a: CMatrix, b: CMatrix) -> CMatrix:
    return a @ b


def m_add(a: CMatrix, b: CMatrix) -> CMatrix:
    return a + b


def m_sub(a: CMatrix, b: CMatrix) -> CMatrix:
    return a - b


def m_scale(c, a: CMatrix) -> CMatrix:
    return a.scale(c)


def m_transpose(a: CMatrix) -> CMatrix:
    return a.T


def m_conj_transpose(a: CMatrix) -> CMatrix:
    return a.H


def matrix_is_zero(m: CMatrix, policy: ZeroTestPolicy = DEFAULT_POLICY) -> ZeroCertificate:
    """Zero test over every entry (real and imaginary parts) on shared points."""
    return E.is_zero_many(m.exprs(), policy)


def locate(m: CMatrix, witness_index: int | None) -> dict | None:
    """Translate a flat witness index from :func:`matrix_is_zero` into an entry."""
    if witness_index is None:
        return None
    k, part = divmod(witness_index, 2)
    i, j = divmod(k, m.cols)
    return {"row": i, "col": j, "part": "im" if part else "re"}


def m_inverse(a: CMatrix, policy: ZeroTestPolicy = DEFAULT_POLICY) -> CMatrix:
    """Gauss-Jordan inverse with symbolic pivots.

    The pivot in each column is the first remaining row whose entry does not
    test zero; entries are canonicalized after every elimination step.
    """
    if a.rows != a.cols:
        raise DimensionError("only square matrices can be inverted")
    n = a.rows
    work = [list(r) + [C_ONE if i == j else C_ZERO for j in range(n)] for i, r in enumerate(a.entries)]
    for c in range(n):
        pivot = None
        for r in range(c, n):
            if not c_is_zero(work[r][c], policy):
                pivot = r
                break
        if pivot is None:
            raise SingularMatrixError(f"no nonzero pivot in column {c + 1}; matrix is singular over the field")
        work[c], work[pivot] = work[pivot], work[c]
        inv_p = work[c][c].reciprocal().simplify()
        work[c] = [(v * inv_p).simplify() for v in work[c]]
        for r in range(n):
            if r == c:
                continue
            factor = work[r][c]
            if factor == C_ZERO:
                continue
            work[r] = [(v - factor * w).simplify() for v, w in zip(work[r], work[c])]
    return CMatrix([row[n:] for row in work])


def _numeric_rank(values: np.ndarray, rel_tol: float = 1e-9) -> int:
    s = np.linalg.svd(values, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def m_rank_numeric(a: CMatrix, policy: ZeroTestPolicy = DEFAULT_POLICY) -> int:
    """Generic rank: the maximum numeric rank over sampled finite points."""
    sampler = policy.sample_points(max_var_index(a.exprs()))
    best = -1
    full = min(a.rows, a.cols)
    for _ in range(policy.samples):
        for _attempt in range(policy.max_retries + 1):
            point, t = sampler.draw()
            vals = a.evaluate(point, t)
            if np.all(np.isfinite(vals)):
                break
        else:
            continue
        best = max(best, _numeric_rank(vals))
        if best == full:
            break
    if best < 0:
        raise E.InconclusiveZeroTest("no finite sample point for rank evaluation")
    return best


def is_regular(a: CMatrix, policy: ZeroTestPolicy = DEFAULT_POLICY) -> bool:
    return a.rows == a.cols and m_rank_numeric(a, policy) == a.rows


def constant_values(a: CMatrix) -> np.ndarray:
    """Numeric value of a matrix whose entries contain no variables."""
    for e in a.exprs():
        if E.variables(e):
            raise ValueError("matrix entries are not constant")
    vals = a.evaluate([], 0.0)
    if not np.all(np.isfinite(vals)):
        raise ValueError("constant matrix has non-finite entries")
    return vals


def is_constant(a: CMatrix) -> bool:
    return all(not E.variables(e) for e in a.exprs())
