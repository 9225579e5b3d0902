"""Differential Riccati equations and their Hamiltonian-matrix characterization.

For data (A, R, Q, f) the equation is

    delta_f(X) + X A + A^T X - X R X + Q = 0

and the associated Hamiltonian is H = [[A, -R], [-Q, -A^T]].  An n-dimensional
subspace spanned by the columns of [U; V] that satisfies
H [U; V] - delta_f([U; V]) = [U; V] Lambda yields the solution X = V U^-1
whenever U is regular.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .eigen import hamiltonian_j_inv
from .expr import DEFAULT_POLICY, ZeroTestPolicy
from .field import (
    CExpr,
    CMatrix,
    DimensionError,
    SingularMatrixError,
    constant_values,
    is_constant,
    locate,
    m_inverse,
    m_rank_numeric,
    matrix_is_zero,
)
from .lieop import VectorField, delta_f_matrix
from .report import Verdict


class SymmetryError(ValueError):
    """R or Q (or a candidate solution) is not symmetric."""


class InvarianceError(ArithmeticError):
    """The supplied basis does not span an invariant subspace."""


class ResidualError(ArithmeticError):
    """A constructed solution fails the Riccati residual test."""


@dataclass(frozen=True)
class RiccatiData:
    A: CMatrix
    R: CMatrix
    Q: CMatrix
    f: VectorField

    def __post_init__(self):
        n = self.f.n
        for name in ("A", "R", "Q"):
            m = getattr(self, name)
            if m.shape != (n, n):
                raise DimensionError(f"{name} must be {n}x{n}, got {m.shape}")

    @property
    def n(self) -> int:
        return self.f.n

    def validate(self, policy: ZeroTestPolicy = DEFAULT_POLICY) -> None:
        for name in ("R", "Q"):
            m = getattr(self, name)
            if not matrix_is_zero(m - m.T, policy):
                raise SymmetryError(f"{name} is not symmetric")


@dataclass(frozen=True)
class SubspaceBasis:
    """Columns of [U; V] spanning an n-dimensional subspace of the 2n-space."""

    U: CMatrix
    V: CMatrix
    Lambda: CMatrix | None = None
    eigenvalues: tuple[CExpr, ...] | None = None

    def __post_init__(self):
        if self.U.shape != self.V.shape or self.U.rows != self.U.cols:
            raise DimensionError("U and V must be square of equal size")
        if self.eigenvalues is not None:
            vals = tuple(CExpr.lift(v) for v in self.eigenvalues)
            if len(vals) != self.U.rows:
                raise DimensionError("need one eigenvalue per column")
            object.__setattr__(self, "eigenvalues", vals)
            if self.Lambda is None:
                object.__setattr__(self, "Lambda", CMatrix.diag(vals))
        if self.Lambda is not None and self.Lambda.shape != self.U.shape:
            raise DimensionError("Lambda must be n x n")

    @classmethod
    def diagonal(cls, U: CMatrix, V: CMatrix, values: Sequence) -> "SubspaceBasis":
        return cls(U, V, eigenvalues=tuple(values))

    @classmethod
    def from_pairs(cls, pairs) -> "SubspaceBasis":
        """Stack right eigenpairs of H (vectors of length 2n) as columns."""
        stacked = CMatrix.hstack(*(p.vector for p in pairs))
        n = stacked.rows // 2
        if stacked.cols != n:
            raise DimensionError(f"need {n} eigenpairs, got {stacked.cols}")
        return cls.diagonal(
            stacked.submatrix(range(n)), stacked.submatrix(range(n, 2 * n)), [p.value for p in pairs]
        )

    @property
    def n(self) -> int:
        return self.U.rows

    @property
    def is_diagonal(self) -> bool:
        return self.eigenvalues is not None

    @property
    def stacked(self) -> CMatrix:
        return CMatrix.vstack(self.U, self.V)

    def transformed(self, T: CMatrix) -> "SubspaceBasis":
        """Same subspace, basis [U T; V T] (Lambda is dropped)."""
        return SubspaceBasis((self.U @ T).simplify(), (self.V @ T).simplify())


def hamiltonian_blocks(A: CMatrix, R: CMatrix, Q: CMatrix) -> CMatrix:
    return CMatrix.block([[A, -R], [-Q, -A.T]])


def build_hamiltonian(d: RiccatiData, policy: ZeroTestPolicy = DEFAULT_POLICY) -> CMatrix:
    d.validate(policy)
    return hamiltonian_blocks(d.A, d.R, d.Q)


def dre_residual(X: CMatrix, d: RiccatiData) -> CMatrix:
    """delta_f(X) + X A + A^T X - X R X + Q."""
    if X.shape != (d.n, d.n):
        raise DimensionError(f"X must be {d.n}x{d.n}")
    return delta_f_matrix(X, d.f) + X @ d.A + d.A.T @ X - X @ d.R @ X + d.Q


def check_dre(X: CMatrix, d: RiccatiData, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    res = dre_residual(X, d)
    cert = matrix_is_zero(res, policy)
    return Verdict.from_zero("dre_residual", cert, entry=locate(res, cert.witness_index))


def check_symmetric(X: CMatrix, policy: ZeroTestPolicy = DEFAULT_POLICY, name: str = "symmetric") -> Verdict:
    diff = X - X.T
    cert = matrix_is_zero(diff, policy)
    return Verdict.from_zero(name, cert, entry=locate(diff, cert.witness_index))


def _independent_rows(S: CMatrix, policy: ZeroTestPolicy) -> list[int]:
    """First n rows of S (in row order) that are generically independent."""
    chosen: list[int] = []
    for i in range(S.rows):
        trial = chosen + [i]
        if m_rank_numeric(S.submatrix(trial), policy) == len(trial):
            chosen = trial
            if len(chosen) == S.cols:
                break
    return chosen


def invariance_image(b: SubspaceBasis, H: CMatrix, f: VectorField) -> CMatrix:
    """H [U; V] - delta_f([U; V])."""
    S = b.stacked
    return H @ S - delta_f_matrix(S, f)


def solve_lambda(b: SubspaceBasis, H: CMatrix, f: VectorField, policy: ZeroTestPolicy = DEFAULT_POLICY) -> CMatrix:
    """Recover Lambda from an n-row regular sub-block of [U; V]."""
    S = b.stacked
    rows = _independent_rows(S, policy)
    if len(rows) < b.n:
        raise InvarianceError(f"[U; V] has rank {len(rows)} < {b.n}")
    Y = invariance_image(b, H, f)
    return (m_inverse(S.submatrix(rows), policy) @ Y.submatrix(rows)).simplify()


def check_invariance(
    b: SubspaceBasis,
    H: CMatrix,
    f: VectorField,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
    skip_columns: Sequence[int] = (),
) -> Verdict:
    """H [U; V] - delta_f([U; V]) - [U; V] Lambda == 0 on the checked columns.

    ``skip_columns`` holds zero-based column indices left unverified.
    """
    if H.shape != (2 * b.n, 2 * b.n):
        raise DimensionError("Hamiltonian size does not match the basis")
    S = b.stacked
    rank = m_rank_numeric(S, policy)
    if rank < b.n:
        raise InvarianceError(f"[U; V] has rank {rank} < {b.n}")
    Lam = b.Lambda if b.Lambda is not None else solve_lambda(b, H, f, policy)
    res = invariance_image(b, H, f) - S @ Lam
    cols = [j for j in range(b.n) if j not in set(skip_columns)]
    if not cols:
        return Verdict("invariance", True, details={"checked_columns": [], "skipped_columns": sorted(skip_columns)})
    sub = res.submatrix(range(res.rows), cols)
    cert = matrix_is_zero(sub, policy)
    entry = locate(sub, cert.witness_index)
    if entry is not None:
        entry["col"] = cols[entry["col"]]
    return Verdict.from_zero(
        "invariance",
        cert,
        entry=entry,
        checked_columns=cols,
        skipped_columns=sorted(skip_columns),
        lambda_supplied=b.Lambda is not None,
    )


def solve_from_subspace(
    b: SubspaceBasis,
    d: RiccatiData,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
    skip_columns: Sequence[int] = (),
) -> CMatrix:
    """X = V U^-1 for an invariant subspace with regular U.

    The returned X has passed the Riccati residual test.
    """
    H = build_hamiltonian(d, policy)
    inv = check_invariance(b, H, d.f, policy, skip_columns)
    if not inv:
        raise InvarianceError(f"basis is not invariant (max residual {inv.max_residual:.3g})")
    if m_rank_numeric(b.U, policy) < b.n:
        raise SingularMatrixError(
            "U is singular; a nonzero v with A^T v + delta_f(v) = -lambda v and R v = 0 "
            "certifies this (see check_regularity_witness_U)"
        )
    X = (b.V @ m_inverse(b.U, policy)).simplify()
    res = check_dre(X, d, policy)
    if not res:
        raise ResidualError(f"V U^-1 fails the Riccati residual test (max {res.max_residual:.3g})")
    return X


def check_closedloop_spectrum(
    b: SubspaceBasis,
    X: CMatrix,
    d: RiccatiData,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
    columns: Sequence[int] | None = None,
) -> Verdict:
    """Each column u_i of U is a right eigenvector of A - R X with eigenvalue lambda_i."""
    if not b.is_diagonal:
        raise ValueError("closed-loop spectrum check needs a diagonal basis")
    closed = d.A - d.R @ X
    cols = range(b.n) if columns is None else columns
    residuals = []
    for j in cols:
        u = b.U.col(j)
        residuals.append(closed @ u - delta_f_matrix(u, d.f) - u.scale(b.eigenvalues[j]))
    stacked = CMatrix.hstack(*residuals)
    cert = matrix_is_zero(stacked, policy)
    return Verdict.from_zero("closedloop_spectrum", cert, columns=list(cols))


def check_J_skew(H: CMatrix, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    """J^-1 H + H^T J^-1 == 0."""
    if H.rows != H.cols or H.rows % 2:
        raise DimensionError("H must be 2n x 2n")
    Ji = hamiltonian_j_inv(H.rows // 2)
    res = Ji @ H + H.T @ Ji
    cert = matrix_is_zero(res, policy)
    return Verdict.from_zero("J_skew", cert, entry=locate(res, cert.witness_index))


def check_gram_symmetry(b: SubspaceBasis, policy: ZeroTestPolicy = DEFAULT_POLICY) -> dict[str, Verdict]:
    """U*V Hermitian and U^T V symmetric."""
    omega = b.U.H @ b.V
    omega_t = b.U.T @ b.V
    d_h = omega - omega.H
    d_s = omega_t - omega_t.T
    ch = matrix_is_zero(d_h, policy)
    cs = matrix_is_zero(d_s, policy)
    return {
        "hermitian": Verdict.from_zero("gram_hermitian", ch, entry=locate(d_h, ch.witness_index)),
        "symmetric": Verdict.from_zero("gram_symmetric", cs, entry=locate(d_s, cs.witness_index)),
    }


def _require_nonzero(v: CMatrix, policy: ZeroTestPolicy, what: str) -> None:
    if v.cols != 1:
        raise DimensionError(f"{what} must be a column")
    if matrix_is_zero(v, policy):
        raise ValueError(f"{what} must be nonzero")


def check_regularity_witness_U(v: CMatrix, lam, d: RiccatiData, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    """A^T v + delta_f(v) + lambda v == 0 and R v == 0 (certifies U singular)."""
    _require_nonzero(v, policy, "witness v")
    lam = CExpr.lift(lam)
    first = d.A.T @ v + delta_f_matrix(v, d.f) + v.scale(lam)
    second = d.R @ v
    c1 = matrix_is_zero(first, policy)
    c2 = matrix_is_zero(second, policy)
    return Verdict(
        "regularity_witness_U",
        c1.zero and c2.zero,
        exact=c1.exact and c2.exact,
        samples=max(c1.samples, c2.samples),
        max_residual=max(c1.max_abs, c2.max_abs),
        details={"eigen_condition": c1.zero, "kernel_condition": c2.zero},
    )


def check_regularity_witness_V(u: CMatrix, lam, d: RiccatiData, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    """A u - delta_f(u) - lambda u == 0 and Q u == 0 (certifies V singular)."""
    _require_nonzero(u, policy, "witness u")
    lam = CExpr.lift(lam)
    first = d.A @ u - delta_f_matrix(u, d.f) - u.scale(lam)
    second = d.Q @ u
    c1 = matrix_is_zero(first, policy)
    c2 = matrix_is_zero(second, policy)
    return Verdict(
        "regularity_witness_V",
        c1.zero and c2.zero,
        exact=c1.exact and c2.exact,
        samples=max(c1.samples, c2.samples),
        max_residual=max(c1.max_abs, c2.max_abs),
        details={"eigen_condition": c1.zero, "kernel_condition": c2.zero},
    )


def lyapunov_residual(b: SubspaceBasis, d: RiccatiData) -> CMatrix:
    """delta_f(V*U) + V*U Lambda + Lambda* V*U + V*R V + U*Q U."""
    G = b.V.H @ b.U
    Lam = b.Lambda
    return delta_f_matrix(G, d.f) + G @ Lam + Lam.H @ G + b.V.H @ d.R @ b.V + b.U.H @ d.Q @ b.U


def check_lyapunov_relation(b: SubspaceBasis, d: RiccatiData, policy: ZeroTestPolicy = DEFAULT_POLICY) -> Verdict:
    if not b.is_diagonal:
        raise ValueError("Lyapunov relation check needs a diagonal basis")
    res = lyapunov_residual(b, d)
    cert = matrix_is_zero(res, policy)
    return Verdict.from_zero("lyapunov_relation", cert, entry=locate(res, cert.witness_index))


@dataclass
class GridSpec:
    """Axis-aligned grid: one (lo, hi, steps) triple per state coordinate."""

    axes: list[tuple[float, float, int]]
    t: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        axes = []
        for part in text.split(";"):
            lo, hi, steps = (s.strip() for s in part.split(","))
            axes.append((float(lo), float(hi), int(steps)))
        return cls(axes)

    @classmethod
    def square(cls, lo: float, hi: float, steps: int, n: int) -> "GridSpec":
        return cls([(lo, hi, steps)] * n)

    def points(self) -> list[tuple[float, ...]]:
        ranges = [np.linspace(lo, hi, steps) for lo, hi, steps in self.axes]
        mesh = np.meshgrid(*ranges, indexing="ij")
        return [tuple(float(v) for v in p) for p in np.stack([m.ravel() for m in mesh], axis=1)]

    def to_text(self) -> str:
        return ";".join(f"{lo:g},{hi:g},{steps}" for lo, hi, steps in self.axes)


@dataclass
class PSDReport:
    verdict: Verdict
    min_eigenvalues: list[float] = field(default_factory=list)


class NonFiniteGridPoint(ValueError):
    pass


def check_psd_on_grid(
    X: CMatrix,
    grid: Sequence[Sequence[float]],
    policy: ZeroTestPolicy = DEFAULT_POLICY,
    t: float = 0.0,
    strict: bool = False,
    threshold: float = 1e-9,
) -> PSDReport:
    """Eigenvalue sampling of a symmetric X over grid points.

    Non-strict: every minimum eigenvalue >= -threshold.  Strict: every
    minimum eigenvalue > threshold.
    """
    if not check_symmetric(X, policy):
        raise SymmetryError("X is not symmetric")
    mins = []
    for k, pt in enumerate(grid):
        vals = X.evaluate(list(pt), t)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteGridPoint(f"X is not finite at grid point {k}: {tuple(pt)}")
        herm = 0.5 * (vals + vals.conj().T)
        mins.append(float(np.linalg.eigvalsh(herm)[0]))
    arr = np.asarray(mins)
    ok = bool(np.all(arr > threshold)) if strict else bool(np.all(arr >= -threshold))
    worst = int(np.argmin(arr)) if len(arr) else None
    verdict = Verdict(
        "psd_grid_strict" if strict else "psd_grid",
        ok,
        samples=len(mins),
        max_residual=float(max(0.0, -arr.min())) if len(arr) else 0.0,
        witness=None if ok or worst is None else {"point": list(grid[worst]), "min_eigenvalue": mins[worst]},
        details={
            "min_eigenvalue": float(arr.min()) if len(arr) else None,
            "grid_points": len(mins),
            "threshold": threshold,
            "t": t,
        },
    )
    return PSDReport(verdict, mins)


def imaginary_axis_distance(H: CMatrix) -> float:
    """Distance of a constant Hamiltonian's spectrum to the imaginary axis."""
    ev = np.linalg.eigvals(constant_values(H))
    return float(np.min(np.abs(ev.real)))


def check_no_imaginary_axis(H: CMatrix, tol: float = 1e-9) -> Verdict:
    """Constant H only; otherwise the hypothesis is reported as an assumption."""
    if not is_constant(H):
        return Verdict(
            "no_imaginary_axis_eigenvalues",
            True,
            details={"assumed": True, "reason": "non-constant Hamiltonian; hypothesis not checkable"},
        )
    dist = imaginary_axis_distance(H)
    return Verdict("no_imaginary_axis_eigenvalues", dist > tol, details={"assumed": False, "distance": dist})


def stable_basis(H: CMatrix) -> SubspaceBasis:
    """Basis of the stable eigenvectors (Re < 0) of a constant Hamiltonian."""
    from .eigen import constant_eigendecomposition

    pairs = constant_eigendecomposition(H)
    stable = [p for p in pairs if p.value.evaluate([], 0.0).real < 0]
    n = H.rows // 2
    if len(stable) != n:
        raise ValueError(f"expected {n} stable eigenvalues, found {len(stable)}")
    return SubspaceBasis.from_pairs(stable)
