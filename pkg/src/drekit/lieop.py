"""The derivation along a vector field: a -> da/dt + (da/dx) f."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import expr as E
from .expr import Expr
from .field import CExpr, CMatrix


@dataclass(frozen=True)
class VectorField:
    """Real vector field f(x, t) with components f_1..f_n."""

    components: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(E.as_expr(c) for c in self.components))
        bad = [i for c in self.components for i in E.variables(c) if i > self.n]
        if bad:
            raise ValueError(f"component uses x{max(bad)} but the field has dimension {self.n}")

    @property
    def n(self) -> int:
        return len(self.components)

    @classmethod
    def parse(cls, texts: Sequence[str]) -> "VectorField":
        n = len(texts)
        return cls(tuple(E.parse(s, n) for s in texts))

    @classmethod
    def zero(cls, n: int) -> "VectorField":
        return cls((E.ZERO,) * n)

    def __getitem__(self, i: int) -> Expr:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def jacobian(self) -> CMatrix:
        """Symbolic Jacobian df/dx (canonicalized)."""
        return CMatrix(
            [[E.simplify(E.diff(fi, j)) for j in range(1, self.n + 1)] for fi in self.components]
        )

    def simplify(self) -> "VectorField":
        return VectorField(tuple(E.simplify(c) for c in self.components))

    def to_strings(self) -> list[str]:
        return [str(c) for c in self.components]

    def compiled(self):
        return E.compile_vector(self.components, self.n)


def delta_f_real(a: Expr, f: VectorField) -> Expr:
    terms = [E.diff(a, 0)]
    for i, fi in enumerate(f.components, start=1):
        da = E.diff(a, i)
        if not E.is_const(da, 0):
            terms.append(da * fi)
    return E.simplify(E.add(*terms))


def delta_f(a, f: VectorField) -> CExpr:
    """Apply the derivation to a field element (componentwise on re/im)."""
    a = CExpr.lift(a)
    if a.is_real():
        return CExpr(delta_f_real(a.re, f))
    return CExpr(delta_f_real(a.re, f), delta_f_real(a.im, f))


def delta_f_matrix(m: CMatrix, f: VectorField) -> CMatrix:
    return m.map(lambda v: delta_f(v, f))
