"""Exact canonical form: reduced ratios of sparse multivariate polynomials over Q.

Symbols are ordered x1 > x2 > ... > xn > t > atoms, where an atom is an
elementary-function application treated as an independent indeterminate
(keyed by the canonical text of the application).  Square-root atoms carry
the relation ``sqrt(a)^2 = a`` and are reduced to degree one.

Monomials are compared in graded-lex order; a rational function is stored as
``num/den`` with ``gcd(num, den) = 1`` and a monic ``den``.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

from . import nodes as N

# symbol key: (group, index, text, expr) -- group 0 = x_i, 1 = t, 2 = atom
Key = tuple
Monomial = tuple  # sorted tuple of (Key, exponent)


def var_key(index: int) -> Key:
    if index == 0:
        return (1, 0, "", None)
    return (0, index, "", None)


def atom_key(atom: N.Func) -> Key:
    return (2, 0, N.to_string(atom), atom)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for k, e in b:
        d[k] = d.get(k, 0) + e
    return tuple(sorted(d.items(), key=lambda kv: kv[0][:3]))


def _mono_div(a: Monomial, b: Monomial):
    """a / b or None when b does not divide a."""
    d = dict(a)
    for k, e in b:
        r = d.get(k, 0) - e
        if r < 0:
            return None
        if r == 0:
            del d[k]
        else:
            d[k] = r
    return tuple(sorted(d.items(), key=lambda kv: kv[0][:3]))


def _mono_order(m: Monomial):
    """Sort key placing the graded-lex largest monomial first."""
    return (-sum(e for _, e in m), tuple((k[:3], -e) for k, e in m))


class Poly:
    """Sparse polynomial; ``terms`` maps monomials to nonzero Fractions."""

    __slots__ = ("terms", "_lead", "_hash")

    def __init__(self, terms: dict | None = None):
        self.terms = {m: c for m, c in (terms or {}).items() if c != 0}
        self._lead = None
        self._hash = None

    @staticmethod
    def const(c) -> "Poly":
        return Poly({(): Fraction(c)})

    @staticmethod
    def symbol(key: Key, exp: int = 1) -> "Poly":
        return Poly({((key, exp),): Fraction(1)})

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset((m, c) for m, c in self.terms.items()))
        return self._hash

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def const_value(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def symbols(self) -> set:
        return {k for m in self.terms for k, _ in m}

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def scale(self, c: Fraction) -> "Poly":
        if c == 0:
            return Poly()
        return Poly({m: c * v for m, v in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        if self.is_const():
            return other.scale(self.const_value())
        if other.is_const():
            return self.scale(other.const_value())
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    def __pow__(self, k: int) -> "Poly":
        result = Poly.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def lead(self):
        """(monomial, coefficient) of the graded-lex leading term."""
        if self._lead is None:
            m = min(self.terms, key=_mono_order)
            self._lead = (m, self.terms[m])
        return self._lead

    def monic(self) -> "Poly":
        if self.is_zero():
            return self
        return self.scale(1 / self.lead()[1])

    def degree_in(self, key: Key) -> int:
        return max((dict(m).get(key, 0) for m in self.terms), default=0)

    def coeffs_in(self, key: Key) -> dict[int, "Poly"]:
        """View as a univariate polynomial in ``key``: {degree: coefficient}."""
        out: dict[int, dict] = {}
        for m, c in self.terms.items():
            d = dict(m)
            e = d.pop(key, 0)
            rest = tuple(sorted(d.items(), key=lambda kv: kv[0][:3]))
            out.setdefault(e, {})[rest] = c
        return {e: Poly(t) for e, t in out.items()}

    def exact_div(self, other: "Poly"):
        """Quotient when ``other`` divides ``self`` exactly, else None."""
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if other.is_const():
            return self.scale(1 / other.const_value())
        lm, lc = other.lead()
        rem = dict(self.terms)
        quot: dict = {}
        while rem:
            m = min(rem, key=_mono_order)
            q_m = _mono_div(m, lm)
            if q_m is None:
                return None
            q_c = rem[m] / lc
            quot[q_m] = q_c
            for om, oc in other.terms.items():
                pm = _mono_mul(q_m, om)
                v = rem.get(pm, 0) - q_c * oc
                if v == 0:
                    rem.pop(pm, None)
                else:
                    rem[pm] = v
        return Poly(quot)

    def sorted_terms(self) -> Iterator[tuple[Monomial, Fraction]]:
        for m in sorted(self.terms, key=_mono_order):
            yield m, self.terms[m]

    def __repr__(self):
        return f"Poly({N.to_string(poly_to_expr(self))})"


ONE = Poly.const(1)
ZERO = Poly()


def _from_univariate(coeffs: dict[int, Poly], key: Key) -> Poly:
    out = Poly()
    for e, c in coeffs.items():
        out = out + (c * Poly.symbol(key, e) if e else c)
    return out


def _prem(a: Poly, b: Poly, key: Key) -> Poly:
    """Pseudo-remainder of a by b viewed as univariate in ``key``."""
    db = b.degree_in(key)
    lcb = b.coeffs_in(key)[db]
    r = a
    while not r.is_zero():
        dr = r.degree_in(key)
        if dr < db:
            break
        lcr = r.coeffs_in(key)[dr]
        shift = Poly.symbol(key, dr - db) if dr > db else ONE
        r = lcb * r - lcr * shift * b
    return r


def _content(p: Poly, key: Key) -> Poly:
    g = ZERO
    for c in p.coeffs_in(key).values():
        g = gcd(g, c)
        if g.is_const():
            return ONE
    return g


def _monomial_gcd(p: Poly, m: Monomial) -> Poly:
    d = dict(m)
    for tm in p.terms:
        td = dict(tm)
        d = {k: min(e, td.get(k, 0)) for k, e in d.items() if td.get(k, 0) > 0}
        if not d:
            return ONE
    return Poly({tuple(sorted(d.items(), key=lambda kv: kv[0][:3])): Fraction(1)})


def _primitive_numeric(p: Poly) -> Poly:
    """Scale to coprime integer coefficients (keeps remainder sequences small)."""
    den = 1
    for c in p.terms.values():
        den = den * c.denominator // math.gcd(den, c.denominator)
    num = 0
    for c in p.terms.values():
        num = math.gcd(num, int(c * den))
    return p.scale(Fraction(den, num)) if num else p


_PRIME = (1 << 61) - 1
_EVAL_RNG = random.Random(0x6CD)


def _mod(c: Fraction) -> int | None:
    if c.denominator % _PRIME == 0:
        return None
    return c.numerator * pow(c.denominator, -1, _PRIME) % _PRIME


def _univariate_image(p: Poly, key: Key, values: dict) -> list[int] | None:
    """Dense coefficients mod the prime (low to high), other symbols substituted."""
    out = [0] * (p.degree_in(key) + 1)
    for m, c in p.terms.items():
        v = _mod(c)
        if v is None:
            return None
        e_key = 0
        for k, e in m:
            if k == key:
                e_key = e
            else:
                v = v * pow(values[k], e, _PRIME) % _PRIME
        out[e_key] = (out[e_key] + v) % _PRIME
    return out


def _udegree_gcd(a: list[int], b: list[int]) -> int:
    """Degree of gcd of two dense univariate polynomials mod the prime."""

    def trim(p):
        while p and p[-1] == 0:
            p.pop()
        return p

    a, b = trim(list(a)), trim(list(b))
    while b:
        inv = pow(b[-1], -1, _PRIME)
        while len(a) >= len(b):
            f = a[-1] * inv % _PRIME
            shift = len(a) - len(b)
            for i, c in enumerate(b):
                a[shift + i] = (a[shift + i] - f * c) % _PRIME
            a.pop()
            trim(a)
            if not a:
                break
        a, b = b, a
    return len(a) - 1


def _coprime_image(pa: Poly, pb: Poly, key: Key) -> bool:
    """True when a modular evaluation image proves deg gcd(pa, pb) = 0 in ``key``.

    Evaluation and reduction can only raise the gcd degree, provided the
    leading coefficients survive, so a constant image gcd is conclusive.
    """
    others = (pa.symbols() | pb.symbols()) - {key}
    da, db = pa.degree_in(key), pb.degree_in(key)
    for _ in range(2):
        values = {k: _EVAL_RNG.randrange(1, _PRIME) for k in others}
        ia, ib = _univariate_image(pa, key, values), _univariate_image(pb, key, values)
        if ia is None or ib is None or ia[da] == 0 or ib[db] == 0:
            continue
        return _udegree_gcd(ia, ib) == 0
    return False


# heuristic gcd on integer polynomials: dict monomial -> int


class _HeuristicFailed(Exception):
    pass


def _to_int(p: Poly) -> dict:
    den = 1
    for c in p.terms.values():
        den = den * c.denominator // math.gcd(den, c.denominator)
    return {m: int(c * den) for m, c in p.terms.items()}


def _int_content(d: dict) -> int:
    g = 0
    for c in d.values():
        g = math.gcd(g, c)
    return g


def _eval_main(d: dict, key: Key, xi: int) -> dict:
    out: dict = {}
    for m, c in d.items():
        e = 0
        rest = []
        for k, ex in m:
            if k == key:
                e = ex
            else:
                rest.append((k, ex))
        rest = tuple(rest)
        out[rest] = out.get(rest, 0) + c * xi**e
    return {m: c for m, c in out.items() if c}


def _interpolate(h: dict, key: Key, xi: int) -> dict:
    out: dict = {}
    i = 0
    half = xi // 2
    while h:
        g = {}
        for m, c in h.items():
            r = c % xi
            if r > half:
                r -= xi
            if r:
                g[m] = r
        for m, c in g.items():
            mono = tuple(sorted(m + ((key, i),), key=lambda kv: kv[0][:3])) if i else m
            out[mono] = c
        h = {m: (c - g.get(m, 0)) // xi for m, c in h.items() if c != g.get(m, 0)}
        i += 1
    return out


def _heu_gcd(f: dict, g: dict, depth: int = 0) -> dict:
    """gcd of integer polynomials (up to sign) by evaluation and reconstruction."""
    keys = {k for m in f for k, _ in m} | {k for m in g for k, _ in m}
    if not keys:
        return {(): math.gcd(f.get((), 0), g.get((), 0))}
    if not f:
        return g
    if not g:
        return f
    key = min(keys, key=lambda k: k[:3])
    nf = max(abs(c) for c in f.values())
    ng = max(abs(c) for c in g.values())
    xi = 2 * min(nf, ng) + 29
    fp, gp = Poly({m: Fraction(c) for m, c in f.items()}), Poly({m: Fraction(c) for m, c in g.items()})
    for _ in range(6):
        ff, gg = _eval_main(f, key, xi), _eval_main(g, key, xi)
        if ff and gg:
            h = _heu_gcd(ff, gg, depth + 1)
            cand = _interpolate(h, key, xi)
            c = _int_content(cand)
            if c:
                cand = {m: v // c for m, v in cand.items()}
                hp = Poly({m: Fraction(v) for m, v in cand.items()})
                if fp.exact_div(hp) is not None and gp.exact_div(hp) is not None:
                    return cand
        xi = 73794 * xi * math.isqrt(math.isqrt(xi)) // 27011
    raise _HeuristicFailed


def gcd(a: Poly, b: Poly) -> Poly:
    """Monic greatest common divisor over Q (recursive primitive PRS)."""
    if a.is_zero():
        return b.monic()
    if b.is_zero():
        return a.monic()
    if a.is_const() or b.is_const():
        return ONE
    if len(b.terms) == 1:
        return _monomial_gcd(a, next(iter(b.terms)))
    if len(a.terms) == 1:
        return _monomial_gcd(b, next(iter(a.terms)))
    if a == b:
        return a.monic()
    sa, sb = a.symbols(), b.symbols()
    key = min(sa | sb, key=lambda k: k[:3])
    if key not in sa:
        return gcd(a, _content(b, key))
    if key not in sb:
        return gcd(_content(a, key), b)
    ca, cb = _content(a, key), _content(b, key)
    pa, pb = a.exact_div(ca), b.exact_div(cb)
    c = gcd(ca, cb)
    if pa.degree_in(key) < pb.degree_in(key):
        pa, pb = pb, pa
    # cheap exact-division probe before running the remainder sequence
    q = pa.exact_div(pb)
    if q is not None:
        return (c * pb).monic()
    if _coprime_image(pa, pb, key):
        return c.monic()
    try:
        h = _heu_gcd(_to_int(pa), _to_int(pb))
        return (c * Poly({m: Fraction(v) for m, v in h.items()})).monic()
    except _HeuristicFailed:
        pass
    while True:
        r = _prem(pa, pb, key)
        if r.is_zero():
            break
        if r.degree_in(key) == 0:
            pb = ONE
            break
        pa, pb = pb, _primitive_numeric(r.exact_div(_content(r, key)))
    return (c * pb).monic()


class RationalFunction:
    """Reduced ``num/den`` with monic denominator; the canonical field element."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly = ONE, reduce: bool = True):
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if reduce:
            if num.is_zero():
                den = ONE
            else:
                g = gcd(num, den)
                if not g.is_const():
                    num, den = num.exact_div(g), den.exact_div(g)
            lc = den.lead()[1]
            if lc != 1:
                num, den = num.scale(1 / lc), den.scale(1 / lc)
        self.num = num
        self.den = den

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __eq__(self, other):
        return isinstance(other, RationalFunction) and self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        g = gcd(self.den, other.den)
        d1 = self.den.exact_div(g)
        d2 = other.den.exact_div(g)
        return RationalFunction(self.num * d2 + other.num * d1, self.den * d2)

    def __neg__(self):
        return RationalFunction(-self.num, self.den, reduce=False)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        if self.den.is_const() and other.den.is_const():
            return RationalFunction(self.num * other.num, ONE, reduce=False)
        g1 = gcd(self.num, other.den)
        g2 = gcd(other.num, self.den)
        n1, d2 = self.num.exact_div(g1), other.den.exact_div(g1)
        n2, d1 = other.num.exact_div(g2), self.den.exact_div(g2)
        return RationalFunction(n1 * n2, d1 * d2)

    def inverse(self) -> "RationalFunction":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return RationalFunction(self.den, self.num)

    def __truediv__(self, other):
        return self * other.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return RationalFunction(self.num**k, self.den**k, reduce=False)


RF_ZERO = RationalFunction(ZERO, ONE, reduce=False)
RF_ONE = RationalFunction(ONE, ONE, reduce=False)


class NotRationalError(ValueError):
    """Raised when a denominator collapses to zero during canonicalization."""


def _has_sqrt_power(p: Poly) -> bool:
    for m in p.terms:
        for k, e in m:
            if e >= 2 and k[0] == 2 and k[3].name == "sqrt":
                return True
    return False


def _reduce_sqrt_poly(p: Poly) -> RationalFunction:
    out = RF_ZERO
    for m, c in p.terms.items():
        term = RationalFunction(Poly.const(c), ONE, reduce=False)
        plain = []
        for k, e in m:
            if k[0] == 2 and k[3].name == "sqrt" and e >= 2:
                term = term * (to_rational(k[3].arg) ** (e // 2))
                if e % 2:
                    plain.append((k, 1))
            else:
                plain.append((k, e))
        if plain:
            term = term * RationalFunction(Poly({tuple(plain): Fraction(1)}), ONE, reduce=False)
        out = out + term
    return out


def _reduce_sqrt(r: RationalFunction) -> RationalFunction:
    if not (_has_sqrt_power(r.num) or _has_sqrt_power(r.den)):
        return r
    num = _reduce_sqrt_poly(r.num)
    den = _reduce_sqrt_poly(r.den)
    if den.is_zero():
        raise NotRationalError("denominator vanishes identically")
    return num / den


@lru_cache(maxsize=65536)
def to_rational(e: N.Expr) -> RationalFunction:
    """Canonical rational function of ``e`` (atoms for elementary functions)."""
    if isinstance(e, N.Const):
        return RationalFunction(Poly.const(e.value), ONE, reduce=False)
    if isinstance(e, N.Var):
        return RationalFunction(Poly.symbol(var_key(e.index)), ONE, reduce=False)
    if isinstance(e, N.Add):
        out = RF_ZERO
        for a in e.args:
            out = out + to_rational(a)
        return out
    if isinstance(e, N.Neg):
        return -to_rational(e.arg)
    if isinstance(e, N.Mul):
        out = RF_ONE
        for a in e.args:
            out = out * to_rational(a)
        return _reduce_sqrt(out)
    if isinstance(e, N.Div):
        den = to_rational(e.den)
        if den.is_zero():
            raise NotRationalError("denominator vanishes identically")
        return _reduce_sqrt(to_rational(e.num) / den)
    if isinstance(e, N.Pow):
        base = to_rational(e.base)
        if base.is_zero() and e.exp < 0:
            raise NotRationalError("negative power of an identically zero base")
        return _reduce_sqrt(base**e.exp)
    if isinstance(e, N.Func):
        arg = canonical(e.arg)
        atom = N.func(e.name, arg)
        if not isinstance(atom, N.Func):
            return to_rational(atom)
        return RationalFunction(Poly.symbol(atom_key(atom)), ONE, reduce=False)
    raise TypeError(type(e))


def _symbol_expr(key: Key) -> N.Expr:
    if key[0] == 0:
        return N.Var(key[1])
    if key[0] == 1:
        return N.T
    return key[3]


def poly_to_expr(p: Poly) -> N.Expr:
    terms = []
    for m, c in p.sorted_terms():
        factors = [N.power(_symbol_expr(k), e) for k, e in m]
        terms.append(N.mul(N.Const(c), *factors))
    return N.add(*terms)


def rational_to_expr(r: RationalFunction) -> N.Expr:
    num = poly_to_expr(r.num)
    if r.den.is_const():
        return num
    return N.div(num, poly_to_expr(r.den))


@lru_cache(maxsize=65536)
def canonical(e: N.Expr) -> N.Expr:
    """Canonical tree of ``e``; raises NotRationalError on identically-zero denominators."""
    return rational_to_expr(to_rational(e))
