"""Exact arithmetic over multivariate rational functions with rational coefficients.

Everything downstream (differential forms, Pfaffian systems, the constraint
ladder) runs over the field implemented here.  There is no floating point
anywhere: zero tests are decidable, canonical forms are unique, and every
randomized computation is driven by an explicit seed.

A polynomial is a dict mapping monomials to nonzero ``Fraction`` coefficients;
a monomial is a sorted tuple of ``(name, exponent)`` pairs.  The monomial
order is graded lexicographic over name-sorted variables, which is chart
independent and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from math import gcd as _int_gcd
from typing import Iterable, Mapping, Optional, Sequence

Monomial = tuple  # tuple[tuple[str, int], ...]
Poly = dict  # dict[Monomial, Fraction]

_ONE_MONO: Monomial = ()


class DomainError(ArithmeticError):
    """Division by the zero polynomial, or a substitution hit a zero denominator."""


class NonLinearInUnknowns(ValueError):
    """An equation handed to solve_linear has degree >= 2 in the unknowns."""

    def __init__(self, equation: "Scalar"):
        self.equation = equation
        super().__init__(f"equation is not affine-linear in the unknowns: {equation}")


class AllSamplesDegenerate(ArithmeticError):
    """Every random sample hit a denominator zero during rank estimation."""


# ---------------------------------------------------------------------------
# polynomial layer
# ---------------------------------------------------------------------------

def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    merged = dict(a)
    for name, exp in b:
        merged[name] = merged.get(name, 0) + exp
    return tuple(sorted(merged.items()))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _mono_cmp(a: Monomial, b: Monomial) -> int:
    # graded lex, priority to name-ascending variables; a proper
    # (multiplicative) monomial order, unlike raw pair-tuple comparison
    da, db = _mono_degree(a), _mono_degree(b)
    if da != db:
        return -1 if da < db else 1
    ia, ib = dict(a), dict(b)
    for n in sorted(set(ia) | set(ib)):
        ea, eb = ia.get(n, 0), ib.get(n, 0)
        if ea != eb:
            return 1 if ea > eb else -1
    return 0


_mono_key = cmp_to_key(_mono_cmp)


def p_zero() -> Poly:
    return {}


def p_const(c) -> Poly:
    c = Fraction(c)
    return {_ONE_MONO: c} if c else {}


def p_var(name: str) -> Poly:
    return {((name, 1),): Fraction(1)}


def p_is_zero(p: Poly) -> bool:
    return not p


def p_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, 0) + c
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return out


def p_neg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}


def p_sub(a: Poly, b: Poly) -> Poly:
    return p_add(a, p_neg(b))


def p_scale(a: Poly, c) -> Poly:
    c = Fraction(c)
    if not c:
        return {}
    return {m: cc * c for m, cc in a.items()}


def p_mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return {}
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = _mono_mul(ma, mb)
            s = out.get(m, 0) + ca * cb
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return out


def p_pow(a: Poly, n: int) -> Poly:
    if n < 0:
        raise ValueError("negative power at polynomial level")
    out = p_const(1)
    base = a
    while n:
        if n & 1:
            out = p_mul(out, base)
        base_needed = n >> 1
        if base_needed:
            base = p_mul(base, base)
        n >>= 1
    return out


def p_diff(a: Poly, name: str) -> Poly:
    out: Poly = {}
    for m, c in a.items():
        for i, (n, e) in enumerate(m):
            if n == name:
                if e == 1:
                    mm = m[:i] + m[i + 1:]
                else:
                    mm = m[:i] + ((n, e - 1),) + m[i + 1:]
                s = out.get(mm, 0) + c * e
                if s:
                    out[mm] = s
                else:
                    out.pop(mm, None)
                break
    return out


def p_eval(a: Poly, point: Mapping[str, Fraction]) -> Fraction:
    total = Fraction(0)
    for m, c in a.items():
        v = c
        for name, e in m:
            v *= point[name] ** e
        total += v
    return total


def p_variables(a: Poly) -> set:
    vs: set = set()
    for m in a:
        for name, _ in m:
            vs.add(name)
    return vs


def p_degree(a: Poly) -> int:
    return max((_mono_degree(m) for m in a), default=0)


def p_leading(a: Poly):
    m = max(a, key=_mono_key)
    return m, a[m]


def p_content_sign(a: Poly):
    """Rational content and leading sign: a == sign*content*primitive."""
    if not a:
        return Fraction(1), {}
    num_gcd = 0
    den_lcm = 1
    for c in a.values():
        num_gcd = _int_gcd(num_gcd, abs(c.numerator))
        den_lcm = den_lcm * c.denominator // _int_gcd(den_lcm, c.denominator)
    content = Fraction(num_gcd, den_lcm)
    _, lead = p_leading(a)
    if lead < 0:
        content = -content
    return content, {m: c / content for m, c in a.items()}


def _mono_divides(a: Monomial, b: Monomial) -> bool:
    db = dict(b)
    return all(db.get(n, 0) >= e for n, e in a)


def _mono_div(a: Monomial, b: Monomial) -> Monomial:
    db = dict(a)
    for n, e in b:
        db[n] -= e
        if not db[n]:
            del db[n]
    return tuple(sorted(db.items()))


def p_div_exact(a: Poly, b: Poly) -> Optional[Poly]:
    """Exact polynomial quotient a/b, or None when b does not divide a."""
    if not b:
        raise DomainError("division by the zero polynomial")
    if not a:
        return {}
    quot: Poly = {}
    rem = dict(a)
    mb, cb = p_leading(b)
    while rem:
        ma, ca = p_leading(rem)
        if not _mono_divides(mb, ma):
            return None
        mq = _mono_div(ma, mb)
        cq = ca / cb
        quot[mq] = quot.get(mq, 0) + cq
        rem = p_sub(rem, p_mul({mq: cq}, b))
    return {m: c for m, c in quot.items() if c}


def _as_univariate(a: Poly, x: str) -> dict:
    """Split off x: dict degree-in-x -> Poly in the remaining variables."""
    out: dict = {}
    for m, c in a.items():
        dx = 0
        rest = []
        for n, e in m:
            if n == x:
                dx = e
            else:
                rest.append((n, e))
        coeff = out.setdefault(dx, {})
        key = tuple(rest)
        s = coeff.get(key, 0) + c
        if s:
            coeff[key] = s
        else:
            coeff.pop(key, None)
    return {d: c for d, c in out.items() if c}


def _from_univariate(u: dict, x: str) -> Poly:
    out: Poly = {}
    for d, coeff in u.items():
        for m, c in coeff.items():
            mm = _mono_mul(m, ((x, d),) if d else ())
            s = out.get(mm, 0) + c
            if s:
                out[mm] = s
            else:
                out.pop(mm, None)
    return out


def _u_degree(u: dict) -> int:
    return max(u) if u else -1


def _u_pseudo_rem(a: dict, b: dict, x: str) -> dict:
    """Pseudo-remainder of univariate-in-x polynomials with Poly coefficients."""
    da, db = _u_degree(a), _u_degree(b)
    lb = b[db]
    rem = {d: dict(c) for d, c in a.items()}
    while rem and _u_degree(rem) >= db:
        dr = _u_degree(rem)
        lr = rem[dr]
        # rem := lb*rem - lr*x^(dr-db)*b
        new: dict = {}
        for d, c in rem.items():
            new[d] = p_mul(c, lb)
        for d, c in b.items():
            t = p_mul(lr, c)
            dd = d + dr - db
            new[dd] = p_sub(new.get(dd, {}), t)
        rem = {d: c for d, c in new.items() if c}
    return rem


def _p_content_poly(u: dict) -> Poly:
    """gcd of the Poly coefficients of a univariate decomposition."""
    coeffs = list(u.values())
    g = coeffs[0]
    for c in coeffs[1:]:
        g = p_gcd(g, c)
        if p_degree(g) == 0:
            break
    return g


def p_gcd(a: Poly, b: Poly) -> Poly:
    """Primitive positive-leading gcd over the rationals."""
    if not a and not b:
        return {}
    if not a:
        _, prim = p_content_sign(b)
        return prim
    if not b:
        _, prim = p_content_sign(a)
        return prim
    if p_degree(a) == 0 or p_degree(b) == 0:
        return p_const(1)
    # common monomial factor (cheap and frequent)
    common: dict = None
    for p in (a, b):
        for m in p:
            dm = dict(m)
            if common is None:
                common = dm
            else:
                common = {n: min(e, dm.get(n, 0)) for n, e in common.items() if dm.get(n, 0)}
            if not common:
                break
        if not common:
            break
    mono = tuple(sorted((n, e) for n, e in (common or {}).items() if e))
    if mono:
        a = {_mono_div(m, mono): c for m, c in a.items()}
        b = {_mono_div(m, mono): c for m, c in b.items()}
        mono_g: Poly = {mono: Fraction(1)}
    else:
        mono_g = p_const(1)
    va, vb = p_variables(a), p_variables(b)
    shared = sorted(va & vb)
    if not shared:
        return mono_g
    x = shared[0]
    ua, ub = _as_univariate(a, x), _as_univariate(b, x)
    ca, cb = _p_content_poly(ua), _p_content_poly(ub)
    cont_g = p_gcd(ca, cb)
    pa = {d: p_div_exact(c, ca) for d, c in ua.items()}
    pb = {d: p_div_exact(c, cb) for d, c in ub.items()}
    if _u_degree(pa) < _u_degree(pb):
        pa, pb = pb, pa
    while pb:
        r = _u_pseudo_rem(pa, pb, x)
        if r:
            cr = _p_content_poly(r)
            r = {d: p_div_exact(c, cr) for d, c in r.items()}
        pa, pb = pb, r
    g = p_mul(p_mul(_from_univariate(pa, x), cont_g), mono_g)
    _, prim = p_content_sign(g)
    return prim


def p_str(a: Poly) -> str:
    if not a:
        return "0"
    parts = []
    for m in sorted(a, key=_mono_key, reverse=True):
        c = a[m]
        factors = []
        for name, e in m:
            factors.append(name if e == 1 else f"{name}^{e}")
        body = "*".join(factors)
        mag = abs(c)
        if body:
            txt = body if mag == 1 else f"{mag}*{body}"
        else:
            txt = str(mag)
        parts.append(("-" if c < 0 else "+", txt))
    sign, first = parts[0]
    out = ("-" if sign == "-" else "") + first
    for sign, txt in parts[1:]:
        out += f" {sign} {txt}"
    return out


# ---------------------------------------------------------------------------
# the field
# ---------------------------------------------------------------------------

class Scalar:
    """A multivariate rational function in canonical form.

    Canonical form: gcd(num, den) = 1, the denominator is a primitive integer
    polynomial with positive leading coefficient, and zero is 0/1.  Equality
    of canonical forms is literal dict equality.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, _canonical=False):
        if isinstance(num, Scalar):
            if den is not None:
                raise TypeError("Scalar(num) takes no denominator for Scalar input")
            self.num, self.den = num.num, num.den
            return
        if not isinstance(num, dict):
            num = p_const(num)
        if den is None:
            den = p_const(1)
        elif not isinstance(den, dict):
            den = p_const(den)
        if _canonical:
            self.num, self.den = num, den
            return
        if p_is_zero(den):
            raise DomainError("division by the zero polynomial")
        if p_is_zero(num):
            self.num, self.den = {}, p_const(1)
            return
        if den != p_const(1):
            g = p_gcd(num, den)
            if p_degree(g) > 0 or g != p_const(1):
                num = p_div_exact(num, g)
                den = p_div_exact(den, g)
            content, prim = p_content_sign(den)
            den = prim
            num = {m: c / content for m, c in num.items()}
        self.num, self.den = num, den

    # -- constructors ------------------------------------------------------

    @staticmethod
    def const(c) -> "Scalar":
        return Scalar(p_const(c), None, _canonical=True)

    @staticmethod
    def var(name: str) -> "Scalar":
        return Scalar(p_var(name), None, _canonical=True)

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    def as_constant(self) -> Optional[Fraction]:
        """The value as a rational constant, or None when variables occur."""
        if not self.num:
            return Fraction(0)
        if self.den == p_const(1) and len(self.num) == 1 and _ONE_MONO in self.num:
            return self.num[_ONE_MONO]
        return None

    def variables(self) -> set:
        return p_variables(self.num) | p_variables(self.den)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Scalar):
            return other
        if isinstance(other, (int, Fraction)):
            return Scalar.const(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.den == o.den:
            return Scalar(p_add(self.num, o.num), self.den)
        return Scalar(p_add(p_mul(self.num, o.den), p_mul(o.num, self.den)),
                      p_mul(self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return Scalar(p_neg(self.num), self.den, _canonical=True)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if not self.num or not o.num:
            return Scalar.const(0)
        return Scalar(p_mul(self.num, o.num), p_mul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o.is_zero():
            raise DomainError("division by the zero polynomial")
        return Scalar(p_mul(self.num, o.den), p_mul(self.den, o.num))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        return o / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("Scalar powers must be integers")
        if n == 0:
            return Scalar.const(1)
        if n < 0:
            if self.is_zero():
                raise DomainError("division by the zero polynomial")
            return Scalar(p_pow(self.den, -n), p_pow(self.num, -n))
        return Scalar(p_pow(self.num, n), p_pow(self.den, n))

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((frozenset(self.num.items()), frozenset(self.den.items())))

    # -- calculus / substitution -------------------------------------------

    def partial(self, name: str) -> "Scalar":
        dn = p_diff(self.num, name)
        if self.den == p_const(1):
            return Scalar(dn, None)
        dd = p_diff(self.den, name)
        return Scalar(p_sub(p_mul(dn, self.den), p_mul(self.num, dd)),
                      p_mul(self.den, self.den))

    def substitute(self, bindings: Mapping[str, "Scalar"]) -> "Scalar":
        """Simultaneous substitution of names by scalars, then canonicalization."""
        if not bindings:
            return self
        mine = self.variables()
        if not any(n in mine for n in bindings):
            return self
        num = _p_subst(self.num, bindings)
        den = _p_subst(self.den, bindings)
        if den.is_zero():
            raise DomainError(f"substitution produced a zero denominator in {self}")
        return num / den

    def evaluate(self, point: Mapping[str, Fraction]) -> Fraction:
        d = p_eval(self.den, point)
        if d == 0:
            raise ZeroDivisionError("denominator vanished at the sample point")
        return p_eval(self.num, point) / d

    # -- normalization for reporting ----------------------------------------

    def constraint_normal(self) -> "Scalar":
        """The numerator, content-cleared and sign-fixed: same zero locus.

        Denominators consist of pivots already assumed nonzero, so the zero
        locus of a constraint is the zero locus of its numerator.
        """
        if not self.num:
            return Scalar.const(0)
        _, prim = p_content_sign(self.num)
        return Scalar(prim, None, _canonical=True)

    def __str__(self):
        if self.den == p_const(1):
            return p_str(self.num)
        ns = p_str(self.num)
        ds = p_str(self.den)
        if len(self.num) > 1:
            ns = f"({ns})"
        if len(self.den) > 1:
            ds = f"({ds})"
        return f"{ns}/{ds}"

    __repr__ = __str__


ZERO = Scalar.const(0)
ONE = Scalar.const(1)


def _p_subst(p: Poly, bindings: Mapping[str, Scalar]) -> Scalar:
    total = Scalar.const(0)
    for m, c in p.items():
        term = Scalar.const(c)
        for name, e in m:
            b = bindings.get(name)
            term = term * (b ** e if b is not None else Scalar({((name, e),): Fraction(1)}, None, _canonical=True))
        total = total + term
    return total


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------

ROLE_FIELD = "field"
ROLE_JET = "jet"
ROLE_MULTIPLIER = "multiplier"
ROLE_GRASSMANN = "grassmann"

_ROLE_SOLVE_RANK = {ROLE_MULTIPLIER: 0, ROLE_JET: 1, ROLE_FIELD: 2, ROLE_GRASSMANN: 0}


@dataclass(frozen=True)
class Dependent:
    """A dependent chart coordinate with its role and prolongation level.

    parent ties jets to (field, independent) and Grassmann coordinates to the
    (coordinate, independent) pair they prolong.
    """

    name: str
    role: str = ROLE_FIELD
    level: int = 0
    parent: Optional[tuple] = None


class Chart:
    """A single coordinate chart: ordered independents, tagged dependents, parameters."""

    def __init__(self, independent: Sequence[str], dependent: Sequence[Dependent],
                 parameters: Optional[Mapping[str, Fraction]] = None):
        self.independent = tuple(independent)
        self.dependent = tuple(dependent)
        self.parameters = dict(parameters or {})
        if len(self.independent) < 1:
            raise ValueError("at least one independent coordinate is required")
        names = list(self.independent) + [d.name for d in self.dependent] + list(self.parameters)
        if len(set(names)) != len(names):
            raise ValueError("chart names must be unique across independents, dependents and parameters")
        self._pos = {n: i for i, n in enumerate(list(self.independent) + [d.name for d in self.dependent])}
        self._dep = {d.name: d for d in self.dependent}

    @property
    def m(self) -> int:
        return len(self.independent)

    @property
    def names(self) -> tuple:
        return tuple(self._pos)

    @property
    def dim(self) -> int:
        return len(self._pos)

    def __contains__(self, name: str) -> bool:
        return name in self._pos

    def position(self, name: str) -> int:
        return self._pos[name]

    def is_independent(self, name: str) -> bool:
        return name in self._pos and self._pos[name] < len(self.independent)

    def dependent_info(self, name: str) -> Dependent:
        return self._dep[name]

    def level_of(self, name: str) -> int:
        d = self._dep.get(name)
        return d.level if d else 0

    def role_of(self, name: str) -> Optional[str]:
        d = self._dep.get(name)
        return d.role if d else None

    def max_level(self) -> int:
        return max((d.level for d in self.dependent), default=0)

    def extend(self, new_dependents: Sequence[Dependent]) -> "Chart":
        return Chart(self.independent, self.dependent + tuple(new_dependents), self.parameters)

    def drop(self, names: Iterable[str]) -> "Chart":
        gone = set(names)
        if gone & set(self.independent):
            raise ValueError("independent coordinates cannot be eliminated")
        return Chart(self.independent, tuple(d for d in self.dependent if d.name not in gone),
                     self.parameters)

    def solve_order(self) -> list:
        """Default elimination order: highest level first, multipliers before
        jets before fields within level 0, declaration order as tiebreak."""
        deps = list(self.dependent)
        deps.sort(key=lambda d: (-d.level, _ROLE_SOLVE_RANK.get(d.role, 1), self._pos[d.name]))
        return [d.name for d in deps]

    def __repr__(self):
        return f"Chart({list(self.independent)} | {[d.name for d in self.dependent]})"


# ---------------------------------------------------------------------------
# linear solving
# ---------------------------------------------------------------------------

@dataclass
class LinearSolveResult:
    """Triangular-resolved solution of an affine-linear system over the field.

    solved maps eliminated unknowns to right-hand sides free of every solved
    unknown; residual holds the unknown-free compatibility scalars; free lists
    unknowns left undetermined; assumptions records nonconstant pivots that
    were divided by (each is assumed nonzero).
    """

    solved: dict
    residual: list
    free: list
    assumptions: list


def _linear_split(eq: Scalar, unknowns: Sequence[str]):
    """Write eq as sum(coeff[u]*u) + const; raise when not affine-linear."""
    uset = set(unknowns)
    if p_variables(eq.den) & uset:
        raise NonLinearInUnknowns(eq)
    coeffs: dict = {}
    const: Poly = {}
    for m, c in eq.num.items():
        hit = None
        for name, e in m:
            if name in uset:
                if hit is not None or e > 1:
                    raise NonLinearInUnknowns(eq)
                hit = name
        if hit is None:
            s = const.get(m, 0) + c
            if s:
                const[m] = s
            else:
                const.pop(m, None)
        else:
            rest = tuple(p for p in m if p[0] != hit)
            cur = coeffs.setdefault(hit, {})
            s = cur.get(rest, 0) + c
            if s:
                cur[rest] = s
            else:
                cur.pop(rest, None)
    den = Scalar(eq.den, None, _canonical=True)
    out = {u: Scalar(p, None) / den for u, p in coeffs.items() if p}
    return out, Scalar(const, None) / den


def solve_linear(eqs: Sequence[Scalar], unknowns: Sequence[str]) -> LinearSolveResult:
    """Gaussian elimination over the scalar field.

    Pivots follow the given unknown order (earlier unknowns are eliminated
    first); among candidate rows for an unknown, constant pivot coefficients
    are preferred, then sparser ones.  A pivot that vanishes identically is
    skipped; a nonconstant pivot is recorded as a genericity assumption.
    """
    rows = []
    for eq in eqs:
        if eq.is_zero():
            continue
        coeffs, const = _linear_split(eq, unknowns)
        rows.append((coeffs, const))
    solved: dict = {}
    order: list = []
    assumptions: list = []
    for u in unknowns:
        best = None
        for idx, (coeffs, _) in enumerate(rows):
            c = coeffs.get(u)
            if c is None or c.is_zero():
                continue
            rank = (0 if c.as_constant() is not None else 1, len(c.num), idx)
            if best is None or rank < best[0]:
                best = (rank, idx)
        if best is None:
            continue
        _, idx = best
        coeffs, const = rows.pop(idx)
        pivot = coeffs.pop(u)
        if pivot.as_constant() is None:
            assumptions.append(pivot.constraint_normal())
        rhs = {v: -(c / pivot) for v, c in coeffs.items() if not c.is_zero()}
        rhs_const = -(const / pivot)
        solved[u] = (rhs, rhs_const)
        order.append(u)
        new_rows = []
        for oc, ocst in rows:
            fac = oc.pop(u, None)
            if fac is not None and not fac.is_zero():
                for v, c in rhs.items():
                    oc[v] = oc.get(v, ZERO) + fac * c
                ocst = ocst + fac * rhs_const
            oc = {v: c for v, c in oc.items() if not c.is_zero()}
            new_rows.append((oc, ocst))
        rows = new_rows
    # back-substitute so right-hand sides are free of every solved unknown
    resolved: dict = {}
    for u in reversed(order):
        rhs, rhs_const = solved[u]
        expr = rhs_const
        for v, c in rhs.items():
            if v in resolved:
                expr = expr + c * resolved[v]
            else:
                expr = expr + c * Scalar.var(v)
        resolved[u] = expr
    residual = []
    for coeffs, const in rows:
        live = {v: c for v, c in coeffs.items() if not c.is_zero()}
        if live:  # unreachable for a consistent elimination, kept as a guard
            expr = const
            for v, c in live.items():
                expr = expr + c * Scalar.var(v)
            residual.append(expr)
        elif not const.is_zero():
            residual.append(const)
    free = [u for u in unknowns if u not in resolved]
    return LinearSolveResult(solved={u: resolved[u] for u in order},
                             residual=residual, free=free, assumptions=assumptions)


# ---------------------------------------------------------------------------
# seeded sampling and modular rank
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
_PRIMES = ((1 << 61) - 1, (1 << 89) - 1)
SAMPLE_BOUND = 10_000


class SeedStream:
    """SplitMix64: a tiny, fully deterministic random stream."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.next_u64() % (hi - lo + 1)

    def fraction(self) -> Fraction:
        num = self.randint(-(SAMPLE_BOUND - 1), SAMPLE_BOUND - 1)
        den = self.randint(1, SAMPLE_BOUND - 1)
        return Fraction(num, den)


def sample_point(names: Iterable[str], stream: SeedStream) -> dict:
    return {n: stream.fraction() for n in sorted(names)}


def rank_fractions(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank of an exact rational matrix via elimination modulo two large primes."""
    best = 0
    for p in _PRIMES:
        try:
            r = _rank_mod(rows, p)
        except ZeroDivisionError:
            continue
        best = max(best, r)
    return best


def _rank_mod(rows, p: int) -> int:
    mat = []
    for row in rows:
        mr = []
        for c in row:
            den = c.denominator % p
            if den == 0:
                raise ZeroDivisionError
            mr.append((c.numerator % p) * pow(den, p - 2, p) % p)
        mat.append(mr)
    rank = 0
    ncols = len(mat[0]) if mat else 0
    col = 0
    while rank < len(mat) and col < ncols:
        piv = next((r for r in range(rank, len(mat)) if mat[r][col]), None)
        if piv is None:
            col += 1
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        inv = pow(mat[rank][col], p - 2, p)
        prow = [v * inv % p for v in mat[rank]]
        mat[rank] = prow
        for r in range(len(mat)):
            if r != rank and mat[r][col]:
                f = mat[r][col]
                mat[r] = [(v - f * pv) % p for v, pv in zip(mat[r], prow)]
        rank += 1
        col += 1
    return rank


def evaluate_matrix(rows: Sequence[Sequence[Scalar]], point: Mapping[str, Fraction]):
    return [[c.evaluate(point) for c in row] for row in rows]


def random_rank(matrix: Sequence[Sequence[Scalar]], seed: int, samples: int = 3) -> int:
    """Generic rank of a matrix of scalars: max exact rank over seeded samples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rows = [list(r) for r in matrix]
    if not rows or not rows[0]:
        return 0
    names = set()
    for row in rows:
        for c in row:
            names |= c.variables()
    stream = SeedStream(seed)
    best = None
    for _ in range(samples):
        got = None
        for _retry in range(8):
            point = sample_point(names, stream)
            try:
                got = rank_fractions(evaluate_matrix(rows, point))
                break
            except ZeroDivisionError:
                continue
        if got is not None:
            best = got if best is None else max(best, got)
    if best is None:
        raise AllSamplesDegenerate("every sample hit a denominator zero")
    return best
