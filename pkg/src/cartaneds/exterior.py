"""Graded exterior algebra of differential forms and multivectors on a chart.

Forms are sparse: a degree-k form maps strictly increasing coordinate index
tuples (in chart order) to scalars, with the canonical sign absorbed into the
coefficient.  Multivectors are kept decomposable as an ordered factor list;
the contraction convention is that the innermost (last) factor is contracted
first, and every consumer of multivector contractions uses that convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .scalars import Chart, Scalar, ZERO, ONE, p_const, random_rank


class CoframeDegenerate(ValueError):
    """A claimed coframe fails the pointwise full-rank check."""


def _sort_with_sign(names: Sequence[str], chart: Chart):
    """Sort coordinate names by chart position; return (tuple, sign) or None on repeats."""
    order = [chart.position(n) for n in names]
    if len(set(order)) != len(order):
        return None
    perm = sorted(range(len(order)), key=lambda i: order[i])
    inv = 0
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                inv += 1
    sign = -1 if inv % 2 else 1
    return tuple(names[i] for i in perm), sign


class Form:
    """A differential form on a chart; degree 0 wraps a single scalar."""

    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms: Optional[Mapping] = None):
        self.chart = chart
        self.degree = degree
        self.terms = {}
        if terms:
            for idx, coef in terms.items():
                if not isinstance(coef, Scalar):
                    coef = Scalar(coef)
                if coef.is_zero():
                    continue
                self.terms[tuple(idx)] = coef

    # -- constructors --------------------------------------------------------

    @staticmethod
    def scalar(chart: Chart, value) -> "Form":
        v = value if isinstance(value, Scalar) else Scalar(value)
        return Form(chart, 0, {(): v} if not v.is_zero() else {})

    @staticmethod
    def differential(chart: Chart, name: str) -> "Form":
        if name not in chart:
            raise KeyError(f"unknown coordinate {name!r}")
        return Form(chart, 1, {(name,): ONE})

    def is_zero(self) -> bool:
        return not self.terms

    def as_scalar(self) -> Scalar:
        if self.degree != 0:
            raise ValueError("not a degree-0 form")
        return self.terms.get((), ZERO)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        if self.terms and other.terms and self.degree != other.degree:
            return False
        return self.terms == other.terms

    __hash__ = None

    # -- algebra --------------------------------------------------------------

    def __add__(self, other: "Form") -> "Form":
        if self.degree != other.degree and self.terms and other.terms:
            raise ValueError("cannot add forms of different degree")
        terms = dict(self.terms)
        for idx, c in other.terms.items():
            s = terms.get(idx, ZERO) + c
            if s.is_zero():
                terms.pop(idx, None)
            else:
                terms[idx] = s
        return Form(self.chart, self.degree if self.terms else other.degree, terms)

    def __neg__(self) -> "Form":
        return Form(self.chart, self.degree, {i: -c for i, c in self.terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, s) -> "Form":
        s = s if isinstance(s, Scalar) else Scalar(s)
        if s.is_zero():
            return Form(self.chart, self.degree, {})
        return Form(self.chart, self.degree, {i: c * s for i, c in self.terms.items()})

    def wedge(self, other: "Form") -> "Form":
        deg = self.degree + other.degree
        if deg > self.chart.dim:
            return Form(self.chart, deg, {})
        terms: dict = {}
        for ia, ca in self.terms.items():
            for ib, cb in other.terms.items():
                sorted_idx = _sort_with_sign(ia + ib, self.chart)
                if sorted_idx is None:
                    continue
                idx, sign = sorted_idx
                c = ca * cb if sign > 0 else -(ca * cb)
                s = terms.get(idx, ZERO) + c
                if s.is_zero():
                    terms.pop(idx, None)
                else:
                    terms[idx] = s
        return Form(self.chart, deg, terms)

    def d(self) -> "Form":
        """Exterior derivative."""
        terms: dict = {}
        for idx, coef in self.terms.items():
            for name in sorted(coef.variables()):
                if name not in self.chart:
                    continue
                dc = coef.partial(name)
                if dc.is_zero():
                    continue
                sorted_idx = _sort_with_sign((name,) + idx, self.chart)
                if sorted_idx is None:
                    continue
                full, sign = sorted_idx
                c = dc if sign > 0 else -dc
                s = terms.get(full, ZERO) + c
                if s.is_zero():
                    terms.pop(full, None)
                else:
                    terms[full] = s
        return Form(self.chart, self.degree + 1, terms)

    def contract(self, vector: Mapping[str, Scalar]) -> "Form":
        """Interior product with a vector field given by its components."""
        if self.degree < 1:
            raise ValueError("cannot contract a degree-0 form")
        terms: dict = {}
        for idx, coef in self.terms.items():
            for k, name in enumerate(idx):
                comp = vector.get(name)
                if comp is None or (isinstance(comp, Scalar) and comp.is_zero()):
                    continue
                c = coef * comp
                if k % 2:
                    c = -c
                rest = idx[:k] + idx[k + 1:]
                s = terms.get(rest, ZERO) + c
                if s.is_zero():
                    terms.pop(rest, None)
                else:
                    terms[rest] = s
        return Form(self.chart, self.degree - 1, terms)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for idx in sorted(self.terms, key=lambda i: tuple(self.chart.position(n) for n in i)):
            coef = self.terms[idx]
            wedge = "/\\".join(f"d({n})" for n in idx)
            cs = str(coef)
            if idx:
                if cs == "1":
                    parts.append(wedge)
                elif cs == "-1":
                    parts.append(f"-{wedge}")
                else:
                    if coef.den != p_const(1) or len(coef.num) > 1:
                        cs = f"({cs})"
                    parts.append(f"{cs}*{wedge}")
            else:
                parts.append(cs)
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


class MultiVector:
    """A decomposable multivector Z_1 /\\ ... /\\ Z_k stored as its factor list."""

    def __init__(self, chart: Chart, factors: Sequence[Mapping[str, Scalar]]):
        self.chart = chart
        self.factors = [dict(f) for f in factors]

    @property
    def degree(self) -> int:
        return len(self.factors)

    def contract(self, form: Form) -> Form:
        """Iterated interior product Z_k .| ( ... (Z_1 .| form)).

        The first factor is the innermost contraction; with Z = d/dx /\\ d/dy
        this gives (dx/\\dy/\\dz) |-> dz.  All consumers rely on this one
        convention (a global sign never changes a zero locus).
        """
        if form.degree < self.degree:
            raise ValueError("form degree below multivector degree")
        out = form
        for vec in self.factors:
            out = out.contract(vec)
        return out


def wedge(a: Form, b: Form) -> Form:
    return a.wedge(b)


def d(a: Form) -> Form:
    return a.d()


def contract_vector(vector: Mapping[str, Scalar], a: Form) -> Form:
    return a.contract(vector)


def contract_multivector(mv: MultiVector, a: Form) -> Form:
    return mv.contract(a)


# ---------------------------------------------------------------------------
# substitution / pullback
# ---------------------------------------------------------------------------

class Substitution:
    """Coordinate substitution (locus restriction): bound names with scalar values.

    Right-hand sides must only reference retained names (triangular-resolved);
    pullback of a differential uses d of the binding, so pullback commutes
    with the exterior derivative.
    """

    def __init__(self, chart: Chart, bindings: Mapping[str, Scalar]):
        self.chart = chart  # the retained (target) chart
        self.bindings = {n: (v if isinstance(v, Scalar) else Scalar(v)) for n, v in bindings.items()}
        for name, value in self.bindings.items():
            bad = value.variables() & set(self.bindings)
            if bad:
                raise ValueError(f"substitution not resolved: {name} -> {value} references {sorted(bad)}")

    def scalar(self, s: Scalar) -> Scalar:
        return s.substitute(self.bindings)

    def form(self, a: Form) -> Form:
        out = Form(self.chart, a.degree, {})
        for idx, coef in a.terms.items():
            term = Form.scalar(self.chart, self.scalar(coef))
            for name in idx:
                b = self.bindings.get(name)
                if b is None:
                    dn = Form.differential(self.chart, name)
                else:
                    dn = Form.scalar(self.chart, b).d()
                term = term.wedge(dn)
            if a.degree and term.degree != a.degree:
                term = Form(self.chart, a.degree, term.terms)
            out = out + term
        return out

    def compose(self, later: "Substitution") -> "Substitution":
        """The substitution 'first self, then later' as a single resolved map."""
        merged = {n: later.scalar(v) for n, v in self.bindings.items()}
        for n, v in later.bindings.items():
            if n not in merged:
                merged[n] = v
        return Substitution(later.chart, merged)

    def __repr__(self):
        inner = ", ".join(f"{n} -> {v}" for n, v in sorted(self.bindings.items()))
        return f"Substitution({inner})"


def identity_substitution(chart: Chart) -> Substitution:
    return Substitution(chart, {})


def pullback(a: Form, s: Substitution) -> Form:
    return s.form(a)


# ---------------------------------------------------------------------------
# coframe expansion
# ---------------------------------------------------------------------------

class CoframeExpansion:
    """Expansion of coordinate differentials in a full coframe.

    Solves the linear system once; afterwards any form can be rewritten in
    the coframe's wedge basis exactly.
    """

    def __init__(self, chart: Chart, coframe: Sequence[tuple], seed: int = 0):
        # coframe entries: (label, Form of degree 1)
        self.chart = chart
        self.labels = [lab for lab, _ in coframe]
        self.forms = [f for _, f in coframe]
        names = list(chart.names)
        if len(coframe) != len(names):
            raise CoframeDegenerate(
                f"coframe has {len(coframe)} entries for a {len(names)}-dimensional chart")
        matrix = [[f.terms.get((n,), ZERO) for n in names] for f in self.forms]
        if random_rank(matrix, seed) != len(names):
            raise CoframeDegenerate("coframe coefficient matrix is not of full rank")
        # coords[name] = list of (label index, Scalar): d(name) = sum c * coframe_r
        self.coords = self._invert(matrix, names)

    def _invert(self, matrix, names):
        """Sparse Gauss-Jordan: [M | I] -> [I | M^{-1}], rows kept as dicts."""
        n = len(names)
        rows = []
        for j in range(n):
            rd = {c: v for c, v in enumerate(matrix[j]) if not v.is_zero()}
            rd[n + j] = ONE
            rows.append(rd)
        used = [False] * n
        pivot_row = {}
        for col in range(n):
            candidates = []
            for r in range(n):
                if used[r] or col not in rows[r]:
                    continue
                c = rows[r][col]
                candidates.append(
                    (0 if c.as_constant() is not None else 1, len(c.num), len(rows[r]), r))
            if not candidates:
                raise CoframeDegenerate("coframe matrix could not be inverted symbolically")
            r = min(candidates)[-1]
            used[r] = True
            pivot_row[col] = r
            pc = rows[r][col]
            if pc != ONE:
                rows[r] = {c: v / pc for c, v in rows[r].items()}
            prow = rows[r]
            for rr in range(n):
                if rr == r or col not in rows[rr]:
                    continue
                f = rows[rr][col]
                nr = dict(rows[rr])
                for c, v in prow.items():
                    s = nr.get(c, ZERO) - f * v
                    if s.is_zero():
                        nr.pop(c, None)
                    else:
                        nr[c] = s
                rows[rr] = nr
        out = {}
        for c, name in enumerate(names):
            prow = rows[pivot_row[c]]
            out[name] = [(j, prow[n + j]) for j in range(n) if n + j in prow]
        return out

    def expand_one_form(self, f: Form) -> dict:
        """Coefficients of a 1-form over the coframe labels."""
        out: dict = {}
        for (name,), coef in f.terms.items():
            for j, c in self.coords[name]:
                s = out.get(j, ZERO) + coef * c
                if s.is_zero():
                    out.pop(j, None)
                else:
                    out[j] = s
        return out

    def expand_two_form(self, f: Form) -> dict:
        """Coefficients over ordered label pairs (i < j) of the coframe wedge basis."""
        out: dict = {}
        for (na, nb), coef in f.terms.items():
            for ja, ca in self.coords[na]:
                for jb, cb in self.coords[nb]:
                    if ja == jb:
                        continue
                    key = (ja, jb) if ja < jb else (jb, ja)
                    c = coef * ca * cb
                    if jb < ja:
                        c = -c
                    s = out.get(key, ZERO) + c
                    if s.is_zero():
                        out.pop(key, None)
                    else:
                        out[key] = s
        return out


def coefficients(a: Form, coframe: Sequence[tuple], seed: int = 0) -> dict:
    """Exact expansion of a form in wedge products of a coframe.

    For degree 0/1/2 (all this engine needs); keys are label tuples.
    """
    exp = CoframeExpansion(a.chart, coframe, seed)
    if a.degree == 0:
        return {(): a.as_scalar()} if not a.is_zero() else {}
    if a.degree == 1:
        flat = exp.expand_one_form(a)
        return {(exp.labels[j],): c for j, c in flat.items()}
    if a.degree == 2:
        flat = exp.expand_two_form(a)
        return {(exp.labels[i], exp.labels[j]): c for (i, j), c in flat.items()}
    raise NotImplementedError("coefficient extraction implemented for degrees <= 2")


def vertical_degree(a: Form) -> int:
    """Largest number of non-independent differentials in any term."""
    chart = a.chart
    best = 0
    for idx in a.terms:
        v = sum(1 for n in idx if not chart.is_independent(n))
        best = max(best, v)
    return best


def volume_form(chart: Chart) -> Form:
    return Form(chart, chart.m, {tuple(chart.independent): ONE})


def volume_contraction(chart: Chart, names: Sequence[str]) -> Form:
    """eta_{i...}: successive interior products of the volume by coordinate directions."""
    f = volume_form(chart)
    for n in names:
        f = f.contract({n: ONE})
    return f
