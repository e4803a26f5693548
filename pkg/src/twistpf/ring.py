"""Exact polynomial and rational-function arithmetic over Q.

Everything lives in one flint context per job: the edge variables
``x1..xn`` come first, followed by the parameter symbols.  A
:class:`ParamField` element is a reduced fraction of polynomials that only
involve parameters.  A :class:`HomogeneousPoly` is a polynomial in the edge
variables whose coefficients are :class:`ParamField` elements, stored as one
flint polynomial over the whole context plus a common parameter denominator.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import flint

ParamSymbol = str
RESERVED = ("eps", "kap")
_XVAR = re.compile(r"^x\d+$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class RingError(ValueError):
    pass


def grevlex_key(exp: Sequence[int]) -> tuple:
    """Sort key: larger key means larger monomial in graded reverse lex."""
    return (sum(exp), tuple(-e for e in reversed(exp)))


class ParamRing:
    """Variable bookkeeping for one job.

    ``params`` is the ordered tuple of parameter symbols.  ``eps`` and
    ``kap`` are always present.  ``nvars`` is the number of edge variables.
    """

    _cache: dict = {}

    def __new__(cls, params: Sequence[str], nvars: int = 0):
        params = tuple(params)
        for r in RESERVED:
            if r not in params:
                params = params + (r,)
        key = (params, nvars)
        hit = cls._cache.get(key)
        if hit is not None:
            return hit
        for p in params:
            if not _NAME.match(p):
                raise RingError(f"invalid parameter name {p!r}")
            if _XVAR.match(p):
                raise RingError(f"parameter name {p!r} clashes with edge variables")
        if len(set(params)) != len(params):
            raise RingError("duplicate parameter names")
        self = super().__new__(cls)
        self.params = params
        self.nvars = nvars
        self.xnames = tuple(f"x{i + 1}" for i in range(nvars))
        self.ctx = flint.fmpq_mpoly_ctx.get(self.xnames + params, "degrevlex")
        self._gens = self.ctx.gens()
        self._pindex = {p: nvars + i for i, p in enumerate(params)}
        self._one_poly = self.ctx.from_dict({(0,) * (nvars + len(params)): 1})
        self.zero = ParamField(self, self.ctx.from_dict({}), None)
        self.one = ParamField(self, self.ctx.from_dict({(0,) * (nvars + len(params)): 1}), None)
        cls._cache[key] = self
        return self

    def __repr__(self):
        return f"ParamRing(params={self.params!r}, nvars={self.nvars})"

    def __reduce__(self):
        return (ParamRing, (self.params, self.nvars))

    # construction helpers
    def param(self, name: str) -> "ParamField":
        try:
            return ParamField(self, self._gens[self._pindex[name]], None)
        except KeyError:
            raise RingError(f"unknown parameter symbol {name!r}") from None

    def x(self, i: int):
        """The i-th edge variable (0-based) as a raw flint polynomial."""
        return self._gens[i]

    def xpoly(self, i: int) -> "HomogeneousPoly":
        return HomogeneousPoly(self, 1, self._gens[i])

    def const(self, value) -> "ParamField":
        if isinstance(value, ParamField):
            return value
        if isinstance(value, Fraction):
            value = flint.fmpq(value.numerator, value.denominator)
        return ParamField(self, self.ctx.from_dict({(0,) * self.ctx.nvars(): value}) if value else self.ctx.from_dict({}), None)

    def is_param_index(self, i: int) -> bool:
        return i >= self.nvars

    def param_index(self, name: str) -> int:
        return self._pindex[name]

    def parse(self, text: str) -> "ParamField":
        """Parse a rational expression in the parameter symbols."""
        return parse_expression(text, self)

    def with_params(self, params: Sequence[str]) -> "ParamRing":
        return ParamRing(params, self.nvars)


def _monic_den(num, den, ctx):
    if den.is_zero():
        raise ZeroDivisionError("division by zero in parameter field")
    if not den.is_one():
        g = num.gcd(den)
        if not g.is_one():
            num = num / g
            den = den / g
        lc = den.leading_coefficient()
        if lc != 1:
            num = num * (1 / lc)
            den = den * (1 / lc)
    return num, den


class ParamField:
    """Element of Q(params) in canonical form.

    Numerator and denominator are coprime and the denominator's leading
    coefficient (degrevlex) is 1.  Elements with denominator 1 are the
    parameter polynomials.
    """

    __slots__ = ("ring", "num", "den")

    def __init__(self, ring: ParamRing, num, den=None, *, reduced=False):
        self.ring = ring
        if den is None:
            self.num = num
            self.den = ring._one_poly
            return
        if not reduced and not den.is_one():
            num, den = _monic_den(num, den, ring.ctx)
        self.num = num
        self.den = den

    # coercion
    def _co(self, other) -> "ParamField":
        if isinstance(other, ParamField):
            return other
        if isinstance(other, (int, Fraction, flint.fmpq)):
            return self.ring.const(other)
        return NotImplemented

    def __add__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        if o.num.is_zero():
            return self
        if self.num.is_zero():
            return o
        if self.den == o.den:
            return ParamField(self.ring, self.num + o.num, self.den)
        return ParamField(self.ring, self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return ParamField(self.ring, -self.num, self.den, reduced=True)

    def __sub__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        if self.num.is_zero() or o.num.is_zero():
            return self.ring.zero
        if self.den.is_one() and o.den.is_one():
            return ParamField(self.ring, self.num * o.num, self.den, reduced=True)
        # cross-cancel before multiplying
        g1 = self.num.gcd(o.den)
        g2 = o.num.gcd(self.den)
        num = (self.num / g1) * (o.num / g2)
        den = (self.den / g2) * (o.den / g1)
        lc = den.leading_coefficient()
        if lc != 1:
            num = num * (1 / lc)
            den = den * (1 / lc)
        return ParamField(self.ring, num, den, reduced=True)

    __rmul__ = __mul__

    def inverse(self) -> "ParamField":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero in parameter field")
        return ParamField(self.ring, self.den, self.num)

    def __truediv__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return ParamField(self.ring, self.num ** k, self.den ** k, reduced=True)

    def __eq__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return False
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((str(self.num), str(self.den)))

    def __bool__(self):
        return not self.num.is_zero()

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.is_one()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def symbols(self) -> set:
        """Parameter symbols occurring in numerator or denominator."""
        r = self.ring
        out = set()
        for poly in (self.num, self.den):
            for e in poly.monoms():
                for i, k in enumerate(e):
                    if k:
                        out.add(r.params[i - r.nvars])
        return out

    def derivative(self, name: str) -> "ParamField":
        i = self.ring.param_index(name)
        dn = self.num.derivative(i)
        if self.den.is_one():
            return ParamField(self.ring, dn, self.den, reduced=True)
        dd = self.den.derivative(i)
        return ParamField(self.ring, dn * self.den - self.num * dd, self.den * self.den)

    def subs(self, bindings: Mapping[str, "ParamField"]) -> "ParamField":
        return substitute_poly(self.ring, self.num, bindings) / substitute_poly(self.ring, self.den, bindings)

    def to_fraction(self) -> Fraction:
        if not self.is_constant():
            raise RingError("not a constant")
        a = self.num.leading_coefficient() if not self.num.is_zero() else flint.fmpq(0)
        b = self.den.leading_coefficient()
        q = a / b
        return Fraction(int(q.p), int(q.q))

    def eval_mod(self, point: Mapping[int, int], p: int) -> int:
        """Evaluate at integer parameter values modulo a prime."""
        n = eval_poly_mod(self.num, point, p)
        d = eval_poly_mod(self.den, point, p)
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at evaluation point")
        return n * pow(d, -1, p) % p

    def __repr__(self):
        return f"ParamField({render_field(self)})"

    def __str__(self):
        return render_field(self)


def eval_poly_mod(poly, point: Mapping[int, int], p: int) -> int:
    acc = 0
    for e, c in poly.terms():
        v = int(c.p) % p * pow(int(c.q), -1, p)
        for i, k in enumerate(e):
            if k:
                v = v * pow(point[i], k, p)
        acc += v
    return acc % p


def substitute_poly(ring: ParamRing, poly, bindings: Mapping[str, ParamField]) -> ParamField:
    """Substitute field elements for parameters in a parameter polynomial."""
    if not bindings:
        return ParamField(ring, poly, None)
    idx = {ring.param_index(k): v for k, v in bindings.items()}
    acc = ring.zero
    cache: dict = {}
    base = [0] * ring.ctx.nvars()
    for e, c in poly.terms():
        rest = list(base)
        term = ring.const(c)
        for i, k in enumerate(e):
            if not k:
                continue
            if i in idx:
                key = (i, k)
                if key not in cache:
                    cache[key] = idx[i] ** k
                term = term * cache[key]
            else:
                rest[i] = k
        if any(rest):
            term = term * ParamField(ring, ring.ctx.from_dict({tuple(rest): 1}), None)
        acc = acc + term
    return acc


# rendering -----------------------------------------------------------------

def _render_monomial(names, exp) -> str:
    parts = []
    for name, k in zip(names, exp):
        if k == 1:
            parts.append(name)
        elif k > 1:
            parts.append(f"{name}^{k}")
    return "*".join(parts)


def render_terms(names, terms) -> str:
    """Render (exponent, rational) pairs already in display order."""
    out = []
    for exp, c in terms:
        c = Fraction(int(c.p), int(c.q)) if isinstance(c, flint.fmpq) else Fraction(c)
        mono = _render_monomial(names, exp)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if mono and a == 1:
            body = mono
        elif mono:
            body = f"{a}*{mono}"
        else:
            body = str(a)
        out.append((sign, body))
    if not out:
        return "0"
    s = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        s += f" {sign} {body}"
    return s


def render_param_poly(ring: ParamRing, poly) -> str:
    terms = [(e[ring.nvars:], c) for e, c in poly.terms()]
    terms.sort(key=lambda t: grevlex_key(t[0]), reverse=True)
    return render_terms(ring.params, terms)


def render_field(f: ParamField) -> str:
    n = render_param_poly(f.ring, f.num)
    if f.den.is_one():
        return n
    d = render_param_poly(f.ring, f.den)
    if len(f.num) > 1:
        n = f"({n})"
    if len(f.den) > 1 or not f.den.is_constant() and "*" in d:
        d = f"({d})"
    return f"{n}/{d}"


# homogeneous polynomials in the edge variables -----------------------------

class HomogeneousPoly:
    """Homogeneous polynomial in ``x1..xn`` with parameter-field coefficients.

    ``num`` is a flint polynomial over edge variables and parameters and
    ``den`` a parameter polynomial; the value is ``num/den``.
    """

    __slots__ = ("ring", "degree", "num", "den")

    def __init__(self, ring: ParamRing, degree: int, num, den=None, *, reduced=False):
        self.ring = ring
        self.degree = degree
        if den is None:
            den = ring._one_poly
        elif not reduced and not den.is_one():
            num, den = _monic_den(num, den, ring.ctx)
        self.num = num
        self.den = den

    @classmethod
    def zero(cls, ring: ParamRing, degree: int) -> "HomogeneousPoly":
        return cls(ring, degree, ring.zero.num)

    @classmethod
    def from_terms(cls, ring: ParamRing, degree: int, terms: Mapping[tuple, ParamField]) -> "HomogeneousPoly":
        n = ring.nvars
        den = ring._one_poly
        for c in terms.values():
            if not c.den.is_one() and c.den != den:
                den = den * (c.den / den.gcd(c.den))
        acc = {}
        for exp, c in terms.items():
            if len(exp) != n or sum(exp) != degree:
                raise RingError(f"monomial {exp} is not of degree {degree} in {n} variables")
            if c.is_zero():
                continue
            scaled = c.num * (den / c.den) if not c.den.is_one() else c.num * den
            for e, k in scaled.terms():
                key = tuple(exp) + tuple(e[n:])
                acc[key] = acc.get(key, 0) + k
        num = ring.ctx.from_dict({k: v for k, v in acc.items() if v != 0})
        return cls(ring, degree, num, den)

    @classmethod
    def from_poly(cls, ring: ParamRing, poly, den=None) -> "HomogeneousPoly":
        """Wrap a raw flint polynomial, checking homogeneity in x."""
        n = ring.nvars
        degs = {sum(e[:n]) for e in poly.monoms()}
        if len(degs) > 1:
            raise RingError("polynomial is not homogeneous in the edge variables")
        d = degs.pop() if degs else 0
        return cls(ring, d, poly, den)

    def terms(self) -> dict:
        """Map exponent vectors to coefficients."""
        n = self.ring.nvars
        groups: dict = {}
        for e, c in self.num.terms():
            groups.setdefault(e[:n], {})[(0,) * n + e[n:]] = c
        ctx = self.ring.ctx
        return {k: ParamField(self.ring, ctx.from_dict(v), self.den) for k, v in groups.items()}

    def coefficient(self, exp: Sequence[int]) -> ParamField:
        return self.terms().get(tuple(exp), self.ring.zero)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __len__(self):
        return len(self.terms())

    def _check(self, other: "HomogeneousPoly"):
        if other.ring is not self.ring:
            raise RingError("polynomials from different rings")

    def __add__(self, other):
        if isinstance(other, HomogeneousPoly):
            self._check(other)
            if other.num.is_zero():
                return self
            if self.num.is_zero():
                return other
            if self.degree != other.degree:
                raise RingError(f"degree mismatch {self.degree} vs {other.degree}")
            if self.den == other.den:
                return HomogeneousPoly(self.ring, self.degree, self.num + other.num, self.den)
            g = self.den.gcd(other.den)
            a = other.den / g
            b = self.den / g
            return HomogeneousPoly(self.ring, self.degree, self.num * a + other.num * b, self.den * a)
        return NotImplemented

    def __neg__(self):
        return HomogeneousPoly(self.ring, self.degree, -self.num, self.den, reduced=True)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, HomogeneousPoly):
            self._check(other)
            return HomogeneousPoly(self.ring, self.degree + other.degree, self.num * other.num, self.den * other.den)
        if isinstance(other, (int, Fraction, flint.fmpq)):
            other = self.ring.const(other)
        if isinstance(other, ParamField):
            if other.is_zero():
                return HomogeneousPoly.zero(self.ring, self.degree)
            return HomogeneousPoly(self.ring, self.degree, self.num * other.num, self.den * other.den)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise RingError("negative power of a polynomial")
        return HomogeneousPoly(self.ring, self.degree * k, self.num ** k, self.den ** k)

    def __eq__(self, other):
        if not isinstance(other, HomogeneousPoly):
            return NotImplemented
        if self.num.is_zero() and other.num.is_zero():
            return True
        return self.degree == other.degree and self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.degree, str(self.num), str(self.den)))

    def divides_x(self, i: int) -> bool:
        return all(e[i] >= 1 for e in self.num.monoms())

    def div_x(self, i: int) -> "HomogeneousPoly":
        """Exact division by the edge variable x_i."""
        if not self.divides_x(i):
            raise RingError(f"polynomial not divisible by x{i + 1}")
        if self.num.is_zero():
            return HomogeneousPoly.zero(self.ring, self.degree - 1)
        return HomogeneousPoly(self.ring, self.degree - 1, self.num / self.ring.x(i), self.den, reduced=True)

    def exact_div(self, other: "HomogeneousPoly"):
        """Return self/other if the division is exact in x, else None."""
        q, r = divmod(self.num * other.den, other.num)
        if not r.is_zero():
            return None
        return HomogeneousPoly(self.ring, self.degree - other.degree, q, self.den)

    def derivative(self, var) -> "HomogeneousPoly":
        return partial_derivative(self, var)

    def subs(self, bindings: Mapping[str, ParamField]) -> "HomogeneousPoly":
        return HomogeneousPoly.from_terms(
            self.ring, self.degree, {k: v.subs(bindings) for k, v in self.terms().items()})

    def permute(self, perm: Sequence[int]) -> "HomogeneousPoly":
        """Apply x_i -> x_perm[i]."""
        n = self.ring.nvars
        d = {}
        for e, c in self.num.terms():
            new = [0] * n
            for i in range(n):
                new[perm[i]] = e[i]
            d[tuple(new) + tuple(e[n:])] = c
        return HomogeneousPoly(self.ring, self.degree, self.ring.ctx.from_dict(d), self.den, reduced=True)

    def sorted_terms(self) -> list:
        t = self.terms()
        return sorted(t.items(), key=lambda kv: grevlex_key(kv[0]), reverse=True)

    def __repr__(self):
        return f"HomogeneousPoly({self})"

    def __str__(self):
        return render_homogeneous(self)


def render_homogeneous(h: HomogeneousPoly) -> str:
    parts = []
    for exp, c in h.sorted_terms():
        mono = _render_monomial(h.ring.xnames, exp)
        cs = render_field(c)
        if c.is_constant():
            q = c.to_fraction()
            sign = "-" if q < 0 else "+"
            a = abs(q)
            body = mono if a == 1 and mono else (f"{a}*{mono}" if mono else str(a))
        else:
            sign = "+"
            body = f"({cs})*{mono}" if mono else f"({cs})"
        parts.append((sign, body))
    if not parts:
        return "0"
    s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        s += f" {sign} {body}"
    return s


# free-function forms of the polynomial operations ------------------------------

def poly_arith(op: str, p, q):
    """Binary arithmetic: op is one of '+', '-', '*'."""
    if op == "+":
        return p + q
    if op == "-":
        return p - q
    if op == "*":
        return p * q
    raise RingError(f"unknown operation {op!r}")


def partial_derivative(p: HomogeneousPoly, var) -> HomogeneousPoly:
    """Differentiate by an edge variable (int index or 'x<k>') or a parameter."""
    ring = p.ring
    if isinstance(var, str) and _XVAR.match(var):
        var = int(var[1:]) - 1
    if isinstance(var, int):
        if not 0 <= var < ring.nvars:
            raise RingError(f"edge variable index {var} out of range")
        if p.degree == 0:
            return HomogeneousPoly.zero(ring, 0)
        return HomogeneousPoly(ring, p.degree - 1, p.num.derivative(var), p.den, reduced=True)
    i = ring.param_index(var)
    dn = p.num.derivative(i)
    if p.den.is_one():
        return HomogeneousPoly(ring, p.degree, dn, p.den, reduced=True)
    dd = p.den.derivative(i)
    return HomogeneousPoly(ring, p.degree, dn * p.den - p.num * dd, p.den * p.den)


# linear algebra ------------------------------------------------------------

@dataclass
class LinearSystem:
    """Rows of a matrix over the parameter field plus right-hand sides."""

    rows: list
    rhs: list
    ncols: int

    @classmethod
    def homogeneous(cls, ring: ParamRing, rows, ncols: int) -> "LinearSystem":
        return cls([list(r) for r in rows], [ring.zero] * len(rows), ncols)


@dataclass
class Solution:
    consistent: bool
    particular: list = field(default_factory=list)
    nullspace: list = field(default_factory=list)
    pivots: list = field(default_factory=list)
    residual_row: int = -1
    residual: ParamField = None


def _scaled_row(row: Mapping[int, ParamField]):
    """Clear denominators of a sparse field row: dict col -> flint poly."""
    den = None
    for v in row.values():
        if not v.den.is_one():
            den = v.den if den is None else den * (v.den / den.gcd(v.den))
    if den is None:
        return {k: v.num for k, v in row.items() if not v.is_zero()}
    return {k: v.num * (den / v.den) for k, v in row.items() if not v.is_zero()}


def _primitive(row: dict) -> dict:
    g = None
    for v in row.values():
        g = v if g is None else g.gcd(v)
        if g.is_constant():
            break
    if g is not None and not g.is_constant():
        row = {k: v / g for k, v in row.items()}
    if row:
        first = row[min(row)]
        lc = first.leading_coefficient()
        if lc != 1:
            inv = 1 / lc
            row = {k: v * inv for k, v in row.items()}
    return row


@dataclass
class Echelon:
    """Result of fraction-free Gauss-Jordan elimination.

    ``rows`` holds the reduced pivot rows (pivot entry 1) in pivot-column
    order, ``pivots`` their pivot columns, ``source`` the index of the input
    row each pivot row was taken from, and ``kernel`` the reduced rows whose
    pivot-eligible block vanished.
    """

    rows: list
    pivots: list
    source: list
    kernel: list


def echelonize(ring: ParamRing, rows: Sequence[Mapping[int, ParamField]], pivot_limit: int) -> Echelon:
    """Fraction-free Gauss-Jordan elimination of sparse rows.

    Only columns below ``pivot_limit`` may carry pivots; later columns are
    carried along.  Pivoting is deterministic: columns are scanned in
    increasing order and among eligible rows the one with the shortest
    support in the pivot block wins, ties broken by row index.
    """
    work = [_primitive(_scaled_row(r)) for r in rows]
    remaining = set(range(len(work)))
    col_rows: dict = {}
    for idx, r in enumerate(work):
        for c in r:
            if c < pivot_limit:
                col_rows.setdefault(c, set()).add(idx)
    piv_rows = []
    piv_cols = []

    def support(i):
        return sum(1 for c in work[i] if c < pivot_limit)

    for col in sorted(col_rows):
        cands = [i for i in col_rows.get(col, ()) if i in remaining and col in work[i]]
        if not cands:
            continue
        r = min(cands, key=lambda i: (support(i), i))
        remaining.discard(r)
        prow = work[r]
        p = prow[col]
        for o in list(col_rows.get(col, ())):
            if o == r or col not in work[o]:
                continue
            orow = work[o]
            e = orow[col]
            g = p.gcd(e)
            a = p / g if not g.is_one() else p
            b = e / g if not g.is_one() else e
            new = {k: v * a for k, v in orow.items()}
            for k, v in prow.items():
                w = new.get(k)
                w = -(v * b) if w is None else w - v * b
                if w.is_zero():
                    new.pop(k, None)
                else:
                    new[k] = w
            new = _primitive(new)
            for k in orow:
                if k < pivot_limit and k not in new:
                    col_rows[k].discard(o)
            for k in new:
                if k < pivot_limit and k not in orow:
                    col_rows.setdefault(k, set()).add(o)
            work[o] = new
        piv_rows.append(r)
        piv_cols.append(col)
    out_rows = []
    for r, col in zip(piv_rows, piv_cols):
        p = work[r][col]
        out_rows.append({k: ParamField(ring, v, p) for k, v in sorted(work[r].items())})
    kernel = []
    for i in sorted(remaining):
        kernel.append({k: ParamField(ring, v, None) for k, v in sorted(work[i].items())})
    return Echelon(out_rows, piv_cols, piv_rows, kernel)


def solve_linear(system: LinearSystem) -> Solution:
    """Solve A x = b exactly.

    Returns a particular solution (free variables zero) and a nullspace
    basis in reduced echelon form, or an inconsistent result carrying the
    offending reduced row and its residual right-hand side.
    """
    n = system.ncols
    rows = []
    ring = None
    for r, b in zip(system.rows, system.rhs):
        d = {}
        for j, v in enumerate(r):
            if v:
                d[j] = v
                ring = v.ring
        if b:
            d[n] = b
            ring = b.ring
        rows.append(d)
    if ring is None:
        raise RingError("cannot infer ring from an all-zero system; use solve_linear_in")
    return solve_linear_in(ring, system)


def solve_linear_in(ring: ParamRing, system: LinearSystem) -> Solution:
    n = system.ncols
    rows = []
    for r, b in zip(system.rows, system.rhs):
        d = {j: v for j, v in enumerate(r) if v}
        if b:
            d[n] = b
        rows.append(d)
    ech = echelonize(ring, rows, n)
    for i, k in enumerate(ech.kernel):
        if n in k:
            return Solution(False, residual_row=i, residual=k[n], pivots=ech.pivots)
    x = [ring.zero] * n
    for row, col in zip(ech.rows, ech.pivots):
        x[col] = row.get(n, ring.zero)
    pivset = set(ech.pivots)
    null = []
    for f in range(n):
        if f in pivset:
            continue
        v = [ring.zero] * n
        v[f] = ring.one
        for row, col in zip(ech.rows, ech.pivots):
            if f in row:
                v[col] = -row[f]
        null.append(v)
    return Solution(True, x, null, ech.pivots)


# expression parsing --------------------------------------------------------

class ExpressionError(RingError):
    def __init__(self, msg, col=1):
        super().__init__(msg)
        self.col = col


def expression_symbols(text: str) -> list:
    """Symbol names used in an expression, in order of first appearance."""
    tree = _parse_tree(text)
    seen = []
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and node.id not in seen:
            seen.append(node.id)
    return seen


def _source_col(text: str, offset: int | None) -> int:
    """Map a SyntaxError offset in the rewritten source back to a 1-based column of ``text``."""
    body = text.strip()
    lead = len(text) - len(text.lstrip())
    if not offset or offset < 1:
        return lead + len(body) + 1
    pos = 0
    for i, ch in enumerate(body):
        pos += 2 if ch == "^" else 1
        if pos >= offset:
            return lead + i + 1
    return lead + len(body) + 1


def _parse_tree(text: str):
    src = text.strip().replace("^", "**")
    if not src:
        raise ExpressionError("empty expression")
    try:
        return ast.parse(src, mode="eval")
    except SyntaxError as e:
        raise ExpressionError(f"cannot parse expression {text.strip()!r}", _source_col(text, e.offset)) from None


def parse_expression(text: str, ring: ParamRing) -> ParamField:
    tree = _parse_tree(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionError(f"unsupported literal {node.value!r}", node.col_offset + 1)
            return ring.const(Fraction(str(node.value)))
        if isinstance(node, ast.Name):
            if node.id not in ring.params:
                raise ExpressionError(f"unknown symbol {node.id!r}", node.col_offset + 1)
            return ring.param(node.id)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a = ev(node.left)
            if isinstance(node.op, ast.Pow):
                b = ev(node.right)
                if not b.is_constant() or b.to_fraction().denominator != 1:
                    raise ExpressionError("exponent must be an integer", node.col_offset + 1)
                return a ** int(b.to_fraction())
            b = ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                if b.is_zero():
                    raise ExpressionError("division by zero", node.col_offset + 1)
                return a / b
        raise ExpressionError("unsupported expression", getattr(node, "col_offset", 0) + 1)

    return ev(tree)


Scalar = Union[int, Fraction, ParamField]


def as_field(ring: ParamRing, v: Scalar) -> ParamField:
    return ring.const(v) if not isinstance(v, ParamField) else v


def poly_from_dict(ring: ParamRing, d: Mapping[tuple, Scalar], degree: int | None = None) -> HomogeneousPoly:
    if degree is None:
        degree = sum(next(iter(d))) if d else 0
    return HomogeneousPoly.from_terms(ring, degree, {k: as_field(ring, v) for k, v in d.items()})


def all_symbols(items: Iterable[ParamField]) -> set:
    s = set()
    for it in items:
        s |= it.symbols()
    return s
