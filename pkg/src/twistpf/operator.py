"""Canonical form, comparison, rendering and singularities of operators."""

from __future__ import annotations

import ast
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm

import flint

from .pfdriver import DiffOperator
from .ring import ExpressionError, ParamField, ParamRing, grevlex_key, render_param_poly


def _param_lead(ring: ParamRing, poly):
    """Leading (exponent, coefficient) of a parameter polynomial in grevlex."""
    terms = [(e[ring.nvars:], c) for e, c in poly.terms()]
    return max(terms, key=lambda t: grevlex_key(t[0]))


def _primitive_int(ring: ParamRing, poly):
    """Scale to coprime integer coefficients with a positive leading term."""
    nums = [int(c.p) for _, c in poly.terms()]
    dens = [int(c.q) for _, c in poly.terms()]
    scale = Fraction(lcm(*dens), gcd(*nums))
    if _param_lead(ring, poly)[1] < 0:
        scale = -scale
    return poly * flint.fmpq(scale.numerator, scale.denominator)


def normalize(op: DiffOperator) -> DiffOperator:
    """Clear denominators, remove the common content and fix the sign.

    The result has coprime integer-coefficient polynomials and the
    grevlex-leading term of the leading coefficient is positive.
    """
    ring = op.ring
    coeffs = list(op.coeffs)
    while len(coeffs) > 1 and coeffs[-1].is_zero():
        coeffs.pop()
    if all(c.is_zero() for c in coeffs):
        raise ValueError("cannot normalize the zero operator")
    den = ring.one.num
    for c in coeffs:
        if not c.den.is_one():
            den = den * (c.den / den.gcd(c.den))
    polys = [c.num * (den / c.den) for c in coeffs]
    g = None
    for p in polys:
        if not p.is_zero():
            g = p if g is None else g.gcd(p)
    polys = [p / g for p in polys]
    nums, dens = [], []
    for p in polys:
        for _, c in p.terms():
            nums.append(int(c.p))
            dens.append(int(c.q))
    scale = Fraction(lcm(*dens), gcd(*nums))
    if _param_lead(ring, polys[-1])[1] < 0:
        scale = -scale
    q = flint.fmpq(scale.numerator, scale.denominator)
    return DiffOperator(op.t, tuple(ParamField(ring, p * q, None) for p in polys))


def equal_up_to_unit(a: DiffOperator, b: DiffOperator) -> bool:
    """True when the operators differ by a non-zero parameter-field factor."""
    if a.t != b.t:
        return False
    na, nb = normalize(a), normalize(b)
    return na.order == nb.order and all(x == y for x, y in zip(na.coeffs, nb.coeffs))


def _dname(t: str) -> str:
    return f"D{t}"


def render(op: DiffOperator) -> str:
    """Deterministic text form ``f_n*Dt^n + ... + f_0``."""
    parts = []
    for k in range(op.order, -1, -1):
        c = op.coeffs[k]
        if c.is_zero():
            continue
        body = render_param_poly(op.ring, c.num)
        if not c.den.is_one():
            body = f"({body})/({render_param_poly(op.ring, c.den)})"
        if k == 0:
            parts.append(f"({body})" if len(c.num) > 1 or body.startswith("-") else body)
            continue
        d = _dname(op.t) + (f"^{k}" if k > 1 else "")
        if body == "1":
            parts.append(d)
        else:
            parts.append(f"({body})*{d}" if len(c.num) > 1 or body.startswith("-") or "/" in body else f"{body}*{d}")
    return " + ".join(parts) if parts else "0"


def parse_operator(text: str, ring: ParamRing, t: str) -> DiffOperator:
    """Inverse of :func:`render` (accepts any polynomial expression in D<t>)."""
    dname = _dname(t)
    src = text.strip().replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as e:
        raise ExpressionError(f"cannot parse operator: {text!r}", e.offset or 1) from None

    def mul(a, b):
        out = {}
        for i, x in a.items():
            for j, y in b.items():
                out[i + j] = out.get(i + j, ring.zero) + x * y
        return out

    def add(a, b, sign=1):
        out = dict(a)
        for j, y in b.items():
            out[j] = out.get(j, ring.zero) + (y if sign > 0 else -y)
        return out

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Name) and node.id == dname:
            return {1: ring.one}
        if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow) and isinstance(node.left, ast.Name) \
                and node.left.id == dname:
            k = ev(node.right)
            if set(k) != {0} or not k[0].is_constant():
                raise ExpressionError("bad derivative power")
            return {int(k[0].to_fraction()): ring.one}
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return add(a, b)
            if isinstance(node.op, ast.Sub):
                return add(a, b, -1)
            if isinstance(node.op, ast.Mult):
                return mul(a, b)
            if isinstance(node.op, ast.Div) and set(b) == {0}:
                return {k: v / b[0] for k, v in a.items()}
            if isinstance(node.op, ast.Pow) and set(a) == {0} and set(b) == {0}:
                return {0: a[0] ** int(b[0].to_fraction())}
            raise ExpressionError("unsupported operator expression")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return {k: -x for k, x in v.items()} if isinstance(node.op, ast.USub) else v
        return {0: ring.parse(ast.unparse(node))}

    d = ev(tree)
    n = max((k for k, v in d.items() if not v.is_zero()), default=0)
    return DiffOperator(t, tuple(d.get(k, ring.zero) for k in range(n + 1)))


# singular locus ------------------------------------------------------------

@dataclass(frozen=True)
class SingularFactor:
    factor: ParamField
    multiplicity: int
    eps_dependent: bool

    @property
    def tag(self) -> str:
        return "eps_dependent" if self.eps_dependent else "eps_independent"

    def __str__(self):
        return f"{self.factor}"


def _t_content(ring: ParamRing, poly, t: str):
    i = ring.param_index(t)
    groups: dict = {}
    for e, c in poly.terms():
        key = e[i]
        rest = list(e)
        rest[i] = 0
        groups.setdefault(key, {})[tuple(rest)] = c
    g = None
    for v in groups.values():
        p = ring.ctx.from_dict(v)
        g = p if g is None else g.gcd(p)
    return g


def squarefree_in(ring: ParamRing, poly, t: str) -> list:
    """Yun's square-free decomposition in t: [(factor, multiplicity)], t-free content excluded."""
    i = ring.param_index(t)
    cont = _t_content(ring, poly, t)
    a = poly / cont
    out = []
    b = a.derivative(i)
    c = a.gcd(b)
    w = a / c
    y = b / c
    z = y - w.derivative(i)
    k = 1
    while not w.is_constant():
        g = w.gcd(z)
        if not g.is_constant():
            out.append((g, k))
        w = w / g
        y = z / g
        z = y - w.derivative(i)
        k += 1
    return out, cont


def _uses(ring: ParamRing, poly, names) -> bool:
    idx = [ring.param_index(n) for n in names if n in ring.params]
    return any(any(e[j] for j in idx) for e in poly.monoms())


def singular_locus(op: DiffOperator) -> list:
    """Factors of the leading coefficient with multiplicity and eps tag.

    Square-free parts come from gcds with the t-derivative; each part is
    then split into irreducibles over Q.  Factors free of t are reported
    too, with multiplicity taken from the factorization.
    """
    ring = op.ring
    lead = normalize(op).coeffs[-1].num
    parts, cont = squarefree_in(ring, lead, op.t)
    found = []
    for g, k in parts:
        _, facs = g.factor()
        for f, m in facs:
            found.append((f, k * m))
    if not cont.is_constant():
        _, facs = cont.factor()
        found += [(f, m) for f, m in facs]
    out = []
    for f, m in found:
        f = _primitive_int(ring, f)
        out.append(SingularFactor(ParamField(ring, f, None), m, _uses(ring, f, ("eps", "kap"))))
    out.sort(key=lambda s: (s.factor.num.total_degree(), str(s.factor)))
    return out


__all__ = ["normalize", "equal_up_to_unit", "render", "parse_operator", "singular_locus",
           "SingularFactor", "squarefree_in"]
