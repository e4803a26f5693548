"""Search for the minimal differential operator and check certificates."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

from .graph import SymanzikPolys
from .ring import HomogeneousPoly, LinearSystem, ParamField, RingError, grevlex_key, solve_linear_in
from .reduce import (ReductionCertificate, ReductionContext, build_tower,
                     expand_certificate, normal_form)
from .twist import TwistedForm, TwistSpec, log_gradient_residual, make_form, t_derivative

log = logging.getLogger(__name__)

DEFAULT_MAX_ORDER = 8


@dataclass(frozen=True)
class DiffOperator:
    """sum_k coeffs[k] * (d/dt)^k with parameter-polynomial coefficients."""

    t: str
    coeffs: tuple

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def ring(self):
        return self.coeffs[0].ring

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __str__(self):
        from .operator import render
        return render(self)


class OrderBoundExceeded(RuntimeError):
    def __init__(self, max_order: int, residue_ranks: Mapping[int, int]):
        self.max_order = max_order
        self.residue_ranks = dict(residue_ranks)
        ranks = ", ".join(f"a={a}: {r}" for a, r in sorted(self.residue_ranks.items(), reverse=True))
        super().__init__(f"order bound exceeded: no operator of order <= {max_order} (residue ranks {ranks})")


def derivative_forms(sp: SymanzikPolys, ts: TwistSpec, t: str, n: int) -> list:
    forms = [make_form(sp, ts)]
    for _ in range(n):
        forms.append(t_derivative(forms[-1], t))
    return forms


def find_dependency(ring, vectors: list):
    """Smallest k with vectors[0..k] linearly dependent; returns (k, coeffs) or None.

    The coefficient of the last vector is normalized to 1.
    """
    for k in range(len(vectors)):
        cols = vectors[: k + 1]
        dim = len(cols[0])
        rows = [[cols[j][r] for j in range(k + 1)] for r in range(dim)]
        if dim == 0:
            rows = []
        sol = solve_linear_in(ring, LinearSystem.homogeneous(ring, rows, k + 1))
        if sol.nullspace:
            vec = sol.nullspace[-1]
            if vec[k].is_zero():
                raise RuntimeError("dependency does not involve the top derivative")
            inv = vec[k].inverse()
            return k, [v * inv for v in vec]
    return None


@dataclass
class SearchResult:
    operator: DiffOperator
    certificate: ReductionCertificate
    tower_top: int
    residue_ranks: dict
    raw: tuple = ()

    def __iter__(self):
        return iter((self.operator, self.certificate))


def minimal_operator(sp: SymanzikPolys, ts: TwistSpec, t: str, max_order: int | None = None, *,
                     use_symmetry: bool = True, probe: bool = True, normalize_result: bool = True):
    """Minimal-order operator annihilating the twisted integrand, with certificate.

    Raises :class:`OrderBoundExceeded` if no operator of order at most
    ``max_order`` is found.
    """
    from .operator import normalize

    if max_order is None:
        max_order = DEFAULT_MAX_ORDER
    ring = sp.ring
    if t not in ring.params or t in ("eps", "kap"):
        raise RingError(f"derivative variable {t!r} is not a kinematic parameter")
    ctx = ReductionContext(sp, ts, use_symmetry=use_symmetry)
    start = 0
    if probe:
        from .modular import probe_order
        pr = probe_order(sp, ts, t, max_order, ctx=ctx)
        log.info("modular probe: %s", pr)
        if pr.order is None:
            raise OrderBoundExceeded(max_order, pr.residue_ranks)
        start = pr.order
    forms = derivative_forms(sp, ts, t, max_order)
    last_ranks = {}
    for top in range(max(start, 1), max_order + 1):
        tower = build_tower(ctx, top)
        last_ranks = tower.residue_ranks()
        nfs = [normal_form(f, tower) for f in forms[: top + 1]]
        dep = find_dependency(ring, [nf.vector() for nf in nfs])
        log.info("order %d: residue ranks %s, dependency %s", top, last_ranks, dep is not None)
        if dep is None:
            continue
        k, coeffs = dep
        cert: dict = {}
        for c, nf in zip(coeffs, nfs):
            for key, v in nf.cert.items():
                w = cert.get(key)
                w = c * v if w is None else w + c * v
                if w.is_zero():
                    cert.pop(key, None)
                else:
                    cert[key] = w
        op = DiffOperator(t, tuple(coeffs))
        certificate = expand_certificate(ctx, cert)
        if normalize_result:
            nop = normalize(op)
            factor = nop.coeffs[-1] / op.coeffs[-1]
            op = nop
            certificate = certificate.scaled(factor)
        return SearchResult(op, certificate, top, last_ranks, tuple(coeffs))
    raise OrderBoundExceeded(max_order, last_ranks)


# verification ------------------------------------------------------------

@dataclass
class VerifyReport:
    ok: bool
    messages: list = field(default_factory=list)
    residual: str = ""

    def __bool__(self):
        return self.ok


def verify_operator(op: DiffOperator, cert: ReductionCertificate, sp: SymanzikPolys, ts: TwistSpec,
                    t: str | None = None) -> VerifyReport:
    """Exactly check sum_k f_k d^k Omega == d(sum beta_C) using the certificate."""
    t = t or op.t
    msgs = []
    if op.is_zero():
        return VerifyReport(False, ["zero operator"])
    n = op.order
    if op.coeffs[-1].is_zero():
        return VerifyReport(False, ["leading coefficient is zero"])
    forms = derivative_forms(sp, ts, t, n)
    F = sp.F
    L = sp.loops
    ring = sp.ring
    Fp = [HomogeneousPoly(ring, 0, ring.one.num)]
    for _ in range(n + 1):
        Fp.append(Fp[-1] * F)
    lhs = HomogeneousPoly.zero(ring, (L + 1) * n)
    for k, (fk, form) in enumerate(zip(op.coeffs, forms)):
        if fk.is_zero():
            continue
        lhs = lhs + form.Q * Fp[n - k] * fk
    rhs = HomogeneousPoly.zero(ring, (L + 1) * n)
    for e in cert.entries:
        if not 1 <= e.a <= n:
            return VerifyReport(False, [f"certificate entry at pole order {e.a} outside 1..{n}"])
        for ci in e.C:
            if not ci.is_zero() and ci.degree != (L + 1) * e.a - L:
                return VerifyReport(False, [f"certificate field at pole order {e.a} has wrong degree"])
        shell = TwistedForm(sp, ts, HomogeneousPoly.zero(ring, (L + 1) * e.a), e.a)
        res = log_gradient_residual(shell, e.C)
        if not res.clean:
            where = "U" if not res.u_rest.is_zero() else f"x{min(res.x_rest) + 1}"
            return VerifyReport(False, [f"certificate at pole order {e.a} leaves a pole along {where}"])
        rhs = rhs + res.A * Fp[n - e.a] + res.B * Fp[n - e.a + 1]
    diff = lhs - rhs
    if diff.is_zero():
        msgs.append(f"identity holds at pole order {n} ({len(cert.entries)} certificate levels)")
        return VerifyReport(True, msgs)
    exp, c = diff.sorted_terms()[0]
    mono = "*".join(f"x{i + 1}^{k}" if k > 1 else f"x{i + 1}" for i, k in enumerate(exp) if k) or "1"
    return VerifyReport(False, ["residual is non-zero"], f"{mono}: {c}")


def specialize(op: DiffOperator, bindings: Mapping[str, object]) -> DiffOperator:
    """Substitute parameter values into every coefficient and renormalize."""
    from .operator import normalize

    ring = op.ring
    vals = {}
    for k, v in bindings.items():
        if k == op.t:
            raise RingError(f"cannot specialize the derivative variable {k}")
        if k not in ring.params:
            raise RingError(f"unknown parameter {k!r}")
        if isinstance(v, str):
            v = ring.parse(v)
        vals[k] = ring.const(v) if not isinstance(v, ParamField) else v
    coeffs = tuple(c.subs(vals) for c in op.coeffs)
    out = DiffOperator(op.t, coeffs)
    while len(out.coeffs) > 1 and out.coeffs[-1].is_zero():
        out = DiffOperator(op.t, out.coeffs[:-1])
    if out.is_zero():
        return out
    return normalize(out)


__all__ = [
    "DiffOperator", "OrderBoundExceeded", "SearchResult", "VerifyReport", "derivative_forms",
    "find_dependency", "minimal_operator", "verify_operator", "specialize", "grevlex_key",
]
