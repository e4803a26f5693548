"""Twisted forms Q/F^a * Omega and their exact derivatives.

``Omega = U^lam * F^(-sigma) * prod x_i^rho_i * Omega_0`` with exponents
linear in ``eps`` and ``kap``.  A form is stored by its numerator ``Q`` and
pole order ``a``; ``Q`` is homogeneous of degree ``(L+1)*a`` so the whole
integrand is projectively well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .graph import SymanzikPolys
from .ring import HomogeneousPoly, ParamField, RingError


class TwistError(ValueError):
    pass


@dataclass(frozen=True)
class TwistSpec:
    """Integer dimension shift ``delta`` with propagator powers and twist weights."""

    delta: int
    nu: tuple
    mu: tuple

    def __post_init__(self):
        if len(self.nu) != len(self.mu):
            raise TwistError("nu and mu must have one entry per edge")
        if any(int(v) != v or v < 1 for v in self.nu):
            raise TwistError("propagator powers must be positive integers")
        if any(int(v) != v for v in self.mu):
            raise TwistError("twist weights must be integers")

    @classmethod
    def uniform(cls, delta: int, n: int, nu: int = 1, mu: int = 0) -> "TwistSpec":
        return cls(delta, (nu,) * n, (mu,) * n)


@dataclass(frozen=True)
class Exponents:
    sigma: ParamField          # Omega carries F^(-sigma)
    lam: ParamField            # and U^lam
    rho: tuple                 # and x_i^rho_i


def exponents(sp: SymanzikPolys, ts: TwistSpec) -> Exponents:
    ring = sp.ring
    if len(ts.nu) != sp.nvars:
        raise TwistError(f"twist has {len(ts.nu)} edge entries, graph has {sp.nvars}")
    L = sp.loops
    eps = ring.param("eps")
    kap = ring.param("kap")
    snu = sum(ts.nu)
    smu = sum(ts.mu)
    sigma = ring.const(snu - L * ts.delta) + L * eps + smu * kap
    lam = ring.const(snu - (L + 1) * ts.delta) + (L + 1) * eps + smu * kap
    rho = tuple(ring.const(v - 1) + m * kap for v, m in zip(ts.nu, ts.mu))
    return Exponents(sigma, lam, rho)


@dataclass(frozen=True)
class TwistedForm:
    sp: SymanzikPolys
    ts: TwistSpec
    Q: HomogeneousPoly
    a: int

    def __post_init__(self):
        if not self.Q.is_zero() and self.Q.degree != (self.sp.loops + 1) * self.a:
            raise TwistError(f"numerator degree {self.Q.degree} does not match pole order {self.a}")

    @property
    def exps(self) -> Exponents:
        return exponents(self.sp, self.ts)


def make_form(sp: SymanzikPolys, ts: TwistSpec) -> TwistedForm:
    exponents(sp, ts)  # validates
    one = HomogeneousPoly(sp.ring, 0, sp.ring.one.num)
    return TwistedForm(sp, ts, one, 0)


def t_derivative(f: TwistedForm, t: str) -> TwistedForm:
    """Exact d/dt: Q' = F dQ/dt - (a + sigma) Q dF/dt, pole order a+1."""
    ring = f.sp.ring
    if t not in ring.params or t in ("eps", "kap"):
        raise TwistError(f"{t!r} is not a kinematic parameter")
    F = f.sp.F
    if not f.sp.U.derivative(t).is_zero():
        raise TwistError("the first Symanzik polynomial depends on the derivative variable")
    sig = f.exps.sigma
    if sig.derivative(t):
        raise TwistError("exponents depend on the derivative variable")
    newQ = F * f.Q.derivative(t) - (f.Q * F.derivative(t)) * (sig + f.a)
    return TwistedForm(f.sp, f.ts, newQ, f.a + 1)


@dataclass
class GradientResidual:
    """Decomposition of d(beta_C) for a vector field C at pole order a.

    ``d beta = (A/F^a + B/F^(a-1)) Omega`` plus the left-over pieces
    ``u_rest/(U F^(a-1))`` and ``x_rest[i]/(x_i F^(a-1))``, which vanish
    exactly when C satisfies the divisibility constraints.
    """

    a: int
    A: HomogeneousPoly
    B: HomogeneousPoly
    u_rest: HomogeneousPoly
    x_rest: dict = field(default_factory=dict)
    c: HomogeneousPoly | None = None

    @property
    def clean(self) -> bool:
        return self.u_rest.is_zero() and not self.x_rest


def vector_degree(loops: int, a: int) -> int:
    return (loops + 1) * a - loops


def directional(C: Sequence[HomogeneousPoly], P: HomogeneousPoly) -> HomogeneousPoly:
    """C . grad P"""
    acc = None
    for i, ci in enumerate(C):
        if ci.is_zero():
            continue
        term = ci * P.derivative(i)
        acc = term if acc is None else acc + term
    if acc is None:
        return HomogeneousPoly.zero(P.ring, (C[0].degree if C else 0) + P.degree - 1)
    return acc


def divergence(C: Sequence[HomogeneousPoly]) -> HomogeneousPoly:
    acc = None
    for i, ci in enumerate(C):
        if ci.is_zero():
            continue
        term = ci.derivative(i)
        acc = term if acc is None else acc + term
    if acc is None:
        return HomogeneousPoly.zero(C[0].ring, C[0].degree - 1)
    return acc


def log_gradient_residual(f: TwistedForm, C: Sequence[HomogeneousPoly]) -> GradientResidual:
    """Exterior derivative of the contracted form built from C at f's pole order.

    With ``H = T / F^(a-1)`` and ``T`` the twist, ``d beta = div(H C)/T``.
    """
    sp = f.sp
    a = f.a
    n = sp.nvars
    if len(C) != n:
        raise TwistError(f"vector field has {len(C)} components, expected {n}")
    d = vector_degree(sp.loops, a)
    if d < 0:
        raise TwistError(f"no vector fields at pole order {a}")
    ring = sp.ring
    C = [ci if not ci.is_zero() else HomogeneousPoly.zero(ring, d) for ci in C]
    for ci in C:
        if not ci.is_zero() and ci.degree != d:
            raise TwistError(f"vector field components must have degree {d}")
    ex = f.exps
    A = directional(C, sp.F) * (-(ex.sigma + (a - 1)))
    B = divergence(C)
    gu = directional(C, sp.U)
    u_rest = HomogeneousPoly.zero(ring, B.degree + sp.loops)
    c = None
    if not gu.is_zero():
        c = gu.exact_div(sp.U)
        if c is not None:
            B = B + c * ex.lam
        elif ex.lam:
            u_rest = gu * ex.lam
    x_rest = {}
    for i, ci in enumerate(C):
        r = ex.rho[i]
        if r.is_zero() or ci.is_zero():
            continue
        if ci.divides_x(i):
            B = B + ci.div_x(i) * r
        else:
            x_rest[i] = ci * r
    return GradientResidual(a, A, B, u_rest, x_rest, c)


__all__ = [
    "TwistSpec", "TwistedForm", "Exponents", "GradientResidual", "TwistError",
    "exponents", "make_form", "t_derivative", "log_gradient_residual",
    "directional", "divergence", "vector_degree", "RingError",
]
