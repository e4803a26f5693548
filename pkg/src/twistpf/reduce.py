"""Pole-order reduction of twisted forms.

At pole order ``a`` a vector field ``C`` (components of degree
``(L+1)a - L``) with ``C . grad U = c U`` and ``x_i | C_i`` wherever the
twist has an ``x_i`` factor gives

    d beta_C = -(sigma + a - 1) Phi(C) / F^a + B(C) / F^(a-1)

with ``Phi(C) = C . grad F`` and ``B(C) = div C + lam c + sum rho_i C_i/x_i``.
So ``Phi(C)/F^a`` can be traded for ``B(C)/((sigma+a-1) F^(a-1))``.

That alone is not enough: combinations of such fields with vanishing
``Phi`` still carry a non-zero ``B`` part, which is an exact form one pole
order lower.  Those are collected level by level from the top down and
added as extra generators below, each with its own exact certificate.

All linear algebra runs in orbit coordinates of the symmetry group of
``(U, F, twist)``; the inputs are invariant so nothing is lost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .graph import SymanzikPolys
from .ring import HomogeneousPoly, LinearSystem, ParamField, echelonize, solve_linear_in
from .symmetry import FieldOrbits, MonomialOrbits, symmetry_group
from .twist import TwistedForm, TwistSpec, directional, divergence, exponents, vector_degree


class ReductionError(RuntimeError):
    pass


def _axpy(acc: dict, y, v: dict):
    """acc += y * v for sparse dicts of field elements."""
    for k, x in v.items():
        w = acc.get(k)
        w = y * x if w is None else w + y * x
        if w.is_zero():
            acc.pop(k, None)
        else:
            acc[k] = w


class ReductionContext:
    """Data fixed by (U, F, twist): exponents, symmetry group and orbit spaces."""

    def __init__(self, sp: SymanzikPolys, ts: TwistSpec, use_symmetry: bool = True):
        self.sp = sp
        self.ts = ts
        self.ring = sp.ring
        self.n = sp.nvars
        self.L = sp.loops
        self.exps = exponents(sp, ts)
        self.need_x = frozenset(i for i, r in enumerate(self.exps.rho) if not r.is_zero())
        if use_symmetry:
            self.group = symmetry_group([sp.U, sp.F], [str(r) for r in self.exps.rho])
        else:
            self.group = [tuple(range(self.n))]
        self.use_c = not self.exps.lam.is_zero()
        self._img: dict = {}
        self._fields: dict = {}
        self._data: dict = {}
        self._kernel: dict = {}
        self._towers: dict = {}
        self._dF = None
        self._dU = None

    # orbit spaces -------------------------------------------------------
    def img_orbits(self, a: int) -> MonomialOrbits:
        """Orbits of numerator monomials at pole order a."""
        if a not in self._img:
            self._img[a] = MonomialOrbits(self.n, (self.L + 1) * a, self.group)
        return self._img[a]

    def field_orbits(self, a: int) -> FieldOrbits | None:
        d = vector_degree(self.L, a)
        if a < 1 or d < 0:
            return None
        if a not in self._fields:
            self._fields[a] = FieldOrbits(self.n, d, self.group, self.need_x)
        return self._fields[a]

    def c_orbits(self, a: int) -> MonomialOrbits | None:
        if a < 1 or not self.use_c:
            return None
        return self.img_orbits(a - 1)

    def unknowns(self, a: int) -> list:
        """Basis of equivariant (C, c) pairs: ('C', k) then ('c', k)."""
        fo = self.field_orbits(a)
        if fo is None:
            return []
        out = [("C", k) for k in range(len(fo))]
        co = self.c_orbits(a)
        if co is not None:
            out += [("c", k) for k in range(len(co))]
        return out

    @property
    def dF(self):
        if self._dF is None:
            self._dF = [self.sp.F.derivative(i) for i in range(self.n)]
        return self._dF

    @property
    def dU(self):
        if self._dU is None:
            self._dU = [self.sp.U.derivative(i) for i in range(self.n)]
        return self._dU

    def basis_data(self, a: int) -> list:
        """Per unknown: (Phi coords, B coords, constraint coords)."""
        if a in self._data:
            return self._data[a]
        ring = self.ring
        img = self.img_orbits(a)
        low = self.img_orbits(a - 1)
        con = MonomialOrbits(self.n, (self.L + 1) * a - 1, self.group)
        fo = self.field_orbits(a)
        out = []
        lam = self.exps.lam
        for kind, k in self.unknowns(a):
            if kind == "C":
                C = fo.field(ring, k)
                phi = directional(C, self.sp.F)
                B = divergence(C)
                for i in self.need_x:
                    if not C[i].is_zero():
                        B = B + C[i].div_x(i) * self.exps.rho[i]
                cu = directional(C, self.sp.U) if self.use_c else None
                out.append((img.coords(phi), low.coords(B), con.coords(cu) if cu is not None else {}))
            else:
                cp = self.c_orbits(a).poly(ring, k)
                out.append(({}, low.coords(cp * lam), con.coords(-(cp * self.sp.U))))
        self._data[a] = out
        return out

    def kernel(self, a: int) -> list:
        """Basis of unknown combinations satisfying C . grad U = c U."""
        if a in self._kernel:
            return self._kernel[a]
        unk = self.unknowns(a)
        if not unk:
            self._kernel[a] = []
            return []
        ring = self.ring
        if not self.use_c:
            K = [{j: ring.one} for j in range(len(unk))]
        else:
            data = self.basis_data(a)
            ncon = len(MonomialOrbits(self.n, (self.L + 1) * a - 1, self.group))
            cols = [d[2] for d in data]
            rows = [[cols[j].get(r, ring.zero) for j in range(len(unk))] for r in range(ncon)]
            sol = solve_linear_in(ring, LinearSystem.homogeneous(ring, rows, len(unk)))
            K = [{j: v for j, v in enumerate(vec) if v} for vec in sol.nullspace]
        self._kernel[a] = K
        return K

    # expansion of certificates back to explicit vector fields -------------
    def expand(self, a: int, coeffs: dict) -> tuple:
        """Turn {unknown index: coefficient} at level a into (C, c)."""
        ring = self.ring
        d = vector_degree(self.L, a)
        C = [HomogeneousPoly.zero(ring, d) for _ in range(self.n)]
        c = HomogeneousPoly.zero(ring, (self.L + 1) * (a - 1))
        unk = self.unknowns(a)
        fo = self.field_orbits(a)
        for j, v in sorted(coeffs.items()):
            kind, k = unk[j]
            if kind == "C":
                for i, comp in enumerate(fo.field(ring, k)):
                    if not comp.is_zero():
                        C[i] = C[i] + comp * v
            else:
                c = c + self.c_orbits(a).poly(ring, k) * v
        return C, c


@dataclass
class ReductionLevel:
    """Echelon form of the relations available at one pole order.

    ``rows[r] = (img, low, cert)``: ``img`` is a reduced echelon row over the
    numerator orbit coordinates with pivot ``pivots[r]``; the relation says
    ``img/F^a == low/F^(a-1) + d(beta_cert)``.  ``complement`` lists the
    non-pivot coordinates, which span the residue space.
    """

    a: int
    top: int
    dim: int
    rows: list
    pivots: list
    complement: list
    extras_below: list = field(default_factory=list, repr=False)

    @property
    def rank(self) -> int:
        return len(self.pivots)


def build_level(ctx: ReductionContext, a: int, inherited: Sequence = (), top: int | None = None) -> ReductionLevel:
    """Relations at pole order a, given exact forms inherited from above.

    ``inherited`` holds (numerator coords, certificate) pairs of forms
    ``e/F^a`` known to be exact with the given certificate.
    """
    ring = ctx.ring
    img = ctx.img_orbits(a)
    I = len(img)
    J = len(ctx.img_orbits(a - 1)) if a >= 1 else 0
    s = ctx.exps.sigma + (a - 1)
    gens = []       # (img, low, cert)
    below = []      # exact forms one level down
    if a >= 1:
        data = ctx.basis_data(a)
        for kv in ctx.kernel(a):
            phi: dict = {}
            B: dict = {}
            for j, v in kv.items():
                _axpy(phi, v, data[j][0])
                _axpy(B, v, data[j][1])
            if s.is_zero():
                if B:
                    below.append((B, {(a, j): v for j, v in kv.items()}))
                continue
            inv = s.inverse()
            gens.append((phi, {k: v * inv for k, v in B.items()}, {(a, j): -(v * inv) for j, v in kv.items()}))
    for e, cert in inherited:
        gens.append((dict(e), {}, dict(cert)))
    keys = sorted({k for g in gens for k in g[2]}, key=lambda k: (-k[0], k[1]))
    kidx = {k: I + J + i for i, k in enumerate(keys)}
    rows = []
    for phi, low, cert in gens:
        r = dict(phi)
        for k, v in low.items():
            r[I + k] = v
        for k, v in cert.items():
            r[kidx[k]] = v
        rows.append(r)
    ech = echelonize(ring, rows, I)

    def split(row):
        i_, l_, c_ = {}, {}, {}
        for k, v in row.items():
            if k < I:
                i_[k] = v
            elif k < I + J:
                l_[k - I] = v
            else:
                c_[keys[k - I - J]] = v
        return i_, l_, c_

    out_rows = [split(r) for r in ech.rows]
    for r in ech.kernel:
        _, l_, c_ = split(r)
        if l_:
            below.append((l_, {k: -v for k, v in c_.items()}))
    piv = set(ech.pivots)
    comp = [k for k in range(I) if k not in piv]
    return ReductionLevel(a, top if top is not None else a, I, out_rows, list(ech.pivots), comp, below)


@dataclass
class ReductionTower:
    ctx: ReductionContext
    top: int
    levels: dict

    def residue_ranks(self) -> dict:
        return {a: len(l.complement) for a, l in sorted(self.levels.items(), reverse=True)}

    def offsets(self) -> dict:
        off = {}
        pos = 0
        for a in range(self.top, -1, -1):
            off[a] = pos
            pos += len(self.levels[a].complement)
        return off

    @property
    def residue_dim(self) -> int:
        return sum(len(l.complement) for l in self.levels.values())


def build_tower(ctx: ReductionContext, top: int) -> ReductionTower:
    hit = ctx._towers.get(top)
    if hit is not None:
        return hit
    levels = {}
    inherited: list = []
    for a in range(top, -1, -1):
        lvl = build_level(ctx, a, inherited, top)
        levels[a] = lvl
        inherited = lvl.extras_below
    tower = ReductionTower(ctx, top, levels)
    ctx._towers[top] = tower
    return tower


def reduce_coords(lvl: ReductionLevel, q: dict):
    """One reduction step on orbit coordinates: (residue, lowered, certificate)."""
    cur = dict(q)
    lowered: dict = {}
    cert: dict = {}
    for col, (img, low, crt) in zip(lvl.pivots, lvl.rows):
        y = cur.get(col)
        if y is None or y.is_zero():
            continue
        _axpy(cur, -y, img)
        _axpy(lowered, y, low)
        _axpy(cert, y, crt)
    residue = {k: cur[k] for k in lvl.complement if k in cur}
    return residue, lowered, cert


# certificates ------------------------------------------------------------

@dataclass
class CertEntry:
    a: int
    C: list
    c: HomogeneousPoly


@dataclass
class ReductionCertificate:
    """Vector fields whose forms sum to the exact part of a reduction."""

    entries: list = field(default_factory=list)

    def scaled(self, factor: ParamField) -> "ReductionCertificate":
        return ReductionCertificate([CertEntry(e.a, [ci * factor for ci in e.C], e.c * factor) for e in self.entries])

    @property
    def top(self) -> int:
        return max((e.a for e in self.entries), default=0)


def expand_certificate(ctx: ReductionContext, cert: dict) -> ReductionCertificate:
    by_level: dict = {}
    for (a, j), v in cert.items():
        if v:
            by_level.setdefault(a, {})[j] = v
    entries = []
    for a in sorted(by_level, reverse=True):
        C, c = ctx.expand(a, by_level[a])
        entries.append(CertEntry(a, C, c))
    return ReductionCertificate(entries)


@dataclass
class NormalForm:
    """Residues per pole order (over each level's complement) plus certificate coordinates."""

    tower: ReductionTower
    residues: dict
    cert: dict

    def vector(self) -> list:
        ring = self.tower.ctx.ring
        out = []
        for a in range(self.tower.top, -1, -1):
            res = self.residues.get(a, {})
            out += [res.get(k, ring.zero) for k in self.tower.levels[a].complement]
        return out

    def is_zero(self) -> bool:
        return all(not r for r in self.residues.values())

    def certificate(self) -> ReductionCertificate:
        return expand_certificate(self.tower.ctx, self.cert)


def normal_form_coords(tower: ReductionTower, a: int, q: dict) -> NormalForm:
    if a > tower.top:
        raise ReductionError(f"pole order {a} exceeds the tower top {tower.top}")
    residues = {}
    cert: dict = {}
    cur = q
    for b in range(a, -1, -1):
        res, low, crt = reduce_coords(tower.levels[b], cur)
        residues[b] = res
        _axpy(cert, tower.ctx.ring.one, crt)
        cur = low
    return NormalForm(tower, residues, cert)


def normal_form(f: TwistedForm, tower: ReductionTower) -> NormalForm:
    """Reduce Q/F^a all the way down; the residues are canonical for the tower."""
    q = tower.ctx.img_orbits(f.a).coords(f.Q)
    return normal_form_coords(tower, f.a, q)


def reduce_once(f: TwistedForm, lvl: ReductionLevel, ctx: ReductionContext):
    """Split f = residue/F^a + lowered/F^(a-1) + exact; returns all three."""
    if f.a != lvl.a:
        raise ReductionError(f"form has pole order {f.a}, level is {lvl.a}")
    q = ctx.img_orbits(f.a).coords(f.Q)
    res, low, crt = reduce_coords(lvl, q)
    ring = ctx.ring
    if f.a >= 1:
        lowQ = ctx.img_orbits(f.a - 1).from_coords(ring, low)
        lowered = TwistedForm(f.sp, f.ts, lowQ, f.a - 1)
    else:
        lowered = None
    return lowered, res, expand_certificate(ctx, crt)


__all__ = [
    "ReductionContext", "ReductionLevel", "ReductionTower", "NormalForm", "CertEntry",
    "ReductionCertificate", "ReductionError", "build_level", "build_tower", "reduce_once",
    "normal_form", "normal_form_coords", "reduce_coords", "expand_certificate",
]
