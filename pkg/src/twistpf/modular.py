"""Order probe: the whole reduction at one random point modulo a prime.

The probe only predicts.  Its answer picks the pole order at which the
exact search starts; the exact search and the certificate check decide.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import PRIME
from .reduce import ReductionContext

from .twist import make_form, t_derivative


@dataclass
class ProbeResult:
    order: int | None
    coeffs: list = field(default_factory=list)
    residue_ranks: dict = field(default_factory=dict)
    prime: int = PRIME
    point: dict = field(default_factory=dict)
    backend: str = ""


class _ModLevel:
    __slots__ = ("a", "dim", "pivots", "img", "low", "complement", "extras")

    def __init__(self, a, dim, pivots, img, low, complement, extras):
        self.a = a
        self.dim = dim
        self.pivots = pivots
        self.img = img
        self.low = low
        self.complement = complement
        self.extras = extras


class ModularReducer:
    """Reduction data of a context evaluated at one point modulo p."""

    def __init__(self, ctx: ReductionContext, point: dict, p: int = PRIME):
        self.ctx = ctx
        self.point = point
        self.p = p
        self._phi: dict = {}
        self._towers: dict = {}

    def ev(self, v) -> int:
        return v.eval_mod(self.point, self.p)

    def dense(self, coords: dict, dim: int) -> np.ndarray:
        out = np.zeros(dim, dtype=np.int64)
        for k, v in coords.items():
            out[k] = self.ev(v)
        return out

    def level_arrays(self, a: int):
        """(K@Phi, K@B/(sigma+a-1)) evaluated, or the B rows if sigma+a-1 vanishes."""
        if a in self._phi:
            return self._phi[a]
        ctx = self.ctx
        I = len(ctx.img_orbits(a))
        J = len(ctx.img_orbits(a - 1)) if a >= 1 else 0
        K = ctx.kernel(a) if a >= 1 else []
        if not K:
            res = (np.zeros((0, I), np.int64), np.zeros((0, J), np.int64), False)
            self._phi[a] = res
            return res
        data = ctx.basis_data(a)
        nu = len(data)
        PHI = np.stack([self.dense(d[0], I) for d in data]) if nu else np.zeros((0, I), np.int64)
        BB = np.stack([self.dense(d[1], J) for d in data]) if nu else np.zeros((0, J), np.int64)
        Km = np.zeros((len(K), nu), dtype=np.int64)
        for r, kv in enumerate(K):
            for j, v in kv.items():
                Km[r, j] = self.ev(v)
        img = kernels.matmul_mod(Km, PHI, self.p)
        low = kernels.matmul_mod(Km, BB, self.p)
        s = ctx.exps.sigma + (a - 1)
        if s.is_zero():
            res = (img, low, True)
        else:
            sv = self.ev(s)
            if sv == 0:
                raise ZeroDivisionError("sigma + a - 1 vanishes at the probe point")
            res = (img, low * pow(sv, -1, self.p) % self.p, False)
        self._phi[a] = res
        return res

    def tower(self, top: int) -> dict:
        if top in self._towers:
            return self._towers[top]
        ctx = self.ctx
        levels = {}
        extras = np.zeros((0, len(ctx.img_orbits(top))), dtype=np.int64)
        for a in range(top, -1, -1):
            I = len(ctx.img_orbits(a))
            J = len(ctx.img_orbits(a - 1)) if a >= 1 else 0
            img, low, degenerate = self.level_arrays(a)
            below = []
            if degenerate:
                below = [row for row in low if row.any()]
                img = np.zeros((0, I), np.int64)
                low = np.zeros((0, J), np.int64)
            M = np.zeros((img.shape[0] + extras.shape[0], I + J), dtype=np.int64)
            M[: img.shape[0], :I] = img
            M[: img.shape[0], I:] = low
            M[img.shape[0]:, :I] = extras
            R, pc, pr = kernels.rref_mod(M, I, self.p)
            used = set(int(r) for r in pr)
            for r in range(R.shape[0]):
                if r not in used and R[r, I:].any():
                    below.append(R[r, I:])
            piv = [int(c) for c in pc]
            comp = [k for k in range(I) if k not in set(piv)]
            levels[a] = _ModLevel(a, I, piv, R[pr, :I], R[pr, I:], comp, None)
            extras = np.array(below, dtype=np.int64).reshape(len(below), J)
        self._towers[top] = levels
        return levels

    def normal_form(self, levels: dict, top: int, a: int, q: np.ndarray) -> np.ndarray:
        p = self.p
        parts = {}
        cur = q % p
        for b in range(a, -1, -1):
            lv = levels[b]
            y = cur[lv.pivots] if lv.pivots else np.zeros(0, np.int64)
            if y.size:
                cur = (cur - kernels.matmul_mod(y[None, :], lv.img, p)[0]) % p
                low = kernels.matmul_mod(y[None, :], lv.low, p)[0]
            else:
                low = np.zeros(lv.low.shape[1] if lv.low.ndim == 2 else 0, np.int64)
            parts[b] = cur[lv.complement]
            cur = low
        out = [parts.get(b, np.zeros(len(levels[b].complement), np.int64)) for b in range(top, -1, -1)]
        return np.concatenate(out) if out else np.zeros(0, np.int64)


def random_point(ring, rng: random.Random, p: int = PRIME) -> dict:
    return {ring.nvars + i: rng.randrange(2, p - 1) for i in range(len(ring.params))}


def probe_order(sp, ts, t: str, max_order: int, *, ctx: ReductionContext | None = None,
                seed: int = 20240607, p: int = PRIME, attempts: int = 2) -> ProbeResult:
    """Predict the minimal order by running the reduction modulo p.

    A negative answer is only returned if every attempt agrees.
    """
    ctx = ctx or ReductionContext(sp, ts)
    rng = random.Random(seed)
    forms = [make_form(sp, ts)]
    last = ProbeResult(None, backend=kernels.backend())
    for _ in range(attempts):
        try:
            res = _probe_once(ctx, forms, t, max_order, random_point(sp.ring, rng, p), p)
        except ZeroDivisionError:
            continue
        if res.order is not None:
            return res
        last = res
    return last


def _probe_once(ctx, forms, t, max_order, point, p) -> ProbeResult:
    red = ModularReducer(ctx, point, p)
    ranks = {}
    for top in range(1, max_order + 1):
        while len(forms) <= top:
            forms.append(t_derivative(forms[-1], t))
        levels = red.tower(top)
        ranks = {a: len(levels[a].complement) for a in range(top, -1, -1)}
        vecs = []
        for k in range(top + 1):
            q = red.dense(ctx.img_orbits(k).coords(forms[k].Q), len(ctx.img_orbits(k)))
            vecs.append(red.normal_form(levels, top, k, q))
        M = np.stack(vecs, axis=1)
        for k in range(top + 1):
            ns = kernels.nullspace_mod(M[:, : k + 1], p)
            if len(ns):
                v = ns[-1]
                inv = pow(int(v[k]), -1, p)
                return ProbeResult(k, [int(x) * inv % p for x in v], ranks, p, point, kernels.backend())
    return ProbeResult(None, [], ranks, p, point, kernels.backend())
