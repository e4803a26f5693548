"""Edge permutations fixing U, F and the twist, and orbit coordinates.

The reduction only ever sees invariant numerators, so it can run on orbit
sums of monomials and of vector-field basis elements.  With the trivial
group every orbit is a singleton and nothing changes.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

from .ring import HomogeneousPoly, grevlex_key


def _signature(h: HomogeneousPoly, i: int) -> tuple:
    n = h.ring.nvars
    sig = []
    for e, c in h.num.terms():
        sig.append((e[i], tuple(sorted(e[:n])), tuple(e[n:]), str(c)))
    return tuple(sorted(sig))


def symmetry_group(polys: Sequence[HomogeneousPoly], labels: Sequence = ()) -> list:
    """All permutations p (x_i -> x_p[i]) fixing every polynomial and label.

    ``labels[i]`` is any hashable tag that must be preserved, e.g. the
    x_i exponent of the twist.  Candidates are pruned by per-variable
    signatures before the full check.
    """
    n = polys[0].ring.nvars
    if not labels:
        labels = [None] * n
    sigs = [tuple(_signature(p, i) for p in polys) + (str(labels[i]),) for i in range(n)]
    cands = [[j for j in range(n) if sigs[j] == sigs[i]] for i in range(n)]
    out = []
    perm = [0] * n
    used = [False] * n

    def rec(i):
        if i == n:
            p = tuple(perm)
            if all(q.permute(p) == q for q in polys):
                out.append(p)
            return
        for j in cands[i]:
            if not used[j]:
                used[j] = True
                perm[i] = j
                rec(i + 1)
                used[j] = False

    rec(0)
    return sorted(out)


def _desc(m) -> tuple:
    # ascending order of this key is descending grevlex
    return (-sum(m), tuple(reversed(m)))


def act(perm: Sequence[int], exp: Sequence[int]) -> tuple:
    out = [0] * len(exp)
    for i, k in enumerate(exp):
        out[perm[i]] = k
    return tuple(out)


@lru_cache(maxsize=None)
def monomials(n: int, d: int) -> tuple:
    """All exponent vectors of degree d in n variables, grevlex-descending."""
    if d < 0:
        return ()
    out = []
    for combo in combinations_with_replacement(range(n), d):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    out.sort(key=grevlex_key, reverse=True)
    return tuple(out)


class MonomialOrbits:
    """Orbits of degree-d monomials; orbit k is represented by its grevlex-largest member."""

    def __init__(self, n: int, d: int, group: Sequence[tuple]):
        self.n = n
        self.d = d
        index = {}
        reps = []
        members = []
        for m in monomials(n, d):
            if m in index:
                continue
            orb = sorted({act(g, m) for g in group}, key=grevlex_key, reverse=True)
            k = len(reps)
            reps.append(orb[0])
            members.append(tuple(orb))
            for o in orb:
                index[o] = k
        self.reps = reps
        self.members = members
        self.index = index

    def __len__(self):
        return len(self.reps)

    def coords(self, h: HomogeneousPoly) -> dict:
        """Orbit coordinates of an invariant polynomial (coefficient at each representative)."""
        if h.is_zero():
            return {}
        terms = h.terms()
        out = {}
        for e, c in terms.items():
            k = self.index[e]
            if k in out:
                continue
            if any(terms.get(m) != c for m in self.members[k]):
                raise ValueError("polynomial is not invariant under the symmetry group")
            out[k] = c
        return out

    def poly(self, ring, k: int) -> HomogeneousPoly:
        num = ring.ctx.from_dict({m + (0,) * len(ring.params): 1 for m in self.members[k]})
        return HomogeneousPoly(ring, self.d, num, reduced=True)

    def from_coords(self, ring, coords: dict) -> HomogeneousPoly:
        acc = HomogeneousPoly.zero(ring, self.d)
        for k, v in sorted(coords.items()):
            if v:
                acc = acc + self.poly(ring, k) * v
        return acc


class FieldOrbits:
    """Orbits of pairs (i, m) standing for the vector field x^m e_i.

    Pairs with ``i`` in ``need_x`` are only allowed when m_i >= 1, so every
    basis field keeps x_i | C_i where the twist demands it.
    """

    def __init__(self, n: int, d: int, group: Sequence[tuple], need_x=frozenset()):
        self.n = n
        self.d = d
        seen = set()
        self.members = []
        for i in range(n):
            for m in monomials(n, d):
                if (i, m) in seen or (i in need_x and m[i] == 0):
                    continue
                orb = sorted({(g[i], act(g, m)) for g in group}, key=lambda im: (im[0], _desc(im[1])))
                for o in orb:
                    seen.add(o)
                self.members.append(tuple(orb))

    def __len__(self):
        return len(self.members)

    def field(self, ring, k: int) -> list:
        """The basis vector field as a list of components."""
        comps: dict = {}
        for i, m in self.members[k]:
            comps.setdefault(i, {})[m + (0,) * len(ring.params)] = 1
        out = []
        for i in range(self.n):
            if i in comps:
                out.append(HomogeneousPoly(ring, self.d, ring.ctx.from_dict(comps[i]), reduced=True))
            else:
                out.append(HomogeneousPoly.zero(ring, self.d))
        return out
