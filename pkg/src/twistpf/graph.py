"""Feynman graphs and their Symanzik polynomials."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import flint

from .ring import HomogeneousPoly, ParamField, ParamRing, expression_symbols


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    name: str
    u: str
    v: str
    mass: str = "0"


@dataclass(frozen=True)
class FeynmanGraph:
    """Connected multigraph with masses on edges and momentum labels on vertices.

    Several vertices may carry the same label; the label only selects a row
    of the kinematic table.  Edge ``i`` owns the variable ``x{i+1}``.
    """

    vertices: tuple
    edges: tuple
    legs: tuple = ()   # (vertex, label) pairs

    def __post_init__(self):
        vs = self.vertices
        if len(set(vs)) != len(vs):
            raise GraphError("duplicate vertex names")
        if not self.edges:
            raise GraphError("graph has no edges")
        names = [e.name for e in self.edges]
        if len(set(names)) != len(names):
            raise GraphError("duplicate edge names")
        vset = set(vs)
        for e in self.edges:
            for w in (e.u, e.v):
                if w not in vset:
                    raise GraphError(f"edge {e.name} uses unknown vertex {w}")
            if e.u == e.v:
                raise GraphError(f"edge {e.name} is a self-loop")
        seen = set()
        for v, _ in self.legs:
            if v not in vset:
                raise GraphError(f"leg attached to unknown vertex {v}")
            if v in seen:
                raise GraphError(f"vertex {v} carries more than one external momentum")
            seen.add(v)
        if not _connected(vs, [(e.u, e.v) for e in self.edges]):
            raise GraphError("graph is not connected")

    @property
    def loops(self) -> int:
        return len(self.edges) - len(self.vertices) + 1

    @property
    def labels(self) -> tuple:
        out = []
        for _, lab in self.legs:
            if lab not in out:
                out.append(lab)
        return tuple(out)

    def leg_of(self, v: str):
        for w, lab in self.legs:
            if w == v:
                return lab
        return None

    def mass_symbols(self) -> list:
        out = []
        for e in self.edges:
            for s in expression_symbols(e.mass):
                if s not in out:
                    out.append(s)
        return out


@dataclass
class KinematicTable:
    """Symmetric table of dot products between momentum labels."""

    entries: dict = field(default_factory=dict)

    @staticmethod
    def key(a: str, b: str) -> tuple:
        return (a, b) if a <= b else (b, a)

    def set(self, a: str, b: str, expr: str):
        self.entries[self.key(a, b)] = expr

    def get(self, a: str, b: str) -> str:
        try:
            return self.entries[self.key(a, b)]
        except KeyError:
            raise GraphError(f"missing dot product {a}.{b}") from None

    def symbols(self) -> list:
        out = []
        for k in sorted(self.entries):
            for s in expression_symbols(self.entries[k]):
                if s not in out:
                    out.append(s)
        return out

    def check(self, labels: Sequence[str]):
        for i, a in enumerate(labels):
            for b in labels[i:]:
                self.get(a, b)


@dataclass
class SymanzikPolys:
    U: HomogeneousPoly
    V: HomogeneousPoly
    F: HomogeneousPoly
    loops: int

    @property
    def ring(self) -> ParamRing:
        return self.U.ring

    @property
    def nvars(self) -> int:
        return self.U.ring.nvars

    def subs(self, bindings: Mapping[str, ParamField]) -> "SymanzikPolys":
        return SymanzikPolys(self.U.subs(bindings), self.V.subs(bindings), self.F.subs(bindings), self.loops)


# combinatorics on plain multigraphs ----------------------------------------

def _connected(vertices, pairs) -> bool:
    vertices = list(vertices)
    if not vertices:
        return True
    adj = {v: [] for v in vertices}
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    seen = {vertices[0]}
    todo = deque([vertices[0]])
    while todo:
        v = todo.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return len(seen) == len(vertices)


def _trees(vertices: frozenset, edges: tuple) -> list:
    """Spanning trees by deletion-contraction; self-loops allowed."""
    edges = tuple(e for e in edges if e[1] != e[2])
    if len(vertices) == 1:
        return [frozenset()]
    if not edges:
        return []
    idx, u, v = edges[0]
    rest = edges[1:]
    contracted = tuple((j, u if a == v else a, u if b == v else b) for j, a, b in rest)
    out = [t | {idx} for t in _trees(vertices - {v}, contracted)]
    if _connected(vertices, [(a, b) for _, a, b in rest]):
        out += _trees(vertices, rest)
    return out


def spanning_trees_of(vertices: Sequence, pairs: Sequence[tuple]) -> list:
    """Spanning trees of a multigraph given as edge endpoint pairs.

    Returns sorted tuples of edge indices.  Self-loops are permitted here and
    never appear in a tree.
    """
    edges = tuple((i, a, b) for i, (a, b) in enumerate(pairs))
    return sorted(tuple(sorted(t)) for t in _trees(frozenset(vertices), edges))


def _components(vertices, pairs, chosen) -> list:
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i in chosen:
        a, b = pairs[i]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict = {}
    for v in vertices:
        groups.setdefault(find(v), []).append(v)
    order = {v: i for i, v in enumerate(vertices)}
    return sorted((tuple(sorted(g, key=order.get)) for g in groups.values()), key=lambda g: order[g[0]])


def spanning_2forests_of(vertices: Sequence, pairs: Sequence[tuple]) -> list:
    """Spanning 2-forests as (edge tuple, (part1, part2)); part1 holds the first vertex."""
    seen = set()
    out = []
    for t in spanning_trees_of(vertices, pairs):
        for f in t:
            forest = tuple(i for i in t if i != f)
            if forest in seen:
                continue
            seen.add(forest)
            parts = _components(list(vertices), pairs, forest)
            out.append((forest, (parts[0], parts[1])))
    out.sort()
    return out


def _pairs(g: FeynmanGraph) -> list:
    return [(e.u, e.v) for e in g.edges]


def spanning_trees(g: FeynmanGraph) -> list:
    return spanning_trees_of(g.vertices, _pairs(g))


def spanning_2forests(g: FeynmanGraph) -> list:
    return spanning_2forests_of(g.vertices, _pairs(g))


def _complement_monomial(n: int, chosen) -> tuple:
    s = set(chosen)
    return tuple(0 if i in s else 1 for i in range(n))


def first_symanzik_of(ring: ParamRing, vertices, pairs) -> HomogeneousPoly:
    n = len(pairs)
    trees = spanning_trees_of(vertices, pairs)
    num = ring.ctx.from_dict({_complement_monomial(n, t) + (0,) * len(ring.params): 1 for t in trees})
    return HomogeneousPoly(ring, n - len(vertices) + 1, num)


def graph_ring(g: FeynmanGraph, table: KinematicTable, extra: Sequence[str] = ()) -> ParamRing:
    """The job ring: extra symbols first, then masses and kinematic symbols."""
    params = []
    for s in list(extra) + ["eps", "kap"] + g.mass_symbols() + table.symbols():
        if s not in params:
            params.append(s)
    return ParamRing(params, len(g.edges))


def symanzik(g: FeynmanGraph, table: KinematicTable, ring: ParamRing | None = None) -> SymanzikPolys:
    """First and second Symanzik polynomials and F = U*sum(m^2 x) - V."""
    table.check(g.labels)
    if ring is None:
        ring = graph_ring(g, table)
    if ring.nvars != len(g.edges):
        raise GraphError("ring has the wrong number of edge variables")
    n = len(g.edges)
    pairs = _pairs(g)
    U = first_symanzik_of(ring, g.vertices, pairs)
    dots: dict = {}

    def dot(a, b):
        k = KinematicTable.key(a, b)
        if k not in dots:
            dots[k] = ring.parse(table.get(a, b))
        return dots[k]

    vterms: dict = {}
    for forest, (p1, p2) in spanning_2forests_of(g.vertices, pairs):
        s = ring.zero
        for a in p1:
            la = g.leg_of(a)
            if la is None:
                continue
            for b in p2:
                lb = g.leg_of(b)
                if lb is not None:
                    s = s + dot(la, lb)
        if s:
            vterms[_complement_monomial(n, forest)] = s
    V = HomogeneousPoly.from_terms(ring, g.loops + 1, vterms)
    msum = HomogeneousPoly.from_terms(
        ring, 1, {tuple(int(j == i) for j in range(n)): ring.parse(e.mass) ** 2
                  for i, e in enumerate(g.edges) if ring.parse(e.mass)})
    F = U * msum - V if not msum.is_zero() else -V
    return SymanzikPolys(U, V, F, g.loops)


def matrix_tree_U_of(ring: ParamRing, vertices, pairs) -> HomogeneousPoly:
    """First Symanzik polynomial from a weighted reduced Laplacian determinant."""
    vertices = list(vertices)
    n = len(pairs)
    if len(vertices) == 1:
        num = ring.ctx.from_dict({(1,) * n + (0,) * len(ring.params): 1})
        return HomogeneousPoly(ring, n, num)
    yctx = flint.fmpq_mpoly_ctx.get(tuple(f"y{i}" for i in range(n)), "degrevlex")
    ys = yctx.gens()
    pos = {v: i for i, v in enumerate(vertices[1:])}
    m = len(vertices) - 1
    zero = yctx.from_dict({})
    lap = [[zero for _ in range(m)] for _ in range(m)]
    for i, (a, b) in enumerate(pairs):
        if a == b:
            continue
        for w in (a, b):
            if w in pos:
                lap[pos[w]][pos[w]] += ys[i]
        if a in pos and b in pos:
            lap[pos[a]][pos[b]] -= ys[i]
            lap[pos[b]][pos[a]] -= ys[i]
    det = _bareiss_det(lap, yctx)
    out = {}
    for e, c in det.terms():
        if any(k > 1 for k in e):
            raise GraphError("non-multilinear determinant term")
        # self-loops never enter the Laplacian, so their x_e is always kept
        key = tuple(0 if e[i] else 1 for i in range(n))
        out[key + (0,) * len(ring.params)] = c
    num = ring.ctx.from_dict(out)
    return HomogeneousPoly(ring, n - len(vertices) + 1, num)


def _bareiss_det(mat, ctx):
    a = [row[:] for row in mat]
    n = len(a)
    one = ctx.from_dict({(0,) * ctx.nvars(): 1})
    prev = one
    sign = 1
    for k in range(n - 1):
        if a[k][k].is_zero():
            for r in range(k + 1, n):
                if not a[r][k].is_zero():
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return ctx.from_dict({})
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev
        prev = a[k][k]
    return a[n - 1][n - 1] * sign if n else one


def matrix_tree_U(g: FeynmanGraph, ring: ParamRing | None = None) -> HomogeneousPoly:
    if ring is None:
        ring = ParamRing((), len(g.edges))
    return matrix_tree_U_of(ring, g.vertices, _pairs(g))
