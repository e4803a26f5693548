import random

import pytest

from graphgen import brute_forests, random_multigraph
from twistpf.graph import (Edge, FeynmanGraph, GraphError, KinematicTable, first_symanzik_of, graph_ring,
                           matrix_tree_U, matrix_tree_U_of, spanning_2forests_of, spanning_trees,
                           spanning_trees_of, symanzik)
from twistpf.ring import HomogeneousPoly, ParamRing

from conftest import box_graph, sunset_graph


def R0(n):
    return ParamRing((), n)


def poly(R, text_terms, degree):
    return HomogeneousPoly.from_terms(R, degree, {e: R.parse(c) for e, c in text_terms.items()})


def test_k4_has_16_trees():
    vs = ["a", "b", "c", "d"]
    pairs = [(u, v) for i, u in enumerate(vs) for v in vs[i + 1:]]
    trees = spanning_trees_of(vs, pairs)
    assert len(trees) == 16 == len(brute_forests(vs, pairs, 1))


def test_sunset_polynomials():
    g, k = sunset_graph(3)
    sp = symanzik(g, k)
    R = sp.ring
    assert sp.loops == 2
    assert sp.U == poly(R, {(1, 1, 0): "1", (1, 0, 1): "1", (0, 1, 1): "1"}, 2)
    assert sp.V == poly(R, {(1, 1, 1): "psq"}, 3)
    msum = poly(R, {(1, 0, 0): "m1^2", (0, 1, 0): "m2^2", (0, 0, 1): "m3^2"}, 1)
    assert sp.F == sp.U * msum - sp.V


def test_sunset_forests():
    forests = spanning_2forests_of(["v1", "v2"], [("v1", "v2")] * 3)
    assert forests == [((), (("v1",), ("v2",)))]


@pytest.mark.parametrize("n", [3, 4, 5])
def test_banana_U(n):
    g, k = sunset_graph(n)
    sp = symanzik(g, k)
    R = sp.ring
    terms = {tuple(0 if j == i else 1 for j in range(n)): "1" for i in range(n)}
    assert sp.U == poly(R, terms, n - 1)


def test_box_polynomials():
    g, k = box_graph()
    sp = symanzik(g, k)
    R = sp.ring
    assert sp.U == poly(R, {(1, 0, 0, 0): "1", (0, 1, 0, 0): "1", (0, 0, 1, 0): "1", (0, 0, 0, 1): "1"}, 1)
    assert sp.F == poly(R, {(1, 0, 1, 0): "u", (0, 1, 0, 1): "s"}, 2)
    assert len(spanning_2forests_of(g.vertices, [(e.u, e.v) for e in g.edges])) == 6
    assert sum(1 for c in sp.V.terms().values() if not c.is_zero()) == 2


def test_matrix_tree_examples():
    g, _ = sunset_graph(3)
    R = R0(3)
    assert matrix_tree_U(g, R) == poly(R, {(1, 1, 0): "1", (1, 0, 1): "1", (0, 1, 1): "1"}, 2)
    bg, _ = box_graph()
    R = R0(4)
    assert matrix_tree_U(bg, R) == poly(R, {(1, 0, 0, 0): "1", (0, 1, 0, 0): "1",
                                            (0, 0, 1, 0): "1", (0, 0, 0, 1): "1"}, 1)


def _euler(h):
    R = h.ring
    acc = HomogeneousPoly.zero(R, h.degree)
    for i in range(R.nvars):
        acc = acc + R.xpoly(i) * h.derivative(i)
    return acc


def test_random_graphs_trees_and_forests():
    rng = random.Random(7)
    for _ in range(60):
        verts, pairs = random_multigraph(rng)
        assert spanning_trees_of(verts, pairs) == brute_forests(verts, pairs, 1)
        got = sorted(f for f, _ in spanning_2forests_of(verts, pairs))
        assert got == brute_forests(verts, pairs, 2)
        R = R0(len(pairs))
        U = first_symanzik_of(R, verts, pairs)
        assert U == matrix_tree_U_of(R, verts, pairs)
        assert _euler(U) == U * R.const(U.degree)


def test_deletion_contraction():
    rng = random.Random(11)
    for _ in range(40):
        verts, pairs = random_multigraph(rng, 7)
        n = len(pairs)
        R = R0(n)
        U = first_symanzik_of(R, verts, pairs)
        e = rng.randrange(n)
        a, b = pairs[e]
        # contraction keeps x_e as a self-loop so both sides live in the same ring
        merged = [v for v in verts if v != b]
        con = [(a if u == b else u, a if v == b else v) for u, v in pairs]
        con[e] = (a, a)
        U_con = first_symanzik_of(R, merged, con)
        rest = [p for i, p in enumerate(pairs) if i != e]
        if brute_forests(verts, rest, 1):
            # deletion: x_e is absent from every tree of G - e
            dele = list(pairs)
            dele[e] = (a, a)
            U_del = first_symanzik_of(R, verts, dele).div_x(e)
        else:
            U_del = HomogeneousPoly.zero(R, U.degree - 1)
        # U_con already carries x_e (self-loop); divide it out for the identity below
        assert U == U_con.div_x(e) + R.xpoly(e) * U_del


def test_bridge_contraction_only():
    verts, pairs = ["a", "b", "c"], [("a", "b"), ("b", "c"), ("b", "c")]
    R = R0(3)
    U = first_symanzik_of(R, verts, pairs)
    assert U == R.xpoly(1) + R.xpoly(2)


def test_graph_validation():
    with pytest.raises(GraphError, match="self-loop"):
        FeynmanGraph(("a",), (Edge("e1", "a", "a"),))
    with pytest.raises(GraphError, match="not connected"):
        FeynmanGraph(("a", "b", "c"), (Edge("e1", "a", "b"),))
    with pytest.raises(GraphError, match="unknown vertex"):
        FeynmanGraph(("a", "b"), (Edge("e1", "a", "z"),))
    with pytest.raises(GraphError, match="more than one"):
        FeynmanGraph(("a", "b"), (Edge("e1", "a", "b"),), (("a", "p"), ("a", "q")))


def test_missing_dot_product():
    g, _ = sunset_graph(3)
    with pytest.raises(GraphError, match="missing dot product p.p"):
        symanzik(g, KinematicTable())


def test_graph_ring_order():
    g, k = sunset_graph(3)
    R = graph_ring(g, k, ["t"])
    assert R.params == ("t", "eps", "kap", "m1", "m2", "m3", "psq")


def test_spanning_trees_of_graph():
    g, _ = box_graph()
    assert spanning_trees(g) == [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
