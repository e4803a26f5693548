import pytest

from twistpf.graph import Edge, FeynmanGraph, KinematicTable, graph_ring, symanzik
from twistpf.twist import TwistSpec


def sunset_graph(n):
    edges = tuple(Edge(f"e{i}", "v1", "v2", f"m{i}") for i in range(1, n + 1))
    g = FeynmanGraph(("v1", "v2"), edges, (("v1", "p"), ("v2", "p")))
    k = KinematicTable()
    k.set("p", "p", "psq")
    return g, k


def sunset_polys(n, equal=True):
    """Banana graph with p^2 -> t and, if equal, all masses set to 1."""
    g, k = sunset_graph(n)
    R = graph_ring(g, k, ["t"])
    sp = symanzik(g, k, R)
    b = {"psq": R.param("t")}
    if equal:
        b.update({f"m{i}": R.one for i in range(1, n + 1)})
    return sp.subs(b)


def box_graph():
    vs = ("v1", "v2", "v3", "v4")
    edges = tuple(Edge(f"e{i}", vs[i - 1], vs[i % 4]) for i in range(1, 5))
    legs = tuple((v, f"p{i}") for i, v in enumerate(vs, 1))
    k = KinematicTable()
    for i in range(1, 5):
        k.set(f"p{i}", f"p{i}", "0")
    k.set("p1", "p2", "s/2")
    k.set("p3", "p4", "s/2")
    k.set("p1", "p4", "u/2")
    k.set("p2", "p3", "u/2")
    k.set("p1", "p3", "-(s+u)/2")
    k.set("p2", "p4", "-(s+u)/2")
    return FeynmanGraph(vs, edges, legs), k


def box_polys():
    g, k = box_graph()
    R = graph_ring(g, k, ["X"])
    sp = symanzik(g, k, R)
    return sp.subs({"s": R.one, "u": R.param("X")})


@pytest.fixture(scope="session")
def box():
    return box_polys()


@pytest.fixture(scope="session")
def sunset3():
    return sunset_polys(3)


@pytest.fixture(scope="session")
def box_ts():
    return TwistSpec.uniform(2, 4)


@pytest.fixture(scope="session")
def sunset3_ts():
    return TwistSpec.uniform(1, 3)


@pytest.fixture(scope="session")
def box_result(box, box_ts):
    from twistpf.pfdriver import minimal_operator
    return minimal_operator(box, box_ts, "X")


@pytest.fixture(scope="session")
def sunset3_result(sunset3, sunset3_ts):
    from twistpf.pfdriver import minimal_operator
    return minimal_operator(sunset3, sunset3_ts, "t")
