import sympy
from hypothesis import given, settings, strategies as st
import pytest

from twistpf.ring import (ExpressionError, HomogeneousPoly, LinearSystem, ParamRing, RingError,
                          echelonize, expression_symbols, grevlex_key, solve_linear, solve_linear_in)

R = ParamRing(["a", "b"], 3)
A, B = sympy.symbols("a b")
SYMS = {"a": A, "b": B, "eps": sympy.Symbol("eps"), "kap": sympy.Symbol("kap")}

small = st.integers(-3, 3)
poly_terms = st.lists(st.tuples(small, st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=4)


def to_text(terms):
    return " + ".join(f"({c})*a^{i}*b^{j}" for c, i, j in terms)


@st.composite
def fields(draw):
    num = to_text(draw(poly_terms))
    den = to_text(draw(poly_terms))
    if sympy.expand(sympy.sympify(den.replace("^", "**"), locals=SYMS)) == 0:
        den = "1"
    return R.parse(f"({num})/({den})")


def sym(f):
    return sympy.sympify(str(f).replace("^", "**"), locals=SYMS)


def same(f, expr):
    return sympy.simplify(sym(f) - expr) == 0


@settings(max_examples=40, deadline=None)
@given(fields(), fields())
def test_field_ops_match_sympy(f, g):
    assert same(f + g, sym(f) + sym(g))
    assert same(f - g, sym(f) - sym(g))
    assert same(f * g, sym(f) * sym(g))
    if not g.is_zero():
        assert same(f / g, sym(f) / sym(g))


@settings(max_examples=40, deadline=None)
@given(fields(), fields(), fields())
def test_field_axioms(f, g, h):
    assert (f + g) + h == f + (g + h)
    assert f * (g + h) == f * g + f * h
    assert f * g == g * f
    if not f.is_zero():
        assert f * f.inverse() == R.one


@settings(max_examples=30, deadline=None)
@given(fields())
def test_canonical_form_idempotent(f):
    g = R.parse(str(f))
    assert g == f and str(g) == str(f)
    assert f.den.leading_coefficient() == 1
    assert f.num.gcd(f.den).is_constant()


def test_derivative_and_subs():
    f = R.parse("a^2*b/(a+1)")
    assert same(f.derivative("a"), sympy.diff(A**2 * B / (A + 1), A))
    g = f.subs({"b": R.parse("a-1")})
    assert g == R.parse("a^2*(a-1)/(a+1)")
    assert f.symbols() == {"a", "b"}


def test_constant_roundtrip():
    assert R.const(3).to_fraction() == 3
    assert R.parse("6/4").to_fraction() == sympy.Rational(3, 2)


def test_parse_errors():
    with pytest.raises(ExpressionError):
        R.parse("a +* b")
    with pytest.raises(RingError):
        R.parse("zeta")
    with pytest.raises(ExpressionError):
        R.parse("   ")
    assert expression_symbols("m^2 + p1*p2 - m") == ["m", "p1", "p2"]


def test_homogeneous_poly_ops():
    a = R.param("a")
    h = HomogeneousPoly.from_terms(R, 2, {(1, 1, 0): a, (0, 0, 2): R.one})
    assert h.degree == 2
    assert (h * h).degree == 4
    assert h.derivative(2) == HomogeneousPoly.from_terms(R, 1, {(0, 0, 1): R.const(2)})
    assert h.derivative("a") == HomogeneousPoly.from_terms(R, 2, {(1, 1, 0): R.one})
    assert h.permute((2, 1, 0)).coefficient((0, 1, 1)) == a
    with pytest.raises(RingError):
        HomogeneousPoly.from_terms(R, 2, {(1, 0, 0): R.one})
    x1 = R.xpoly(0)
    assert (h * x1).divides_x(0) and (h * x1).div_x(0) == h
    assert not h.divides_x(0)


def test_euler_identity_on_random_homogeneous():
    a = R.param("a")
    h = HomogeneousPoly.from_terms(R, 3, {(3, 0, 0): a, (1, 1, 1): R.const(-2), (0, 1, 2): a * a})
    euler = sum((R.xpoly(i) * h.derivative(i) for i in range(3)), HomogeneousPoly.zero(R, 3))
    assert euler == h * R.const(3)


def test_grevlex_order():
    # grevlex on equal degree: smaller power of the last variable is larger
    assert grevlex_key((1, 1, 0)) > grevlex_key((1, 0, 1))
    assert grevlex_key((2, 0, 0)) > grevlex_key((0, 2, 0))
    assert grevlex_key((0, 0, 3)) > grevlex_key((1, 0, 0))


@st.composite
def systems(draw):
    m = draw(st.integers(1, 4))
    n = draw(st.integers(1, 4))
    rows = [[R.parse(to_text(draw(st.lists(st.tuples(small, st.integers(0, 1), st.integers(0, 1)),
                                            min_size=1, max_size=2)))) for _ in range(n)] for _ in range(m)]
    rhs = [R.parse(to_text(draw(poly_terms))) for _ in range(m)]
    return LinearSystem(rows, rhs, n)


def matvec(rows, x):
    return [sum((r[j] * x[j] for j in range(len(x))), R.zero) for r in rows]


@settings(max_examples=40, deadline=None)
@given(systems())
def test_solve_linear_back_substitution(sys_):
    sol = solve_linear_in(R, sys_)
    M = sympy.Matrix([[sym(v) for v in r] for r in sys_.rows])
    b = sympy.Matrix([sym(v) for v in sys_.rhs])
    if sol.consistent:
        assert matvec(sys_.rows, sol.particular) == sys_.rhs
        for v in sol.nullspace:
            assert all(x.is_zero() for x in matvec(sys_.rows, v))
        assert len(sol.nullspace) == sys_.ncols - M.rank(simplify=True)
    else:
        assert M.rank(simplify=True) < M.row_join(b).rank(simplify=True)
        assert not sol.residual.is_zero()


def test_inconsistent_system_reports_residual():
    one = R.one
    sol = solve_linear(LinearSystem([[one, one], [one, one]], [one, R.const(2)], 2))
    assert not sol.consistent and sol.residual is not None


def test_nullspace_rref_shape():
    a = R.param("a")
    rows = [[R.one, a, R.zero], [R.zero, R.zero, R.one]]
    sol = solve_linear_in(R, LinearSystem.homogeneous(R, rows, 3))
    assert sol.pivots == [0, 2]
    assert sol.nullspace == [[-a, R.one, R.zero]]


def test_echelonize_deterministic_and_kernel():
    a = R.param("a")
    rows = [{0: a, 1: R.one}, {0: a * a, 1: a}, {1: R.one, 2: R.one}]
    e1 = echelonize(R, rows, 2)
    e2 = echelonize(R, rows, 2)
    assert e1.pivots == e2.pivots == [0, 1]
    assert len(e1.kernel) == 1
    assert all(c >= 2 for c in e1.kernel[0])
