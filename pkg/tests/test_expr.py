import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from shapelab.expr import (Bin, Call, DomainError, ExprSyntaxError, Neg, Num, ScalarExpr,
                           UnboundName, UnknownIdentifier, Var, parse)

CUBIC = "R1^3 + a*R1^2 + b*R1 + c"


def test_parse_power_of_call():
    node = parse("sin(R1)^2").node
    assert node == Bin("^", Call("sin", Var("R1")), Num(2))


def test_parse_monge_denominator():
    node = parse("1 + c/cos(R1)^2", ["c"]).node
    expected = Bin("+", Num(1), Bin("/", Var("c"), Bin("^", Call("cos", Var("R1")), Num(2))))
    assert node == expected


def test_parse_cubic():
    node = parse(CUBIC, "abc").node
    t3 = Bin("^", Var("R1"), Num(3))
    t2 = Bin("*", Var("a"), Bin("^", Var("R1"), Num(2)))
    t1 = Bin("*", Var("b"), Var("R1"))
    assert node == Bin("+", Bin("+", Bin("+", t3, t2), t1), Var("c"))


def test_precedence():
    # ^ binds tighter than unary minus, which binds tighter than * and /
    assert parse("-R1^2").evaluate(R1=3.0) == -9.0
    assert parse("2^3^2").evaluate() == 512.0
    assert parse("-R1*R2").node == Bin("*", Neg(Var("R1")), Var("R2"))
    assert parse("8/2/2").evaluate() == 2.0


def test_eval_examples():
    assert parse("sin(R1)").evaluate(R1=math.pi / 2) == 1.0
    assert parse(CUBIC, "abc").evaluate(R1=1, a=0, b=0, c=0) == 1.0
    assert parse("2/cosh(R1+R2)^2").evaluate(R1=0.0, R2=0.0) == 2.0


def test_eval_deterministic_arrays():
    e = parse("exp(R1)*sin(R2) + sqrt(1 + R1^2)")
    x = np.linspace(-1, 1, 50)
    a = e.evaluate(R1=x, R2=x[::-1])
    b = e.evaluate(R1=x, R2=x[::-1])
    assert a.tobytes() == b.tobytes()


def test_diff_examples():
    assert str(parse("sin(R1)").diff("R1")) == "cos(R1)"
    assert str(parse("sin(R1)").diff("R2")) == "0"
    d = parse(CUBIC, "abc").diff("R1")
    ref = parse("3*R1^2 + 2*a*R1 + b", "abc")
    rng = np.random.default_rng(0)
    for _ in range(5):
        env = dict(zip(["R1", "a", "b", "c"], rng.uniform(-2, 2, 4)))
        h = 1e-5
        fd = (parse(CUBIC, "abc").evaluate(dict(env, R1=env["R1"] + h))
              - parse(CUBIC, "abc").evaluate(dict(env, R1=env["R1"] - h))) / (2 * h)
        assert d.evaluate(env) == pytest.approx(ref.evaluate(env), abs=1e-12)
        assert d.evaluate(env) == pytest.approx(fd, abs=1e-6)


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("1 +* R1")
    assert exc.value.offset == 3


def test_unknown_names():
    with pytest.raises(UnknownIdentifier):
        parse("foo(R1)")
    with pytest.raises(UnknownIdentifier):
        parse("a*R1")
    with pytest.raises(UnboundName):
        parse("R1 + a", ["a"]).evaluate(R1=1.0)


def test_domain_errors():
    e = parse("sqrt(R1)")
    with pytest.raises(DomainError) as exc:
        e.evaluate(R1=-1.0)
    assert "sqrt(R1)" in str(exc.value)
    assert math.isnan(e.evaluate({"R1": -1.0}, strict=False))


def test_immutable():
    e = parse("R1")
    with pytest.raises(AttributeError):
        e.node = None


# ---------------------------------------------------------------------------
# properties

_SMOOTH = ["sin", "cos", "tanh", "arctan", "exp"]


def _atoms():
    return st.one_of(
        st.sampled_from(["R1", "R2"]),
        st.floats(0.1, 3.0).map(lambda v: f"{v:.3f}"),
    )


def _grow(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(
            lambda t: f"({t[0]}) {t[1]} ({t[2]})"),
        st.tuples(st.sampled_from(_SMOOTH), children).map(lambda t: f"{t[0]}({t[1]})"),
        children.map(lambda s: f"({s})/(2 + sin({s}))"),
        children.map(lambda s: f"sqrt(1 + ({s})^2)"),
        children.map(lambda s: f"-({s})"),
    )


smooth_exprs = st.recursive(_atoms(), _grow, max_leaves=6)


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(src=smooth_exprs, x=st.floats(-1, 1), y=st.floats(-1, 1), var=st.sampled_from(["R1", "R2"]))
def test_derivative_matches_central_difference(src, x, y, var):
    e = parse(src)
    env = {"R1": x, "R2": y}
    val = e.evaluate(env)
    if not math.isfinite(val) or abs(val) > 1e6:
        return
    h = 1e-5
    fd = (e.evaluate(dict(env, **{var: env[var] + h})) - e.evaluate(dict(env, **{var: env[var] - h}))) / (2 * h)
    d = e.diff(var).evaluate(env)
    assert abs(d - fd) <= 1e-6 * (1 + abs(val))


def _nodes():
    leaf = st.one_of(st.sampled_from([Var("R1"), Var("R2"), Var("pi")]),
                     st.floats(0, 1e6, allow_nan=False).map(Num))
    return st.recursive(leaf, lambda ch: st.one_of(
        st.builds(Neg, ch),
        st.builds(Bin, st.sampled_from(["+", "-", "*", "/", "^"]), ch, ch),
        st.builds(Call, st.sampled_from(["sin", "exp", "sqrt", "arccos"]), ch),
    ), max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(node=_nodes())
def test_print_parse_roundtrip(node):
    text = str(ScalarExpr(node))
    assert parse(text).node == node
