import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsek.dsl import parse_potential
from gsek.errors import ParseError
from gsek.potentials import BallIndicator, Constant, Cylinder3, Dilate, Negate, Scale, Sum, Truncate, Zero


def test_node_types():
    assert isinstance(parse_potential("zero", 2), Zero)
    assert isinstance(parse_potential("const:-1.5e-1", 1), Constant)
    assert isinstance(parse_potential("ball:1,2", 3), BallIndicator)
    assert isinstance(parse_potential("cyl3:4", 3), Cylinder3)
    assert isinstance(parse_potential("dilate:4(ball:1,1)", 2), Dilate)
    assert isinstance(parse_potential("trunc:2(const:1)", 2), Truncate)
    assert isinstance(parse_potential("scale:3(zero)", 1), Scale)
    assert isinstance(parse_potential("neg(const:1)", 1), Negate)
    assert isinstance(parse_potential("sum(const:1;ball:1,1)", 1), Sum)


def test_whitespace_insensitive():
    a = parse_potential(" sum( ball : 1 , 2 , 0.5 ; neg ( const:1 ) ) ", 1)
    b = parse_potential("sum(ball:1,2,0.5;neg(const:1))", 1)
    z = np.linspace(-2, 2, 41).reshape(-1, 1)
    assert np.array_equal(a(z), b(z))


def test_ball_center():
    V = parse_potential("ball:0.5,3,1,-1", 2)
    assert V([1.0, -1.0]) == 3.0
    assert V([0.0, 0.0]) == 0.0


@pytest.mark.parametrize("text,pos", [
    ("ball:1", 6),
    ("foo", 0),
    ("const:abc", 6),
    ("const:1 x", 8),
    ("neg(const:1", 11),
    ("sum(const:1,const:2)", 11),
])
def test_parse_error_positions(text, pos):
    with pytest.raises(ParseError) as info:
        parse_potential(text, 1)
    assert info.value.position == pos
    assert "position" in str(info.value)


def test_semantic_errors_are_parse_errors():
    for text, d in [("cyl3:1", 2), ("cyl3:1.5", 3), ("dilate:0(zero)", 1), ("ball:-1,1", 1), ("ball:1,1,0", 2)]:
        with pytest.raises(ParseError):
            parse_potential(text, d)


def _trees(d):
    num = st.floats(0.1, 3.0).map(lambda v: round(v, 3))
    leaves = st.one_of(
        st.just("zero"),
        num.map(lambda a: f"const:{a}"),
        st.tuples(num, num).map(lambda p: f"ball:{p[0]},{p[1]}"),
    )

    def extend(children):
        return st.one_of(
            st.tuples(num, children).map(lambda p: f"dilate:{p[0]}({p[1]})"),
            st.tuples(num, children).map(lambda p: f"trunc:{p[0]}({p[1]})"),
            st.tuples(num, children).map(lambda p: f"scale:{p[0]}({p[1]})"),
            children.map(lambda c: f"neg({c})"),
            st.lists(children, min_size=1, max_size=3).map(lambda cs: "sum(" + ";".join(cs) + ")"),
        )

    return st.recursive(leaves, extend, max_leaves=6)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda d: st.tuples(st.just(d), _trees(d))))
def test_dsl_round_trip(case):
    d, text = case
    V = parse_potential(text, d)
    W = parse_potential(V.dsl(), d)
    Z = np.random.default_rng(0).normal(scale=1.5, size=(64, d))
    assert np.allclose(V(Z), W(Z), rtol=1e-12, atol=0)
