import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from ptagen import random_pta_text

from ptawit.model import ClockConstraint, ConstraintError
from ptawit.parser import PtaSyntaxError, ValidationError, parse, serialize

GOOD = """
# a comment
clocks x y;
loc a inv "x<=2" init;
loc g goal;
loc f fail;
trans a guard "x>=1 & y<3" act go { 1/2 -> reset{x, y} a; 1/2 -> g; };
"""


def test_parse_basic():
    T = parse(GOOD)
    assert T.clocks == ("x", "y")
    assert (T.initial, T.goal, T.fail) == ("a", "g", "f")
    (t,) = T.transitions["a"]
    assert t.action == "go"
    assert t.prob({"x", "y"}, "a") == Fraction(1, 2)
    assert t.guard.text == "x>=1 & y<3"
    assert T.inner_locations == ("a",)
    assert T.max_constant() == 3


def test_fixture_shape(fig1, fig1_bounded):
    assert fig1.inner_locations == ("l0", "l1", "l2", "l3")
    assert not fig1.is_bounded()
    assert fig1_bounded.is_bounded()
    assert fig1_bounded.bound == 2
    assert fig1_bounded.invariants["l2"].text == "y<=2 & x<=2"


@given(st.integers(0, 10**6))
def test_serialize_roundtrip(seed):
    T = parse(random_pta_text(random.Random(seed)))
    again = parse(serialize(T, ["header line"]))
    assert again == T
    assert serialize(again) == serialize(T)


def test_duplicate_branches_merge():
    T = parse(GOOD.replace("1/2 -> g;", "1/4 -> g; 1/4 -> g;"))
    (t,) = T.transitions["a"]
    assert t.prob(set(), "g") == Fraction(1, 2)
    assert len(t.branches) == 2


@pytest.mark.parametrize("edit,kind", [
    (("loc f fail;", ""), "missing-fail"),
    (("loc g goal;", "loc g goal; loc h goal;"), "multiple-goal"),
    ((" init;", ";"), "missing-init"),
    (("1/2 -> g", "1/3 -> g"), "distribution-sum"),
    (("-> g;", "-> nowhere;"), "unknown-location"),
    (('inv "x<=2"', 'inv "x>=1"'), "initial-invariant"),
    (("loc a", "loc a inv \"true\"; loc a"), "duplicate-location"),
    (("loc f fail;", "loc f fail; loc b;"), "no-transitions"),
    (("trans a", "trans g guard \"true\" act z { 1 -> g; };\ntrans a"), "absorbing"),
])
def test_validation_errors(edit, kind):
    with pytest.raises(ValidationError) as e:
        parse(GOOD.replace(*edit, 1))
    assert e.value.kind == kind


@pytest.mark.parametrize("text", [
    GOOD.replace('"x>=1 & y<3"', '"x>=1 &"'),
    GOOD.replace('"x>=1 & y<3"', '"z>=1"'),
    GOOD.replace("act go", ""),
    GOOD.replace("reset{x, y}", "reset{q}"),
    GOOD.replace("clocks x y;", "clocks x x;"),
    GOOD.replace("1/2 -> g", "half -> g"),
    GOOD + "bogus;",
])
def test_syntax_errors_have_positions(text):
    with pytest.raises(PtaSyntaxError) as e:
        parse(text)
    assert e.value.line >= 1 and e.value.col >= 1


def test_constraint_parsing():
    c = ClockConstraint.parse("x<=2 & y-x<1 & x>0", ("x", "y"))
    assert c.holds({"x": Fraction(1), "y": Fraction(3, 2)})
    assert not c.holds({"x": Fraction(1), "y": Fraction(2)})
    assert ClockConstraint.parse("true", ("x",)).text == "true"
    assert ClockConstraint.parse("false", ("x",)).is_false
    with pytest.raises(ConstraintError):
        ClockConstraint.parse("x<=1/2", ("x",))
