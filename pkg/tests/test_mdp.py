import json
import random
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from instances import multichain, random_mdp
from lrsynth.mdp import (
    Action,
    Mdp,
    MdpFormatError,
    format_rational,
    parse_mdp,
    parse_rational,
    serialize_mdp,
    validate_mdp,
)


def doc(**over):
    base = {
        "states": ["s", "t"],
        "initial": "s",
        "labels": {"s": ["p"]},
        "actions": [
            {"name": "a", "from": "s", "to": {"s": "1/2", "t": "1/2"}},
            {"name": "b", "from": "t", "to": {"t": "1"}},
        ],
    }
    base.update(over)
    return json.dumps(base)


def test_multichain_document():
    m = multichain()
    assert m.num_states == 2 and m.num_actions == 3
    assert [a.name for a in m.actions] == ["a", "b", "c"]
    assert m.actions[m.action_index("b")].dist == {1: Fraction(1)}
    assert validate_mdp(m) == []


def test_minimal_mdp():
    m = parse_mdp('{"states": ["s"], "initial": "s", "actions": [{"name": "a", "from": "s", "to": {"s": 1}}]}')
    assert m.num_states == 1 and m.enabled == ((0,),)
    assert m.labels == (frozenset(),) and m.reward_dim == 0


def test_distribution_must_sum_to_one():
    bad = doc(actions=[{"name": "a", "from": "s", "to": {"s": "1/2", "t": "1/3"}},
                       {"name": "b", "from": "t", "to": {"t": "1"}}])
    with pytest.raises(MdpFormatError, match="distribution sums to 5/6"):
        parse_mdp(bad)


def test_syntax_error_reports_position():
    with pytest.raises(MdpFormatError, match=r"line 2, column \d+"):
        parse_mdp('{"states": ["s"],\n "initial": }')


@pytest.mark.parametrize("over, message", [
    ({"initial": "u"}, "unknown state 'u'"),
    ({"actions": [{"name": "a", "from": "s", "to": {"s": "1"}},
                  {"name": "a", "from": "t", "to": {"t": "1"}}]}, "duplicate action name 'a'"),
    ({"actions": [{"name": "a", "from": "s", "to": {"s": "1"}}]}, "state 't' has no actions"),
    ({"actions": [{"name": "a", "from": "s", "to": {"x": "1"}},
                  {"name": "b", "from": "t", "to": {"t": "1"}}]}, "unknown state 'x'"),
    ({"actions": [{"name": "a", "from": "s", "to": {"s": "3/2", "t": "-1/2"}},
                  {"name": "b", "from": "t", "to": {"t": "1"}}]}, "outside"),
    ({"ap": "p"}, "'ap' must be an array"),
])
def test_parse_errors(over, message):
    with pytest.raises(MdpFormatError, match=message):
        parse_mdp(doc(**over))


def test_decimals_are_exact():
    m = parse_mdp(doc(actions=[{"name": "a", "from": "s", "to": {"s": "0.25", "t": 0.75}, "reward": ["1.5"]},
                               {"name": "b", "from": "t", "to": {"t": "1"}, "reward": [2]}]))
    assert m.actions[0].dist == {0: Fraction(1, 4), 1: Fraction(3, 4)}
    assert m.actions[0].reward == (Fraction(3, 2),)


def test_omitted_reward_defaults_to_zero():
    m = parse_mdp(doc(actions=[{"name": "a", "from": "s", "to": {"s": "1"}, "reward": [1, 2]},
                               {"name": "b", "from": "t", "to": {"t": "1"}}]))
    assert m.actions[1].reward == (0, 0) and m.reward_dim == 2


def test_declared_propositions():
    m = parse_mdp(doc(ap=["q"]))
    assert m.ap == ("p", "q")
    assert parse_mdp(serialize_mdp(m)) == m


def test_parse_rational():
    assert parse_rational("3/6") == Fraction(1, 2)
    assert parse_rational(0.1) == Fraction(1, 10)
    assert parse_rational(Fraction(2, 3)) == Fraction(2, 3)
    for bad in (True, "x", "1/0", None):
        with pytest.raises(ValueError):
            parse_rational(bad)
    assert format_rational(Fraction(4, 2)) == "2"
    assert format_rational(Fraction(-1, 3)) == "-1/3"


def test_validate_reports_shared_action():
    m = multichain()
    broken = replace(m, enabled=((0, 1), (1, 2)))
    assert any("action 'b' not uniquely owned" in v for v in validate_mdp(broken))


def test_validate_reports_reward_dimension_mismatch():
    m = multichain()
    acts = list(m.actions)
    acts[0] = replace(acts[0], reward=(Fraction(1), Fraction(2)))
    acts[1] = replace(acts[1], reward=(Fraction(1),))
    problems = validate_mdp(replace(m, actions=tuple(acts)))
    assert any("reward dimension mismatch" in v for v in problems)


def test_validate_reports_everything():
    m = Mdp(("s", "s"), 3, (Action("a", 0, {0: Fraction(1, 2)}),), ((0,), ()), (frozenset({"p"}),) * 2, ())
    problems = validate_mdp(m)
    for fragment in ("duplicate state names", "initial state index 3", "no actions",
                     "distribution sums to 1/2", "outside ap"):
        assert any(fragment in p for p in problems), fragment


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 2))
def test_round_trip_and_validity(seed, dim):
    m = random_mdp(random.Random(seed), reward_dim=dim)
    assert validate_mdp(m) == []
    again = parse_mdp(serialize_mdp(m))
    assert again == m
    assert validate_mdp(again) == []
