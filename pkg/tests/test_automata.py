import random

import pytest

from instances import random_lasso
from lrsynth.automata import (
    D,
    FAMILIES,
    N,
    HoaError,
    Ldba,
    accepts_lasso,
    all_letters,
    builtin_formula,
    builtin_ldba,
    ltl_automaton,
    make_ldba,
    match_builtin,
    parse_hoa,
    serialize_hoa,
    validate_ldba,
)
from lrsynth.ltl import LassoWord, eval_lasso, parse_ltl

PARAMS = {"true": (), "GF": ("p",), "FG": ("p",), "F": ("p",), "G": ("p",), "U": ("p", "q"), "GF->GF": ("p", "q")}

FG_HOA = """HOA: v1
States: 2
Start: 0
AP: 1 "p"
acc-name: Buchi
Acceptance: 1 Inf(0)
--BODY--
State: 0 "wait"
[t] 0
[0] 1
State: 1 "hold" {0}
[0] 1
[!0] 1
--END--
"""


def lasso(prefix, cycle):
    return LassoWord.of(prefix, cycle)


def test_all_letters_order():
    assert all_letters(("p", "q")) == [frozenset(), {"p"}, {"q"}, {"p", "q"}]


@pytest.mark.parametrize("family", FAMILIES)
def test_builtins_are_valid_and_round_trip(family):
    a = builtin_ldba(family, PARAMS[family])
    assert validate_ldba(a) == []
    again = parse_hoa(serialize_hoa(a))
    assert again == a
    assert validate_ldba(again) == []


def test_gf_is_two_state_deterministic():
    a = builtin_ldba("GF", ["p"])
    assert a.num_states == 2 and a.is_deterministic()
    assert a.part == (D, D)
    assert [a.states[q] for q in a.accepting] == ["seen"]


def test_accepts_lasso_examples():
    assert accepts_lasso(builtin_ldba("GF", ["p"]), lasso([], [{"p"}, set()]))
    assert not accepts_lasso(builtin_ldba("FG", ["p"]), lasso([], [{"p"}, set()]))
    assert accepts_lasso(builtin_ldba("U", ["p", "q"]), lasso([{"p"}, {"q"}], [set()]))
    assert accepts_lasso(builtin_ldba("G", ["p"]), lasso([{"p"}], [{"p", "q"}]))
    assert not accepts_lasso(builtin_ldba("G", ["p"]), lasso([{"p"}, set()], [{"p"}]))
    assert accepts_lasso(builtin_ldba("F", ["p"]), lasso([set(), {"p"}], [set()]))


def test_fg_from_hoa():
    a = parse_hoa(FG_HOA)
    assert a.part == (N, D)
    assert a.accepting <= {q for q in range(a.num_states) if a.part[q] == D}
    assert a.states == ("wait", "hold")
    # the hold state here never rejects, so this automaton accepts F p
    assert accepts_lasso(a, lasso([{"p"}], [set()]))


def test_jump_after_a_long_prefix():
    # the accepting jump is only possible once the prefix is consumed
    a = builtin_ldba("FG", ["p"])
    assert accepts_lasso(a, lasso([set(), {"p"}, set(), set()], [{"p"}]))
    assert not accepts_lasso(a, lasso([{"p"}] * 4, [{"p"}, {"p"}, set()]))


def test_condition_2_violation_in_hoa():
    text = FG_HOA.replace('State: 0 "wait"', 'State: 0 "wait" {0}')
    with pytest.raises(HoaError, match="condition 2 violated"):
        parse_hoa(text)


@pytest.mark.parametrize("change, message", [
    (("Acceptance: 1 Inf(0)", "Acceptance: 2 Inf(0) & Inf(1)"), "unsupported acceptance"),
    (("[!0] 1\n--END--", "--END--"), "non-total"),
    (("[t] 0", "[t] 0 {0}"), "transition-based"),
    (("HOA: v1", "HOA: v2"), "HOA: v1"),
    (("Start: 0", "Start: 0\nStart: 1"), "single initial"),
    (("[0] 1\nState: 1", "[0 & ] 1\nState: 1"), "bad label"),
    (("[0] 1\nState: 1", "[1] 1\nState: 1"), "out of range"),
    (("acc-name: Buchi", "acc-name: co-Buchi"), "acceptance name"),
    (("--BODY--", ""), "missing --BODY--"),
])
def test_hoa_errors(change, message):
    old, new = change
    with pytest.raises(HoaError, match=message):
        parse_hoa(FG_HOA.replace(old, new))


def test_guard_expressions():
    text = """HOA: v1
States: 1
Start: 0
AP: 2 "a" "b"
Acceptance: 1 Inf(0)
--BODY--
State: 0 {0}
[(0 | 1) & !(0 & 1)] 0
[!0 & !1 | 0 & 1] 0
--END--
"""
    a = parse_hoa(text)
    assert all(a.successors(0, l) == {0} for l in all_letters(("a", "b")))


def test_condition_violations():
    letters = all_letters(("p",))
    # a deterministic-part state with two successors on {p}
    edges = {(q, l): {q} for q in (0, 1) for l in letters}
    edges[(1, frozenset({"p"}))] = {0, 1}
    bad = Ldba(("x", "y"), 0, frozenset({1}), ("p",), (D, D),
               {k: frozenset(v) for k, v in edges.items()})
    assert any(v.startswith("condition 1 violated: state 'y', letter ['p']") for v in validate_ldba(bad))

    # a nondeterministic state whose only successor on {} is deterministic
    edges = {(0, frozenset()): frozenset({1}), (0, frozenset({"p"})): frozenset({0}),
             (1, frozenset()): frozenset({1}), (1, frozenset({"p"})): frozenset({1})}
    bad = Ldba(("x", "y"), 0, frozenset({1}), ("p",), (N, D), edges)
    assert any("condition 3 violated: state 'x', letter []" in v for v in validate_ldba(bad))

    with pytest.raises(ValueError, match="condition 2"):
        make_ldba(("x",), 0, [0], ("p",), {(0, l): {0} for l in letters}, part=[N])


def test_builtin_family_errors():
    with pytest.raises(ValueError, match="unknown automaton family"):
        builtin_ldba("GU", ["p"])
    with pytest.raises(ValueError, match="takes 2"):
        builtin_ldba("U", ["p"])
    with pytest.raises(ValueError, match="distinct"):
        builtin_ldba("U", ["p", "p"])


@pytest.mark.parametrize("text, family, params", [
    ("G F p_t", "GF", ("p_t",)),
    ("F (G x)", "FG", ("x",)),
    ("F a", "F", ("a",)),
    ("G b", "G", ("b",)),
    ("a U b", "U", ("a", "b")),
    ("(G F r) -> (G F g)", "GF->GF", ("r", "g")),
    ("true", "true", ()),
])
def test_match_builtin(text, family, params):
    assert match_builtin(parse_ltl(text)) == (family, params)
    assert ltl_automaton(parse_ltl(text)) == builtin_ldba(family, params)


@pytest.mark.parametrize("text", ["G F (p & q)", "X p", "p U p", "(G F a) -> (G F a)", "F G F p"])
def test_unsupported_formulas(text):
    assert match_builtin(parse_ltl(text)) is None
    with pytest.raises(ValueError, match="HOA"):
        ltl_automaton(parse_ltl(text))


@pytest.mark.parametrize("family", FAMILIES)
def test_hoa_copy_agrees_on_lassos(family):
    params = PARAMS[family]
    a = parse_hoa(serialize_hoa(builtin_ldba(family, params)))
    f = builtin_formula(family, params)
    rng = random.Random(FAMILIES.index(family))
    for _ in range(300):
        w = random_lasso(rng, ("p", "q", "z"), max_prefix=6, max_cycle=3)
        assert accepts_lasso(a, w) == eval_lasso(f, w)
