import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from instances import Run, multichain, random_mdp, unichain
from lrsynth.automata import builtin_ldba
from lrsynth.lp import LongRunSpec, SteadyState
from lrsynth.mdp import Mdp
from lrsynth.policy import RECURRENT, Policy
from lrsynth.verify import (
    ChainError,
    analyze_chain,
    check_spec,
    induced_chain,
    memoryless_policy,
    simulate,
)

HALF = F(1, 2)
MULTI_SPEC = LongRunSpec(sss=(SteadyState("p_s", HALF, HALF), SteadyState("p_t", HALF, HALF)))
UNI_SPEC = LongRunSpec(theta=F(1), sss=(SteadyState("p_s", F(1), F(1)),), ltl="G F p_t")


def self_loop():
    return Mdp.build(["s"], "s", [("loop", "s", {"s": 1}, [F(7, 2)])], {"s": ["p"]})


def test_multichain_chain_structure():
    run = Run(multichain(), None, MULTI_SPEC, delta=F(1, 100))
    chain = induced_chain(run.product, run.policy)
    an = analyze_chain(chain)
    pm = run.product.mdp
    named = sorted(
        [(pm.states[s], mem, pm.actions[a].name) for s, mem, a in (chain.locations[i] for i in b)]
        for b in an.bsccs
    )
    assert named == [[("(s,q0)", RECURRENT, "a@q0->q0")], [("(t,q0)", RECURRENT, "c@q0->q0")]]
    assert an.reach == [HALF, HALF]
    assert an.frequency("p_s") == an.frequency("p_t") == HALF


def test_self_loop_chain():
    m = self_loop()
    chain = induced_chain(m, memoryless_policy(m, {0: {0: F(1)}}))
    assert len(chain) == 1 and chain.transitions == [{0: F(1)}] and chain.initial == {0: F(1)}
    an = analyze_chain(chain)
    assert an.frequency("p") == 1 and an.lra == (F(7, 2),)
    assert check_spec(an, LongRunSpec()).passed and check_spec(an, LongRunSpec()).entries == []


def test_unichain_chain_small_epsilon():
    # delta = 3/200 gives epsilon = 1/400 on this product
    run = Run(unichain(), builtin_ldba("GF", ["p_t"]), UNI_SPEC, delta=F(3, 200))
    assert run.policy.epsilon == F(1, 400)
    chain = induced_chain(run.product, run.policy)
    an = analyze_chain(chain)
    assert len(an.bsccs) == 1 and any(chain.accepting[i] for i in an.bsccs[0])
    assert an.ltl_probability == 1
    assert an.frequency("p_s") >= F(99, 100)


def test_check_spec_margins():
    run = Run(multichain(), None, MULTI_SPEC, delta=F(1, 100))
    report = check_spec(run.analysis, MULTI_SPEC, F(0))
    assert report.passed and [e.margin for e in report.entries] == [0, 0]
    strict = LongRunSpec(sss=(SteadyState("p_s", F(3, 5), F(1)),))
    report = check_spec(run.analysis, strict, F(0))
    assert not report.passed and report.entry("sss", "p_s").margin == F(-1, 10)
    assert check_spec(run.analysis, strict, F(1, 10)).passed


def test_check_spec_rewards_and_ltl():
    m = self_loop()
    an = analyze_chain(induced_chain(m, memoryless_policy(m, {0: {0: F(1)}})))
    report = check_spec(an, LongRunSpec(reward_thresholds=(F(4),)), F(1, 2))
    assert report.passed and report.entry("reward", "dim0").margin == 0
    assert not check_spec(an, LongRunSpec(reward_thresholds=(F(4),)), F(1, 4)).passed
    # a plain MDP has no accepting locations, so a positive threshold fails
    report = check_spec(an, LongRunSpec(theta=F(1, 2)))
    assert report.entry("ltl", "ltl").margin == F(-1, 2)
    assert report.to_dict()["checks"][0] == {
        "kind": "ltl", "name": "ltl", "value": "0", "lower": "1/2", "upper": None, "margin": "-1/2", "passed": False}


def test_ltl_threshold_is_not_relaxed():
    run = Run(multichain(), builtin_ldba("GF", ["p_t"]), LongRunSpec(theta=HALF, sss=(SteadyState("p_s", HALF, 1),)),
              delta=F(1, 10))
    assert run.analysis.ltl_probability == HALF
    report = check_spec(run.analysis, LongRunSpec(theta=F(3, 5)), F(1, 2))
    assert not report.passed and report.entry("ltl", "ltl").margin == F(-1, 10)


def test_periodic_bscc():
    m = Mdp.build(["u", "v"], "u", [("go", "u", {"v": 1}, [1]), ("back", "v", {"u": 1}, [0])], {"u": ["p"]})
    an = analyze_chain(induced_chain(m, memoryless_policy(m, {0: {0: F(1)}, 1: {1: F(1)}})))
    assert an.frequency("p") == HALF and an.lra == (HALF,)


def test_missing_policy_entries():
    m = multichain()
    with pytest.raises(ChainError, match="no next move"):
        induced_chain(m, memoryless_policy(m, {0: {1: F(1)}}))
    pol = Policy((0,), {0: F(1)}, {(0, 0): {1: F(1)}, (1, 0): {2: F(1)}}, {})
    with pytest.raises(ChainError, match="no memory update"):
        induced_chain(m, pol)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_chain_analysis_invariants(seed):
    rng = random.Random(seed)
    m = random_mdp(rng, max_states=5, max_actions=3, reward_dim=1)
    choice = {}
    for s in range(m.num_states):
        acts = [a for a in m.enabled[s] if rng.random() < 0.7] or [m.enabled[s][0]]
        w = [rng.randint(1, 3) for _ in acts]
        choice[s] = {a: F(k, sum(w)) for a, k in zip(acts, w)}
    chain = induced_chain(m, memoryless_policy(m, choice))
    assert all(sum(row.values()) == 1 for row in chain.transitions)
    an = analyze_chain(chain)
    assert sum(an.reach) == 1
    for b, pi in zip(an.bsccs, an.stationary):
        assert sum(pi.values()) == 1
        for j in b:
            assert sum((pi[i] * chain.transitions[i].get(j, 0) for i in b), F(0)) == pi[j]
    assert sum(an.action_frequency.values()) == 1
    # frequencies form a stationary flow on the MDP
    for s in range(m.num_states):
        out = sum((an.action_frequency.get(a, 0) for a in m.enabled[s]), F(0))
        inflow = sum((v * m.actions[a].dist.get(s, 0) for a, v in an.action_frequency.items()), F(0))
        assert out == inflow


def test_simulate_self_loop():
    m = self_loop()
    sim = simulate(m, memoryless_policy(m, {0: {0: F(1)}}), 500, seed=1)
    assert sim.action_frequency == {0: 1.0} and sim.ap_frequency == {"p": 1.0}


def test_simulate_commits_to_one_component():
    run = Run(multichain(), None, MULTI_SPEC, delta=F(1, 100))
    pm = run.product.mdp
    outcomes = set()
    for seed in range(20):
        sim = simulate(run.product, run.policy, 2000, seed)
        top = max(sim.action_frequency, key=sim.action_frequency.get)
        assert sim.action_frequency[top] >= 0.999
        outcomes.add(pm.actions[top].name)
    assert outcomes == {"a@q0->q0", "c@q0->q0"}


def test_simulate_is_deterministic_and_close():
    run = Run(unichain(), builtin_ldba("GF", ["p_t"]), UNI_SPEC, delta=F(1, 100))
    one = simulate(run.product, run.policy, 100_000, seed=7)
    assert one == simulate(run.product, run.policy, 100_000, seed=7)
    exact = float(run.analysis.frequency("p_s"))
    assert abs(one.ap_frequency["p_s"] - exact) <= 5 * one.ap_se["p_s"]
    with pytest.raises(ValueError):
        simulate(run.product, run.policy, 0, seed=7)
