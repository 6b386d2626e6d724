import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intent_search import irpl
from intent_search.cli import main
from intent_search.irpl import (
    CapExceededError,
    NoPlanError,
    Ordering,
    TrajectoryLibrary,
    WeightScheme,
    check_properties,
    embeds,
    enumerate_maximal,
    oracle_search,
    probs,
    weigh,
)
from intent_search.randtasks import random_library
from intent_search.task import PlanningTask


def fork_task() -> PlanningTask:
    return PlanningTask.from_strips(
        ["d", "g", "m", "s0"],
        [("a", ["s0"], ["m"], ["s0"]), ("a2", ["m"], ["g"], ["m"]), ("b", ["s0"], ["d"], ["s0"])],
        ["s0"], ["g"])


def branching_task() -> PlanningTask:
    """Two choices at init, three after the first step; exactly one plan."""
    return PlanningTask.from_strips(
        ["d1", "d2", "d3", "g", "s0", "s1"],
        [("x", ["s0"], ["s1"], ["s0"]), ("y", ["s0"], ["d1"], ["s0"]),
         ("z", ["s1"], ["g"], ["s1"]), ("w1", ["s1"], ["d2"], ["s1"]), ("w2", ["s1"], ["d3"], ["s1"])],
        ["s0"], ["g"])


def abc_library() -> TrajectoryLibrary:
    return TrajectoryLibrary.from_sequences([("ab", True), ("ac", False), ("d", False)])


def test_chain3_single_plan(chain3):
    lib = enumerate_maximal(chain3)
    assert [(tr.actions, tr.is_plan) for tr in lib.trajectories] == [((0, 1, 2), True)]


def test_fork_two_trajectories():
    lib = enumerate_maximal(fork_task())
    assert len(lib) == 2 and len(lib.plans) == 1


def test_goal_in_init_gives_empty_plan():
    t = PlanningTask.from_strips(["x", "y"], [("go", ["x"], ["y"], [])], ["x"], ["x"])
    lib = enumerate_maximal(t)
    assert [(tr.actions, tr.is_plan) for tr in lib.trajectories] == [((), True)]


def test_cycle_terminates_branch():
    t = PlanningTask.from_strips(
        ["a", "b", "g"],
        [("ab", ["a"], ["b"], ["a"]), ("ba", ["b"], ["a"], ["b"])],
        ["a"], ["g"])
    lib = enumerate_maximal(t)
    assert [(tr.actions, tr.is_plan) for tr in lib.trajectories] == [((0,), False)]


def test_cap_exceeded():
    _, lib = random_library(3)
    with pytest.raises(CapExceededError):
        enumerate_maximal(lib.task, cap=len(lib) - 1)


def test_library_rejects_prefix_and_bad_weight():
    with pytest.raises(ValueError):
        TrajectoryLibrary.from_sequences([("a", False), ("ab", True)])
    with pytest.raises(ValueError):
        TrajectoryLibrary.from_sequences([("a", True, 0)])


def test_weigh_schemes():
    lib = enumerate_maximal(branching_task())
    assert all(tr.weight == 1 for tr in weigh(lib, WeightScheme.UMP).trajectories)
    utp = {tr.actions: tr.weight for tr in weigh(lib, WeightScheme.UTP).trajectories}
    assert utp[(0, 2)] == Fraction(1, 6)
    ranked = TrajectoryLibrary.from_sequences([("ab", True), ("cde", True)])
    w = [tr.weight for tr in weigh(ranked, WeightScheme.COST_RANKED).trajectories]
    assert w == [Fraction(1, 4), Fraction(1, 8)]


def test_probs_example():
    p = probs(abc_library(), "a")
    assert (p.p_g, p.p_o, p.p_o_given_g, p.p_g_given_o) == (
        Fraction(1, 3), Fraction(2, 3), Fraction(1), Fraction(1, 2))
    assert (p.n_t, p.n_g, p.n_c, p.n_cg) == (3, 1, 2, 1)


def test_probs_empty_prefix():
    p = probs(abc_library(), "")
    assert p.p_o == 1 and p.p_o_given_g == 1 and p.p_g_given_o == p.p_g


def test_probs_outside_library():
    p = probs(abc_library(), "z")
    assert p.p_o == 0 and p.p_o_given_g == 0 and p.p_g_given_o == 0


def test_fork_posterior_search_bound():
    tr = oracle_search(enumerate_maximal(fork_task()), Ordering.MAX_POSTERIOR_TIES_LONG)
    assert tr.plan == (0, 1)
    assert tr.expansions <= 2


def test_likelihood_search_finds_cheapest_under_cost_ranking():
    lib = TrajectoryLibrary.from_sequences([("abcd", True), ("xy", True), ("xz", False)])
    tr = oracle_search(weigh(lib, WeightScheme.COST_RANKED), Ordering.MAX_LIKELIHOOD)
    assert len(tr.plan) == 2


def test_single_plan_expansion_bound():
    lib = TrajectoryLibrary.from_sequences([("abc", True), ("ax", False), ("y", False)])
    tr = oracle_search(lib, Ordering.MAX_LIKELIHOOD)
    assert tr.expansions <= (3 - 1) + 1


def test_no_plan_error():
    with pytest.raises(NoPlanError):
        oracle_search(TrajectoryLibrary.from_sequences([("a", False)]), Ordering.MAX_LIKELIHOOD)


def test_utp_generation_bound_hand_case():
    lib = weigh(enumerate_maximal(branching_task()), WeightScheme.UTP)
    tr = oracle_search(lib, Ordering.MAX_LIKELIHOOD)
    assert tr.generations == 5
    assert tr.generations >= math.e * math.log(6)
    rep = check_properties(enumerate_maximal(branching_task()))
    assert rep.checks["utp_generation_lower_bound"].ok


def test_no_plan_prefix_zero():
    lib = abc_library()
    for o in ("ac", "d"):
        p = probs(lib, o)
        assert p.p_o_given_g == 0 and p.p_g_given_o == 0
    rep = check_properties(lib)
    assert rep.ok
    assert rep.checks["no_plan_zero"].checked == 2


def test_count_ratios_on_ump_library():
    rep = check_properties(weigh(enumerate_maximal(branching_task()), WeightScheme.UMP))
    assert rep.checks["count_ratios"].ok and rep.checks["count_ratios"].checked > 0


@pytest.mark.parametrize(("seq", "obs", "expected"), [
    ("abc", "ac", True), ("abc", "ca", False), ("abc", "", True), ("", "a", False), ("aab", "ab", True),
])
def test_embeds(seq, obs, expected):
    assert embeds(seq, obs) is expected


def _swapped_posterior(plan_weight_o, weight_o):
    return Fraction(weight_o, plan_weight_o) if plan_weight_o else Fraction(0)


def test_swapped_posterior_is_caught(monkeypatch):
    monkeypatch.setattr(irpl, "posterior", _swapped_posterior)
    rep = check_properties(abc_library())
    assert not rep.checks["count_ratios"].ok


def test_swapped_posterior_fails_verify_command(monkeypatch, capsys):
    monkeypatch.setattr(irpl, "posterior", _swapped_posterior)
    assert main(["verify", "irpl", "--trials", "3", "--seed", "7"]) == 1
    out = capsys.readouterr().out
    assert "count_ratios" in out and "task seed" in out


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_random_libraries_satisfy_all_properties(seed):
    _, lib = random_library(seed, max_trajectories=300)
    rep = check_properties(lib, seed=seed)
    assert rep.ok, rep.failures()
    assert set(rep.checks) == set(irpl.PROPERTY_NAMES)
