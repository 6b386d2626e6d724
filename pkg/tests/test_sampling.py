import math
import random

import pytest

from intent_search.randtasks import random_task
from intent_search.relaxation import INF, RelaxedUnsolvableError, build_rpg, h_add
from intent_search.sampling import (
    SupporterSample,
    Weighting,
    action_probabilities,
    build_goal_table,
    build_nongoal_table,
    default_epsilon,
    fact_probabilities,
    replay_reaches,
    sample_supporters,
    sample_weights,
)
from intent_search.task import PlanningTask

from conftest import act, fact


def test_chain3_samples_are_the_unique_relaxed_plan(chain3):
    rpg = build_rpg(chain3, chain3.init_state)
    for seed in (0, 1, 99):
        for s in sample_supporters(chain3, rpg, chain3.goal, 10, seed):
            assert s.supporters == frozenset({0, 1, 2})
            assert s.choice_log_weight == 0


def test_targets_in_init_give_empty_samples(chain3):
    rpg = build_rpg(chain3, chain3.init_state)
    samples = sample_supporters(chain3, rpg, chain3.init, 5, 0)
    assert all(s.supporters == frozenset() and s.choice_log_weight == 0 for s in samples)


def test_unreachable_target_raises():
    t = PlanningTask.from_strips(["a", "b"], [], ["a"], ["b"])
    with pytest.raises(RelaxedUnsolvableError):
        sample_supporters(t, build_rpg(t, t.init_state), t.goal, 1, 0)


def test_min_count_balances_equal_achievers(two_achiever):
    rpg = build_rpg(two_achiever, two_achiever.init_state)
    samples = sample_supporters(two_achiever, rpg, two_achiever.goal, 100, 3)
    b1 = sum(act(two_achiever, "b1") in s.supporters for s in samples)
    b2 = sum(act(two_achiever, "b2") in s.supporters for s in samples)
    assert b1 > 0 and b2 > 0 and abs(b1 - b2) <= 1


def test_single_certain_supporter_gives_one(chain3):
    table = build_goal_table(chain3, 100, 0)
    assert table.p_goal[fact(chain3, "gl")] == 1.0


def test_complement_product_two_achievers(two_achiever):
    table = build_goal_table(two_achiever, 100, 0, Weighting.UNIFORM)
    # Each achiever is used in exactly half the samples: 1 - 0.5 * 0.5.
    assert table.p_goal[fact(two_achiever, "q")] == 0.75
    assert table.p_goal[fact(two_achiever, "g")] == 1.0
    assert table.p_goal[fact(two_achiever, "s")] == 1.0


def test_unsampled_fact_gets_floor():
    t = PlanningTask.from_strips(
        ["g", "s", "z"], [("win", ["s"], ["g"], []), ("side", ["s"], ["z"], [])], ["s"], ["g"])
    table = build_goal_table(t, 100, 0)
    assert table.p_goal[fact(t, "z")] == default_epsilon(100) == 1e-3


def test_chain3_nongoal_table(chain3):
    table = build_nongoal_table(chain3, 100, 0)
    assert table.p_nongoal[fact(chain3, "p1")] == 1.0
    assert table.p_nongoal[fact(chain3, "p2")] == 1.0
    assert table.p_nongoal[fact(chain3, "gl")] == default_epsilon(100)


def test_nongoal_with_only_goal_facts():
    t = PlanningTask.from_strips(["g", "s"], [("win", ["s"], ["g"], [])], ["s"], ["g", "s"])
    table = build_nongoal_table(t, 10, 0)
    assert table.p_nongoal[fact(t, "s")] == 1.0
    assert table.p_nongoal[fact(t, "g")] == default_epsilon(10)


def test_nongoal_fact_behind_goal_achiever():
    # z is only reachable through g, so g's achiever is needed for non-goal targets too.
    t = PlanningTask.from_strips(
        ["g", "m", "s", "y", "z"],
        [("mk", ["s"], ["m"], []), ("win", ["m"], ["g"], []), ("beyond", ["g"], ["z"], []),
         ("side", ["s"], ["y"], [])],
        ["s"], ["g"])
    rpg = build_rpg(t, t.init_state)
    targets = [q for q in range(t.num_facts) if q not in t.goal]
    for s in sample_supporters(t, rpg, targets, 10, 0):
        assert act(t, "win") in s.supporters


def test_identical_seeds_identical_tables(two_achiever):
    for w in Weighting:
        a = build_goal_table(two_achiever, 50, 7, w)
        b = build_goal_table(two_achiever, 50, 7, w)
        assert a == b


def test_uniform_action_probability_is_count_ratio():
    samples = [SupporterSample(frozenset({0, 1}), 0.0), SupporterSample(frozenset({1}), 0.0),
               SupporterSample(frozenset(), 0.0)]
    assert action_probabilities(3, samples, Weighting.UNIFORM) == [1 / 3, 2 / 3, 0.0]


def test_utp_weights_softmax():
    samples = [SupporterSample(frozenset(), -math.log(2)), SupporterSample(frozenset(), 0.0)]
    w = sample_weights(samples, Weighting.UTP)
    assert w == pytest.approx([1 / 3, 2 / 3], abs=1e-15)


def test_fact_probability_formula(two_achiever):
    p = fact_probabilities(two_achiever, [0.5, 0.5, 1.0], 1e-3)
    assert p == [1.0, 0.75, 1.0]


def _relaxed_solvable_tasks(seed, count):
    rng = random.Random(seed)
    while count:
        t = random_task(rng, rng.randint(4, 12), rng.randint(3, 9))
        if h_add(t, t.init_state, t.goal) != INF:
            count -= 1
            yield t


def test_random_tasks_samples_replay_and_tables_bounded():
    for i, t in enumerate(_relaxed_solvable_tasks(2, 60)):
        rpg = build_rpg(t, t.init_state)
        samples = sample_supporters(t, rpg, t.goal, 20, i)
        for s in samples:
            assert replay_reaches(t, s.supporters, t.goal)
            assert s.choice_log_weight <= 0
        w = sample_weights(samples, Weighting.UTP)
        assert abs(math.fsum(w) - 1.0) <= 1e-12
        for weighting in Weighting:
            table = build_goal_table(t, 20, i, weighting)
            assert all(table.epsilon <= p <= 1.0 for p in table.p_goal)
            assert all(math.log(p) == lp for p, lp in zip(table.p_goal, table.log_p_goal))
