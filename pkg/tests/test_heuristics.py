import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intent_search.heuristics import (
    EvalKey,
    IntentAccumulator,
    IntentMode,
    NoveltyTables,
    goal_count,
    intent_update,
    landmark_count,
    novelty,
    num_r,
)
from intent_search.relaxation import LandmarkSet, extract_landmarks, relaxed_plan_facts
from intent_search.sampling import FactProbTable
from intent_search.task import PlanningTask, to_mask

from conftest import fact


def table(p_goal, p_nongoal=None):
    t = FactProbTable(tuple(p_goal), tuple(math.log(p) for p in p_goal), 100, 1e-3)
    return t.with_nongoal(p_nongoal) if p_nongoal is not None else t


def test_goal_count(chain3):
    assert goal_count(chain3, chain3.init_state) == 1
    assert goal_count(chain3, chain3.goal_mask) == 0
    empty = PlanningTask.from_strips(["x"], [], [], [])
    assert goal_count(empty, 0) == 0 == goal_count(empty, 1)


def test_landmark_count(chain3):
    lms = extract_landmarks(chain3)
    assert landmark_count(lms, {fact(chain3, "p0")}) == 3
    assert landmark_count(lms, set(range(4))) == 0
    assert landmark_count(LandmarkSet(frozenset()), {0}) == 0


def test_num_r(chain3):
    r = relaxed_plan_facts(chain3)
    assert num_r(r, chain3.init) == 0
    assert num_r(r, set(range(4))) == len(r) == 3
    assert num_r(frozenset(), set(range(4))) == 0


def test_novelty_cases():
    tables = NoveltyTables(4)
    assert novelty((1, 0), to_mask([0, 1]), tables) == 1
    assert novelty((1, 0), to_mask([0, 1]), tables) == 3
    assert novelty((1, 0), to_mask([0, 1, 2]), tables) == 1
    # Known atoms, new pair.
    assert novelty((1, 0), to_mask([0, 2]), tables) == 3
    tables.evaluate((1, 0), [3])
    assert novelty((1, 0), to_mask([1, 3]), tables) == 2
    # Partitions are independent.
    assert novelty((0, 0), to_mask([0, 1]), tables) == 1


def test_eval_key_orders_intent_descending():
    better = EvalKey(1, 2, -0.1, 5)
    worse = EvalKey(1, 2, -0.9, 1)
    assert better.sort_key() < worse.sort_key()
    assert EvalKey(1, 1, -9.0, 9).sort_key() < better.sort_key()


def test_intent_update_ol_log_arithmetic():
    acc = IntentAccumulator(-0.2, 3, IntentAccumulator.root(3).segment, False)
    child = intent_update(acc, 3, [1], table([1.0, 0.5]), IntentMode.OL)
    assert child.score == pytest.approx(-0.2 + math.log(0.5), abs=1e-15)
    assert child.score == pytest.approx(-0.893, abs=5e-4)


def test_intent_update_restart_scores_only_transition_facts():
    tb = table([0.5, 0.25, 0.1])
    acc = intent_update(IntentAccumulator.root(3), 3, [2], tb, IntentMode.OL)
    child = intent_update(acc, 2, [0, 1], tb, IntentMode.OL)
    assert child.restarted and child.baseline_h == 2
    assert child.score == pytest.approx(math.log(0.5) + math.log(0.25))
    assert child.segment_facts() == {0, 1}


def test_intent_update_repeated_fact_unchanged():
    tb = table([0.5, 0.25])
    acc = intent_update(IntentAccumulator.root(3), 3, [0], tb, IntentMode.OL)
    again = intent_update(acc, 3, [0], tb, IntentMode.OL)
    assert again.score == acc.score


def test_init_facts_never_scored():
    tb = table([0.5, 0.25])
    acc = intent_update(IntentAccumulator.root(3, [0]), 3, [0, 1], tb, IntentMode.OL)
    assert acc.score == pytest.approx(math.log(0.25))


def test_op_sign():
    tb = table([0.8, 0.2], p_nongoal=[0.4, 0.6])
    root = IntentAccumulator.root(3)
    assert intent_update(root, 3, [0], tb, IntentMode.OP).score > 0
    assert intent_update(root, 3, [1], tb, IntentMode.OP).score < 0


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.lists(st.integers(0, 7), max_size=3)), max_size=12),
       st.integers(0, 10_000))
def test_accumulator_matches_replayed_segment(steps, seed):
    rng = random.Random(seed)
    p = [rng.uniform(1e-3, 1.0) for _ in range(8)]
    tb = table(p)
    acc = IntentAccumulator.root(5)
    seen: set[int] = set()
    for h, facts in steps:
        prev_score, prev_h = acc.score, acc.baseline_h
        acc = intent_update(acc, h, facts, tb, IntentMode.OL)
        if h < prev_h:
            seen = set(facts)
        else:
            seen |= set(facts)
            # Within a segment the score never rises.
            assert acc.score <= prev_score + 1e-12
        assert acc.baseline_h <= prev_h
        assert acc.segment_facts() == seen
        assert acc.score == pytest.approx(math.fsum(tb.log_p_goal[q] for q in seen), abs=1e-9)
