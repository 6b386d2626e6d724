"""Seeded random tiny STRIPS tasks whose maximal trajectories can be enumerated."""

from __future__ import annotations

import random

from .irpl import CapExceededError, TrajectoryLibrary, enumerate_maximal
from .task import PlanningTask

MAX_FACTS = 12
MAX_TRAJECTORIES = 2_000


def random_task(rng: random.Random, n_facts: int, n_actions: int) -> PlanningTask:
    facts = [f"f{i:02d}" for i in range(n_facts)]
    actions = []
    for i in range(n_actions):
        pre = rng.sample(facts, rng.randint(1, 2))
        add = rng.sample([f for f in facts if f not in pre], rng.randint(1, 2))
        dele = [f for f in pre if rng.random() < 0.7]
        actions.append((f"a{i:02d}", pre, add, dele))
    init = rng.sample(facts, rng.randint(1, 3))
    goal = rng.sample(facts, rng.randint(1, 2))
    return PlanningTask.from_strips(facts, actions, init, goal)


def random_library(
    seed: int,
    max_facts: int = MAX_FACTS,
    max_trajectories: int = MAX_TRAJECTORIES,
    max_plan_length: int | None = None,
    min_trajectories: int = 3,
    attempts: int = 10_000,
) -> tuple[PlanningTask, TrajectoryLibrary]:
    """First random task, by rejection, whose library is small but not trivial and has a plan."""
    rng = random.Random(seed)
    for _ in range(attempts):
        t = random_task(rng, rng.randint(4, max_facts), rng.randint(3, 9))
        try:
            lib = enumerate_maximal(t, cap=max_trajectories)
        except CapExceededError:
            continue
        plans = lib.plans
        if not plans or len(lib) < min_trajectories:
            continue
        if max_plan_length is not None and max(len(p.actions) for p in plans) > max_plan_length:
            continue
        return t, lib
    raise RuntimeError(f"no suitable task found for seed {seed}")
