"""Delete relaxation: relaxed planning graphs, h_add, relaxed-plan fact sets, fact landmarks."""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

from .task import PlanningTask, State, mask_facts

INF = math.inf


class RelaxedUnsolvableError(ValueError):
    """Some target fact cannot be reached even when deletes are ignored."""


@dataclass(frozen=True)
class Rpg:
    """Layered relaxed planning graph from a source state.

    ``fact_level[q]`` is the first layer containing ``q`` (``inf`` if never);
    ``action_level[a]`` is the first layer where all of ``pre(a)`` hold.
    """

    fact_level: tuple[float, ...]
    action_level: tuple[float, ...]
    levels: int
    source: State

    def reachable(self, q: int) -> bool:
        return self.fact_level[q] != INF

    def actions_up_to(self, t: int) -> list[int]:
        return [a for a, lvl in enumerate(self.action_level) if lvl <= t]


def build_rpg(t: PlanningTask, s: State) -> Rpg:
    n = t.num_facts
    fact_level = [INF] * n
    action_level = [INF] * len(t.actions)
    waiting = [len(a.pre) for a in t.actions]
    users: list[list[int]] = [[] for _ in range(n)]
    for i, a in enumerate(t.actions):
        for q in a.pre:
            users[q].append(i)

    layer = [q for q in mask_facts(s)]
    for q in layer:
        fact_level[q] = 0
    ready = [i for i, w in enumerate(waiting) if w == 0]
    level = 0
    while True:
        for q in layer:
            for i in users[q]:
                waiting[i] -= 1
                if waiting[i] == 0:
                    ready.append(i)
        nxt = []
        for i in ready:
            action_level[i] = level
            for q in t.actions[i].add:
                if fact_level[q] == INF:
                    fact_level[q] = level + 1
                    nxt.append(q)
        ready = []
        if not nxt:
            break
        layer = nxt
        level += 1
    finite = [lvl for lvl in fact_level if lvl != INF]
    return Rpg(tuple(fact_level), tuple(action_level), int(max(finite, default=0)), s)


def hadd_costs(t: PlanningTask, s: State) -> list[float]:
    """Per-fact h_add costs from ``s`` via a Dijkstra-style fixpoint."""
    n = t.num_facts
    cost = [INF] * n
    waiting = [len(a.pre) for a in t.actions]
    acc = [0.0] * len(t.actions)
    users: list[list[int]] = [[] for _ in range(n)]
    for i, a in enumerate(t.actions):
        for q in a.pre:
            users[q].append(i)
    heap: list[tuple[float, int]] = []
    for q in mask_facts(s):
        cost[q] = 0
        heapq.heappush(heap, (0, q))

    def fire(i: int) -> None:
        c = 1 + acc[i]
        for q in t.actions[i].add:
            if c < cost[q]:
                cost[q] = c
                heapq.heappush(heap, (c, q))

    for i, w in enumerate(waiting):
        if w == 0:
            fire(i)
    done = [False] * n
    while heap:
        c, q = heapq.heappop(heap)
        if done[q] or c > cost[q]:
            continue
        done[q] = True
        for i in users[q]:
            acc[i] += c
            waiting[i] -= 1
            if waiting[i] == 0:
                fire(i)
    return cost


def h_add(t: PlanningTask, s: State, targets) -> float:
    cost = hadd_costs(t, s)
    return sum((cost[q] for q in targets), 0)


def supporter_cost(t: PlanningTask, costs: list[float], a: int) -> float:
    """h_add of applying action ``a``: one plus the cost of its preconditions."""
    return 1 + sum((costs[q] for q in t.actions[a].pre), 0)


def relaxed_plan_facts(t: PlanningTask) -> frozenset[int]:
    """Add effects of one greedy relaxed plan from init, plus the goal facts.

    Each open subgoal is supported by its cheapest achiever under h_add,
    lowest action id on ties.
    """
    costs = hadd_costs(t, t.init_state)
    for g in sorted(t.goal):
        if costs[g] == INF:
            raise RelaxedUnsolvableError(f"goal fact {t.facts[g]} is relaxed-unreachable")
    chosen: set[int] = set()
    supported = set(t.init)
    queue = deque(sorted(t.goal - t.init))
    while queue:
        q = queue.popleft()
        if q in supported:
            continue
        best = min(
            (a for a in t.achievers[q] if supporter_cost(t, costs, a) != INF),
            key=lambda a: (supporter_cost(t, costs, a), a),
        )
        chosen.add(best)
        supported.update(t.actions[best].add)
        queue.extend(p for p in t.actions[best].pre if p not in supported)
    facts = set(t.goal)
    for a in chosen:
        facts.update(t.actions[a].add)
    return frozenset(facts)


@dataclass(frozen=True)
class LandmarkSet:
    landmarks: frozenset[int]

    def __len__(self) -> int:
        return len(self.landmarks)

    def __contains__(self, q: int) -> bool:
        return q in self.landmarks


def extract_landmarks(t: PlanningTask) -> LandmarkSet:
    """Single-fact landmarks by backchaining from the goal.

    A fact shared by the preconditions of every relaxed-reachable achiever of
    a landmark is itself a landmark. Landmarks already true in init are not
    expanded further.
    """
    rpg = build_rpg(t, t.init_state)
    for g in t.goal:
        if not rpg.reachable(g):
            raise RelaxedUnsolvableError(f"goal fact {t.facts[g]} is relaxed-unreachable")
    found = set(t.goal)
    queue = deque(sorted(t.goal))
    while queue:
        lm = queue.popleft()
        if lm in t.init:
            continue
        achievers = [a for a in t.achievers[lm] if rpg.action_level[a] != INF]
        shared = set(t.actions[achievers[0]].pre)
        for a in achievers[1:]:
            shared &= set(t.actions[a].pre)
        for q in sorted(shared - found):
            found.add(q)
            queue.append(q)
    return LandmarkSet(frozenset(found))
