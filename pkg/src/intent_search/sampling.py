"""Fact observation probabilities from sampled delete-relaxed supporter sets.

Supporter sets are drawn by a layered backward sweep over the relaxed
planning graph. Every open fact is supported by one of its cheapest (h_add)
achievers available at the current layer, chosen uniformly among the
least-used candidates so far. Per-action inclusion frequencies give each
fact's probability of being achieved: one minus the chance that none of its
achievers is used.
"""

from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass
from typing import Iterable

from .relaxation import INF, RelaxedUnsolvableError, Rpg, build_rpg, hadd_costs, supporter_cost
from .task import PlanningTask, mask_facts

DEFAULT_SAMPLES = 100


class Weighting(enum.Enum):
    UNIFORM = "uniform"
    UTP = "utp"


@dataclass(frozen=True)
class SupporterSample:
    supporters: frozenset[int]
    # Sum over random choices of -ln(number of candidates at that choice).
    choice_log_weight: float


def default_epsilon(n: int) -> float:
    return 1.0 / (10 * max(n, 1))


def sample_supporters(
    t: PlanningTask, rpg: Rpg, targets: Iterable[int], n: int, rng_seed: int
) -> list[SupporterSample]:
    source = set(mask_facts(rpg.source))
    targets = sorted(set(targets))
    for q in targets:
        if not rpg.reachable(q):
            raise RelaxedUnsolvableError(f"target {t.facts[q]} is relaxed-unreachable")
    costs = hadd_costs(t, rpg.source)
    # Achievers per fact, each with its first layer and h_add supporter cost.
    ranked: dict[int, list[tuple[float, float, int]]] = {}

    def candidates(p: int, layer: int) -> list[int]:
        if p not in ranked:
            ranked[p] = sorted(
                (rpg.action_level[a], supporter_cost(t, costs, a), a)
                for a in t.achievers[p]
                if rpg.action_level[a] != INF
            )
        avail = [(c, a) for lvl, c, a in ranked[p] if lvl <= layer]
        if not avail:  # defensive: the layered sweep should always leave one
            avail = [(c, a) for _, c, a in ranked[p]]
        best = min(c for c, _ in avail)
        return [a for c, a in avail if c == best]

    rng = random.Random(rng_seed)
    count = [0] * len(t.actions)
    samples = []
    for _ in range(n):
        open_facts = set(q for q in targets if q not in source)
        found: set[int] = set()
        sups: set[int] = set()
        log_w = 0.0
        for layer in range(rpg.levels, -1, -1):
            new_open: set[int] = set()
            while open_facts:
                p = min(open_facts)
                open_facts.remove(p)
                psups = candidates(p, layer)
                least = min(count[a] for a in psups)
                psups = [a for a in psups if count[a] == least]
                if len(psups) > 1:
                    a = psups[rng.randrange(len(psups))]
                    log_w -= math.log(len(psups))
                else:
                    a = psups[0]
                found.add(p)
                sups.add(a)
                count[a] += 1
                for q in t.actions[a].pre:
                    if q not in source and q not in found and q not in open_facts:
                        new_open.add(q)
                for r in t.actions[a].add:
                    open_facts.discard(r)
                    new_open.discard(r)
            open_facts |= new_open
        samples.append(SupporterSample(frozenset(sups), log_w))
    return samples


def replay_reaches(t: PlanningTask, supporters: Iterable[int], targets: Iterable[int]) -> bool:
    """Whether ``supporters`` achieve ``targets`` from init when deletes are ignored."""
    reached = set(t.init)
    pending = set(supporters)
    progress = True
    while progress:
        progress = False
        for a in sorted(pending):
            if set(t.actions[a].pre) <= reached:
                reached.update(t.actions[a].add)
                pending.discard(a)
                progress = True
    return set(targets) <= reached


def sample_weights(samples: list[SupporterSample], weighting: Weighting) -> list[float]:
    n = len(samples)
    if n == 0:
        return []
    if weighting is Weighting.UNIFORM:
        return [1.0 / n] * n
    top = max(s.choice_log_weight for s in samples)
    raw = [math.exp(s.choice_log_weight - top) for s in samples]
    total = math.fsum(raw)
    return [r / total for r in raw]


def action_probabilities(
    n_actions: int, samples: list[SupporterSample], weighting: Weighting
) -> list[float]:
    if weighting is Weighting.UNIFORM:
        counts = [0] * n_actions
        for s in samples:
            for a in s.supporters:
                counts[a] += 1
        n = len(samples)
        return [c / n if n else 0.0 for c in counts]
    weights = sample_weights(samples, weighting)
    parts: list[list[float]] = [[] for _ in range(n_actions)]
    for w, s in zip(weights, samples):
        for a in s.supporters:
            parts[a].append(w)
    return [min(1.0, math.fsum(p)) for p in parts]


def fact_probabilities(t: PlanningTask, p_action: list[float], epsilon: float) -> list[float]:
    out = []
    for q in range(t.num_facts):
        if q in t.init:
            out.append(1.0)
            continue
        miss = 1.0
        for a in t.achievers[q]:
            miss *= 1.0 - p_action[a]
        out.append(max(epsilon, 1.0 - miss))
    return out


def _logs(ps: list[float]) -> tuple[float, ...]:
    return tuple(math.log(p) for p in ps)


@dataclass(frozen=True)
class FactProbTable:
    p_goal: tuple[float, ...]
    log_p_goal: tuple[float, ...]
    n_samples: int
    epsilon: float
    p_nongoal: tuple[float, ...] | None = None
    log_p_nongoal: tuple[float, ...] | None = None

    def with_nongoal(self, p_nongoal: list[float]) -> "FactProbTable":
        return FactProbTable(self.p_goal, self.log_p_goal, self.n_samples, self.epsilon,
                             tuple(p_nongoal), _logs(p_nongoal))

    def to_json(self, t: PlanningTask) -> str:
        doc = {"goal": {t.facts[q]: p for q, p in enumerate(self.p_goal)}}
        if self.p_nongoal is not None:
            doc["nongoal"] = {t.facts[q]: p for q, p in enumerate(self.p_nongoal)}
        return json.dumps(doc, sort_keys=True)


def _table_probs(t: PlanningTask, targets, n: int, seed: int, weighting: Weighting, epsilon: float):
    rpg = build_rpg(t, t.init_state)
    samples = sample_supporters(t, rpg, targets, n, seed)
    return fact_probabilities(t, action_probabilities(len(t.actions), samples, weighting), epsilon)


def build_goal_table(t: PlanningTask, n: int = DEFAULT_SAMPLES, seed: int = 0,
                     weighting: Weighting = Weighting.UNIFORM,
                     epsilon: float | None = None) -> FactProbTable:
    """Estimate P(q achieved | goal) for every fact from ``n`` sampled relaxed plans."""
    eps = default_epsilon(n) if epsilon is None else epsilon
    probs = _table_probs(t, t.goal, n, seed, weighting, eps)
    return FactProbTable(tuple(probs), _logs(probs), n, eps)


def nongoal_probabilities(t: PlanningTask, n: int = DEFAULT_SAMPLES, seed: int = 0,
                          epsilon: float | None = None) -> list[float]:
    """Same estimate, but for relaxed sequences achieving every reachable non-goal fact."""
    eps = default_epsilon(n) if epsilon is None else epsilon
    rpg = build_rpg(t, t.init_state)
    targets = [q for q in range(t.num_facts) if rpg.reachable(q) and q not in t.goal]
    samples = sample_supporters(t, rpg, targets, n, seed)
    return fact_probabilities(t, action_probabilities(len(t.actions), samples, Weighting.UNIFORM), eps)


def build_nongoal_table(t: PlanningTask, n: int = DEFAULT_SAMPLES, seed: int = 0,
                        goal_table: FactProbTable | None = None) -> FactProbTable:
    """Attach non-goal probabilities to ``goal_table`` (built here if not given)."""
    if goal_table is None:
        goal_table = build_goal_table(t, n, seed)
    return goal_table.with_nongoal(nongoal_probabilities(t, n, seed, goal_table.epsilon))
