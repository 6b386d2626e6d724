"""Evaluators for the lexicographic search key.

The intent score is a sum of per-fact log probabilities over the facts
first observed since the last improvement of the primary heuristic. A node
with a better ``h_primary`` than anything on its path starts a new segment,
so one unlikely fact early on does not penalise the whole subtree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .relaxation import LandmarkSet
from .sampling import FactProbTable
from .task import PlanningTask, State, mask_facts, to_mask


class IntentMode(enum.Enum):
    OL = "ol"  # likelihood: sum of log P(q|G)
    OP = "op"  # posterior ratio: sum of log P(q|G) - log P(q|not G)


class EvalKey(NamedTuple):
    novelty: int
    h_primary: int
    intent_score: float
    g: int

    def sort_key(self) -> tuple:
        # Higher intent score is better, so it is negated.
        return (self.novelty, self.h_primary, -self.intent_score, self.g)


def goal_count(t: PlanningTask, s: State) -> int:
    return (t.goal_mask & ~s).bit_count()


def landmark_count(lms: LandmarkSet | int, path_achieved: int | Iterable[int]) -> int:
    """Landmarks never true along the path. Accepts bit masks or fact collections."""
    lm_mask = lms if isinstance(lms, int) else to_mask(lms.landmarks)
    achieved = path_achieved if isinstance(path_achieved, int) else to_mask(path_achieved)
    return (lm_mask & ~achieved).bit_count()


def num_r(r_facts: int | Iterable[int], path_achieved: int | Iterable[int]) -> int:
    r_mask = r_facts if isinstance(r_facts, int) else to_mask(r_facts)
    achieved = path_achieved if isinstance(path_achieved, int) else to_mask(path_achieved)
    return (r_mask & achieved).bit_count()


class NoveltyTables:
    """Seen facts and fact pairs, kept separately per partition."""

    def __init__(self, num_facts: int) -> None:
        self._n = num_facts
        self._atoms: dict[tuple, set[int]] = {}
        self._pairs: dict[tuple, set[int]] = {}

    def evaluate(self, partition: tuple, facts: list[int]) -> int:
        """Novelty of a state with true ``facts`` (ascending) in ``partition``; records it."""
        atoms = self._atoms.get(partition)
        if atoms is None:
            atoms = self._atoms[partition] = set()
            pairs = self._pairs[partition] = set()
        else:
            pairs = self._pairs[partition]
        n = self._n
        new_atoms = [f for f in facts if f not in atoms]
        if new_atoms:
            atoms.update(new_atoms)
            result = 1
        else:
            result = 3
        added_pair = False
        for i, p in enumerate(facts):
            base = p * n
            for q in facts[i + 1:]:
                key = base + q
                if key not in pairs:
                    pairs.add(key)
                    added_pair = True
        if result == 3 and added_pair:
            result = 2
        return result

    def size(self) -> int:
        return sum(len(s) for s in self._atoms.values()) + sum(len(s) for s in self._pairs.values())


def novelty(partition_key: tuple, s: State | list[int], tables: NoveltyTables) -> int:
    facts = mask_facts(s) if isinstance(s, int) else sorted(s)
    return tables.evaluate(partition_key, facts)


class Segment:
    """Facts observed on one transition, linked back to the segment start."""

    __slots__ = ("facts", "prev")

    def __init__(self, facts: tuple[int, ...], prev: "Segment | None") -> None:
        self.facts = facts
        self.prev = prev

    def __contains__(self, q: int) -> bool:
        seg: Segment | None = self
        while seg is not None:
            if q in seg.facts:
                return True
            seg = seg.prev
        return False


@dataclass(frozen=True)
class IntentAccumulator:
    score: float
    baseline_h: int
    segment: Segment
    restarted: bool = True

    @classmethod
    def root(cls, h: int, init_facts: Iterable[int] = ()) -> "IntentAccumulator":
        return cls(0.0, h, Segment(tuple(init_facts), None), True)

    def segment_facts(self) -> set[int]:
        out: set[int] = set()
        seg: Segment | None = self.segment
        while seg is not None:
            out.update(seg.facts)
            seg = seg.prev
        return out


def fact_term(table: FactProbTable, q: int, mode: IntentMode) -> float:
    if mode is IntentMode.OL:
        return table.log_p_goal[q]
    return table.log_p_goal[q] - table.log_p_nongoal[q]


def intent_update(
    parent_acc: IntentAccumulator,
    new_h: int,
    newly_true: Iterable[int],
    table: FactProbTable,
    mode: IntentMode,
    exact_segments: bool = True,
) -> IntentAccumulator:
    """Accumulator for a child reached by a transition that made ``newly_true`` hold.

    On an improvement of ``h_primary`` the score restarts at 0 and the new
    segment is seeded with this transition's facts, which are then scored.
    With ``exact_segments=False`` facts are scored without checking whether
    the segment already observed them.
    """
    newly_true = tuple(dict.fromkeys(newly_true))
    if new_h < parent_acc.baseline_h:
        score = 0.0
        for q in newly_true:
            score += fact_term(table, q, mode)
        return IntentAccumulator(score, new_h, Segment(newly_true, None), True)
    score = parent_acc.score
    seg = parent_acc.segment
    fresh = []
    for q in newly_true:
        if exact_segments and q in seg:
            continue
        fresh.append(q)
        score += fact_term(table, q, mode)
    return IntentAccumulator(score, parent_acc.baseline_h, Segment(tuple(fresh), seg), False)
