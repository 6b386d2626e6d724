"""Best-first width search with intention-based tie-breaking.

Nodes are ordered lexicographically by (novelty, h_primary, -intent_score,
g, insertion order). Novelty is partitioned by (h_primary, #r). Every key
is computed once, when its node is generated.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

from .heuristics import (
    EvalKey,
    IntentAccumulator,
    IntentMode,
    NoveltyTables,
    intent_update,
)
from .relaxation import RelaxedUnsolvableError, extract_landmarks, relaxed_plan_facts
from .sampling import DEFAULT_SAMPLES, FactProbTable, Weighting, build_goal_table, build_nongoal_table
from .task import PlanningTask, mask_facts, to_mask

logger = logging.getLogger(__name__)

# Above this many goal facts the landmark variants fall back to goal count.
LANDMARK_GOAL_LIMIT = 100
# Rough per-node footprint used for memory accounting.
NODE_BYTES = 400
PAIR_BYTES = 60
CHECK_EVERY = 128


class Variant(enum.Enum):
    F5 = "F5"
    F5_OL = "F5_OL"
    F5_OP = "F5_OP"
    F5LM_OL = "F5LM_OL"
    F5LM_OL_UTP = "F5LM_OL_UTP"

    @property
    def intent_mode(self) -> IntentMode | None:
        if self is Variant.F5:
            return None
        return IntentMode.OP if self is Variant.F5_OP else IntentMode.OL

    @property
    def uses_landmarks(self) -> bool:
        return self in (Variant.F5LM_OL, Variant.F5LM_OL_UTP)

    @property
    def weighting(self) -> Weighting:
        return Weighting.UTP if self is Variant.F5LM_OL_UTP else Weighting.UNIFORM


@dataclass
class SearchConfig:
    variant: Variant = Variant.F5
    trim_capacity: int | None = None
    n_samples: int = DEFAULT_SAMPLES
    seed: int = 0
    max_time: float | None = None
    max_memory: int | None = None
    exact_segments: bool = True

    def __post_init__(self) -> None:
        if isinstance(self.variant, str):
            self.variant = Variant(self.variant)
        if self.trim_capacity is not None and self.trim_capacity < 1:
            raise ValueError("trim_capacity must be at least 1")


class Status(enum.Enum):
    SOLVED = "solved"
    EXHAUSTED = "exhausted"
    RESOURCE_LIMIT = "resource_limit"


@dataclass
class SearchStats:
    expansions: int = 0
    generations: int = 0
    evaluations: int = 0
    peak_open: int = 0
    evicted: int = 0
    prep_time: float = 0.0
    search_time: float = 0.0
    memory_estimate: int = 0


@dataclass
class SearchResult:
    status: Status
    plan: list[int] | None
    stats: SearchStats
    incomplete: bool = False
    limit: str | None = None

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLVED

    def to_json(self, **extra) -> str:
        doc = {
            "status": self.status.value,
            "plan_cost": len(self.plan) if self.plan is not None else None,
            "incomplete": self.incomplete,
            "limit": self.limit,
            **asdict(self.stats),
            **extra,
        }
        return json.dumps(doc, sort_keys=True)


class OpenList:
    """Min-priority queue over tuple keys, with optional eviction of the worst entries.

    A mirrored max-heap with lazy deletion finds the worst entries for
    trimming. Keys must be tuples of numbers that are unique among live
    entries, so an insertion counter should be their last component.
    """

    def __init__(self, track_worst: bool = False) -> None:
        self._heap: list[tuple] = []
        self._worst: list[tuple] | None = [] if track_worst else None
        self._alive: set[tuple] | None = set() if track_worst else None
        self._len = 0

    def __len__(self) -> int:
        return self._len

    def push(self, key: tuple, item) -> None:
        heapq.heappush(self._heap, (key, item))
        if self._worst is not None:
            heapq.heappush(self._worst, (tuple(-k for k in key), item))
            self._alive.add(key)
        self._len += 1

    def pop(self):
        while True:
            key, item = heapq.heappop(self._heap)
            if self._alive is None:
                break
            if key in self._alive:
                self._alive.discard(key)
                break
        self._len -= 1
        if self._len == 0 and self._worst is not None:
            self._heap.clear()
            self._worst.clear()
        return key, item

    def peek_key(self) -> tuple:
        if self._alive is not None:
            while self._heap[0][0] not in self._alive:
                heapq.heappop(self._heap)
        return self._heap[0][0]

    def keys(self) -> list[tuple]:
        if self._alive is not None:
            return sorted(self._alive)
        return sorted(k for k, _ in self._heap)

    def trim(self, capacity: int) -> int:
        """Evict worst-ranked entries until at most ``capacity`` remain."""
        if self._worst is None:
            raise RuntimeError("open list was created without trimming support")
        evicted = 0
        while self._len > capacity:
            neg, _ = heapq.heappop(self._worst)
            key = tuple(-k for k in neg)
            if key in self._alive:
                self._alive.discard(key)
                self._len -= 1
                evicted += 1
        # Drop dead entries once they dominate the heaps.
        if len(self._heap) > 4 * max(self._len, 16):
            self._heap = [e for e in self._heap if e[0] in self._alive]
            heapq.heapify(self._heap)
            self._worst = [e for e in self._worst if tuple(-k for k in e[0]) in self._alive]
            heapq.heapify(self._worst)
        return evicted


def trim_open(open_list: OpenList, capacity: int) -> int:
    return open_list.trim(capacity)


class Node:
    __slots__ = ("state", "parent", "action", "g", "key", "acc", "path")

    def __init__(self, state, parent, action, g, key, acc, path) -> None:
        self.state = state
        self.parent = parent
        self.action = action
        self.g = g
        self.key = key
        self.acc = acc
        self.path = path

    def plan(self) -> list[int]:
        out = []
        node = self
        while node.parent is not None:
            out.append(node.action)
            node = node.parent
        out.reverse()
        return out


@dataclass
class Prepared:
    """Everything computed once from the initial state before search starts."""

    r_mask: int = 0
    landmark_mask: int | None = None
    table: FactProbTable | None = None
    mode: IntentMode | None = None
    relaxed_solvable: bool = True
    prep_time: float = 0.0
    notes: list[str] = field(default_factory=list)


def prepare(t: PlanningTask, cfg: SearchConfig) -> Prepared:
    start = time.perf_counter()
    prep = Prepared(mode=cfg.variant.intent_mode)
    try:
        prep.r_mask = to_mask(relaxed_plan_facts(t))
    except RelaxedUnsolvableError:
        prep.relaxed_solvable = False
        prep.mode = None
        prep.notes.append("relaxed-unsolvable: intent and landmarks disabled")
    if prep.relaxed_solvable and cfg.variant.uses_landmarks:
        if len(t.goal) > LANDMARK_GOAL_LIMIT:
            prep.notes.append("goal too large: landmark count replaced by goal count")
        else:
            prep.landmark_mask = to_mask(extract_landmarks(t).landmarks)
    if prep.mode is not None:
        table = build_goal_table(t, cfg.n_samples, cfg.seed, cfg.variant.weighting)
        if prep.mode is IntentMode.OP:
            table = build_nongoal_table(t, cfg.n_samples, cfg.seed, goal_table=table)
        prep.table = table
    prep.prep_time = time.perf_counter() - start
    return prep


def search(
    t: PlanningTask,
    cfg: SearchConfig,
    prep: Prepared | None = None,
    on_expand: Callable[[Node, OpenList], None] | None = None,
) -> SearchResult:
    if prep is None:
        prep = prepare(t, cfg)
    stats = SearchStats(prep_time=prep.prep_time)
    start = time.perf_counter()
    deadline = None if cfg.max_time is None else start + max(0.0, cfg.max_time - prep.prep_time)

    actions = t.actions
    pre_masks = [a.pre_mask for a in actions]
    n_actions = len(actions)
    goal_mask = t.goal_mask
    r_mask = prep.r_mask
    lm_mask = prep.landmark_mask
    mode = prep.mode
    table = prep.table
    exact = cfg.exact_segments
    novelty_tables = NoveltyTables(t.num_facts)
    open_list = OpenList(track_worst=cfg.trim_capacity is not None)
    counter = itertools.count()

    def h_of(state: int, path: int) -> int:
        if lm_mask is not None:
            return (lm_mask & ~path).bit_count()
        return (goal_mask & ~state).bit_count()

    def done(status: Status, node: Node | None = None, limit: str | None = None) -> SearchResult:
        stats.search_time = time.perf_counter() - start
        return SearchResult(status, node.plan() if node is not None else None, stats,
                            incomplete=stats.evicted > 0, limit=limit)

    s0 = t.init_state
    h0 = h_of(s0, s0)
    acc0 = IntentAccumulator.root(h0, mask_facts(s0)) if mode is not None else None
    root = Node(s0, None, None, 0, None, acc0, s0)
    if s0 & goal_mask == goal_mask:
        return done(Status.SOLVED, root)
    facts0 = mask_facts(s0)
    root.key = EvalKey(novelty_tables.evaluate((h0, (r_mask & s0).bit_count()), facts0), h0, 0.0, 0)
    stats.evaluations = 1
    open_list.push(root.key.sort_key() + (next(counter),), root)
    seen = {s0}

    while len(open_list):
        if stats.expansions % CHECK_EVERY == 0:
            if deadline is not None and time.perf_counter() > deadline:
                return done(Status.RESOURCE_LIMIT, limit="time")
            if cfg.max_memory is not None:
                stats.memory_estimate = len(seen) * NODE_BYTES + novelty_tables.size() * PAIR_BYTES
                if stats.memory_estimate > cfg.max_memory:
                    return done(Status.RESOURCE_LIMIT, limit="memory")
        _, node = open_list.pop()
        if on_expand is not None:
            on_expand(node, open_list)
        stats.expansions += 1
        s = node.state
        g = node.g + 1
        for a in range(n_actions):
            pm = pre_masks[a]
            if s & pm != pm:
                continue
            act = actions[a]
            s2 = (s & ~act.del_mask) | act.add_mask
            stats.generations += 1
            if s2 in seen:
                continue
            seen.add(s2)
            path = node.path | s2
            if s2 & goal_mask == goal_mask:
                return done(Status.SOLVED, Node(s2, node, a, g, None, None, path))
            h = h_of(s2, path)
            facts = mask_facts(s2)
            nov = novelty_tables.evaluate((h, (r_mask & path).bit_count()), facts)
            if mode is not None:
                acc = intent_update(node.acc, h, mask_facts(s2 & ~s), table, mode, exact)
                score = acc.score
            else:
                acc = None
                score = 0.0
            key = EvalKey(nov, h, score, g)
            stats.evaluations += 1
            child = Node(s2, node, a, g, key, acc, path)
            open_list.push(key.sort_key() + (next(counter),), child)
        stats.peak_open = max(stats.peak_open, len(open_list))
        if cfg.trim_capacity is not None and len(open_list) > cfg.trim_capacity:
            stats.evicted += open_list.trim(cfg.trim_capacity)
    return done(Status.EXHAUSTED)
