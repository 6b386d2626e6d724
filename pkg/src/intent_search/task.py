"""Grounded STRIPS tasks, bit-set states, successor generation and plan validation.

States are plain Python ints used as bit sets over fact ids: bit ``i`` is set
iff fact ``i`` holds. They are immutable, hashable by value and cheap to
compare, which is all the search needs for duplicate detection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

State = int


class InapplicableActionError(ValueError):
    """Raised when an action is applied in a state that lacks its preconditions."""


@dataclass(frozen=True)
class Action:
    name: str
    pre: tuple[int, ...]
    add: tuple[int, ...]
    delete: tuple[int, ...]
    cost: int = 1
    pre_mask: int = field(default=0, repr=False, compare=False)
    add_mask: int = field(default=0, repr=False, compare=False)
    del_mask: int = field(default=0, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pre_mask", to_mask(self.pre))
        object.__setattr__(self, "add_mask", to_mask(self.add))
        object.__setattr__(self, "del_mask", to_mask(self.delete))


def to_mask(facts: Iterable[int]) -> int:
    mask = 0
    for f in facts:
        mask |= 1 << f
    return mask


def mask_facts(mask: int) -> list[int]:
    """Fact ids set in ``mask``, ascending."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass(frozen=True)
class PlanningTask:
    """A grounded STRIPS task with dense fact and action ids.

    Every action has unit cost. ``achievers[q]`` lists the ids of actions
    adding fact ``q``, ascending.
    """

    facts: tuple[str, ...]
    actions: tuple[Action, ...]
    init: frozenset[int]
    goal: frozenset[int]
    name: str = ""
    init_state: State = field(default=0, repr=False, compare=False)
    goal_mask: int = field(default=0, repr=False, compare=False)
    achievers: tuple[tuple[int, ...], ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        n = len(self.facts)
        for a in self.actions:
            for lst in (a.pre, a.add, a.delete):
                if list(lst) != sorted(set(lst)):
                    raise ValueError(f"fact lists of {a.name} must be sorted and duplicate-free")
                if lst and (lst[0] < 0 or lst[-1] >= n):
                    raise ValueError(f"action {a.name} references an unknown fact id")
            if set(a.add) & set(a.delete):
                raise ValueError(f"action {a.name} adds and deletes the same fact")
            if a.cost != 1:
                raise ValueError("only unit-cost actions are supported")
        for f in self.init | self.goal:
            if not 0 <= f < n:
                raise ValueError(f"unknown fact id {f} in init/goal")
        ach: list[list[int]] = [[] for _ in range(n)]
        for i, a in enumerate(self.actions):
            for q in a.add:
                ach[q].append(i)
        object.__setattr__(self, "init_state", to_mask(self.init))
        object.__setattr__(self, "goal_mask", to_mask(self.goal))
        object.__setattr__(self, "achievers", tuple(tuple(x) for x in ach))

    @classmethod
    def from_strips(
        cls,
        facts: Sequence[str],
        actions: Sequence[tuple[str, Iterable[str], Iterable[str], Iterable[str]]],
        init: Iterable[str],
        goal: Iterable[str],
        name: str = "",
    ) -> "PlanningTask":
        """Build a task from fact names and ``(name, pre, add, del)`` tuples."""
        index = {f: i for i, f in enumerate(facts)}
        built = []
        for aname, pre, add, dele in actions:
            add_ids = sorted({index[f] for f in add})
            del_ids = sorted({index[f] for f in dele} - set(add_ids))
            built.append(Action(aname, tuple(sorted({index[f] for f in pre})), tuple(add_ids), tuple(del_ids)))
        return cls(
            tuple(facts),
            tuple(built),
            frozenset(index[f] for f in init),
            frozenset(index[f] for f in goal),
            name=name,
        )

    @property
    def num_facts(self) -> int:
        return len(self.facts)

    def action_id(self, name: str) -> int:
        try:
            return self._name_index()[name.strip().lower()]
        except KeyError:
            raise KeyError(f"unknown action {name!r}") from None

    def _name_index(self) -> dict[str, int]:
        cached = self.__dict__.get("_names")
        if cached is None:
            cached = {a.name.lower(): i for i, a in enumerate(self.actions)}
            object.__setattr__(self, "_names", cached)
        return cached

    def is_goal(self, s: State) -> bool:
        return s & self.goal_mask == self.goal_mask

    def state_names(self, s: State) -> list[str]:
        return [self.facts[f] for f in mask_facts(s)]


def applicable(t: PlanningTask, s: State) -> list[int]:
    """Ids of actions whose preconditions hold in ``s``, ascending."""
    return [i for i, a in enumerate(t.actions) if s & a.pre_mask == a.pre_mask]


def apply(t: PlanningTask, s: State, a: int) -> State:
    act = t.actions[a]
    if s & act.pre_mask != act.pre_mask:
        missing = [t.facts[f] for f in mask_facts(act.pre_mask & ~s)]
        raise InapplicableActionError(f"{act.name} not applicable; missing {missing}")
    return (s & ~act.del_mask) | act.add_mask


@dataclass
class ValidationReport:
    valid: bool
    cost: int
    failed_index: int | None = None
    missing: tuple[str, ...] = ()
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid


def validate_plan(t: PlanningTask, plan: Sequence[int]) -> ValidationReport:
    """Simulate ``plan`` from the initial state and check the goal."""
    s = t.init_state
    for i, a in enumerate(plan):
        act = t.actions[a]
        if s & act.pre_mask != act.pre_mask:
            missing = tuple(t.facts[f] for f in mask_facts(act.pre_mask & ~s))
            return ValidationReport(False, i, i, missing, f"precondition of {act.name} unmet")
        s = (s & ~act.del_mask) | act.add_mask
    if not t.is_goal(s):
        missing = tuple(t.facts[f] for f in mask_facts(t.goal_mask & ~s))
        return ValidationReport(False, len(plan), len(plan), missing, "goal not satisfied")
    return ValidationReport(True, len(plan))


def format_plan(t: PlanningTask, plan: Sequence[int]) -> str:
    lines = [t.actions[a].name for a in plan]
    lines.append(f"; cost = {len(plan)} (unit cost)")
    return "\n".join(lines) + "\n"


def write_plan(t: PlanningTask, plan: Sequence[int], path: str | Path) -> None:
    Path(path).write_text(format_plan(t, plan))


def read_plan(t: PlanningTask, text: str) -> list[int]:
    """Parse an IPC plan file body back into action ids. Comment lines are skipped."""
    plan = []
    for line in text.splitlines():
        line = line.split(";", 1)[0].strip()
        if line:
            plan.append(t.action_id(line))
    return plan
