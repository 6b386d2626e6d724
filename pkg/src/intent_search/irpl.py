"""Exhaustive plan-library model over the maximal trajectories of tiny tasks.

The library holds every acyclic, non-goal-extending action sequence from the
initial state that cannot be extended further, each carrying a positive
weight. Probabilities of prefixes are ratios of summed weights:

* P(G)    = weight of plans / weight of all trajectories
* P(O)    = weight of trajectories extending O / weight of all
* P(O|G)  = weight of plans extending O / weight of plans
* P(G|O)  = weight of plans extending O / weight of trajectories extending O

Undefined ratios are 0. Weights are ``Fraction`` so identities can be
checked exactly.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

from .task import PlanningTask, State, applicable

DEFAULT_CAP = 20_000
COST_RANKED_BASE = 2


class CapExceededError(RuntimeError):
    pass


class NoPlanError(ValueError):
    pass


class WeightScheme(enum.Enum):
    UMP = "ump"  # every trajectory weighs 1
    UTP = "utp"  # product of 1/|applicable actions| along the trajectory
    COST_RANKED = "cost_ranked"  # base ** -length: strictly prefers cheaper plans


class Ordering(enum.Enum):
    MAX_POSTERIOR_TIES_LONG = "posterior"
    MAX_LIKELIHOOD = "likelihood"


# Exact weights: ints where possible, since they aggregate much faster than Fractions.
Weight = int | Fraction


@dataclass(frozen=True)
class Trajectory:
    actions: tuple
    weight: Weight
    is_plan: bool


class PrefixNode:
    __slots__ = ("prefix", "children", "weight", "plan_weight", "count", "plan_count", "terminal", "state")

    def __init__(self, prefix: tuple) -> None:
        self.prefix = prefix
        self.children: dict[Hashable, PrefixNode] = {}
        self.weight: Weight = 0
        self.plan_weight: Weight = 0
        self.count = 0
        self.plan_count = 0
        self.terminal: Trajectory | None = None
        self.state: State | None = None


class TrajectoryLibrary:
    """Weighted maximal trajectories with a prefix trie of aggregate weights."""

    def __init__(self, trajectories: Iterable[Trajectory], task: PlanningTask | None = None) -> None:
        self.trajectories: tuple[Trajectory, ...] = tuple(trajectories)
        self.task = task
        self.root = PrefixNode(())
        if task is not None:
            self.root.state = task.init_state
        for tr in self.trajectories:
            if tr.weight <= 0:
                raise ValueError(f"trajectory {tr.actions} has non-positive weight")
            node = self.root
            self._add(node, tr)
            for i, a in enumerate(tr.actions):
                if node.terminal is not None:
                    raise ValueError(f"{node.prefix} is a proper prefix of {tr.actions}")
                child = node.children.get(a)
                if child is None:
                    child = node.children[a] = PrefixNode(tr.actions[: i + 1])
                    if task is not None:
                        child.state = _step(task, node.state, a)
                node = child
                self._add(node, tr)
            if node.terminal is not None or node.children:
                raise ValueError(f"trajectory {tr.actions} is duplicated or a proper prefix of another")
            node.terminal = tr

    @staticmethod
    def _add(node: PrefixNode, tr: Trajectory) -> None:
        node.weight += tr.weight
        node.count += 1
        if tr.is_plan:
            node.plan_weight += tr.weight
            node.plan_count += 1

    @classmethod
    def from_sequences(cls, items: Iterable[tuple[Sequence, bool] | tuple[Sequence, bool, object]],
                       task: PlanningTask | None = None) -> "TrajectoryLibrary":
        """Build from ``(actions, is_plan)`` or ``(actions, is_plan, weight)`` tuples."""
        trs = []
        for item in items:
            seq, is_plan = item[0], item[1]
            weight = Fraction(item[2]) if len(item) > 2 else 1
            trs.append(Trajectory(tuple(seq), weight, bool(is_plan)))
        return cls(trs, task)

    @property
    def total_weight(self) -> Weight:
        return self.root.weight

    @property
    def plan_weight(self) -> Weight:
        return self.root.plan_weight

    @property
    def plans(self) -> list[Trajectory]:
        return [tr for tr in self.trajectories if tr.is_plan]

    def node(self, prefix: Sequence) -> PrefixNode | None:
        node = self.root
        for a in prefix:
            node = node.children.get(a)
            if node is None:
                return None
        return node

    def nodes(self) -> Iterable[PrefixNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(list(node.children.values())))

    def subset(self, indices: Iterable[int]) -> "TrajectoryLibrary":
        return TrajectoryLibrary([self.trajectories[i] for i in indices], self.task)

    def __len__(self) -> int:
        return len(self.trajectories)


def _step(t: PlanningTask, s: State, a: int) -> State:
    act = t.actions[a]
    return (s & ~act.del_mask) | act.add_mask


def enumerate_maximal(t: PlanningTask, cap: int = DEFAULT_CAP) -> TrajectoryLibrary:
    """Depth-first enumeration of every maximal trajectory from the initial state.

    A branch ends at a goal state, at a dead end, or where every applicable
    action would revisit a state on the current path. All trajectories get
    weight 1.
    """
    found: list[Trajectory] = []
    s0 = t.init_state
    on_path = {s0}
    path: list[int] = []
    # Each frame: (state, iterator over successor (action, state) pairs, extended flag)
    stack: list[list] = []

    def open_frame(s: State) -> None:
        if t.is_goal(s):
            _emit(True)
            return
        succ = [(a, _step(t, s, a)) for a in applicable(t, s)]
        stack.append([s, iter(succ), False])

    def _emit(is_plan: bool) -> None:
        found.append(Trajectory(tuple(path), 1, is_plan))
        if len(found) > cap:
            raise CapExceededError(f"more than {cap} maximal trajectories")

    open_frame(s0)
    while stack:
        frame = stack[-1]
        nxt = None
        for a, s2 in frame[1]:
            if s2 not in on_path:
                nxt = (a, s2)
                break
        if nxt is None:
            stack.pop()
            if not frame[2]:
                _emit(False)
            if path:
                on_path.discard(frame[0])
                path.pop()
            continue
        frame[2] = True
        a, s2 = nxt
        path.append(a)
        on_path.add(s2)
        depth = len(stack)
        open_frame(s2)
        if len(stack) == depth:  # goal reached: no frame opened
            on_path.discard(s2)
            path.pop()
    return TrajectoryLibrary(found, t)


def utp_weight(t: PlanningTask, actions: Sequence[int]) -> Fraction:
    w = Fraction(1)
    s = t.init_state
    for a in actions:
        w /= len(applicable(t, s))
        s = _step(t, s, a)
    return w


def _reweighted(trs: Sequence[Trajectory], scheme: WeightScheme, task: PlanningTask | None,
                base: int, scaled: bool = False) -> list[Trajectory]:
    if scheme is WeightScheme.UMP:
        return [Trajectory(tr.actions, 1, tr.is_plan) for tr in trs]
    if scheme is WeightScheme.COST_RANKED:
        if base <= 1:
            raise ValueError("cost-ranked base must exceed 1")
        if scaled:
            # Same ratios as base ** -length, in integers.
            top = max((len(tr.actions) for tr in trs), default=0)
            return [Trajectory(tr.actions, base ** (top - len(tr.actions)), tr.is_plan) for tr in trs]
        return [Trajectory(tr.actions, Fraction(1, base ** len(tr.actions)), tr.is_plan) for tr in trs]
    if task is None:
        raise ValueError("UTP weights need the task to replay trajectories")
    return [Trajectory(tr.actions, utp_weight(task, tr.actions), tr.is_plan) for tr in trs]


def weigh(lib: TrajectoryLibrary, scheme: WeightScheme, base: int = COST_RANKED_BASE) -> TrajectoryLibrary:
    return TrajectoryLibrary(_reweighted(lib.trajectories, scheme, lib.task, base), lib.task)


def _ratio(num: Weight, den: Weight) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


@dataclass(frozen=True)
class IrplProbs:
    p_g: Fraction
    p_not_g: Fraction
    p_o: Fraction
    p_not_o: Fraction
    p_o_given_g: Fraction
    p_o_given_not_g: Fraction
    p_g_given_o: Fraction
    n_t: int
    n_g: int
    n_c: int
    n_cg: int

    @property
    def p_o_and_g(self) -> Fraction:
        return self.p_o_given_g * self.p_g

    @property
    def p_o_and_not_g(self) -> Fraction:
        return self.p_o_given_not_g * self.p_not_g


def posterior(plan_weight_o: Weight, weight_o: Weight) -> Fraction:
    return _ratio(plan_weight_o, weight_o)


def probs_at(lib: TrajectoryLibrary, node: PrefixNode | None) -> IrplProbs:
    total, plans = lib.total_weight, lib.plan_weight
    non_plans = total - plans
    if node is None:
        x = xg = 0
        n_c = n_cg = 0
    else:
        x, xg, n_c, n_cg = node.weight, node.plan_weight, node.count, node.plan_count
    return IrplProbs(
        p_g=_ratio(plans, total),
        p_not_g=_ratio(non_plans, total),
        p_o=_ratio(x, total),
        p_not_o=_ratio(total - x, total),
        p_o_given_g=_ratio(xg, plans),
        p_o_given_not_g=_ratio(x - xg, non_plans),
        p_g_given_o=posterior(xg, x),
        n_t=lib.root.count,
        n_g=lib.root.plan_count,
        n_c=n_c,
        n_cg=n_cg,
    )


def probs(lib: TrajectoryLibrary, o: Sequence) -> IrplProbs:
    return probs_at(lib, lib.node(o))


def embeds(sequence: Sequence, observation: Sequence) -> bool:
    """Whether ``observation`` occurs in order (not necessarily contiguously) in ``sequence``."""
    it = iter(sequence)
    return all(any(x == o for x in it) for o in observation)


@dataclass
class Trace:
    expanded: list[tuple] = field(default_factory=list)
    plan: tuple | None = None
    expansions: int = 0  # non-goal expansions before the goal was selected
    expansions_before_goal_generated: int | None = None
    generations: int = 0  # node generations when the goal was selected


def oracle_search(lib: TrajectoryLibrary, ordering: Ordering) -> Trace:
    """Best-first search over the library's prefix tree.

    Expanding a prefix generates every applicable action of its state when
    the library knows its task (children outside the library have zero
    probability and are only counted); otherwise just its library children.
    """
    if lib.plan_weight == 0:
        raise NoPlanError("library contains no plan")
    plans_total = lib.plan_weight
    counter = itertools.count()

    def key(node: PrefixNode) -> tuple:
        depth = len(node.prefix)
        if ordering is Ordering.MAX_POSTERIOR_TIES_LONG:
            return (-posterior(node.plan_weight, node.weight), -depth, next(counter))
        return (-Fraction(node.plan_weight, plans_total), depth, next(counter))

    trace = Trace()
    heap = [(key(lib.root), lib.root)]
    while heap:
        _, node = heapq.heappop(heap)
        if node.terminal is not None and node.terminal.is_plan:
            trace.plan = node.prefix
            return trace
        trace.expanded.append(node.prefix)
        trace.expansions += 1
        if lib.task is not None:
            trace.generations += len(applicable(lib.task, node.state))
        else:
            trace.generations += len(node.children)
        for child in node.children.values():
            if trace.expansions_before_goal_generated is None and child.terminal is not None \
                    and child.terminal.is_plan:
                trace.expansions_before_goal_generated = trace.expansions - 1
            heapq.heappush(heap, (key(child), child))
    raise NoPlanError("search exhausted without reaching a plan")  # pragma: no cover


# --------------------------------------------------------------------------
# Property checks
# --------------------------------------------------------------------------


@dataclass
class PropertyCheck:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def expect(self, cond: bool, detail: str) -> None:
        self.checked += 1
        if not cond and len(self.failures) < 5:
            self.failures.append(detail)
        elif not cond:
            self.failures.append("...")


@dataclass
class PropertyReport:
    checks: dict[str, PropertyCheck] = field(default_factory=dict)

    def check(self, name: str) -> PropertyCheck:
        if name not in self.checks:
            self.checks[name] = PropertyCheck(name)
        return self.checks[name]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks.values())

    def failures(self) -> list[str]:
        return [f"{c.name}: {f}" for c in self.checks.values() for f in c.failures]


PROPERTY_NAMES = (
    "prefix_index",
    "probability_identities",
    "extension_likelihood_monotone",
    "no_plan_zero",
    "posterior_child_max",
    "count_ratios",
    "posterior_depth_bound",
    "likelihood_min_cost_first",
    "likelihood_expansion_bounds",
    "sampling_monotonicity",
    "utp_generation_lower_bound",
)


def _fmt(x) -> str:
    return f"{float(x):.6g}" if isinstance(x, Fraction) else str(x)


def _brute_force_aggregates(lib: TrajectoryLibrary) -> dict[tuple, list]:
    """Per-prefix [weight, plan weight, count, plan count] tallied straight from the trajectory list."""
    agg: dict[tuple, list] = {}
    for tr in lib.trajectories:
        for k in range(len(tr.actions) + 1):
            row = agg.setdefault(tr.actions[:k], [0, 0, 0, 0])
            row[0] += tr.weight
            row[2] += 1
            if tr.is_plan:
                row[1] += tr.weight
                row[3] += 1
    return agg


def _check_prefix_index(lib: TrajectoryLibrary, rep: PropertyReport) -> None:
    c = rep.check("prefix_index")
    agg = _brute_force_aggregates(lib)
    nodes = list(lib.nodes())
    c.expect(len(nodes) == len(agg), f"trie has {len(nodes)} prefixes, trajectories have {len(agg)}")
    for node in nodes:
        w, wg, n, ng = agg.get(node.prefix, (None, None, None, None))
        c.expect((w, wg, n, ng) == (node.weight, node.plan_weight, node.count, node.plan_count),
                 f"prefix {node.prefix}: index ({_fmt(node.weight)}, {_fmt(node.plan_weight)}) "
                 f"vs brute force ({_fmt(w)}, {_fmt(wg)})")


def _check_structure(lib: TrajectoryLibrary, rep: PropertyReport) -> None:
    ident = rep.check("probability_identities")
    mono = rep.check("extension_likelihood_monotone")
    zero = rep.check("no_plan_zero")
    avg = rep.check("posterior_child_max")
    for node in lib.nodes():
        p = probs_at(lib, node)
        vals = (p.p_g, p.p_not_g, p.p_o, p.p_not_o, p.p_o_given_g, p.p_g_given_o)
        ident.expect(
            p.p_g + p.p_not_g == 1 and p.p_o + p.p_not_o == 1
            and p.p_o_and_g + p.p_o_and_not_g == p.p_o and all(0 <= v <= 1 for v in vals),
            f"prefix {node.prefix}: P(G)={_fmt(p.p_g)} P(O)={_fmt(p.p_o)} "
            f"P(O,G)+P(O,~G)={_fmt(p.p_o_and_g + p.p_o_and_not_g)}",
        )
        if node.plan_count == 0:
            zero.expect(p.p_o_given_g == 0 and p.p_g_given_o == 0,
                        f"prefix {node.prefix} has no plan but P(O|G)={_fmt(p.p_o_given_g)} "
                        f"P(G|O)={_fmt(p.p_g_given_o)}")
        if node.children:
            best = Fraction(0)
            for child in node.children.values():
                pc = probs_at(lib, child)
                mono.expect(pc.p_o_given_g <= p.p_o_given_g,
                            f"P({child.prefix}|G)={_fmt(pc.p_o_given_g)} > P({node.prefix}|G)="
                            f"{_fmt(p.p_o_given_g)}")
                best = max(best, pc.p_g_given_o)
            if lib.plan_weight > 0:
                avg.expect(best >= p.p_g_given_o,
                           f"prefix {node.prefix}: best child P(G|O)={_fmt(best)} < {_fmt(p.p_g_given_o)}")


def _check_count_ratios(lib: TrajectoryLibrary, rep: PropertyReport) -> None:
    c = rep.check("count_ratios")
    ump = weigh(lib, WeightScheme.UMP)
    agg = _brute_force_aggregates(ump)
    n_t = len(ump.trajectories)
    n_g = sum(tr.is_plan for tr in ump.trajectories)
    for node in ump.nodes():
        _, _, n_c, n_cg = agg[node.prefix]
        p = probs_at(ump, node)
        expected = (
            Fraction(n_c, n_t),
            Fraction(n_g, n_t),
            Fraction(n_cg, n_g) if n_g else Fraction(0),
            Fraction(n_cg, n_c) if n_c else Fraction(0),
        )
        got = (p.p_o, p.p_g, p.p_o_given_g, p.p_g_given_o)
        c.expect(got == expected,
                 f"prefix {node.prefix}: probabilities {tuple(map(_fmt, got))} vs count ratios "
                 f"{tuple(map(_fmt, expected))}")


def _likelihood_search_bounds(lib: TrajectoryLibrary) -> tuple[int, int]:
    """Worst-case non-goal expansions before a plan is selected, and before one is generated."""
    lengths = [len(tr.actions) for tr in lib.plans]
    expand = sum(n - 1 for n in lengths) + 1
    generate = max(0, sum(n - 2 for n in lengths) + 1)
    return expand, generate


def _check_searches(lib: TrajectoryLibrary, rep: PropertyReport, seed: int, schedules: int) -> None:
    if lib.plan_weight == 0:
        return
    depth = rep.check("posterior_depth_bound")
    mincost = rep.check("likelihood_min_cost_first")
    bounds = rep.check("likelihood_expansion_bounds")
    variants = [("given", lib), ("ump", weigh(lib, WeightScheme.UMP)),
                ("cost_ranked", weigh(lib, WeightScheme.COST_RANKED))]
    if lib.task is not None:
        variants.append(("utp", weigh(lib, WeightScheme.UTP)))
    max_len = max(len(tr.actions) for tr in lib.plans)
    min_len = min(len(tr.actions) for tr in lib.plans)
    exp_bound, gen_bound = _likelihood_search_bounds(lib)
    for label, weighted in variants:
        tr = oracle_search(weighted, Ordering.MAX_POSTERIOR_TIES_LONG)
        depth.expect(tr.expansions <= max_len,
                     f"[{label}] posterior search took {tr.expansions} expansions > longest plan {max_len}")
        tr = oracle_search(weighted, Ordering.MAX_LIKELIHOOD)
        if label in ("ump", "cost_ranked"):
            mincost.expect(len(tr.plan) == min_len,
                           f"[{label}] first plan has length {len(tr.plan)}, cheapest is {min_len}")
        gen_before = tr.expansions_before_goal_generated or 0
        bounds.expect(tr.expansions <= exp_bound and gen_before <= gen_bound,
                      f"[{label}] expansions {tr.expansions} (bound {exp_bound}), before first goal "
                      f"generated {gen_before} (bound {gen_bound})")
        if label == "utp":
            _check_utp_bound(weighted, tr, rep)
    _check_sampling(lib, rep, seed, schedules)


def _check_utp_bound(lib: TrajectoryLibrary, tr: Trace, rep: PropertyReport) -> None:
    c = rep.check("utp_generation_lower_bound")
    p_g = Fraction(lib.plan_weight, lib.total_weight)
    for k in range(len(tr.plan) + 1):
        p = probs(lib, tr.plan[:k])
        bound = math.e * -math.log(p.p_o_given_g * p_g)
        c.expect(tr.generations + 1e-9 >= bound,
                 f"prefix {tr.plan[:k]}: {tr.generations} generations < bound {bound:.6g}")


def sampling_schedule(lib: TrajectoryLibrary, steps: int, rng: random.Random) -> list[list[int]]:
    """Nested index sets over the library, each containing at least one plan."""
    order = list(range(len(lib.trajectories)))
    rng.shuffle(order)
    first_plan = next(i for i, idx in enumerate(order) if lib.trajectories[idx].is_plan)
    lo, hi = first_plan + 1, len(order)
    sizes = sorted({round(lo + (hi - lo) * j / max(steps - 1, 1)) for j in range(steps)})
    while len(sizes) < steps:
        sizes.append(sizes[-1])
    return [order[:n] for n in sizes]


def _check_sampling(lib: TrajectoryLibrary, rep: PropertyReport, seed: int, schedules: int) -> None:
    c = rep.check("sampling_monotonicity")
    rng = random.Random(seed)
    for _ in range(schedules):
        sched = sampling_schedule(lib, 5, rng)
        for scheme in (WeightScheme.UMP, WeightScheme.COST_RANKED):
            prev_len = prev_bound = None
            for idx in sched:
                sub = TrajectoryLibrary(
                    _reweighted([lib.trajectories[i] for i in idx], scheme, None, COST_RANKED_BASE, scaled=True))
                tr = oracle_search(sub, Ordering.MAX_LIKELIHOOD)
                bound, _ = _likelihood_search_bounds(sub)
                if prev_len is not None:
                    c.expect(len(tr.plan) <= prev_len and bound >= prev_bound,
                             f"[{scheme.value}] sample size {len(idx)}: plan length {len(tr.plan)} "
                             f"(was {prev_len}), bound {bound} (was {prev_bound})")
                prev_len, prev_bound = len(tr.plan), bound


def check_properties(lib: TrajectoryLibrary, seed: int = 0, schedules: int = 5) -> PropertyReport:
    """Check every structural and search property on ``lib``; violations become report entries."""
    rep = PropertyReport()
    _check_prefix_index(lib, rep)
    _check_structure(lib, rep)
    _check_count_ratios(lib, rep)
    _check_searches(lib, rep, seed, schedules)
    return rep
