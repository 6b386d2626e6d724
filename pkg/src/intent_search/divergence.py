"""Discrete factored distributions: marginals, conditioning on partial observations, KL.

The central identity checked here: for a distribution over complete
outcomes and an observation fixing variables J, the KL divergence between
the conditioned and the prior marginal over any variable set K ⊇ J equals
the negative log probability of the observation.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from .irpl import TrajectoryLibrary, probs

MAX_OUTCOMES = 1_000_000
TOLERANCE = 1e-9


class ZeroConsistencyError(ValueError):
    """No outcome with positive probability agrees with the observation."""


class SupportViolationError(ValueError):
    """KL is infinite: p has mass where q has none."""


class DomainTooLargeError(ValueError):
    pass


class _Pad:
    """Filler action for timesteps after a plan has ended."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "PAD"

    def __reduce__(self):
        return "PAD"


PAD = _Pad()

Outcome = tuple


@dataclass(frozen=True)
class FactoredDist:
    """Probability table over tuples of per-variable values; absent outcomes have probability 0."""

    domain: tuple[tuple[Hashable, ...], ...]
    pmf: Mapping[Outcome, float]

    def __post_init__(self) -> None:
        if any(len(values) < 1 for values in self.domain):
            raise ValueError("every variable needs at least one value")
        if len(self.pmf) > MAX_OUTCOMES:
            raise DomainTooLargeError(f"{len(self.pmf)} outcomes exceed the cap of {MAX_OUTCOMES}")
        value_sets = [set(values) for values in self.domain]
        for x, p in self.pmf.items():
            if len(x) != len(self.domain) or any(v not in vs for v, vs in zip(x, value_sets)):
                raise ValueError(f"outcome {x} is outside the domain")
            if p < 0:
                raise ValueError(f"negative probability {p} for {x}")
        total = math.fsum(self.pmf.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    @property
    def num_vars(self) -> int:
        return len(self.domain)

    def prob(self, x: Outcome) -> float:
        return self.pmf.get(tuple(x), 0.0)

    def support(self) -> list[Outcome]:
        return [x for x, p in self.pmf.items() if p > 0]


@dataclass(frozen=True)
class Observation:
    assignments: Mapping[int, Hashable]

    @property
    def indices(self) -> frozenset[int]:
        return frozenset(self.assignments)

    def validate(self, d: FactoredDist) -> None:
        for i, v in self.assignments.items():
            if not 0 <= i < d.num_vars:
                raise ValueError(f"observed variable {i} outside 0..{d.num_vars - 1}")
            if v not in d.domain[i]:
                raise ValueError(f"observed value {v!r} not in the domain of variable {i}")

    def consistent(self, x: Outcome) -> bool:
        return all(x[i] == v for i, v in self.assignments.items())


def marginalize(d: FactoredDist, keep: Sequence[int]) -> FactoredDist:
    """Marginal over the variables in ``keep`` (sorted); empty ``keep`` gives a one-point distribution."""
    idx = sorted(set(keep))
    if any(not 0 <= i < d.num_vars for i in idx):
        raise ValueError(f"indices {idx} outside 0..{d.num_vars - 1}")
    parts: dict[Outcome, list[float]] = {}
    for x, p in d.pmf.items():
        parts.setdefault(tuple(x[i] for i in idx), []).append(p)
    return FactoredDist(tuple(d.domain[i] for i in idx), {z: math.fsum(ps) for z, ps in parts.items()})


def observation_probability(d: FactoredDist, obs: Observation) -> float:
    obs.validate(d)
    return math.fsum(p for x, p in d.pmf.items() if obs.consistent(x))


def condition(d: FactoredDist, obs: Observation) -> FactoredDist:
    obs.validate(d)
    kept = {x: p for x, p in d.pmf.items() if p > 0 and obs.consistent(x)}
    z = math.fsum(kept.values())
    if z <= 0:
        raise ZeroConsistencyError(f"observation {dict(obs.assignments)} has probability 0")
    return FactoredDist(d.domain, _normalized(kept, z))


def _normalized(weights: Mapping[Outcome, float], total: float) -> dict[Outcome, float]:
    out = {x: w / total for x, w in weights.items()}
    # Fold the rounding residue into the largest entry so the table sums to 1.
    residue = 1.0 - math.fsum(out.values())
    if out and residue:
        top = max(out, key=out.__getitem__)
        out[top] += residue
    return out


def kl(p: FactoredDist, q: FactoredDist) -> float:
    """KL(p || q) in nats."""
    if p.domain != q.domain:
        raise ValueError("distributions are over different domains")
    terms = []
    for x, px in p.pmf.items():
        if px <= 0:
            continue
        qx = q.pmf.get(x, 0.0)
        if qx <= 0:
            raise SupportViolationError(f"p({x})={px} but q({x})=0")
        terms.append(px * math.log(px / qx))
    return max(0.0, math.fsum(terms))


@dataclass(frozen=True)
class InvarianceTrial:
    keep: tuple[int, ...]
    kl: float
    expected: float
    label: str = "random"

    @property
    def delta(self) -> float:
        return abs(self.kl - self.expected)


@dataclass
class InvarianceReport:
    trials: list[InvarianceTrial] = field(default_factory=list)
    tolerance: float = TOLERANCE

    @property
    def max_deviation(self) -> float:
        return max((t.delta for t in self.trials), default=0.0)

    @property
    def ok(self) -> bool:
        return all(t.delta <= self.tolerance for t in self.trials)


def kl_over(d_g: FactoredDist, obs: Observation, keep: Sequence[int]) -> float:
    prior = marginalize(d_g, keep)
    posterior = marginalize(condition(d_g, obs), keep)
    return kl(posterior, prior)


def verify_invariance(d_g: FactoredDist, obs: Observation, trials: int, seed: int) -> InvarianceReport:
    """Compare KL over random variable sets containing the observed ones against -ln P(obs)."""
    expected = -math.log(observation_probability(d_g, obs))
    if math.isinf(expected):
        raise ZeroConsistencyError(f"observation {dict(obs.assignments)} has probability 0")
    rng = random.Random(seed)
    observed = sorted(obs.indices)
    free = [i for i in range(d_g.num_vars) if i not in obs.indices]
    report = InvarianceReport()
    cases = [(tuple(observed), "observed-only"), (tuple(range(d_g.num_vars)), "full")]
    for _ in range(trials):
        extra = [i for i in free if rng.random() < 0.5]
        cases.append((tuple(sorted(observed + extra)), "random"))
    for keep, label in cases:
        report.trials.append(InvarianceTrial(keep, kl_over(d_g, obs, keep), expected, label))
    return report


def random_dist(rng: random.Random, max_outcomes: int = 10_000, max_vars: int = 5) -> FactoredDist:
    """Dense random distribution; entries are normalized exponential draws, some zeroed."""
    sizes: list[int] = []
    for _ in range(rng.randint(1, max_vars)):
        size = rng.randint(1, 6)
        if math.prod(sizes) * size > max_outcomes:
            break
        sizes.append(size)
    if not sizes:
        sizes = [1]
    domain = tuple(tuple(range(n)) for n in sizes)
    zero_rate = rng.choice((0.0, 0.0, 0.3))
    raw: dict[Outcome, float] = {}
    for x in itertools.product(*domain):
        if rng.random() >= zero_rate:
            raw[x] = rng.expovariate(1.0)
    if not raw:
        raw[tuple(v[0] for v in domain)] = 1.0
    return FactoredDist(domain, _normalized(raw, math.fsum(raw.values())))


def random_observation(rng: random.Random, d: FactoredDist) -> Observation:
    """Observation fixing a random non-empty variable set to values of a supported outcome."""
    support = d.support()
    x = support[rng.randrange(len(support))]
    k = rng.randint(1, d.num_vars)
    idx = rng.sample(range(d.num_vars), k)
    return Observation({i: x[i] for i in idx})


# --------------------------------------------------------------------------
# Plan libraries as distributions over timesteps
# --------------------------------------------------------------------------


def plan_distribution(lib: TrajectoryLibrary) -> FactoredDist:
    """Plans of ``lib`` as outcomes over timestep variables, padded to the longest plan."""
    plans = lib.plans
    if not plans:
        raise ValueError("library contains no plan")
    horizon = max(len(p.actions) for p in plans)
    total = lib.plan_weight
    weights: dict[Outcome, float] = {}
    for p in plans:
        x = tuple(p.actions) + (PAD,) * (horizon - len(p.actions))
        weights[x] = float(Fraction(p.weight, total))
    domain = tuple(
        tuple(sorted({x[i] for x in weights}, key=_value_order)) for i in range(horizon)
    )
    return FactoredDist(domain, _normalized(weights, math.fsum(weights.values())))


def _value_order(v) -> tuple:
    return (1, 0) if v is PAD else (0, v)


@dataclass(frozen=True)
class ConsistencyResult:
    observation: tuple
    likelihood: float  # P(O|G) from the library
    exp_neg_kl: float | None  # None when the observation is inconsistent with every plan
    degenerate: bool

    @property
    def delta(self) -> float:
        if self.exp_neg_kl is None:
            return 0.0 if self.likelihood == 0 else math.inf
        return abs(self.exp_neg_kl - self.likelihood)

    @property
    def ok(self) -> bool:
        return self.delta <= TOLERANCE


def irpl_consistency(lib: TrajectoryLibrary, o: Sequence) -> ConsistencyResult:
    """exp(-KL) between the plan distribution conditioned on ``o`` and the prior, against P(O|G)."""
    o = tuple(o)
    expected = float(probs(lib, o).p_o_given_g)
    d = plan_distribution(lib)
    if len(o) > d.num_vars or any(a not in d.domain[i] for i, a in enumerate(o)):
        return ConsistencyResult(o, expected, None, True)
    obs = Observation({i: a for i, a in enumerate(o)})
    try:
        div = kl_over(d, obs, range(d.num_vars))
    except ZeroConsistencyError:
        return ConsistencyResult(o, expected, None, True)
    return ConsistencyResult(o, expected, math.exp(-div), False)
