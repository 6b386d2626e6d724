"""Randomized verification suites shared by the command line and the test suite."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .divergence import irpl_consistency, random_dist, random_observation, verify_invariance
from .irpl import PropertyReport, WeightScheme, check_properties, weigh
from .randtasks import random_library


@dataclass
class SuiteOutcome:
    name: str
    trials: int = 0
    checks: int = 0
    failures: list[str] = field(default_factory=list)
    max_deviation: float = 0.0
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures


def trial_seeds(seed: int, trials: int) -> list[int]:
    rng = random.Random(seed)
    return [rng.randrange(2**31) for _ in range(trials)]


def irpl_suite(trials: int, seed: int,
               on_task: Callable[[int, PropertyReport], None] | None = None) -> SuiteOutcome:
    out = SuiteOutcome("irpl")
    start = time.perf_counter()
    for task_seed in trial_seeds(seed, trials):
        _, lib = random_library(task_seed)
        rep = check_properties(lib, seed=task_seed)
        out.trials += 1
        out.checks += sum(c.checked for c in rep.checks.values())
        out.failures.extend(f"task seed {task_seed}: {f}" for f in rep.failures())
        if on_task is not None:
            on_task(task_seed, rep)
    out.elapsed = time.perf_counter() - start
    return out


def invariance_suite(trials: int, seed: int, subsets: int = 5,
                     on_trial: Callable[[int, float], None] | None = None) -> SuiteOutcome:
    out = SuiteOutcome("divergence")
    start = time.perf_counter()
    for trial_seed in trial_seeds(seed, trials):
        rng = random.Random(trial_seed)
        d = random_dist(rng)
        obs = random_observation(rng, d)
        rep = verify_invariance(d, obs, subsets, trial_seed)
        out.trials += 1
        out.checks += len(rep.trials)
        out.max_deviation = max(out.max_deviation, rep.max_deviation)
        for t in rep.trials:
            if t.delta > rep.tolerance:
                out.failures.append(f"trial seed {trial_seed}, K={t.keep} ({t.label}): "
                                    f"kl={t.kl!r} expected {t.expected!r}")
        if on_trial is not None:
            on_trial(trial_seed, rep.max_deviation)
    out.elapsed = time.perf_counter() - start
    return out


def consistency_suite(trials: int, seed: int, max_plan_length: int = 8) -> SuiteOutcome:
    """exp(-KL) against P(O|G) for every prefix of every plan, under UMP and UTP weights."""
    out = SuiteOutcome("consistency")
    start = time.perf_counter()
    for task_seed in trial_seeds(seed, trials):
        _, lib = random_library(task_seed, max_plan_length=max_plan_length)
        out.trials += 1
        for scheme in (WeightScheme.UMP, WeightScheme.UTP):
            weighted = weigh(lib, scheme)
            prefixes = {p.actions[:k] for p in weighted.plans for k in range(len(p.actions) + 1)}
            for o in sorted(prefixes):
                res = irpl_consistency(weighted, o)
                out.checks += 1
                if res.degenerate or not res.ok:
                    out.failures.append(f"task seed {task_seed} [{scheme.value}] prefix {o}: "
                                        f"exp(-kl)={res.exp_neg_kl!r} P(O|G)={res.likelihood!r}")
                else:
                    out.max_deviation = max(out.max_deviation, res.delta)
    out.elapsed = time.perf_counter() - start
    return out

