"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import math

import pytest

from intent_search.bench import agile, bundled_manifest, load_manifest, pairwise, run_bench
from intent_search.pddl import load_task
from intent_search.relaxation import build_rpg
from intent_search.sampling import Weighting, build_goal_table, sample_supporters, sample_weights
from intent_search.search import SearchConfig, Variant, search
from intent_search.suites import consistency_suite, invariance_suite, irpl_suite
from intent_search.task import validate_plan

from conftest import chain3_task, fact, two_achiever_task


@pytest.fixture
def report(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[acceptance {number}] {'PASS' if ok else 'FAIL'}: {title}: {detail}")
    return emit


@pytest.fixture(scope="module")
def suite_entries():
    return load_manifest(bundled_manifest())


def test_irpl_property_suite(report):
    outcome = irpl_suite(trials=200, seed=2024)
    ok = outcome.ok and outcome.trials >= 200 and outcome.elapsed < 60
    report(1, "plan-library properties", ok,
           f"{outcome.trials} tasks, {outcome.checks} checks, {len(outcome.failures)} failures, "
           f"{outcome.elapsed:.1f}s (limit 60s)")
    assert outcome.ok, outcome.failures[:5]
    assert outcome.trials >= 200
    assert outcome.elapsed < 60


def test_kl_invariance(report):
    outcome = invariance_suite(trials=100, seed=2024)
    ok = outcome.ok and outcome.elapsed < 10
    report(2, "KL invariance over variable subsets", ok,
           f"{outcome.trials} triples, {outcome.checks} subsets incl. observed-only and full, "
           f"max |kl + ln P(obs)| = {outcome.max_deviation:.2e} (tol 1e-9), {outcome.elapsed:.2f}s (limit 10s)")
    assert outcome.ok, outcome.failures[:5]
    assert outcome.elapsed < 10


def test_library_kl_consistency(report):
    outcome = consistency_suite(trials=50, seed=2024)
    ok = outcome.ok and outcome.elapsed < 30
    report(3, "exp(-KL) equals P(O|G) on plan libraries", ok,
           f"{outcome.trials} libraries x (UMP, UTP), {outcome.checks} plan prefixes, "
           f"max deviation {outcome.max_deviation:.2e} (tol 1e-9), {outcome.elapsed:.2f}s (limit 30s)")
    assert outcome.ok, outcome.failures[:5]
    assert outcome.elapsed < 30


def _fingerprint(res):
    s = res.stats
    return (res.status, tuple(res.plan or ()), s.expansions, s.generations, s.evaluations, s.peak_open)


def test_planner_soundness(report, suite_entries):
    plans = invalid = 0
    for entry in suite_entries:
        t = load_task(entry.domain_file, entry.problem_file)
        for v in Variant:
            res = search(t, SearchConfig(v, seed=1))
            if res.solved:
                plans += 1
                invalid += not validate_plan(t, res.plan).valid
    identical = True
    for entry in suite_entries:
        t = load_task(entry.domain_file, entry.problem_file)
        cfg = SearchConfig(Variant.F5, seed=11)
        identical &= _fingerprint(search(t, cfg)) == _fingerprint(search(t, cfg))
    ok = invalid == 0 and identical and plans > 0
    report(4, "planner soundness and determinism", ok,
           f"{plans} plans from {len(suite_entries)} instances x {len(Variant)} variants, {invalid} invalid; "
           f"F5 repeat runs identical: {identical}")
    assert invalid == 0 and plans > 0
    assert identical


def test_sampling_formulas(report):
    chain = chain3_task()
    chain_table = build_goal_table(chain, 100, 0, Weighting.UNIFORM)
    chain_ok = chain_table.p_goal == (1.0, 1.0, 1.0, 1.0)

    two = two_achiever_task()
    two_table = build_goal_table(two, 100, 0, Weighting.UNIFORM)
    expected = {"g": 1.0, "q": 1.0 - (1.0 - 0.5) * (1.0 - 0.5), "s": 1.0}
    two_ok = all(two_table.p_goal[fact(two, n)] == p for n, p in expected.items())

    same = True
    worst_sum = 0.0
    tasks = [chain, two] + [load_task(e.domain_file, e.problem_file)
                            for e in load_manifest(bundled_manifest())[::3]]
    for i, t in enumerate(tasks):
        for w in Weighting:
            same &= build_goal_table(t, 100, i, w) == build_goal_table(t, 100, i, w)
        samples = sample_supporters(t, build_rpg(t, t.init_state), t.goal, 100, i)
        worst_sum = max(worst_sum, abs(math.fsum(sample_weights(samples, Weighting.UTP)) - 1.0))
    ok = chain_ok and two_ok and same and worst_sum <= 1e-12
    report(5, "sampling determinism and formulas", ok,
           f"chain-3 exact: {chain_ok}, two-achiever exact: {two_ok}, seeded tables identical: {same}, "
           f"max |sum UTP weights - 1| = {worst_sum:.1e} (tol 1e-12)")
    assert chain_ok and two_ok and same
    assert worst_sum <= 1e-12


def test_fewer_expansions_direction(report, suite_entries):
    records = run_bench(suite_entries, [Variant.F5, Variant.F5_OL], seeds=[0, 1, 2, 3, 4])
    counts = pairwise(records, Variant.F5_OL.value, Variant.F5.value, "expansions")
    domains = {e.domain for e in suite_entries}
    share = counts.a_better / counts.common if counts.common else 0.0
    ok = (len(suite_entries) >= 20 and len(domains) >= 4 and share >= 0.40
          and counts.a_better > counts.b_better)
    report(6, "F5_OL expands fewer nodes than F5", ok,
           f"{counts.common} commonly solved of {len(suite_entries)} instances in {len(domains)} domains; "
           f"F5_OL fewer on {counts.a_better} ({share:.0%}, need >= 40%), more on {counts.b_better}, "
           f"ties {counts.ties}; per-instance median over 5 seeds")
    assert len(suite_entries) >= 20 and len(domains) >= 4
    assert share >= 0.40
    assert counts.a_better > counts.b_better


def test_agile_formula(report):
    fixtures = {0.5: 1.0, 1.0: 1.0, 10.0: 1 - math.log(10) / math.log(300), 300.0: 0.0, 301.0: 0.0}
    worst = max(abs(agile(t) - v) for t, v in fixtures.items())
    ok = worst <= 1e-12
    report(7, "agile score", ok, f"T in {sorted(fixtures)}, max deviation {worst:.1e} (tol 1e-12)")
    assert ok

