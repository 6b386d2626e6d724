import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intent_search.bench import (
    CSV_COLUMNS,
    RunRecord,
    agile,
    bundled_manifest,
    format_summary,
    load_manifest,
    pairwise,
    read_records,
    run_bench,
    summarize,
    write_records,
)
from intent_search.search import SearchConfig, Variant


def rec(problem, variant, expansions, solved=True, seed=0, domain="d", wall=0.5):
    return RunRecord(domain, problem, variant, seed, solved, expansions, expansions * 2,
                     3 if solved else None, 0.1, wall, agile(wall, solved))


def test_agile_fixed_points():
    assert agile(1.0) == 1.0
    assert agile(300.0) == 0.0
    assert agile(0.2, solved=False) == 0.0


@settings(max_examples=200)
@given(st.floats(min_value=0.0, max_value=1000.0, allow_nan=False), st.booleans())
def test_agile_range_and_shape(t, solved):
    a = agile(t, solved)
    assert 0.0 <= a <= 1.0
    if not solved or t > 300:
        assert a == 0.0
    elif t <= 1:
        assert a == 1.0
    else:
        assert a == pytest.approx(1 - math.log(t) / math.log(300))


def test_csv_round_trip(tmp_path):
    records = [rec("p1", "F5", 10), rec("p2", "F5_OL", 7, solved=False, wall=0.1234567891234)]
    path = tmp_path / "r.csv"
    write_records(path, records)
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert read_records(path) == records
    write_records(path, records[:1])
    assert read_records(path) == records + records[:1]


def test_pairwise_counts_are_antisymmetric():
    records = [rec("p1", "A", 5), rec("p1", "B", 7), rec("p2", "A", 9), rec("p2", "B", 3),
               rec("p3", "A", 4), rec("p3", "B", 4), rec("p4", "A", 1, solved=False), rec("p4", "B", 1)]
    ab, ba = pairwise(records, "A", "B"), pairwise(records, "B", "A")
    assert (ab.a_better, ab.b_better, ab.ties) == (1, 1, 1)
    assert ab.a_better == ba.b_better and ab.b_better == ba.a_better
    assert ab.common == ba.common == 3


def test_pairwise_uses_seed_median():
    records = [rec("p1", "A", e, seed=s) for s, e in enumerate([1, 10, 10])]
    records += [rec("p1", "B", 5, seed=s) for s in range(3)]
    assert pairwise(records, "A", "B").b_better == 1


def test_summary_percent_score_averages_domains():
    records = [rec("p1", "A", 1, domain="x"), rec("p2", "A", 1, solved=False, domain="x"),
               rec("p1", "A", 1, domain="y")]
    (s,) = summarize(records)
    assert s.coverage == 2
    assert s.percent_score == pytest.approx(75.0)
    assert s.agile_total == 2.0


def test_run_bench_small_sweep(tmp_path):
    entries = load_manifest(bundled_manifest())[:2]
    path = tmp_path / "bench.csv"
    records = run_bench(entries, [Variant.F5, "F5_OL"], [0, 1], SearchConfig(), csv_path=path)
    assert len(records) == 8
    assert all(r.solved for r in records)
    assert sorted(read_records(path), key=repr) == sorted(records, key=repr)
    assert "F5 vs F5_OL" in format_summary(records)


def test_run_bench_parallel_matches_serial(tmp_path):
    entries = load_manifest(bundled_manifest())[:2]
    serial = run_bench(entries, ["F5"], [0])
    parallel = run_bench(entries, ["F5"], [0], jobs=2, csv_path=tmp_path / "p.csv")
    strip = lambda rs: [(r.problem, r.expansions, r.plan_cost) for r in rs]  # noqa: E731
    assert strip(serial) == strip(parallel)
    assert len(read_records(tmp_path / "p.csv")) == 2


def test_missing_files_are_skipped(tmp_path, caplog):
    (tmp_path / "m.json").write_text('[{"domain": "x", "problem": "p", "domain_file": "nope.pddl",'
                                     ' "problem_file": "nope2.pddl"}]')
    assert run_bench(load_manifest(tmp_path / "m.json"), ["F5"], [0]) == []
    assert "skipping" in caplog.text


def test_bundled_suite_shape():
    entries = load_manifest(bundled_manifest())
    assert len(entries) >= 20
    assert len({e.domain for e in entries}) >= 4
    assert all(e.domain_file.exists() and e.problem_file.exists() for e in entries)
