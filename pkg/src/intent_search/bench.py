"""Benchmark sweeps over a suite manifest, CSV persistence, and summary statistics."""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .pddl import load_task
from .search import SearchConfig, Variant, prepare, search
from .task import validate_plan

logger = logging.getLogger(__name__)

AGILE_CUTOFF = 300.0
CSV_COLUMNS = (
    "domain", "problem", "variant", "seed", "solved", "expansions", "generations",
    "plan_cost", "search_time_s", "wall_time_s", "agile",
)


def agile(wall_time: float, solved: bool = True) -> float:
    """1 up to one second, decaying with log time to 0 at the cutoff."""
    if not solved or wall_time > AGILE_CUTOFF:
        return 0.0
    if wall_time <= 1.0:
        return 1.0
    return 1.0 - math.log(wall_time) / math.log(AGILE_CUTOFF)


@dataclass(frozen=True)
class RunRecord:
    domain: str
    problem: str
    variant: str
    seed: int
    solved: bool
    expansions: int
    generations: int
    plan_cost: int | None
    search_time_s: float
    wall_time_s: float
    agile: float

    def to_row(self) -> dict[str, str]:
        row = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                row[f.name] = ""
            elif isinstance(v, bool):
                row[f.name] = "true" if v else "false"
            else:
                row[f.name] = repr(v) if isinstance(v, float) else str(v)
        return row

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "RunRecord":
        return cls(
            domain=row["domain"],
            problem=row["problem"],
            variant=row["variant"],
            seed=int(row["seed"]),
            solved=row["solved"] == "true",
            expansions=int(row["expansions"]),
            generations=int(row["generations"]),
            plan_cost=int(row["plan_cost"]) if row["plan_cost"] else None,
            search_time_s=float(row["search_time_s"]),
            wall_time_s=float(row["wall_time_s"]),
            agile=float(row["agile"]),
        )


class CsvWriter:
    """Appends records to a CSV file, writing the header when the file is new."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = self.path.open("a", newline="")
        self._writer = csv.DictWriter(self._fh, fieldnames=CSV_COLUMNS)
        if fresh:
            self._writer.writeheader()

    def write(self, rec: RunRecord) -> None:
        self._writer.writerow(rec.to_row())
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "CsvWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_records(path: str | Path, records: Iterable[RunRecord]) -> None:
    with CsvWriter(path) as w:
        for rec in records:
            w.write(rec)


def read_records(path: str | Path) -> list[RunRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
        return [RunRecord.from_row(row) for row in reader]


# --------------------------------------------------------------------------
# Suite and runs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SuiteEntry:
    domain: str
    problem: str
    domain_file: Path
    problem_file: Path


def load_manifest(path: str | Path) -> list[SuiteEntry]:
    path = Path(path)
    base = path.parent
    entries = []
    for item in json.loads(path.read_text()):
        entries.append(SuiteEntry(item["domain"], item["problem"],
                                  base / item["domain_file"], base / item["problem_file"]))
    return entries


def bundled_manifest() -> Path:
    return Path(str(resources.files("intent_search") / "suite" / "manifest.json"))


def run_one(entry: SuiteEntry, cfg: SearchConfig) -> RunRecord:
    """One timed run; wall time covers parsing, grounding, preprocessing and search."""
    start = time.perf_counter()
    t = load_task(entry.domain_file, entry.problem_file)
    cfg_left = cfg
    if cfg.max_time is not None:
        left = max(0.0, cfg.max_time - (time.perf_counter() - start))
        cfg_left = SearchConfig(cfg.variant, cfg.trim_capacity, cfg.n_samples, cfg.seed, left,
                                cfg.max_memory, cfg.exact_segments)
    result = search(t, cfg_left, prepare(t, cfg_left))
    wall = time.perf_counter() - start
    solved = result.solved
    if solved and not validate_plan(t, result.plan).valid:
        logger.error("%s/%s %s produced an invalid plan", entry.domain, entry.problem, cfg.variant.value)
        solved = False
    return RunRecord(
        domain=entry.domain,
        problem=entry.problem,
        variant=cfg.variant.value,
        seed=cfg.seed,
        solved=solved,
        expansions=result.stats.expansions,
        generations=result.stats.generations,
        plan_cost=len(result.plan) if solved else None,
        search_time_s=result.stats.search_time,
        wall_time_s=wall,
        agile=agile(wall, solved),
    )


def run_bench(
    entries: Sequence[SuiteEntry],
    variants: Sequence[Variant | str],
    seeds: Sequence[int],
    base: SearchConfig | None = None,
    csv_path: str | Path | None = None,
    jobs: int = 1,
) -> list[RunRecord]:
    """Run every (instance, variant, seed); records are written by this process only."""
    base = base or SearchConfig()
    jobs_list = []
    for entry in entries:
        if not entry.domain_file.exists() or not entry.problem_file.exists():
            logger.warning("skipping %s/%s: file not found", entry.domain, entry.problem)
            continue
        for v in variants:
            for seed in seeds:
                cfg = SearchConfig(Variant(v) if isinstance(v, str) else v, base.trim_capacity,
                                   base.n_samples, seed, base.max_time, base.max_memory,
                                   base.exact_segments)
                jobs_list.append((entry, cfg))
    writer = CsvWriter(csv_path) if csv_path is not None else None
    records: list[RunRecord] = []
    try:
        if jobs <= 1:
            for entry, cfg in jobs_list:
                rec = run_one(entry, cfg)
                records.append(rec)
                if writer:
                    writer.write(rec)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(run_one, entry, cfg) for entry, cfg in jobs_list]
                for fut in as_completed(futures):
                    rec = fut.result()
                    records.append(rec)
                    if writer:
                        writer.write(rec)
    finally:
        if writer:
            writer.close()
    order = {(e.domain, e.problem, c.variant.value, c.seed): i for i, (e, c) in enumerate(jobs_list)}
    records.sort(key=lambda r: order[(r.domain, r.problem, r.variant, r.seed)])
    return records


# --------------------------------------------------------------------------
# Summaries
# --------------------------------------------------------------------------

Instance = tuple[str, str]


def _by_instance(records: Iterable[RunRecord], variant: str) -> dict[Instance, list[RunRecord]]:
    out: dict[Instance, list[RunRecord]] = {}
    for r in records:
        if r.variant == variant:
            out.setdefault((r.domain, r.problem), []).append(r)
    return out


def solved_instances(records: Sequence[RunRecord], variant: str) -> set[Instance]:
    """Instances the variant solved under every seed it was run with."""
    return {k for k, rs in _by_instance(records, variant).items() if all(r.solved for r in rs)}


def median_metric(records: Sequence[RunRecord], variant: str, metric: str) -> dict[Instance, float]:
    return {k: statistics.median(getattr(r, metric) for r in rs)
            for k, rs in _by_instance(records, variant).items()}


@dataclass(frozen=True)
class PairCounts:
    a_better: int
    b_better: int
    ties: int

    @property
    def common(self) -> int:
        return self.a_better + self.b_better + self.ties


def pairwise(records: Sequence[RunRecord], a: str, b: str, metric: str = "expansions") -> PairCounts:
    """Compare per-instance seed medians of ``metric`` (lower is better) over commonly solved instances."""
    common = solved_instances(records, a) & solved_instances(records, b)
    ma, mb = median_metric(records, a, metric), median_metric(records, b, metric)
    better = worse = ties = 0
    for k in common:
        if ma[k] < mb[k]:
            better += 1
        elif ma[k] > mb[k]:
            worse += 1
        else:
            ties += 1
    return PairCounts(better, worse, ties)


@dataclass
class VariantSummary:
    variant: str
    runs: int
    coverage: float  # instances solved, averaged over seeds
    percent_score: float
    agile_total: float  # summed over instances, averaged over seeds
    eps: float | None


def summarize(records: Sequence[RunRecord]) -> list[VariantSummary]:
    variants = list(dict.fromkeys(r.variant for r in records))
    common = set.intersection(*(solved_instances(records, v) for v in variants)) if variants else set()
    out = []
    for v in variants:
        rs = [r for r in records if r.variant == v]
        n_seeds = len({r.seed for r in rs}) or 1
        per_domain: dict[str, list[bool]] = {}
        for r in rs:
            per_domain.setdefault(r.domain, []).append(r.solved)
        pct = 100.0 * statistics.mean(sum(s) / len(s) for s in per_domain.values()) if per_domain else 0.0
        rates = [r.expansions / r.search_time_s for r in rs
                 if (r.domain, r.problem) in common and r.solved and r.search_time_s > 0]
        out.append(VariantSummary(
            variant=v,
            runs=len(rs),
            coverage=sum(r.solved for r in rs) / n_seeds,
            percent_score=pct,
            agile_total=math.fsum(r.agile for r in rs) / n_seeds,
            eps=statistics.mean(rates) if rates else None,
        ))
    return out


def format_summary(records: Sequence[RunRecord]) -> str:
    lines = [f"{'variant':<14}{'runs':>6}{'coverage':>10}{'%score':>9}{'agile':>9}{'EpS':>12}"]
    for s in summarize(records):
        eps = f"{s.eps:12.1f}" if s.eps is not None else f"{'-':>12}"
        lines.append(f"{s.variant:<14}{s.runs:>6}{s.coverage:>10.1f}{s.percent_score:>9.1f}"
                     f"{s.agile_total:>9.2f}{eps}")
    variants = list(dict.fromkeys(r.variant for r in records))
    if len(variants) > 1:
        lines.append("")
        lines.append("pairwise (A better / B better / ties), ties ignored in the first two columns")
        for i, a in enumerate(variants):
            for b in variants[i + 1:]:
                parts = []
                for metric, label in (("expansions", "expansions"), ("wall_time_s", "time"),
                                      ("plan_cost", "cost")):
                    pc = pairwise(records, a, b, metric)
                    parts.append(f"{label} {pc.a_better}/{pc.b_better}/{pc.ties}")
                lines.append(f"  {a} vs {b}: " + ", ".join(parts))
    return "\n".join(lines)
