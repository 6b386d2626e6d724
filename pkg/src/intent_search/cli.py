"""Command-line entry point: ``intent-search {plan,bench,verify,divergence-verify,irpl-verify}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .bench import bundled_manifest, format_summary, load_manifest, run_bench
from .irpl import PROPERTY_NAMES
from .pddl import PddlError, load_task
from .search import SearchConfig, Status, Variant, prepare, search
from .suites import consistency_suite, invariance_suite, irpl_suite
from .task import write_plan

logger = logging.getLogger("intent_search")

EXIT_SOLVED, EXIT_UNSOLVED, EXIT_LIMIT, EXIT_INPUT = 0, 1, 2, 3


def _configure_logging() -> None:
    level = os.environ.get("INTENT_SEARCH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, default=100, help="relaxed plans sampled for fact probabilities")
    p.add_argument("--time-limit", type=float, default=None, metavar="SECONDS")
    p.add_argument("--memory-limit", type=float, default=None, metavar="MB")
    p.add_argument("--trim", type=int, default=None, metavar="N", help="cap the open list at N nodes")


def _config(args, variant, seed) -> SearchConfig:
    mem = None if args.memory_limit is None else int(args.memory_limit * 1024 * 1024)
    return SearchConfig(variant=variant, trim_capacity=args.trim, n_samples=args.samples, seed=seed,
                        max_time=args.time_limit, max_memory=mem)


def cmd_plan(args) -> int:
    start = time.perf_counter()
    try:
        t = load_task(args.domain, args.problem)
        cfg = _config(args, args.variant, args.seed)
    except (PddlError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    result = search(t, cfg, prepare(t, cfg))
    wall = time.perf_counter() - start
    if result.solved:
        write_plan(t, result.plan, args.out)
    print(result.to_json(variant=cfg.variant.value, seed=cfg.seed, wall_time=wall, problem=t.name))
    if result.status is Status.SOLVED:
        return EXIT_SOLVED
    if result.status is Status.RESOURCE_LIMIT:
        print(f"resource limit reached: {result.limit}", file=sys.stderr)
        return EXIT_LIMIT
    print("search space exhausted: no plan", file=sys.stderr)
    return EXIT_UNSOLVED


def cmd_bench(args) -> int:
    manifest = Path(args.manifest) if args.manifest else bundled_manifest()
    try:
        entries = load_manifest(manifest)
        variants = [Variant(v) for v in args.variants.split(",")]
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    records = run_bench(entries, variants, args.seeds, _config(args, Variant.F5, 0),
                        csv_path=args.out, jobs=args.jobs)
    print(format_summary(records))
    return 0


def _report(outcome) -> None:
    status = "PASS" if outcome.ok else "FAIL"
    print(f"{outcome.name}: {status} ({outcome.trials} trials, {outcome.checks} checks, "
          f"max deviation {outcome.max_deviation:.3g}, {outcome.elapsed:.1f}s)")
    for f in outcome.failures[:20]:
        print(f"  {f}")


def cmd_verify(args) -> int:
    if args.trials == 0:
        print("warning: zero trials requested; nothing checked", file=sys.stderr)
        return 0
    outcomes = []
    if args.suite in ("irpl", "all"):
        outcomes.append(irpl_suite(args.trials, args.seed))
    if args.suite in ("divergence", "all"):
        outcomes.append(invariance_suite(args.trials, args.seed))
        outcomes.append(consistency_suite(max(1, args.trials // 2), args.seed))
    for o in outcomes:
        _report(o)
    return 0 if all(o.ok for o in outcomes) else 1


def cmd_divergence_verify(args) -> int:
    if args.trials == 0:
        print("warning: zero trials requested; nothing checked", file=sys.stderr)
        return 0

    def show(seed: int, deviation: float) -> None:
        print(f"trial seed {seed:>10}  max |kl + ln P(obs)| = {deviation:.3e}")

    outcome = invariance_suite(args.trials, args.seed, on_trial=show)
    _report(outcome)
    return 0 if outcome.ok else 1


def cmd_irpl_verify(args) -> int:
    if args.trials == 0:
        print("warning: zero trials requested; nothing checked", file=sys.stderr)
        return 0
    short = [name[:12] for name in PROPERTY_NAMES]
    print(f"{'task seed':>10}  " + " ".join(f"{s:>12}" for s in short))

    def show(seed: int, rep) -> None:
        cells = []
        for name in PROPERTY_NAMES:
            c = rep.checks.get(name)
            cells.append("-" if c is None or c.checked == 0 else ("pass" if c.ok else "FAIL"))
        print(f"{seed:>10}  " + " ".join(f"{c:>12}" for c in cells))

    outcome = irpl_suite(args.trials, args.seed, on_task=show)
    _report(outcome)
    return 0 if outcome.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="intent-search", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="solve one PDDL problem")
    p.add_argument("domain")
    p.add_argument("problem")
    p.add_argument("--variant", default=Variant.F5_OL.value, choices=[v.value for v in Variant])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="plan.txt", help="plan file to write when solved")
    _add_search_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="run a suite sweep and append results to a CSV")
    p.add_argument("--manifest", default=None, help="suite manifest (default: bundled mini-suite)")
    p.add_argument("--variants", default=",".join(v.value for v in Variant))
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--out", default="bench.csv")
    p.add_argument("--jobs", type=int, default=1)
    _add_search_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="run randomized property suites")
    p.add_argument("suite", choices=["irpl", "divergence", "all"])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("divergence-verify", help="check KL invariance on random distributions")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_divergence_verify)

    p = sub.add_parser("irpl-verify", help="check plan-library properties on random tiny tasks")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_irpl_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
