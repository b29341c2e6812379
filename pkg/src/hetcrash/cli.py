"""Command-line front end.

Exit codes: 0 success (PASS, or expectations met), 2 a violation or a
failed expectation, 1 anything went wrong (parse error, invalid trace,
bad arguments).  ``HETCRASH_SEED`` fixes the seed of sampled sweeps.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import report as report_mod
from .explorer import WORLDS, run_details, sweep, world_config
from .model import HetcrashError
from .recovery import STRATEGY_NAMES, get_strategy
from .trace import load_trace

# Per-world verdict expectations: which strategies must sweep clean and
# which must produce at least one violation.
WORLD_EXPECT: dict[str, dict[str, str]] = {
    "a": {"latest-dev": "clean", "wb-mark-start": "clean", "wb-mark-end": "clean",
          "versioned-mark": "clean", "naive-disk": "violating", "naive-nvm": "violating"},
    "b": {"wb-mark-start": "clean", "wb-mark-end": "clean", "versioned-mark": "clean",
          "latest-dev": "violating", "naive-disk": "violating", "naive-nvm": "violating"},
    "c": {"versioned-mark": "clean", "wb-mark-start": "violating",
          "wb-mark-end": "violating", "latest-dev": "violating",
          "naive-disk": "violating", "naive-nvm": "violating"},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2, which means VIOLATION here
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="hetcrash",
                     description="crash-consistency checker for a DRAM/NVM/disk stack")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one trace under one strategy")
    p_run.add_argument("trace", type=Path)
    p_run.add_argument("--strategy", required=True, choices=STRATEGY_NAMES)
    p_run.add_argument("--report", type=Path, help="write the record line here")
    p_run.add_argument("--json", action="store_true", help="emit the verdict as JSON")

    p_sweep = sub.add_parser("sweep", help="enumerate schedules and check strategies")
    p_sweep.add_argument("--world", required=True, choices=WORLDS)
    p_sweep.add_argument("--max-events", type=int, default=None)
    p_sweep.add_argument("--page-size", type=int, default=None)
    p_sweep.add_argument("--page-count", type=int, default=None)
    p_sweep.add_argument("--strategies", default=None,
                         help="comma-separated strategy names (default: expectation set)")
    p_sweep.add_argument("--expect", default=None,
                         help="name=clean|violating pairs, comma-separated")
    p_sweep.add_argument("--liberal", action="store_true",
                         help="drop the sync-write pattern constraint")
    p_sweep.add_argument("--sample", type=int, default=None,
                         help="random schedules instead of exhaustion")
    p_sweep.add_argument("--seed", type=int, default=None,
                         help="sampling seed (default: HETCRASH_SEED or 0)")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--report", type=Path,
                         help="write one record per (schedule, strategy) here")
    p_sweep.add_argument("--figures", type=Path, help="directory for PNG figures")
    p_sweep.add_argument("--json", action="store_true")

    p_corpus = sub.add_parser("corpus", help="run the scenario matrix")
    p_corpus.add_argument("--trace-dir", type=Path, default=None)
    p_corpus.add_argument("--report", type=Path)
    p_corpus.add_argument("--figures", type=Path)
    p_corpus.add_argument("--json", action="store_true")
    return parser


def _cmd_run(args) -> int:
    schedule = load_trace(args.trace)
    strategy = get_strategy(args.strategy)
    verdict, recovered = run_details(schedule, strategy)
    line = report_mod.record_line(schedule.encode(), strategy.name, verdict)
    if args.json:
        print(json.dumps({
            "schedule": schedule.encode(),
            "strategy": strategy.name,
            "verdict": verdict.status,
            "witness": verdict.render(),
            "recovered": {p: b.decode("ascii") for p, b in recovered.items()},
        }, sort_keys=True))
    else:
        print(line)
        for p in sorted(recovered):
            print(f"recovered page {p}: {recovered[p].decode('ascii')!r}")
    if args.report:
        report_mod.write_lines([line], args.report)
    return 0 if verdict.passed else 2


def _parse_expect(text: str) -> dict[str, str]:
    out = {}
    for pair in text.split(","):
        name, _, want = pair.strip().partition("=")
        if want not in ("clean", "violating"):
            raise HetcrashError(f"bad expectation {pair!r} (use name=clean|violating)")
        get_strategy(name)
        out[name] = want
    return out


def _cmd_sweep(args) -> int:
    overrides = {}
    if args.page_size is not None:
        overrides["page_size"] = args.page_size
    if args.page_count is not None:
        overrides["page_count"] = args.page_count
    if args.liberal:
        overrides["strict_sync_pattern"] = False
    cfg = world_config(args.world, max_events=args.max_events, **overrides)

    expect = WORLD_EXPECT[args.world] if args.expect is None else _parse_expect(args.expect)
    if args.strategies:
        names = tuple(s.strip() for s in args.strategies.split(","))
    else:
        names = tuple(expect)
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("HETCRASH_SEED", "0"))

    report = sweep(cfg, strategies=names, workers=args.workers,
                   sample=args.sample, seed=seed, keep_records=args.report is not None)

    failures = []
    for name in names:
        want = expect.get(name)
        if want is None:
            continue
        got = report.stats[name].violations
        if want == "clean" and got:
            failures.append(f"{name}: expected clean, found {got} violation(s)")
        elif want == "violating" and not got:
            failures.append(f"{name}: expected violations, found none")

    if args.json:
        print(json.dumps({
            "world": args.world,
            "schedules": report.total_schedules,
            "crashed": report.crashed_schedules,
            "strategies": {n: {"violations": report.stats[n].violations,
                               "pass": report.stats[n].passes} for n in names},
            "cases": report.pattern_counts,
            "expectation_failures": failures,
        }, sort_keys=True))
    else:
        for line in report.to_lines():
            print(line)
        for f in failures:
            print(f"EXPECTATION FAILED: {f}")
        if not failures:
            print("all expectations met")
    if args.report is not None:
        report_mod.write_lines(report.records or [], args.report)
    if args.figures is not None:
        args.figures.mkdir(parents=True, exist_ok=True)
        out = report_mod.render_sweep_figure(report, args.figures / f"sweep_world_{args.world}.png")
        print(f"figure written: {out}")
    return 2 if failures else 0


def _cmd_corpus(args) -> int:
    results = corpus_mod.run_corpus(args.trace_dir)
    schedules = corpus_mod.load_corpus(args.trace_dir)
    matrix = corpus_mod.matrix_of(results)
    ok = matrix == corpus_mod.EXPECTED_MATRIX

    if args.json:
        print(json.dumps({"matrix": matrix, "matches_expected": ok}, sort_keys=True))
    else:
        print(report_mod.corpus_table(results))
        print()
        print("matrix matches the expected table" if ok
              else "MATRIX MISMATCH against the expected table")
        if not ok:
            for t, row in matrix.items():
                for s, got in row.items():
                    want = corpus_mod.EXPECTED_MATRIX[t][s]
                    if got != want:
                        print(f"  {t} x {s}: got {got}, expected {want}")
    if args.report is not None:
        report_mod.write_lines(
            sorted(report_mod.corpus_records(results, schedules)), args.report)
    if args.figures is not None:
        args.figures.mkdir(parents=True, exist_ok=True)
        out = report_mod.render_corpus_figure(results, args.figures / "corpus_matrix.png")
        print(f"figure written: {out}")
    return 0 if ok else 2


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_corpus(args)
    except HetcrashError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
