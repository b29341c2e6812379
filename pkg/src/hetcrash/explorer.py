"""Bounded schedule enumeration, crash injection, and verdict sweeps.

The enumerator walks every valid event sequence up to a mutation-event
bound and emits each both crash-free and with a crash appended (a crash
in the middle of a sequence is the same schedule as a crash at the end of
the corresponding prefix, which is enumerated on its own).  Generated
data is canonical: plain writes fill the whole page with one symbol,
sync-writes write one byte, and the i-th distinct symbol to appear is
always the i-th letter of the alphabet, which prunes the renaming orbit.

Three escalating worlds map onto the two feature switches:

* world a: whole-page syncs only, write-back is one atomic triple;
* world b: adds arbitrary sync-writes (a run must follow a plain sync
  with no intervening plain write while the strict pattern is on);
* world c: splits write-back into start / deliver / end.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Iterator

from .devices import materialize_log, run_shared, run_unchecked
from .model import (
    CRASH,
    READ,
    SYNC,
    SYNC_WRITE,
    WB_DELIVER,
    WB_END,
    WB_START,
    WRITE,
    Event,
    Schedule,
    ensure_valid,
)
from .oracle import PASS_VERDICT, Verdict, check_against, page_acceptance
from .patterns import WORLD_CASES, tag_cases
from .recovery import STRATEGY_NAMES, Strategy, get_strategy

WORLDS = ("a", "b", "c")


@dataclass(frozen=True)
class ExploreConfig:
    max_events: int = 6
    page_count: int = 1
    page_size: int = 4
    alphabet: tuple[str, ...] = ("a", "b")
    allow_partial_sync_writes: bool = False
    allow_wb_duration: bool = False
    strict_sync_pattern: bool = True
    strategies: tuple[str, ...] = STRATEGY_NAMES

    def validate(self) -> None:
        if self.max_events < 0 or self.page_count < 1 or not (1 <= self.page_size <= 4096):
            raise ValueError("bad exploration bounds")
        if not self.alphabet:
            raise ValueError("alphabet must be nonempty")

    @property
    def cases(self) -> tuple[str, ...]:
        if self.allow_wb_duration:
            return WORLD_CASES["c"]
        if self.allow_partial_sync_writes:
            return WORLD_CASES["b"]
        return WORLD_CASES["a"]


def world_config(world: str, max_events: int | None = None, **overrides) -> ExploreConfig:
    """Default configuration for one of the escalating worlds."""
    presets = {
        "a": dict(max_events=5, page_size=4,
                  allow_partial_sync_writes=False, allow_wb_duration=False),
        "b": dict(max_events=6, page_size=4,
                  allow_partial_sync_writes=True, allow_wb_duration=False),
        # The split lifecycle tripples the write-back moves; a 2-byte page
        # keeps the bound-7 exhaustive sweep near a minute.
        "c": dict(max_events=7, page_size=2,
                  allow_partial_sync_writes=True, allow_wb_duration=True),
    }
    if world not in presets:
        raise ValueError(f"unknown world {world!r} (a, b, or c)")
    kwargs = presets[world]
    if max_events is not None:
        kwargs["max_events"] = max_events
    kwargs.update(overrides)
    return ExploreConfig(**kwargs)


# --- enumeration ------------------------------------------------------------

_IDLE = 0
_PENDING = 1
_DELIVERED = 2


def _legal_moves(cfg: ExploreConfig, pages: tuple[tuple[bool, int], ...],
                 armed: bool, used: int) -> list[tuple]:
    """Moves = (tag, page, off, symbol-index); deterministic order."""
    moves: list[tuple] = []
    nsyms = min(used + 1, len(cfg.alphabet))
    for p, (dirty, phase) in enumerate(pages):
        for si in range(nsyms):
            moves.append(("w", p, 0, si))
    moves.append(("s", -1, 0, 0))
    if cfg.allow_partial_sync_writes and (armed or not cfg.strict_sync_pattern):
        for p in range(cfg.page_count):
            for off in range(cfg.page_size):
                for si in range(nsyms):
                    moves.append(("a", p, off, si))
    for p, (dirty, phase) in enumerate(pages):
        if cfg.allow_wb_duration:
            if phase == _IDLE and dirty:
                moves.append(("bs", p, 0, 0))
            elif phase == _PENDING:
                moves.append(("br", p, 0, 0))
            elif phase == _DELIVERED:
                moves.append(("be", p, 0, 0))
        elif dirty:
            moves.append(("wb", p, 0, 0))
    return moves


def _apply_move(cfg: ExploreConfig, move: tuple,
                pages: tuple[tuple[bool, int], ...], armed: bool, used: int):
    """Returns (events, pages', armed', used')."""
    tag, p, off, si = move
    sym = cfg.alphabet[si] if tag in ("w", "a") else ""
    if tag == "w":
        ev = (Event(WRITE, p, 0, sym.encode() * cfg.page_size),)
        pp = pages[:p] + ((True, pages[p][1]),) + pages[p + 1:]
        return ev, pp, False, max(used, si + 1)
    if tag == "s":
        return (Event(SYNC),), pages, True, used
    if tag == "a":
        ev = (Event(SYNC_WRITE, p, off, sym.encode()),)
        pp = pages[:p] + ((True, pages[p][1]),) + pages[p + 1:]
        return ev, pp, armed, max(used, si + 1)
    if tag == "wb":
        ev = (Event(WB_START, p), Event(WB_DELIVER, p), Event(WB_END, p))
        pp = pages[:p] + ((False, _IDLE),) + pages[p + 1:]
        return ev, pp, armed, used
    if tag == "bs":
        pp = pages[:p] + ((False, _PENDING),) + pages[p + 1:]
        return (Event(WB_START, p),), pp, armed, used
    if tag == "br":
        pp = pages[:p] + ((pages[p][0], _DELIVERED),) + pages[p + 1:]
        return (Event(WB_DELIVER, p),), pp, armed, used
    # "be"
    pp = pages[:p] + ((pages[p][0], _IDLE),) + pages[p + 1:]
    return (Event(WB_END, p),), pp, armed, used


def enumerate_schedules(cfg: ExploreConfig) -> Iterator[Schedule]:
    """Every valid schedule within the bound, crash-free and crashed.

    Crashed schedules end with the crash followed by one read per page,
    so every verdict has a concrete post-crash read to witness.
    """
    cfg.validate()
    crash_tail = (Event(CRASH),) + tuple(Event(READ, p) for p in range(cfg.page_count))

    def walk(events: tuple[Event, ...], nmoves: int,
             pages: tuple[tuple[bool, int], ...],
             armed: bool, used: int) -> Iterator[Schedule]:
        yield Schedule(events, cfg.page_size, cfg.page_count)
        yield Schedule(events + crash_tail, cfg.page_size, cfg.page_count)
        if nmoves == cfg.max_events:
            return
        for move in _legal_moves(cfg, pages, armed, used):
            ev, pp, na, nu = _apply_move(cfg, move, pages, armed, used)
            yield from walk(events + ev, nmoves + 1, pp, na, nu)

    start = tuple((False, _IDLE) for _ in range(cfg.page_count))
    yield from walk((), 0, start, True, 0)


def sample_schedules(cfg: ExploreConfig, n: int, seed: int = 0,
                     shard: int = 0, nshards: int = 1) -> Iterator[Schedule]:
    """``n`` pseudo-random valid schedules; sample i depends only on
    (seed, i), so sharding over workers cannot change the sample set."""
    cfg.validate()
    crash_tail = (Event(CRASH),) + tuple(Event(READ, p) for p in range(cfg.page_count))
    for i in range(n):
        if i % nshards != shard:
            continue
        rng = random.Random(seed * 1_000_003 + i)
        events: tuple[Event, ...] = ()
        pages = tuple((False, _IDLE) for _ in range(cfg.page_count))
        armed, used = True, 0
        for _ in range(rng.randint(0, cfg.max_events)):
            moves = _legal_moves(cfg, pages, armed, used)
            if not moves:
                break
            ev, pages, armed, used = _apply_move(cfg, rng.choice(moves), pages, armed, used)
            events += ev
        if rng.random() < 0.9:
            events += crash_tail
        yield Schedule(events, cfg.page_size, cfg.page_count)


# --- single runs ------------------------------------------------------------

def run_details(s: Schedule, strat: Strategy) -> tuple[Verdict, dict[int, bytes]]:
    """Verdict plus the recovered bytes per page (empty if crash-free)."""
    ensure_valid(s)
    state = run_unchecked(s, strat.hooks)
    if not state.crashed:
        return PASS_VERDICT, {}
    recovered: dict[int, bytes] = {}
    verdict = PASS_VERDICT
    for p in range(s.page_count):
        recovered[p] = strat.recover(state.nvm, state.disk, p, s.page_size)
        if verdict.passed:
            v = check_against(page_acceptance(state.history, p), recovered[p])
            if not v.passed:
                verdict = v
    return verdict, recovered


def run_one(s: Schedule, strat: Strategy) -> Verdict:
    """Deterministic verdict for one schedule under one strategy."""
    return run_details(s, strat)[0]


@dataclass(frozen=True)
class Counterexample:
    schedule: Schedule
    strategy: str
    verdict: Verdict
    minimized: bool = False


# --- sweeping ---------------------------------------------------------------

@dataclass
class StrategyStats:
    schedules: int = 0
    passes: int = 0
    violations: int = 0
    # Smallest violating schedule by (length, encoding): (key, schedule, witness).
    first: tuple[tuple[int, str], Schedule, str] | None = None

    def note(self, key: tuple[int, str], sched: Schedule, verdict: Verdict) -> None:
        self.schedules += 1
        if verdict.passed:
            self.passes += 1
            return
        self.violations += 1
        entry = (key, sched, verdict.render())
        if self.first is None or entry[0] < self.first[0]:
            self.first = entry


@dataclass
class SweepReport:
    config: ExploreConfig
    strategy_names: tuple[str, ...]
    total_schedules: int = 0
    crashed_schedules: int = 0
    stats: dict[str, StrategyStats] = field(default_factory=dict)
    pattern_counts: dict[str, int] = field(default_factory=dict)
    sample: tuple[int, int] | None = None  # (n, seed)
    records: list[str] | None = None

    def first_counterexample(self, strategy: str) -> Counterexample | None:
        entry = self.stats[strategy].first
        if entry is None:
            return None
        sched = entry[1]
        return Counterexample(sched, strategy, run_one(sched, get_strategy(strategy)))

    def to_lines(self) -> list[str]:
        """Deterministic textual report (identical for any worker count)."""
        cfg = self.config
        out = [
            f"schedules={self.total_schedules} crashed={self.crashed_schedules} "
            f"max_events={cfg.max_events} page_size={cfg.page_size} "
            f"page_count={cfg.page_count} partial={int(cfg.allow_partial_sync_writes)} "
            f"wb_split={int(cfg.allow_wb_duration)} strict={int(cfg.strict_sync_pattern)}"
        ]
        if self.sample is not None:
            out.append(f"sampled n={self.sample[0]} seed={self.sample[1]}")
        for name in self.strategy_names:
            st = self.stats[name]
            out.append(f"strategy {name}: checked={st.schedules} pass={st.passes} "
                       f"violations={st.violations}")
            if st.first is not None:
                out.append(f"  first-counterexample {st.first[1].encode()}")
                out.append(f"  witness {st.first[2]}")
        for case in sorted(self.pattern_counts):
            out.append(f"case {case}: matched={self.pattern_counts[case]}")
        return out


def _merge(into: SweepReport, part: SweepReport) -> None:
    into.total_schedules += part.total_schedules
    into.crashed_schedules += part.crashed_schedules
    for name, st in part.stats.items():
        dst = into.stats.setdefault(name, StrategyStats())
        dst.schedules += st.schedules
        dst.passes += st.passes
        dst.violations += st.violations
        if st.first is not None and (dst.first is None or st.first[0] < dst.first[0]):
            dst.first = st.first
    for case, n in part.pattern_counts.items():
        into.pattern_counts[case] = into.pattern_counts.get(case, 0) + n
    if part.records is not None:
        if into.records is None:
            into.records = []
        into.records.extend(part.records)


def _sweep_shard(cfg: ExploreConfig, names: tuple[str, ...], shard: int, nshards: int,
                 sample: int | None, seed: int, keep_records: bool) -> SweepReport:
    strats = [get_strategy(n) for n in names]
    report = SweepReport(cfg, names, stats={n: StrategyStats() for n in names},
                         pattern_counts={c: 0 for c in cfg.cases},
                         records=[] if keep_records else None)
    if sample is None:
        schedules: Iterator[Schedule] = (
            s for i, s in enumerate(enumerate_schedules(cfg)) if i % nshards == shard)
    else:
        schedules = sample_schedules(cfg, sample, seed, shard, nshards)
    pages = range(cfg.page_count)
    for sched in schedules:
        report.total_schedules += 1
        key = sched.sort_key() if keep_records else None
        shared = run_shared(sched)
        if shared.crashed:
            report.crashed_schedules += 1
            accs = [page_acceptance(shared.history, p) for p in pages]
            for case in tag_cases(sched, cfg.cases):
                report.pattern_counts[case] += 1
        for strat in strats:
            if not shared.crashed:
                verdict = PASS_VERDICT
            else:
                nvm, disk = materialize_log(sched, shared, strat.hooks)
                verdict = PASS_VERDICT
                for p in pages:
                    v = check_against(accs[p], strat.recover(nvm, disk, p, cfg.page_size))
                    if not v.passed:
                        verdict = v
                        break
            if not verdict.passed and key is None:
                key = sched.sort_key()
            report.stats[strat.name].note(key, sched, verdict)
            if keep_records:
                report.records.append(
                    f"{key[1]}\t{strat.name}\t{verdict.status}\t{verdict.render()}")
    return report


def sweep(cfg: ExploreConfig, strategies: tuple[str, ...] | None = None,
          workers: int = 1, sample: int | None = None, seed: int = 0,
          keep_records: bool = False) -> SweepReport:
    """Run every (schedule, strategy) pair and aggregate verdicts.

    Exhaustive over :func:`enumerate_schedules` unless ``sample`` is
    given.  The report is byte-identical for any ``workers`` value:
    shards partition on a content-independent index and results are
    merged with order-insensitive reductions, then sorted.
    """
    cfg.validate()
    names = tuple(strategies or cfg.strategies)
    for n in names:
        get_strategy(n)
    if workers <= 1:
        report = _sweep_shard(cfg, names, 0, 1, sample, seed, keep_records)
    else:
        report = SweepReport(cfg, names, stats={n: StrategyStats() for n in names},
                             pattern_counts={c: 0 for c in cfg.cases},
                             records=[] if keep_records else None)
        ctx = get_context("fork")
        with ctx.Pool(workers) as pool:
            args = [(cfg, names, w, workers, sample, seed, keep_records)
                    for w in range(workers)]
            for part in pool.starmap(_sweep_shard, args):
                _merge(report, part)
    if sample is not None:
        report.sample = (sample, seed)
    if report.records is not None:
        report.records.sort(key=_record_key)
    return report


def _record_key(line: str) -> tuple[int, str]:
    sid = line.split("\t", 1)[0]
    return (sid.count("|") + 1 if sid != "empty" else 0, line)


# --- counterexample minimization -------------------------------------------

def shrink(cx: Counterexample) -> Counterexample:
    """Greedy minimization: drop events, then shorten and simplify write
    data, as long as the violation reproduces on a valid schedule."""
    strat = get_strategy(cx.strategy)

    def still_fails(cand: Schedule) -> bool:
        from .model import validate_schedule
        if validate_schedule(cand):
            return False
        return not run_one(cand, strat).passed

    sched = cx.schedule
    events = list(sched.events)
    blank_fill = b"a"

    changed = True
    while changed:
        changed = False
        crash_pos = next((i for i, e in enumerate(events) if e.kind == CRASH), None)
        for i in range(len(events)):
            if events[i].kind == CRASH:
                continue
            # Post-crash reads are the observation that witnesses the
            # violation; they stay.
            if events[i].kind == READ and crash_pos is not None and i > crash_pos:
                continue
            cand = Schedule(tuple(events[:i] + events[i + 1:]),
                            sched.page_size, sched.page_count)
            if still_fails(cand):
                del events[i]
                changed = True
                break
        if changed:
            continue
        for i, e in enumerate(events):
            if e.kind not in (WRITE, SYNC_WRITE):
                continue
            shorter = []
            if len(e.data) > 1:
                shorter = [e.data[:len(e.data) // 2], e.data[:1]]
            uniform = blank_fill * len(e.data)
            if e.data != uniform:
                shorter.append(uniform)
            for nd in shorter:
                cand_events = list(events)
                cand_events[i] = Event(e.kind, e.page, e.off, nd)
                cand = Schedule(tuple(cand_events), sched.page_size, sched.page_count)
                if still_fails(cand):
                    events = cand_events
                    changed = True
                    break
            if changed:
                break

    out = Schedule(tuple(events), sched.page_size, sched.page_count)
    return Counterexample(out, cx.strategy, run_one(out, strat), minimized=True)
