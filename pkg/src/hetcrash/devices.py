"""Three-tier storage simulator.

Executes a schedule step by step against a volatile DRAM page cache, an
append-only NVM record log, and a disk image.  Write-back is a duration:
``wb_start`` clears DIRTY and sets WRITEBACK, ``wb_deliver`` copies the
cache page of that instant to disk, ``wb_end`` clears WRITEBACK.  A crash
erases the cache, the in-flight write-back markers, and the volatile NVM
counters; the record log, the per-page latest-device map, and the disk
image survive.

Recovery strategies plug in through :class:`StrategyHooks`.  Hooks may
append NVM records and update the log's bookkeeping, but never touch the
disk image; that keeps one simulator honest for every strategy.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from .model import (
    CRASH,
    DISK_DEV,
    INIT,
    NVM_DEV,
    READ,
    SYNC,
    SYNC_WRITE,
    WB_DELIVER,
    WB_END,
    WB_START,
    WRITE,
    Event,
    InvalidTraceError,
    NvmRecord,
    Schedule,
    blank_page,
    ensure_valid,
    overlay,
)


@dataclass
class NvmLog:
    """Persistent record log plus the counters Algorithms 1 and 3 keep.

    ``records`` and ``latest_dev`` survive a crash; ``page_ver_id`` and
    ``prep_rec`` are volatile and vanish with the power.
    """

    records: list[NvmRecord] = field(default_factory=list)
    latest_dev: dict[int, str] = field(default_factory=dict)
    page_ver_id: dict[int, int] = field(default_factory=dict)
    prep_rec: dict[int, int] = field(default_factory=dict)  # page -> expiring vid

    def _next_vid(self, page: int) -> int:
        vid = self.page_ver_id.get(page, 0)
        self.page_ver_id[page] = vid + 1
        return vid

    def append_write(self, page: int, off: int, data: bytes) -> NvmRecord:
        rec = NvmRecord("write", page, off, data, self._next_vid(page))
        self.records.append(rec)
        return rec

    def append_writeback(self, page: int, exp_vid: int = 0) -> NvmRecord:
        rec = NvmRecord("writeback", page, 0, b"", self._next_vid(page), exp_vid)
        self.records.append(rec)
        return rec

    def records_for(self, page: int) -> list[NvmRecord]:
        return [r for r in self.records if r.page == page]

    def rebuild_counters(self) -> None:
        """Recompute the volatile per-page counter as (max logged vid) + 1.

        Sound because recovery only compares vids already in the log; the
        counter merely has to keep future vids above every logged one.
        """
        self.page_ver_id = {}
        for rec in self.records:
            nxt = rec.vid + 1
            if nxt > self.page_ver_id.get(rec.page, 0):
                self.page_ver_id[rec.page] = nxt


@dataclass
class DiskState:
    """Disk image; ``pages`` mutates only at the wb_deliver instant."""

    pages: dict[int, bytes] = field(default_factory=dict)
    inflight: dict[int, str] = field(default_factory=dict)  # page -> "pending"|"delivered"


@dataclass
class DramCache:
    pages: dict[int, bytes] = field(default_factory=dict)
    dirty: set[int] = field(default_factory=set)
    writeback: set[int] = field(default_factory=set)


@dataclass
class History:
    """Executed events with sequence stamps, the oracle's input.

    ``init_pages`` is the page content of the consistent t-zero state
    (after any explicit init events); writes are stamped by their position
    in ``events`` and the stamp 0 names that initial state.
    """

    page_size: int
    page_count: int
    init_pages: dict[int, bytes]
    events: list[tuple[int, Event]] = field(default_factory=list)
    crashed: bool = False
    crash_seq: int | None = None

    def reads_of(self, page: int) -> list[int]:
        return [seq for seq, e in self.events
                if e.kind == READ and e.page == page and self.crash_seq is not None
                and seq > self.crash_seq]


@dataclass(frozen=True)
class StrategyHooks:
    """Bookkeeping callbacks a recovery strategy installs.

    Each callback receives a context exposing ``nvm`` (the log) and
    ``page_bytes(page)`` (the current cache content).  ``on_sync`` fires
    once per page that is DIRTY or under WRITEBACK when a sync runs; data
    in either state may not have reached the disk yet, so it must land on
    NVM before the sync may return.
    """

    on_sync: Callable | None = None
    on_sync_write: Callable | None = None
    on_wb_start: Callable | None = None
    on_wb_deliver: Callable | None = None
    on_wb_end: Callable | None = None


NO_HOOKS = StrategyHooks()


@dataclass
class SystemState:
    """One simulated machine: cache + NVM + disk plus the run history.

    Single-threaded by design; run independent instances concurrently
    instead of sharing one.
    """

    page_size: int
    page_count: int
    cache: DramCache
    nvm: NvmLog
    disk: DiskState
    history: History
    crashed: bool = False
    _seq: int = 0

    def page_bytes(self, page: int) -> bytes:
        return self.cache.pages[page]


def initial_state(page_size: int, page_count: int) -> SystemState:
    """Consistent t-zero state: unwritten pages on all three tiers.

    Each page gets a whole-page NVM record so every strategy has an
    anchor to rebuild from, and latest_dev starts at NVM.
    """
    cache = DramCache()
    nvm = NvmLog()
    disk = DiskState()
    blank = blank_page(page_size)
    init_pages: dict[int, bytes] = {}
    for p in range(page_count):
        cache.pages[p] = blank
        disk.pages[p] = blank
        nvm.append_write(p, 0, blank)
        nvm.latest_dev[p] = NVM_DEV
        init_pages[p] = blank
    history = History(page_size, page_count, init_pages)
    return SystemState(page_size, page_count, cache, nvm, disk, history)


def step(state: SystemState, e: Event, hooks: StrategyHooks) -> SystemState:
    """Apply one event in place and return the state.

    Raises InvalidTraceError on transitions a valid schedule can never
    take (mutation after crash, write-back of a clean page, out-of-order
    write-back halves).
    """
    state._seq += 1
    state.history.events.append((state._seq, e))

    if state.crashed:
        if e.kind != READ:
            raise InvalidTraceError(f"{e.kind} after crash")
        return state

    cache, nvm, disk = state.cache, state.nvm, state.disk
    kind = e.kind

    if kind == INIT:
        page = e.page
        cache.pages[page] = e.data
        disk.pages[page] = e.data
        nvm.append_write(page, 0, e.data)
        nvm.latest_dev[page] = NVM_DEV
        state.history.init_pages[page] = e.data
    elif kind == WRITE:
        cache.pages[e.page] = overlay(cache.pages[e.page], e.data, e.off)
        cache.dirty.add(e.page)
    elif kind == SYNC:
        for page in sorted(cache.dirty | cache.writeback):
            if hooks.on_sync is not None:
                hooks.on_sync(state, page)
    elif kind == SYNC_WRITE:
        cache.pages[e.page] = overlay(cache.pages[e.page], e.data, e.off)
        cache.dirty.add(e.page)
        if hooks.on_sync_write is not None:
            hooks.on_sync_write(state, e.page, e.off, e.data)
    elif kind == WB_START:
        if e.page not in cache.dirty:
            raise InvalidTraceError(f"wb_start on clean page {e.page}")
        if e.page in cache.writeback:
            raise InvalidTraceError(f"nested writeback on page {e.page}")
        cache.dirty.discard(e.page)
        cache.writeback.add(e.page)
        disk.inflight[e.page] = "pending"
        if hooks.on_wb_start is not None:
            hooks.on_wb_start(state, e.page)
    elif kind == WB_DELIVER:
        if disk.inflight.get(e.page) != "pending":
            raise InvalidTraceError(f"unmatched wb_deliver on page {e.page}")
        # The version hitting the platter is whatever the cache holds right
        # now, somewhere between wb_start and wb_end.
        disk.pages[e.page] = cache.pages[e.page]
        disk.inflight[e.page] = "delivered"
        if hooks.on_wb_deliver is not None:
            hooks.on_wb_deliver(state, e.page)
    elif kind == WB_END:
        if disk.inflight.get(e.page) != "delivered":
            raise InvalidTraceError(f"unmatched wb_end on page {e.page}")
        cache.writeback.discard(e.page)
        del disk.inflight[e.page]
        if hooks.on_wb_end is not None:
            hooks.on_wb_end(state, e.page)
    elif kind == CRASH:
        state.crashed = True
        state.history.crashed = True
        state.history.crash_seq = state._seq
        cache.pages = {}
        cache.dirty = set()
        cache.writeback = set()
        nvm.page_ver_id = {}
        nvm.prep_rec = {}
        disk.inflight = {}
    elif kind == READ:
        pass  # no side effects; post-crash reads are checked against recovery output
    else:
        raise InvalidTraceError(f"unknown event kind {kind!r}")
    return state


def run_to_crash(s: Schedule, hooks: StrategyHooks) -> SystemState:
    """Validate ``s`` and fold :func:`step` over it (including the crash)."""
    ensure_valid(s)
    return run_unchecked(s, hooks)


def run_unchecked(s: Schedule, hooks: StrategyHooks) -> SystemState:
    state = initial_state(s.page_size, s.page_count)
    for e in s.events:
        step(state, e, hooks)
    return state


def scramble_volatiles(state: SystemState, seed: int = 0) -> None:
    """Randomize every field a crash erases; persistent state untouched.

    Used to demonstrate that recovery output depends only on (records,
    latest_dev, disk pages).
    """
    rng = random.Random(seed)
    for p in list(state.cache.pages):
        junk = bytes(rng.randrange(33, 127) for _ in range(state.page_size))
        state.cache.pages[p] = junk
        if rng.random() < 0.5:
            state.cache.dirty.add(p)
    state.nvm.page_ver_id = {p: rng.randrange(99) for p in range(state.page_count)}
    state.nvm.prep_rec = {p: rng.randrange(99) for p in range(state.page_count)}
    state.disk.inflight = {0: "pending"} if rng.random() < 0.5 else {}


# ---------------------------------------------------------------------------
# Shared-run capture: one device pass serving many strategies.
#
# Hooks never influence the cache, the flags, or the disk, so those evolve
# identically for every strategy.  A sweep can therefore run the machine
# once, record the hook call stream (with the page snapshot a sync would
# read), and replay just the stream per strategy to get its NVM log.
# ---------------------------------------------------------------------------


@dataclass
class SharedRun:
    history: History
    disk_pages: dict[int, bytes]
    calls: list[tuple]  # ("seed"|"init", page, data) | ("sync", page, snap) | ...
    crashed: bool


def run_shared(s: Schedule) -> SharedRun:
    calls: list[tuple] = []
    record = calls.append
    hooks = StrategyHooks(
        on_sync=lambda st, p: record(("sync", p, st.cache.pages[p])),
        on_sync_write=lambda st, p, off, data: record(("syncw", p, off, data)),
        on_wb_start=lambda st, p: record(("wb_start", p)),
        on_wb_deliver=lambda st, p: record(("wb_deliver", p)),
        on_wb_end=lambda st, p: record(("wb_end", p)),
    )
    state = run_unchecked(s, hooks)
    # Explicit inits append device-side records; they always precede hook
    # activity, so replaying them first preserves log order.
    inits = [("init", e.page, e.data) for _, e in state.history.events if e.kind == INIT]
    return SharedRun(state.history, state.disk.pages, inits + calls, state.crashed)


class _ReplayCtx:
    """Minimal stand-in for SystemState during hook replay."""

    __slots__ = ("nvm", "_snap")

    def __init__(self) -> None:
        self.nvm = NvmLog()
        self._snap: bytes = b""

    def page_bytes(self, page: int) -> bytes:
        return self._snap


def materialize_log(s: Schedule, shared: SharedRun, hooks: StrategyHooks) -> tuple[NvmLog, DiskState]:
    """Rebuild the (log, disk) a strategy would have after ``s`` crashed."""
    ctx = _ReplayCtx()
    nvm = ctx.nvm
    blank = blank_page(s.page_size)
    for p in range(s.page_count):
        nvm.append_write(p, 0, blank)
        nvm.latest_dev[p] = NVM_DEV
    for call in shared.calls:
        op = call[0]
        if op == "init":
            nvm.append_write(call[1], 0, call[2])
            nvm.latest_dev[call[1]] = NVM_DEV
        elif op == "sync":
            if hooks.on_sync is not None:
                ctx._snap = call[2]
                hooks.on_sync(ctx, call[1])
        elif op == "syncw":
            if hooks.on_sync_write is not None:
                hooks.on_sync_write(ctx, call[1], call[2], call[3])
        elif op == "wb_start":
            if hooks.on_wb_start is not None:
                hooks.on_wb_start(ctx, call[1])
        elif op == "wb_deliver":
            if hooks.on_wb_deliver is not None:
                hooks.on_wb_deliver(ctx, call[1])
        elif op == "wb_end":
            if hooks.on_wb_end is not None:
                hooks.on_wb_end(ctx, call[1])
    disk = DiskState(pages=shared.disk_pages, inflight={})
    if shared.crashed:
        nvm.page_ver_id = {}
        nvm.prep_rec = {}
    return nvm, disk
