"""Core value types: pages, events, NVM records, schedules.

Pages are fixed-length byte strings; '-' marks a byte that nothing has
written yet.  A schedule is an ordered event list with at most one crash,
after which only reads may appear.  Everything else in the simulator is
built on the byte-overlay arithmetic and the schedule validity rules
defined here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

UNWRITTEN = b"-"

# Event kinds.
INIT = "init"
WRITE = "write"
SYNC = "sync"
SYNC_WRITE = "syncw"
WB_START = "wb_start"
WB_DELIVER = "wb_deliver"
WB_END = "wb_end"
CRASH = "crash"
READ = "read"

WB_KINDS = frozenset({WB_START, WB_DELIVER, WB_END})
DATA_KINDS = frozenset({INIT, WRITE, SYNC_WRITE})
PAGE_KINDS = frozenset({INIT, WRITE, SYNC_WRITE, READ}) | WB_KINDS
# Events counted against an exploration bound.  A write-back counts once,
# at its start, whether or not the deliver/end half made it into the
# schedule before the crash.
MUTATION_KINDS = frozenset({WRITE, SYNC, SYNC_WRITE, WB_START})

NVM_DEV = "nvm"
DISK_DEV = "disk"


class HetcrashError(Exception):
    """Base class for simulator errors."""


class BoundsError(HetcrashError):
    """Byte range escapes the page (malformed record or trace)."""


class InvalidTraceError(HetcrashError):
    """Schedule violates an execution precondition."""


class CorruptStateError(HetcrashError):
    """Post-crash state a correct strategy/hook pair can never produce."""


class Event(NamedTuple):
    kind: str
    page: int | None = None
    off: int = 0
    data: bytes = b""

    @property
    def length(self) -> int:
        return len(self.data)

    def label(self) -> str:
        if self.kind in DATA_KINDS:
            return f"{self.kind} p{self.page} @{self.off} {self.data.decode('ascii')!r}"
        if self.page is not None:
            return f"{self.kind} p{self.page}"
        return self.kind


class NvmRecord(NamedTuple):
    """One persistent log entry: a data write or a write-back marker."""

    rtype: str  # "write" | "writeback"
    page: int
    off: int
    data: bytes
    vid: int
    exp_vid: int = 0

    def is_writeback(self) -> bool:
        return self.rtype == "writeback"

    def is_whole_page(self, page_size: int) -> bool:
        return self.rtype == "write" and self.off == 0 and len(self.data) == page_size


def overlay(base: bytes, data: bytes, off: int, length: int | None = None) -> bytes:
    """Return ``base`` with ``data`` written at ``off``; ``base`` untouched."""
    if length is not None and length != len(data):
        raise BoundsError(f"declared length {length} != data length {len(data)}")
    if off < 0 or off + len(data) > len(base):
        raise BoundsError(f"overlay [{off}, {off + len(data)}) escapes page of {len(base)} bytes")
    if not data:
        return base
    return base[:off] + data + base[off + len(data):]


class Violation(NamedTuple):
    pos: int
    rule: str
    detail: str = ""


@dataclass(frozen=True)
class Schedule:
    """An event sequence plus the page geometry it runs against."""

    events: tuple[Event, ...]
    page_size: int = 6
    page_count: int = 1

    @property
    def crash_pos(self) -> int | None:
        for i, e in enumerate(self.events):
            if e.kind == CRASH:
                return i
        return None

    def mutation_count(self) -> int:
        return sum(1 for e in self.events if e.kind in MUTATION_KINDS)

    def encode(self) -> str:
        """Compact stable identifier, also used to sort report records."""
        short = {INIT: "i", WRITE: "w", SYNC_WRITE: "a", WB_START: "bs",
                 WB_DELIVER: "br", WB_END: "be", READ: "r"}
        parts = []
        for e in self.events:
            if e.kind in DATA_KINDS:
                parts.append(f"{short[e.kind]}{e.page}:{e.off}:{e.data.decode('ascii')}")
            elif e.kind == SYNC:
                parts.append("s")
            elif e.kind == CRASH:
                parts.append("c")
            else:
                parts.append(f"{short[e.kind]}{e.page}")
        return "|".join(parts) or "empty"

    def sort_key(self) -> tuple[int, str]:
        return (len(self.events), self.encode())


def validate_schedule(s: Schedule) -> list[Violation]:
    """Return every invariant violation in ``s``; empty means valid.

    Checks event shapes, page bounds, the single-crash rule, init
    placement, and the per-page dirty/writeback flag machine (a write-back
    may only start on a dirty page, and its start/deliver/end halves must
    nest properly).
    """
    out: list[Violation] = []
    crash_seen = False
    non_init_seen = False
    inited: set[int] = set()
    dirty: set[int] = set()
    wb_phase: dict[int, str] = {}  # page -> "pending" | "delivered"

    for i, e in enumerate(s.events):
        if e.kind in PAGE_KINDS:
            if e.page is None:
                out.append(Violation(i, "missing page", e.kind))
                continue
            if not 0 <= e.page < s.page_count:
                out.append(Violation(i, "page out of range", f"page {e.page}"))
                continue
        elif e.page is not None:
            out.append(Violation(i, "unexpected page", e.kind))

        if e.kind in DATA_KINDS:
            if e.kind == INIT and (e.off != 0 or len(e.data) != s.page_size):
                out.append(Violation(i, "init must cover the whole page"))
            elif e.kind != INIT and len(e.data) < 1:
                out.append(Violation(i, "empty write"))
            if e.off < 0 or e.off + len(e.data) > s.page_size:
                out.append(Violation(i, "write crosses page boundary",
                                     f"off={e.off} len={len(e.data)}"))
        elif e.data:
            out.append(Violation(i, "unexpected data", e.kind))

        if crash_seen and e.kind != READ:
            rule = "multiple crash" if e.kind == CRASH else "event after crash"
            out.append(Violation(i, rule, e.kind))
            continue

        if e.kind == INIT:
            if non_init_seen:
                out.append(Violation(i, "init not first"))
            if e.page in inited:
                out.append(Violation(i, "duplicate init", f"page {e.page}"))
            inited.add(e.page)  # type: ignore[arg-type]
            continue
        non_init_seen = True

        if e.kind == CRASH:
            crash_seen = True
        elif e.kind in (WRITE, SYNC_WRITE):
            dirty.add(e.page)  # type: ignore[arg-type]
        elif e.kind == WB_START:
            if e.page in wb_phase:
                out.append(Violation(i, "nested writeback", f"page {e.page}"))
            elif e.page not in dirty:
                out.append(Violation(i, "wb_start on clean page", f"page {e.page}"))
            else:
                dirty.discard(e.page)  # type: ignore[arg-type]
                wb_phase[e.page] = "pending"  # type: ignore[index]
        elif e.kind == WB_DELIVER:
            if wb_phase.get(e.page) != "pending":
                out.append(Violation(i, "unmatched wb_deliver", f"page {e.page}"))
            else:
                wb_phase[e.page] = "delivered"  # type: ignore[index]
        elif e.kind == WB_END:
            if wb_phase.get(e.page) != "delivered":
                out.append(Violation(i, "unmatched wb_end", f"page {e.page}"))
            else:
                del wb_phase[e.page]

    return out


def ensure_valid(s: Schedule) -> None:
    bad = validate_schedule(s)
    if bad:
        first = bad[0]
        raise InvalidTraceError(
            f"invalid schedule ({len(bad)} problem(s)); first: "
            f"event {first.pos}: {first.rule} {first.detail}".rstrip()
        )


def blank_page(page_size: int) -> bytes:
    return UNWRITTEN * page_size
