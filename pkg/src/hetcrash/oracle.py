"""Independent checker for sync semantics.

The rule being enforced: once a sync has returned, the data written
before it must survive any later crash.  Per byte, recovery is allowed to
return the value of the last synced write to that byte or of any later
write (an unsynced write MAY be persisted, it just must not be required);
anything older is a violation, witnessed by the (write, sync, crash,
read) quadruple that proves it.

The checker looks only at the executed event history and the recovered
bytes.  It knows nothing about NVM logs, markers, or latest-device maps,
which is what makes it a fair referee for every recovery strategy.
"""

from __future__ import annotations

from dataclasses import dataclass

from .devices import History
from .model import INIT, SYNC, SYNC_WRITE, WRITE, BoundsError, Event, overlay

PASS = "PASS"
VIOLATION = "VIOLATION"


@dataclass(frozen=True)
class Witness:
    """First offending byte plus the quadruple that convicts it."""

    page: int
    byte: int
    actual: int
    expected: tuple[int, ...]  # sorted acceptable byte values
    write_seq: int             # 0 = the initial consistent state
    write_label: str
    sync_seq: int | None       # None when the floor is the initial state

    def render(self) -> str:
        exp = "".join(chr(v) for v in self.expected)
        sync = f"@{self.sync_seq}" if self.sync_seq is not None else "-"
        return (f"page={self.page};byte={self.byte};expected={exp};"
                f"actual={chr(self.actual)};write=@{self.write_seq}:{self.write_label};"
                f"sync={sync}")


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: Witness | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def render(self) -> str:
        if self.witness is not None:
            return self.witness.render()
        return self.detail or "-"


PASS_VERDICT = Verdict(PASS)


@dataclass
class PageAcceptance:
    """Per-byte acceptance table for one page of one history."""

    page: int
    page_size: int
    acceptable: list[set[int]]
    floor_seq: list[int]
    floor_write: list[Event | None]
    floor_sync: list[int | None]


def _covering_writes(h: History, page: int) -> list[tuple[int, Event]]:
    return [(seq, e) for seq, e in h.events
            if e.page == page and e.kind in (WRITE, SYNC_WRITE)]


def page_acceptance(h: History, page: int) -> PageAcceptance:
    ps = h.page_size
    init = h.init_pages[page]
    sync_seqs = [seq for seq, e in h.events if e.kind == SYNC]
    last_sync = sync_seqs[-1] if sync_seqs else 0

    acceptable: list[set[int]] = [set() for _ in range(ps)]
    floor_seq = [0] * ps
    floor_write: list[Event | None] = [None] * ps
    floor_sync: list[int | None] = [None] * ps
    per_byte: list[list[tuple[int, int]]] = [[] for _ in range(ps)]  # (seq, value)

    writes = _covering_writes(h, page)
    for seq, e in writes:
        synced = e.kind == SYNC_WRITE or last_sync > seq
        for i, value in enumerate(e.data):
            b = e.off + i
            per_byte[b].append((seq, value))
            if synced and seq > floor_seq[b]:
                floor_seq[b] = seq
                floor_write[b] = e
                if e.kind == SYNC_WRITE:
                    floor_sync[b] = seq
                else:
                    floor_sync[b] = next(s for s in sync_seqs if s > seq)

    for b in range(ps):
        floor = floor_seq[b]
        vals = {v for seq, v in per_byte[b] if seq >= floor}
        if floor == 0:
            vals.add(init[b])
        acceptable[b] = vals
    return PageAcceptance(page, ps, acceptable, floor_seq, floor_write, floor_sync)


def synced_floor(h: History, page: int, byte: int) -> int:
    """Stamp of the newest write to (page, byte) covered by a returned
    sync before the crash; 0 when only the initial state qualifies."""
    return page_acceptance(h, page).floor_seq[byte]


def acceptable_bytes(h: History, page: int, byte: int) -> set[int]:
    """Byte values recovery may legally return at (page, byte).  Never empty."""
    return page_acceptance(h, page).acceptable[byte]


def check_against(acc: PageAcceptance, recovered: bytes) -> Verdict:
    for b, value in enumerate(recovered):
        ok = acc.acceptable[b]
        if value not in ok:
            e = acc.floor_write[b]
            witness = Witness(
                page=acc.page,
                byte=b,
                actual=value,
                expected=tuple(sorted(ok)),
                write_seq=acc.floor_seq[b],
                write_label=e.label() if e is not None else "initial state",
                sync_seq=acc.floor_sync[b],
            )
            return Verdict(VIOLATION, witness)
    return PASS_VERDICT


def check(h: History, recovered: bytes, page: int) -> Verdict:
    """PASS iff every recovered byte is acceptable for (history, page)."""
    if len(recovered) != h.page_size:
        raise BoundsError(f"recovered page has {len(recovered)} bytes, expected {h.page_size}")
    return check_against(page_acceptance(h, page), recovered)


def replay_full_history(h: History, page: int) -> bytes:
    """Apply every write (synced or not) over the initial state.

    The result is the true pre-crash cache image; the checker must always
    accept it, which makes this a soundness self-test for the oracle.
    """
    page_bytes = h.init_pages[page]
    for _, e in h.events:
        if e.page == page and e.kind in (WRITE, SYNC_WRITE):
            page_bytes = overlay(page_bytes, e.data, e.off)
    return page_bytes


def strict_check(h: History, recovered: bytes, page: int) -> Verdict:
    """Opt-in whole-page mode: recovered must also be byte-identical to
    some pre-crash point-in-time image of the page (no byte mixing)."""
    verdict = check(h, recovered, page)
    if not verdict.passed:
        return verdict
    image = h.init_pages[page]
    if recovered == image:
        return PASS_VERDICT
    for _, e in h.events:
        if e.page == page and e.kind in (WRITE, SYNC_WRITE):
            image = overlay(image, e.data, e.off)
            if recovered == image:
                return PASS_VERDICT
    return Verdict(VIOLATION, None, "recovered page is not a point-in-time image")
