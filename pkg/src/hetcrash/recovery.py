"""Crash-recovery strategies.

Every strategy is a pair: hooks that persist bookkeeping while the
machine runs, and a pure recovery function that turns the surviving
(records, latest_dev, disk image) into page bytes.  Recovery never looks
at volatile state and never mutates its inputs.

The sync path is common to all strategies: a sync (or fused sync-write)
must land the affected bytes on NVM before it returns.  The strategies
differ in what else they persist:

* ``naive-disk`` / ``naive-nvm``: nothing else; recovery blindly trusts
  one device.  Both are deliberately broken baselines.
* ``latest-dev``: a persistent per-page marker naming the device with the
  freshest copy, flipped to NVM on sync and to DISK when a write-back
  delivers.
* ``wb-mark-start`` / ``wb-mark-end``: a write-back marker record in the
  log, placed at the start or the end of the write-back; recovery replays
  log records newer than the last marker over the disk page.
* ``versioned-mark``: write records carry a monotonically increasing
  per-page version id.  At write-back start the strategy notes the
  current counter as the expiring vid; only at write-back end does a
  marker carrying that vid reach the log.  Recovery walks the log
  backward, keeps every record at or above the marker's expiring vid, and
  replays the survivors oldest-first over the disk page.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .devices import DiskState, NvmLog, StrategyHooks
from .model import DISK_DEV, NVM_DEV, CorruptStateError, NvmRecord, overlay

RecoverFn = Callable[[NvmLog, DiskState, int, int], bytes]


# --- hook building blocks ---------------------------------------------------

def _log_sync(ctx, page: int) -> None:
    ctx.nvm.append_write(page, 0, ctx.page_bytes(page))


def _log_sync_latest(ctx, page: int) -> None:
    ctx.nvm.append_write(page, 0, ctx.page_bytes(page))
    ctx.nvm.latest_dev[page] = NVM_DEV


def _log_sync_write(ctx, page: int, off: int, data: bytes) -> None:
    ctx.nvm.append_write(page, off, data)


def _log_sync_write_latest(ctx, page: int, off: int, data: bytes) -> None:
    ctx.nvm.append_write(page, off, data)
    ctx.nvm.latest_dev[page] = NVM_DEV


def _mark_writeback(ctx, page: int) -> None:
    ctx.nvm.append_writeback(page)


def _mark_disk_latest(ctx, page: int) -> None:
    ctx.nvm.latest_dev[page] = DISK_DEV


def _prepare_expiry(ctx, page: int) -> None:
    # Note, volatile for now, which vids a successful write-back will expire.
    ctx.nvm.prep_rec[page] = ctx.nvm.page_ver_id.get(page, 0)


def _commit_expiry(ctx, page: int) -> None:
    ctx.nvm.append_writeback(page, exp_vid=ctx.nvm.prep_rec.pop(page))


# --- recovery functions -----------------------------------------------------

def rebuild_from_nvm(nvm: NvmLog, page: int, page_size: int) -> bytes:
    """NVM-only rebuild: newest whole-page record, then later partials.

    Write-back marker records are ignored; this is how a strategy that
    knows nothing about write-backs reads its log.
    """
    recs = [r for r in nvm.records if r.page == page and not r.is_writeback()]
    anchor = None
    for i in range(len(recs) - 1, -1, -1):
        if recs[i].is_whole_page(page_size):
            anchor = i
            break
    if anchor is None:
        raise CorruptStateError(f"no whole-page NVM record for page {page}")
    page_bytes = recs[anchor].data
    for rec in recs[anchor + 1:]:
        page_bytes = overlay(page_bytes, rec.data, rec.off)
    return page_bytes


def recover_naive_disk(nvm: NvmLog, disk: DiskState, page: int, page_size: int) -> bytes:
    return disk.pages[page]


def recover_naive_nvm(nvm: NvmLog, disk: DiskState, page: int, page_size: int) -> bytes:
    return rebuild_from_nvm(nvm, page, page_size)


def recover_latest_dev(nvm: NvmLog, disk: DiskState, page: int, page_size: int) -> bytes:
    """Trust the persistent marker: disk page, or the NVM rebuild."""
    dev = nvm.latest_dev.get(page)
    if dev == DISK_DEV:
        return disk.pages[page]
    if dev == NVM_DEV:
        return rebuild_from_nvm(nvm, page, page_size)
    raise CorruptStateError(f"latest_dev not populated for page {page}")


def recover_wb_mark(nvm: NvmLog, disk: DiskState, page: int, page_size: int) -> bytes:
    """Replay records newer than the last write-back marker over the disk page.

    With no marker in the log the walk reaches the initial whole-page
    record; replaying from there over the (then identical) disk page gives
    the same bytes, so the disk page serves as the base either way.
    """
    tail: list[NvmRecord] = []
    recs = nvm.records_for(page)
    for rec in reversed(recs):
        if rec.is_writeback():
            break
        tail.append(rec)
    page_bytes = disk.pages[page]
    for rec in reversed(tail):
        page_bytes = overlay(page_bytes, rec.data, rec.off)
    return page_bytes


def versioned_walk(nvm: NvmLog, page: int) -> tuple[list[NvmRecord], list[int]]:
    """Backward walk of the versioned log.

    Returns the surviving write records (newest first) and the cutoff
    after each visited record.  The walk starts with cutoff 0 (keep
    everything), adopts a marker's expiring vid when it passes one, and
    stops at the first record whose vid falls below the cutoff.  Records
    at exactly the cutoff survive.
    """
    cutoff = 0
    survivors: list[NvmRecord] = []
    cutoffs: list[int] = []
    for rec in reversed(nvm.records_for(page)):
        if rec.vid < cutoff:
            break
        if rec.is_writeback():
            cutoff = rec.exp_vid
        else:
            survivors.append(rec)
        cutoffs.append(cutoff)
    return survivors, cutoffs


def recover_versioned(nvm: NvmLog, disk: DiskState, page: int, page_size: int) -> bytes:
    survivors, _ = versioned_walk(nvm, page)
    page_bytes = disk.pages[page]
    for rec in reversed(survivors):
        page_bytes = overlay(page_bytes, rec.data, rec.off)
    return page_bytes


# --- strategy objects -------------------------------------------------------

@dataclass(frozen=True)
class Strategy:
    name: str
    hooks: StrategyHooks
    recover: RecoverFn


_PLAIN_LOGGING = dict(on_sync=_log_sync, on_sync_write=_log_sync_write)

NAIVE_DISK = Strategy("naive-disk", StrategyHooks(**_PLAIN_LOGGING), recover_naive_disk)
NAIVE_NVM = Strategy("naive-nvm", StrategyHooks(**_PLAIN_LOGGING), recover_naive_nvm)

WB_MARK_AT_START = Strategy(
    "wb-mark-start",
    StrategyHooks(on_sync=_log_sync, on_sync_write=_log_sync_write,
                  on_wb_start=_mark_writeback),
    recover_wb_mark,
)
WB_MARK_AT_END = Strategy(
    "wb-mark-end",
    StrategyHooks(on_sync=_log_sync, on_sync_write=_log_sync_write,
                  on_wb_end=_mark_writeback),
    recover_wb_mark,
)
VERSIONED_MARK = Strategy(
    "versioned-mark",
    StrategyHooks(on_sync=_log_sync, on_sync_write=_log_sync_write,
                  on_wb_start=_prepare_expiry, on_wb_end=_commit_expiry),
    recover_versioned,
)


def latest_dev_strategy(mark_disk_at: str = "deliver") -> Strategy:
    """LATEST-DEV strategy; ``mark_disk_at`` picks the write-back instant
    (start, deliver, or end) at which the marker flips to DISK."""
    if mark_disk_at not in ("start", "deliver", "end"):
        raise ValueError(f"mark_disk_at: {mark_disk_at!r}")
    hooks = StrategyHooks(
        on_sync=_log_sync_latest,
        on_sync_write=_log_sync_write_latest,
        on_wb_start=_mark_disk_latest if mark_disk_at == "start" else None,
        on_wb_deliver=_mark_disk_latest if mark_disk_at == "deliver" else None,
        on_wb_end=_mark_disk_latest if mark_disk_at == "end" else None,
    )
    name = "latest-dev" if mark_disk_at == "deliver" else f"latest-dev-{mark_disk_at}"
    return Strategy(name, hooks, recover_latest_dev)


LATEST_DEV = latest_dev_strategy()

STRATEGIES: dict[str, Strategy] = {
    s.name: s
    for s in (NAIVE_DISK, NAIVE_NVM, LATEST_DEV, WB_MARK_AT_START,
              WB_MARK_AT_END, VERSIONED_MARK)
}
STRATEGY_NAMES = tuple(STRATEGIES)


def get_strategy(name: str) -> Strategy:
    try:
        return STRATEGIES[name]
    except KeyError:
        known = ", ".join(STRATEGY_NAMES)
        raise KeyError(f"unknown strategy {name!r} (known: {known})") from None
