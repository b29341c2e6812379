"""Core model: overlay arithmetic and schedule validation."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetcrash.model import (
    CRASH,
    INIT,
    READ,
    SYNC,
    SYNC_WRITE,
    WB_DELIVER,
    WB_END,
    WB_START,
    WRITE,
    BoundsError,
    Event,
    Schedule,
    overlay,
    validate_schedule,
)


def overlay_reference(base: bytes, data: bytes, off: int) -> bytes:
    # Independent per-byte loop the fast implementation is checked against.
    out = bytearray(base)
    for i, value in enumerate(data):
        out[off + i] = value
    return bytes(out)


class TestOverlay:
    def test_figure_string(self):
        assert overlay(b"------", b"rst", 1, 3) == b"-rst--"

    def test_empty_write_is_identity(self):
        page = b"abcdef"
        assert overlay(page, b"", 0, 0) == page

    def test_tail_overlay(self):
        # Derived by the per-byte reference loop.
        assert overlay_reference(b"a317--", b"xyz", 3) == b"a31xyz"
        assert overlay(b"a317--", b"xyz", 3, 3) == b"a31xyz"

    def test_base_unmodified(self):
        base = b"------"
        overlay(base, b"xx", 2)
        assert base == b"------"

    @pytest.mark.parametrize("off,data", [(5, b"xx"), (-1, b"x"), (7, b"x")])
    def test_out_of_range(self, off, data):
        with pytest.raises(BoundsError):
            overlay(b"------", data, off)

    def test_length_mismatch(self):
        with pytest.raises(BoundsError):
            overlay(b"------", b"xy", 0, 3)

    @given(st.data())
    @settings(max_examples=200)
    def test_later_wins_matches_reference(self, data):
        page_size = data.draw(st.integers(1, 8))
        base = bytes(data.draw(st.integers(33, 126)) for _ in range(page_size))
        page = base
        ref = base
        for _ in range(data.draw(st.integers(0, 3))):
            off = data.draw(st.integers(0, page_size - 1))
            length = data.draw(st.integers(0, page_size - off))
            chunk = bytes(data.draw(st.integers(33, 126)) for _ in range(length))
            page = overlay(page, chunk, off)
            ref = overlay_reference(ref, chunk, off)
        assert page == ref


def sched(*events, page_size=6, page_count=1):
    return Schedule(tuple(events), page_size, page_count)


class TestValidateSchedule:
    def test_unmatched_wb_deliver(self):
        bad = sched(Event(WB_DELIVER, 0))
        rules = {v.rule for v in validate_schedule(bad)}
        assert "unmatched wb_deliver" in rules

    def test_canonical_quadruple_ok(self):
        ok = sched(Event(WRITE, 0, 0, b"x"), Event(SYNC), Event(CRASH), Event(READ, 0))
        assert validate_schedule(ok) == []

    def test_nested_writeback(self):
        bad = sched(
            Event(WRITE, 0, 0, b"xx"),
            Event(WB_START, 0),
            Event(WB_START, 0),
            Event(WB_END, 0),
        )
        rules = {v.rule for v in validate_schedule(bad)}
        assert "nested writeback" in rules
        assert "unmatched wb_end" in rules

    def test_wb_start_needs_dirty_page(self):
        bad = sched(Event(WB_START, 0))
        assert {v.rule for v in validate_schedule(bad)} == {"wb_start on clean page"}

    def test_wb_end_needs_deliver(self):
        bad = sched(Event(WRITE, 0, 0, b"x"), Event(WB_START, 0), Event(WB_END, 0))
        assert "unmatched wb_end" in {v.rule for v in validate_schedule(bad)}

    def test_mutation_after_crash(self):
        bad = sched(Event(CRASH), Event(WRITE, 0, 0, b"x"))
        assert "event after crash" in {v.rule for v in validate_schedule(bad)}

    def test_read_after_crash_ok(self):
        ok = sched(Event(CRASH), Event(READ, 0))
        assert validate_schedule(ok) == []

    def test_single_crash(self):
        bad = sched(Event(CRASH), Event(CRASH))
        assert "multiple crash" in {v.rule for v in validate_schedule(bad)}

    def test_init_must_lead(self):
        bad = sched(Event(SYNC), Event(INIT, 0, 0, b"------"))
        assert "init not first" in {v.rule for v in validate_schedule(bad)}

    def test_duplicate_init(self):
        bad = sched(Event(INIT, 0, 0, b"------"), Event(INIT, 0, 0, b"aaaaaa"))
        assert "duplicate init" in {v.rule for v in validate_schedule(bad)}

    def test_page_out_of_range(self):
        bad = sched(Event(WRITE, 3, 0, b"x"))
        assert "page out of range" in {v.rule for v in validate_schedule(bad)}

    def test_boundary_crossing(self):
        bad = sched(Event(WRITE, 0, 4, b"xyz"))
        assert "write crosses page boundary" in {v.rule for v in validate_schedule(bad)}

    def test_empty_write_rejected(self):
        bad = sched(Event(SYNC_WRITE, 0, 0, b""))
        assert "empty write" in {v.rule for v in validate_schedule(bad)}

    def test_sync_with_page_rejected(self):
        bad = sched(Event(SYNC, 0))
        assert "unexpected page" in {v.rule for v in validate_schedule(bad)}

    def test_re_dirty_inside_writeback_is_valid(self):
        ok = sched(
            Event(WRITE, 0, 0, b"aa"),
            Event(WB_START, 0),
            Event(SYNC_WRITE, 0, 1, b"b"),
            Event(WB_DELIVER, 0),
            Event(WB_END, 0),
            Event(SYNC),
            Event(CRASH),
            Event(READ, 0),
        )
        assert validate_schedule(ok) == []


class TestScheduleHelpers:
    def test_crash_pos(self):
        s = sched(Event(WRITE, 0, 0, b"x"), Event(CRASH), Event(READ, 0))
        assert s.crash_pos == 1
        assert sched(Event(SYNC)).crash_pos is None

    def test_mutation_count_counts_wb_once(self):
        s = sched(
            Event(WRITE, 0, 0, b"x"),
            Event(WB_START, 0),
            Event(WB_DELIVER, 0),
            Event(WB_END, 0),
            Event(SYNC),
            Event(CRASH),
            Event(READ, 0),
        )
        assert s.mutation_count() == 3

    def test_encode_is_stable_and_distinct(self):
        a = sched(Event(WRITE, 0, 0, b"x"), Event(CRASH))
        b = sched(Event(SYNC_WRITE, 0, 0, b"x"), Event(CRASH))
        assert a.encode() == a.encode()
        assert a.encode() != b.encode()
        assert sched().encode() == "empty"
