"""Event-shape tagger for the proof-case census.

Each correctness argument for a recovery strategy decomposes into a small
set of event shapes (write/sync/write-back orderings around the crash).
The sweep counts, per shape, how many enumerated schedules exhibit it, so
an "exhaustive" run can show it actually covered every case instead of
merely finishing.

Schedules are normalized to a token string: ``w`` plain write, ``s``
sync, ``a`` fused sync-write, ``wb`` an atomic write-back triple, and
``bs``/``br``/``be`` the split start/deliver/end, with ``c`` for the
crash.  A shape matches when its tokens appear contiguously, which is the
"no other write/sync/write-back in between" reading; reads are dropped
before matching since they never disturb a shape.
"""

from __future__ import annotations

import re

from .model import (
    CRASH,
    INIT,
    READ,
    SYNC,
    SYNC_WRITE,
    WB_DELIVER,
    WB_END,
    WB_START,
    WRITE,
    Schedule,
)

_TOKEN = {WRITE: "w", SYNC: "s", SYNC_WRITE: "a",
          WB_START: "bs", WB_DELIVER: "br", WB_END: "be", CRASH: "c"}

# (w,s) means "a write whose sync returned": either a plain write/sync
# pair or one fused sync-write.
_WS = r"(?:w s|a)"

CASE_PATTERNS: dict[str, tuple[str, ...]] = {
    "1.1": (r" w wb s c ",),
    "1.2": (r" w s wb c ",),
    "1.3": (r" w s c ",),
    "2.1": (r" w s( a)+ c ",),
    "2.2": (r" w wb s( a)+ c ",),
    "2.3": (r" w s wb( a)+ c ",),
    "2.4": (r" a wb( a)+ c ",),
    # 3.2: crash lands after the write-back started but before anything
    # was delivered; 3.3 after the delivery; 3.4 after the completion
    # (with and without one more synced write squeezed in).
    "3.2": (rf" {_WS} bs c ", rf" {_WS} bs {_WS} c "),
    "3.3": (rf" {_WS} bs {_WS} br c ", rf" {_WS} bs {_WS} br {_WS} c "),
    "3.4": (rf" {_WS} bs {_WS} br {_WS} be c ",
            rf" {_WS} bs {_WS} br {_WS} be {_WS} c "),
    # 3.5: a plain write re-dirties the page inside the write-back window
    # and a later sync must still persist it.  The deliver instant is
    # forced to sit somewhere inside the window, so tolerate it on either
    # side of the write.
    "3.5": (r" bs (?:br w|w br) be s c ",),
}

_COMPILED = {name: tuple(re.compile(p) for p in pats)
             for name, pats in CASE_PATTERNS.items()}

WORLD_CASES = {
    "a": ("1.1", "1.2", "1.3"),
    "b": ("2.1", "2.2", "2.3", "2.4"),
    "c": ("3.1", "3.2", "3.3", "3.4", "3.5"),
}


def tokenize(s: Schedule, fuse_wb: bool) -> list[str]:
    tokens: list[str] = []
    for e in s.events:
        if e.kind in (READ, INIT):
            continue
        tokens.append(_TOKEN[e.kind])
    if fuse_wb:
        fused: list[str] = []
        i = 0
        while i < len(tokens):
            if tokens[i] == "bs" and tokens[i + 1:i + 3] == ["br", "be"]:
                fused.append("wb")
                i += 3
            else:
                fused.append(tokens[i])
                i += 1
        tokens = fused
    return tokens


def tag_cases(s: Schedule, cases: tuple[str, ...]) -> frozenset[str]:
    """Names of the given proof cases whose shape ``s`` exhibits."""
    if s.crash_pos is None:
        return frozenset()
    fuse = any(c[0] in "12" for c in cases)
    tokens = tokenize(s, fuse_wb=fuse)
    text = " " + " ".join(tokens) + " "
    tags = set()
    for name in cases:
        if name == "3.1":
            # Crash strictly before any write-back begins: the shapes from
            # the point-event worlds, replayed in the split-event world.
            if "bs" not in tokens and (" w s c " in text or " a c " in text):
                tags.add(name)
            continue
        if any(rx.search(text) for rx in _COMPILED[name]):
            tags.add(name)
    return frozenset(tags)
