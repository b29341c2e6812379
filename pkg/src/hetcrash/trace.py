"""Line-oriented trace files.

Grammar (one directive per line, ``#`` starts a comment)::

    page_size N          # header, optional, default 6
    page_count N         # header, optional, default 1
    init P "BYTES"       # whole-page seed; must precede everything else
    write P OFF "BYTES"  # plain cached write
    sync                 # whole-page sync of every unsafe page
    syncw P OFF "BYTES"  # fused sync-write (persists before returning)
    wb P                 # atomic write-back (start+deliver+end)
    wb_start P / wb_deliver P / wb_end P
    crash
    read P

Offsets are decimal, BYTES go in double quotes verbatim, and '-' is the
unwritten filler byte.  A file parses to exactly one valid schedule and
formatting it back parses to the same schedule.
"""

from __future__ import annotations

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
    Event,
    HetcrashError,
    Schedule,
    ensure_valid,
)


class ParseError(HetcrashError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _int(tok: str, line_no: int, what: str) -> int:
    try:
        value = int(tok, 10)
    except ValueError:
        raise ParseError(line_no, f"bad {what} {tok!r}") from None
    if value < 0:
        raise ParseError(line_no, f"negative {what}")
    return value


def _quoted(tok: str, line_no: int) -> bytes:
    if len(tok) < 2 or tok[0] != '"' or tok[-1] != '"':
        raise ParseError(line_no, "expected quoted bytes")
    body = tok[1:-1]
    if '"' in body:
        raise ParseError(line_no, "quote inside quoted bytes")
    try:
        return body.encode("ascii")
    except UnicodeEncodeError:
        raise ParseError(line_no, "non-ascii byte in quoted data") from None


def _split(line: str, line_no: int) -> list[str]:
    # The quoted field is always last and may contain spaces.
    if '"' in line:
        head, _, rest = line.partition('"')
        closing = rest.rfind('"')
        if closing < 0:
            raise ParseError(line_no, "unterminated quote")
        if rest[closing + 1:].strip():
            raise ParseError(line_no, "trailing junk after quoted bytes")
        return head.split() + ['"' + rest[:closing] + '"']
    return line.split()


def parse_trace(text: str) -> Schedule:
    """Parse trace text into a validated schedule."""
    page_size = 6
    page_count = 1
    events: list[Event] = []
    headers_open = True

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = _split(line, line_no)
        op = toks[0]

        if op in ("page_size", "page_count"):
            if not headers_open:
                raise ParseError(line_no, f"{op} after first directive")
            if len(toks) != 2:
                raise ParseError(line_no, f"{op} takes one number")
            value = _int(toks[1], line_no, op)
            if op == "page_size":
                if not 1 <= value <= 4096:
                    raise ParseError(line_no, "page_size must be 1..4096")
                page_size = value
            else:
                if value < 1:
                    raise ParseError(line_no, "page_count must be >= 1")
                page_count = value
            continue
        headers_open = False

        if op == "init":
            if len(toks) != 3:
                raise ParseError(line_no, "init takes: page \"bytes\"")
            if any(e.kind != INIT for e in events):
                raise ParseError(line_no, "init after another directive")
            page = _int(toks[1], line_no, "page")
            data = _quoted(toks[2], line_no)
            if len(data) != page_size:
                raise ParseError(line_no, f"init data must be {page_size} bytes")
            events.append(Event(INIT, page, 0, data))
        elif op in ("write", "syncw"):
            if len(toks) != 4:
                raise ParseError(line_no, f"{op} takes: page off \"bytes\"")
            page = _int(toks[1], line_no, "page")
            off = _int(toks[2], line_no, "offset")
            data = _quoted(toks[3], line_no)
            if not data:
                raise ParseError(line_no, "empty write data")
            if off + len(data) > page_size:
                raise ParseError(line_no, "write crosses page boundary")
            events.append(Event(WRITE if op == "write" else SYNC_WRITE, page, off, data))
        elif op == "sync":
            if len(toks) != 1:
                raise ParseError(line_no, "sync takes no arguments")
            events.append(Event(SYNC))
        elif op == "crash":
            if len(toks) != 1:
                raise ParseError(line_no, "crash takes no arguments")
            events.append(Event(CRASH))
        elif op in ("wb", "wb_start", "wb_deliver", "wb_end", "read"):
            if len(toks) != 2:
                raise ParseError(line_no, f"{op} takes: page")
            page = _int(toks[1], line_no, "page")
            if op == "wb":
                events.extend((Event(WB_START, page), Event(WB_DELIVER, page),
                               Event(WB_END, page)))
            else:
                kinds = {"wb_start": WB_START, "wb_deliver": WB_DELIVER,
                         "wb_end": WB_END, "read": READ}
                events.append(Event(kinds[op], page))
        else:
            raise ParseError(line_no, f"unknown directive {op!r}")

        if any(not 0 <= e.page < page_count for e in events[-3:] if e.page is not None):
            raise ParseError(line_no, "page out of range")

    schedule = Schedule(tuple(events), page_size, page_count)
    try:
        ensure_valid(schedule)
    except HetcrashError as exc:
        raise ParseError(0, f"schedule invalid: {exc}") from None
    return schedule


def format_trace(s: Schedule) -> str:
    """Render a schedule back to trace text; parsing it returns ``s``."""
    lines = [f"page_size {s.page_size}", f"page_count {s.page_count}"]
    for e in s.events:
        if e.kind == INIT:
            lines.append(f'init {e.page} "{e.data.decode("ascii")}"')
        elif e.kind in (WRITE, SYNC_WRITE):
            op = "write" if e.kind == WRITE else "syncw"
            lines.append(f'{op} {e.page} {e.off} "{e.data.decode("ascii")}"')
        elif e.kind in (SYNC, CRASH):
            lines.append(e.kind)
        else:
            lines.append(f"{e.kind} {e.page}")
    return "\n".join(lines) + "\n"


def load_trace(path) -> Schedule:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh.read())
