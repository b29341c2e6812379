"""Shipped scenario traces and their expected verdict matrix."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .explorer import run_one
from .oracle import Verdict
from .recovery import STRATEGY_NAMES, get_strategy
from .trace import parse_trace

# Trace name -> scenario label, in presentation order.
SCENARIOS: dict[str, str] = {
    "fig1_t5": "1.1",
    "fig1_t8": "1.2",
    "fig1_t10": "1.3",
    "fig2_t4": "2.1",
    "fig2_t8": "2.1",
    "fig2_t10": "2.2",
    "fig3_t4": "3.1",
    "fig3_t10": "3.2",
}

_V = "VIOLATION"
_P = "PASS"

# The contract for `hetcrash corpus`: every cell, bit for bit.
EXPECTED_MATRIX: dict[str, dict[str, str]] = {
    "fig1_t5":  {"naive-disk": _V, "naive-nvm": _P, "latest-dev": _P,
                 "wb-mark-start": _P, "wb-mark-end": _P, "versioned-mark": _P},
    "fig1_t8":  {"naive-disk": _P, "naive-nvm": _P, "latest-dev": _P,
                 "wb-mark-start": _P, "wb-mark-end": _P, "versioned-mark": _P},
    "fig1_t10": {"naive-disk": _P, "naive-nvm": _V, "latest-dev": _P,
                 "wb-mark-start": _P, "wb-mark-end": _P, "versioned-mark": _P},
    "fig2_t4":  {"naive-disk": _V, "naive-nvm": _P, "latest-dev": _P,
                 "wb-mark-start": _P, "wb-mark-end": _P, "versioned-mark": _P},
    "fig2_t8":  {"naive-disk": _P, "naive-nvm": _V, "latest-dev": _P,
                 "wb-mark-start": _P, "wb-mark-end": _P, "versioned-mark": _P},
    "fig2_t10": {"naive-disk": _V, "naive-nvm": _V, "latest-dev": _V,
                 "wb-mark-start": _P, "wb-mark-end": _P, "versioned-mark": _P},
    "fig3_t4":  {"naive-disk": _V, "naive-nvm": _P, "latest-dev": _P,
                 "wb-mark-start": _V, "wb-mark-end": _P, "versioned-mark": _P},
    "fig3_t10": {"naive-disk": _V, "naive-nvm": _P, "latest-dev": _P,
                 "wb-mark-start": _P, "wb-mark-end": _V, "versioned-mark": _P},
}

TRACE_NAMES = tuple(EXPECTED_MATRIX)


def trace_dir() -> Path:
    return Path(resources.files("hetcrash").joinpath("corpus"))  # type: ignore[arg-type]


def load_corpus(directory: Path | None = None):
    """Parse every shipped trace; returns {name: Schedule}."""
    base = Path(directory) if directory is not None else trace_dir()
    out = {}
    for name in TRACE_NAMES:
        path = base / f"{name}.trace"
        out[name] = parse_trace(path.read_text(encoding="utf-8"))
    return out


def run_corpus(directory: Path | None = None,
               strategies: tuple[str, ...] = STRATEGY_NAMES,
               ) -> dict[str, dict[str, Verdict]]:
    """Run the full trace x strategy matrix; returns the live verdicts."""
    schedules = load_corpus(directory)
    results: dict[str, dict[str, Verdict]] = {}
    for name, sched in schedules.items():
        results[name] = {s: run_one(sched, get_strategy(s)) for s in strategies}
    return results


def matrix_of(results: dict[str, dict[str, Verdict]]) -> dict[str, dict[str, str]]:
    return {t: {s: v.status for s, v in row.items()} for t, row in results.items()}
