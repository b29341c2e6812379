"""Report rendering: delimited records, text tables, and figures.

The machine contract is the record line: four tab-separated fields
``schedule_id  strategy  verdict  witness`` in that order, one line per
checked (schedule, strategy) pair, sorted, no header.  Everything else
(tables, PNG figures) is presentation on top of the same data.
"""

from __future__ import annotations

import sys
from pathlib import Path

from .corpus import SCENARIOS, matrix_of
from .explorer import SweepReport
from .model import Schedule
from .oracle import Verdict


def record_line(schedule_id: str, strategy: str, verdict: Verdict) -> str:
    return f"{schedule_id}\t{strategy}\t{verdict.status}\t{verdict.render()}"


def corpus_records(results: dict[str, dict[str, Verdict]],
                   schedules: dict[str, Schedule]) -> list[str]:
    lines = []
    for name in results:
        for strat, verdict in results[name].items():
            lines.append(record_line(schedules[name].encode(), strat, verdict))
    return lines


def corpus_table(results: dict[str, dict[str, Verdict]]) -> str:
    strategies = list(next(iter(results.values())))
    width = max(len(s) for s in strategies) + 2
    head = "scenario  trace      " + "".join(s.ljust(width) for s in strategies)
    rows = [head, "-" * len(head)]
    for name, row in results.items():
        cells = "".join(row[s].status.ljust(width) for s in strategies)
        rows.append(f"{SCENARIOS.get(name, '-'):<9} {name:<10} {cells}")
    return "\n".join(rows)


def write_lines(lines: list[str], path: str | Path | None) -> None:
    text = "\n".join(lines) + "\n" if lines else ""
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_corpus_figure(results: dict[str, dict[str, Verdict]], path: str | Path) -> Path:
    """Scenario x strategy matrix as a green/red heatmap."""
    plt = _pyplot()
    traces = list(results)
    strategies = list(next(iter(results.values())))
    grid = [[0 if results[t][s].passed else 1 for s in strategies] for t in traces]

    fig, ax = plt.subplots(figsize=(1.4 + 1.1 * len(strategies), 1.0 + 0.45 * len(traces)))
    ax.imshow(grid, cmap="RdYlGn_r", vmin=0, vmax=1, aspect="auto")
    ax.set_xticks(range(len(strategies)), strategies, rotation=30, ha="right", fontsize=8)
    ax.set_yticks(range(len(traces)),
                  [f"{SCENARIOS.get(t, '-')} {t}" for t in traces], fontsize=8)
    for i, t in enumerate(traces):
        for j, s in enumerate(strategies):
            ax.text(j, i, "FAIL" if grid[i][j] else "ok",
                    ha="center", va="center", fontsize=7)
    ax.set_title("recovery verdicts per scenario", fontsize=10)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_sweep_figure(report: SweepReport, path: str | Path) -> Path:
    """Violation counts per strategy plus proof-case coverage."""
    plt = _pyplot()
    names = list(report.strategy_names)
    violations = [report.stats[n].violations for n in names]
    cases = sorted(report.pattern_counts)
    counts = [report.pattern_counts[c] for c in cases]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.4))
    bars = ax1.bar(names, violations, color=["#b2182b" if v else "#1a9850" for v in violations])
    ax1.bar_label(bars, fontsize=8)
    ax1.set_ylabel("violating schedules")
    ax1.set_title(f"{report.total_schedules} schedules, "
                  f"{report.crashed_schedules} crashed", fontsize=10)
    ax1.tick_params(axis="x", rotation=30, labelsize=8)

    ax2.bar(cases, counts, color="#4393c3")
    ax2.set_ylabel("schedules matching case")
    ax2.set_title("proof-case coverage", fontsize=10)
    ax2.tick_params(axis="x", labelsize=8)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
