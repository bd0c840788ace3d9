"""Budget-efficiency tables (one row per strategy)."""

from __future__ import annotations

import csv
import io
from collections import defaultdict

import numpy as np

from .allocation import STRATEGIES
from .metrics import RunSummary, with_return_rates

COLUMNS = ("strategy", "total_budget", "spend", "mean_gaup", "mean_giac", "utilization", "r_mu", "r_tau")
HEADERS = ("Approach", "Total Budget", "Spending", "mean GAUP", "mean GIAC", "Utilization", "R(mu)", "R(tau)")
BASELINE = "none"
# lowest spend and utilisation count as best
_LOWER_IS_BETTER = {"spend", "utilization"}
_NUMERIC = COLUMNS[1:]


class ReportError(ValueError):
    pass


def average_by_strategy(summaries: list[RunSummary]) -> list[RunSummary]:
    """Collapse per-seed summaries into one mean row per strategy.

    Known strategies come in their canonical order, anything else after them.
    """
    groups: dict[str, list[RunSummary]] = defaultdict(list)
    for s in summaries:
        groups[s.strategy].append(s)
    out = []
    for name, rows in groups.items():
        vals = {}
        for col in _NUMERIC:
            xs = [getattr(r, col) for r in rows if getattr(r, col) is not None]
            vals[col] = float(np.mean(xs)) if xs else None
        out.append(RunSummary(strategy=name, **vals))
    rank = {name: k for k, name in enumerate(STRATEGIES)}
    return sorted(out, key=lambda s: rank.get(s.strategy, len(rank)))


def build_rows(summaries: list[RunSummary], returns: bool = True) -> list[list[str]]:
    if not summaries:
        raise ReportError("nothing to report")
    rows = average_by_strategy(summaries)
    baseline = next((s for s in rows if s.strategy == BASELINE), None)
    if returns and baseline is None:
        raise ReportError("return rates need a no-incentive ('none') run")
    if returns:
        rows = [s if s.strategy == BASELINE else with_return_rates(s, baseline) for s in rows]
    columns = COLUMNS if returns else COLUMNS[:6]

    best = {}
    for col in columns[1:]:
        if col == "total_budget":
            continue
        xs = [getattr(s, col) for s in rows if s.strategy != BASELINE and getattr(s, col) is not None]
        if len(xs) > 1:
            best[col] = min(xs) if col in _LOWER_IS_BETTER else max(xs)

    table = []
    for s in rows:
        cells = [s.strategy]
        for col in columns[1:]:
            v = getattr(s, col)
            if s.strategy == BASELINE and col in ("spend", "utilization", "r_mu", "r_tau"):
                cells.append("/")
            elif v is None:
                cells.append("/")
            else:
                text = f"{v:,.3f}" if col in ("total_budget", "spend") else f"{v:.3f}"
                cells.append(text + ("*" if best.get(col) == v else ""))
        table.append(cells)
    return [list(HEADERS[: len(columns)])] + table


def render_text(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for k, r in enumerate(rows):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    lines.append("(* marks the best value per column; '/' is not applicable)")
    return "\n".join(lines) + "\n"


def render_csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def report(summaries: list[RunSummary], returns: bool = True) -> tuple[str, str]:
    rows = build_rows(summaries, returns)
    return render_text(rows), render_csv(rows)
