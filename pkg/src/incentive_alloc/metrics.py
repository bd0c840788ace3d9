"""Per-step and per-run evaluation measures."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .adm import preference_gap


@dataclass
class StepRecord:
    t: int
    population: int
    gaup: float
    giac: float
    spend: float
    budget: float
    actions: dict[int, int] = field(default_factory=dict, repr=False)
    offers: dict[int, float] = field(default_factory=dict, repr=False)


@dataclass
class RunSummary:
    strategy: str
    total_budget: float
    spend: float
    mean_gaup: float
    mean_giac: float
    utilization: float
    r_mu: float | None = None
    r_tau: float | None = None


def gaup(actions: Mapping[int, int], target: int) -> float:
    if not actions:
        raise ValueError("GAUP of an empty population is undefined")
    return sum(1 for a in actions.values() if a == target) / len(actions)


def giac(
    actions: Mapping[int, int],
    offers: Mapping[int, float],
    preferences: Mapping[int, np.ndarray],
    target: int,
) -> float:
    """Share of users on the target although their offer was below their preference gap."""
    if not actions:
        raise ValueError("GIAC of an empty population is undefined")
    hits = sum(
        1
        for uid, a in actions.items()
        if a == target and offers.get(uid, 0.0) < preference_gap(preferences[uid], target)
    )
    return hits / len(actions)


def summarize(strategy: str, records: list[StepRecord]) -> RunSummary:
    if not records:
        raise ValueError("no step records")
    total_budget = float(sum(r.budget for r in records))
    spend = float(sum(r.spend for r in records))
    return RunSummary(
        strategy=strategy,
        total_budget=total_budget,
        spend=spend,
        mean_gaup=float(np.mean([r.gaup for r in records])),
        mean_giac=float(np.mean([r.giac for r in records])),
        utilization=spend / total_budget if total_budget > 0 else 0.0,
    )


def return_rates(summary: RunSummary, baseline: RunSummary) -> tuple[float | None, float | None]:
    """Gain over the no-incentive baseline per unit of budget utilisation.

    Undefined (None, None) when nothing was spent.
    """
    if summary.utilization <= 0:
        return None, None
    return (
        (summary.mean_gaup - baseline.mean_gaup) / summary.utilization,
        (summary.mean_giac - baseline.mean_giac) / summary.utilization,
    )


def with_return_rates(summary: RunSummary, baseline: RunSummary) -> RunSummary:
    r_mu, r_tau = return_rates(summary, baseline)
    return RunSummary(**{**summary.__dict__, "r_mu": r_mu, "r_tau": r_tau})
