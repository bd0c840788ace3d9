"""Agent-side decision model.

Each user picks the action maximising preference + social influence, with the
incentive added to the target action only. Influence is linear-threshold
style: the summed weights of in-neighbours who chose that action at t-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .network import SocialNetwork

# Ties between the target action and a rival are resolved toward the target
# even when float rounding leaves the target a few ulps short.
TIE_EPS = 1e-12


@dataclass(frozen=True)
class ActionSet:
    count: int
    target: int

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("need at least two actions")
        if not 0 <= self.target < self.count:
            raise ValueError(f"target {self.target} outside 0..{self.count - 1}")


@dataclass
class AgentState:
    uid: int
    preferences: np.ndarray
    history: list[tuple[int, int]] = field(default_factory=list)

    @property
    def current_action(self) -> int | None:
        return self.history[-1][1] if self.history else None

    def record(self, t: int, action: int) -> None:
        if self.history and self.history[-1][0] >= t:
            raise ValueError(f"agent {self.uid}: step {t} is not after {self.history[-1][0]}")
        self.history.append((t, action))


def social_influence(uid: int, action: int, g: SocialNetwork, prev: Mapping[int, int]) -> float:
    return sum(w for src, w in g.in_edges[uid].items() if prev.get(src) == action)


def utility(preference: float, influence: float, incentive: float, is_target: bool) -> float:
    return preference + influence + incentive if is_target else preference + influence


def choose_action(utilities: Sequence[float], target: int) -> int:
    """Argmax; ties with the target go to the target, other ties to the lowest index."""
    u = np.asarray(utilities, dtype=float)
    rivals = np.delete(u, target)
    if u[target] >= rivals.max() - TIE_EPS:
        return target
    best = int(np.argmax(rivals))
    return best if best < target else best + 1


def top_preference(preferences: Sequence[float]) -> int:
    return int(np.argmax(preferences))


def preference_gap(preferences: Sequence[float], target: int) -> float:
    """p_top - p_target, the incentive an isolated agent needs to switch."""
    p = np.asarray(preferences, dtype=float)
    return float(max(0.0, p.max() - p[target]))


def min_incentive_isolated(agent: AgentState, target: int) -> float:
    return preference_gap(agent.preferences, target)


def agent_utilities(
    agent: AgentState, g: SocialNetwork, prev: Mapping[int, int], incentive: float, actions: ActionSet
) -> np.ndarray:
    return np.array([
        utility(
            agent.preferences[a],
            social_influence(agent.uid, a, g, prev),
            incentive,
            a == actions.target,
        )
        for a in range(actions.count)
    ])


class ResponseTable:
    """Per-step closed form of the decision rule for a whole population.

    ``need[i]`` is the smallest incentive that makes user i take the target,
    ``fallback[i]`` the action taken otherwise. Built once per step from the
    frozen t-1 action map, so the order in which users are asked is irrelevant.
    """

    def __init__(self, base: np.ndarray, target: int):
        rivals = base.copy()
        rivals[:, target] = -np.inf
        fallback = np.argmax(rivals, axis=1)
        self.need = np.maximum(0.0, rivals[np.arange(len(base)), fallback] - base[:, target])
        self.fallback = fallback
        self.target = target

    def respond(self, idx: int, incentive: float) -> int:
        if incentive >= self.need[idx] - TIE_EPS:
            return self.target
        return int(self.fallback[idx])

    def respond_all(self, incentives: np.ndarray) -> np.ndarray:
        take = incentives >= self.need - TIE_EPS
        return np.where(take, self.target, self.fallback)
