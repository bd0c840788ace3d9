"""Topology-free influence estimation from behaviour histories.

Two layers live here. The module-level functions evaluate the estimator
directly from raw histories and are meant for small inputs and checks.
:class:`InfluenceEstimator` maintains the same quantities incrementally,
folding in one step at a time at O(n^2) cost, and is what the engine runs.

Scoring of one influencee behaviour ``s_j,t`` against influencer ``i``:
the decay-weighted share of ``i``'s steps before ``t`` whose action equals
``s_j,t``, with weights ``exp(-lam * (t - t'))``. The ``ipe`` variant looks
only at ``i``'s most recent prior step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

History = Sequence[tuple[int, int]]
HistoryView = Mapping[int, History]

DEFAULT_LAMBDA = 0.1
METHODS = ("iud", "ipe")


def pair_decay(t: int, t_prime: int, same_action: bool, lam: float = DEFAULT_LAMBDA) -> float:
    if t_prime >= t:
        raise ValueError(f"t'={t_prime} must precede t={t}")
    return math.exp(-lam * (t - t_prime)) if same_action else 0.0


def behavior_influence_prob(influencer: History, observed: int, t: int, lam: float = DEFAULT_LAMBDA) -> float:
    num = den = 0.0
    for tp, a in influencer:
        if tp >= t:
            continue
        den += pair_decay(t, tp, True, lam)
        num += pair_decay(t, tp, a == observed, lam)
    return num / den if den > 0 else 0.0


def recent_behavior_prob(influencer: History, observed: int, t: int) -> float:
    prior = [a for tp, a in influencer if tp < t]
    return 1.0 if prior and prior[-1] == observed else 0.0


def user_influence_prob(
    influencer: int, influencee: int, histories: HistoryView, lam: float = DEFAULT_LAMBDA, method: str = "iud"
) -> float:
    """P(influencee | influencer): mean behaviour score over the influencee's history."""
    if influencer == influencee:
        raise ValueError("influencer and influencee must differ")
    target = histories.get(influencee) or []
    if not target:
        raise ValueError(f"user {influencee} has no recorded behaviour")
    source = histories.get(influencer) or []
    if method == "iud":
        scores = [behavior_influence_prob(source, a, t, lam) for t, a in target]
    elif method == "ipe":
        scores = [recent_behavior_prob(source, a, t) for t, a in target]
    else:
        raise ValueError(f"unknown method {method!r}")
    return sum(scores) / len(scores)


@dataclass
class InfluenceEstimate:
    users: list[int]
    pairwise: np.ndarray  # pairwise[i, j] = P(users[j] | users[i])
    degrees: np.ndarray
    lam: float
    step: int

    def prob(self, influencer: int, influencee: int) -> float:
        idx = {u: k for k, u in enumerate(self.users)}
        return float(self.pairwise[idx[influencer], idx[influencee]])

    def degree_map(self) -> dict[int, float]:
        return {u: float(d) for u, d in zip(self.users, self.degrees)}

    def pairwise_map(self) -> dict[tuple[int, int], float]:
        n = len(self.users)
        return {
            (self.users[i], self.users[j]): float(self.pairwise[i, j])
            for i in range(n)
            for j in range(n)
            if i != j
        }


def _degrees_from_pairwise(pairwise: np.ndarray) -> np.ndarray:
    n = len(pairwise)
    if n < 2:
        return np.zeros(n)
    return (pairwise.sum(axis=1) - np.diag(pairwise)) / (n - 1)


def _direct_degrees(histories: HistoryView, users, lam: float, method: str) -> InfluenceEstimate:
    users = sorted(users)
    if len(users) < 2:
        raise ValueError("influence estimation needs at least two users")
    n = len(users)
    pw = np.zeros((n, n))
    for i, vi in enumerate(users):
        for j, vj in enumerate(users):
            if i != j and histories.get(vj):
                pw[i, j] = user_influence_prob(vi, vj, histories, lam, method)
    last = max((h[-1][0] for h in histories.values() if h), default=0)
    return InfluenceEstimate(users, pw, _degrees_from_pairwise(pw), lam, last)


def influential_degrees(histories: HistoryView, users, lam: float = DEFAULT_LAMBDA) -> InfluenceEstimate:
    return _direct_degrees(histories, users, lam, "iud")


def ipe_degrees(histories: HistoryView, users, lam: float = DEFAULT_LAMBDA) -> InfluenceEstimate:
    return _direct_degrees(histories, users, lam, "ipe")


class InfluenceEstimator:
    """Running estimator over a population that may grow and shrink.

    Per influencer it keeps decayed action sums ``num[i, a]`` and their total
    ``den[i]`` evaluated at the upcoming step, so scoring the next step's
    behaviours is a gather; per (influencer, influencee) pair it keeps the
    running sum of behaviour scores ``score[i, j]``.
    """

    def __init__(self, users, action_count: int, lam: float = DEFAULT_LAMBDA, method: str = "iud"):
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        self.method = method
        self.lam = lam
        self.decay = math.exp(-lam)
        self.action_count = action_count
        self.users: list[int] = []
        self.index: dict[int, int] = {}
        self.num = np.zeros((0, action_count))
        self.den = np.zeros(0)
        self.count = np.zeros(0, dtype=np.int64)
        self._buf = np.zeros((0, 0))
        self.step = 0
        self.add_users(users)

    @property
    def score(self) -> np.ndarray:
        n = len(self.users)
        return self._buf[:n, :n]

    def add_users(self, uids) -> None:
        new = [u for u in uids if u not in self.index]
        if not new:
            return
        n, k = len(self.users), len(new)
        if n + k > len(self._buf):
            # grow geometrically so a stream of joiners costs amortised O(n^2)
            cap = max(n + k, 2 * len(self._buf), 16)
            buf = np.zeros((cap, cap))
            buf[:n, :n] = self._buf[:n, :n]
            self._buf = buf
        else:
            self._buf[: n + k, n : n + k] = 0.0
            self._buf[n : n + k, : n + k] = 0.0
        for off, u in enumerate(new):
            self.index[u] = n + off
        self.users.extend(new)
        self.num = np.vstack([self.num, np.zeros((k, self.action_count))])
        self.den = np.concatenate([self.den, np.zeros(k)])
        self.count = np.concatenate([self.count, np.zeros(k, dtype=np.int64)])

    def remove_users(self, uids) -> None:
        gone = {self.index[u] for u in uids if u in self.index}
        if not gone:
            return
        keep = np.array([i for i in range(len(self.users)) if i not in gone], dtype=np.int64)
        m = len(keep)
        self._buf[:m, :m] = self._buf[np.ix_(keep, keep)]
        self.users = [self.users[i] for i in keep]
        self.index = {u: k for k, u in enumerate(self.users)}
        self.num = self.num[keep]
        self.den = self.den[keep]
        self.count = self.count[keep]

    def observe(self, t: int, actions: Mapping[int, int]) -> None:
        """Fold in the behaviours of step ``t`` (end-of-step update)."""
        if t <= self.step:
            raise ValueError(f"step {t} already folded in")
        gap = t - self.step - 1
        if gap and self.method == "iud":
            # steps with no observations still age the decayed sums
            self.num *= self.decay ** gap
            self.den *= self.decay ** gap
        n = len(self.users)
        act = np.full(n, -1, dtype=np.int64)
        for u, a in actions.items():
            act[self.index[u]] = a
        acted = act >= 0
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(self.den[:, None] > 0, self.num / np.maximum(self.den, 1e-300)[:, None], 0.0)
        score = self.score
        if acted.all():
            score += ratio[:, act]
        elif acted.any():
            cols = np.flatnonzero(acted)
            score[:, cols] += ratio[:, act[cols]]
        self.count[acted] += 1
        # advance the per-influencer sums to step t + 1
        rows = np.flatnonzero(acted)
        if self.method == "iud":
            self.num[rows, act[rows]] += 1.0
            self.den[rows] += 1.0
            self.num *= self.decay
            self.den *= self.decay
        else:
            self.num[rows] = 0.0
            self.num[rows, act[rows]] = 1.0
            self.den[rows] = 1.0
        self.step = t

    def pairwise(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            pw = np.where(self.count[None, :] > 0, self.score / np.maximum(self.count, 1)[None, :], 0.0)
        np.fill_diagonal(pw, 0.0)
        return np.clip(pw, 0.0, 1.0)

    def degrees(self) -> np.ndarray:
        n = len(self.users)
        if n < 2:
            return np.zeros(n)
        inv = np.where(self.count > 0, 1.0 / np.maximum(self.count, 1), 0.0)
        row = self.score @ inv - np.diag(self.score) * inv
        return np.clip(row / (n - 1), 0.0, 1.0)

    def estimate(self) -> InfluenceEstimate:
        if len(self.users) < 2:
            raise ValueError("influence estimation needs at least two users")
        pw = self.pairwise()
        return InfluenceEstimate(list(self.users), pw, _degrees_from_pairwise(pw), self.lam, self.step)
