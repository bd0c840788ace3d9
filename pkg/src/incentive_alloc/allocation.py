"""System-side incentive allocators.

Every strategy talks to the population only through :class:`Market`: the
current user ids, each user's stated preferences, and ``offer`` which hands a
user an incentive and returns the action they took. The network itself is
never visible here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import numpy as np

DEFAULT_GAMMA = 0.9
DEFAULT_RHO = 0.5
PRICE_GRID = tuple(0.25 * k for k in range(9))
PRICE_EPS = 0.01


class Market(Protocol):
    target: int

    def users(self) -> Sequence[int]: ...

    def preferences(self, uid: int) -> np.ndarray: ...

    def offer(self, uid: int, incentive: float) -> int: ...


@dataclass
class StepOutcome:
    offers: dict[int, float]
    actions: dict[int, int]
    spend: float


# --- formulas ------------------------------------------------------------


def preference_ratio(preferences: Sequence[float], target: int) -> float:
    p = np.asarray(preferences, dtype=float)
    total = p.sum()
    if total <= 0:
        raise ValueError("preference ratio undefined for an all-zero preference vector")
    return float(p[target] / total)


def update_sensitivity(rho_prev: float, omega: float, took_target: bool, gamma: float = DEFAULT_GAMMA) -> float:
    if not took_target:
        return gamma * rho_prev
    denom = rho_prev + omega * (1.0 - rho_prev)
    return rho_prev / denom if denom > 0 else 0.0


def dgia_incentive(rho_prev: float, theta: float, gaup_prev: float, pref_gap: float) -> float:
    # Python evaluates 0.0 ** 0.0 as 1.0, which is the convention wanted here
    return (1.0 - rho_prev) * (pref_gap**gaup_prev + theta**gaup_prev)


def _gap(p: np.ndarray, target: int) -> float:
    return float(max(0.0, p.max() - p[target]))


# --- strategies ------------------------------------------------------------


class Strategy:
    name = "base"
    estimator: str | None = None  # influence estimator the engine should run for us

    def add_users(self, market: Market, uids: Sequence[int]) -> None:
        pass

    def remove_users(self, uids: Sequence[int]) -> None:
        pass

    def update_estimates(self, degrees: Mapping[int, float]) -> None:
        pass

    def step(self, market: Market, budget: float, t: int) -> StepOutcome:
        raise NotImplementedError


class NoIncentive(Strategy):
    name = "none"

    def step(self, market, budget, t):
        offers = {uid: 0.0 for uid in market.users()}
        actions = {uid: market.offer(uid, 0.0) for uid in offers}
        return StepOutcome(offers, actions, 0.0)


def _offer_in_order(market: Market, order, price_of, budget: float) -> StepOutcome:
    remaining = budget
    offers, actions = {}, {}
    for uid in order:
        r = min(price_of(uid), remaining)
        a = market.offer(uid, r)
        offers[uid], actions[uid] = r, a
        if a == market.target:
            remaining -= r
    return StepOutcome(offers, actions, budget - remaining)


class Uniform(Strategy):
    name = "uniform"

    def step(self, market, budget, t):
        users = sorted(market.users())
        each = budget / len(users)
        return _offer_in_order(market, users, lambda uid: each, budget)


class DGIA(Strategy):
    """Adaptive pricing driven by sensitivity, influential degree and last GAUP.

    Users are served in descending ``theta + rho`` order (ties by id) so the
    per-step budget reaches influential, easily-swayed users first.
    """

    name = "dgia"

    def __init__(self, gamma: float = DEFAULT_GAMMA, rho0: float = DEFAULT_RHO, theta0: float = 0.0,
                 estimator: str | None = None):
        self.gamma = gamma
        self.rho0 = rho0
        self.theta0 = theta0
        self.estimator = estimator
        if estimator:
            self.name = f"{estimator}+dgia"
        self.rho: dict[int, float] = {}
        self.theta: dict[int, float] = {}
        self.omega: dict[int, float] = {}
        self.gap: dict[int, float] = {}
        self.gaup_prev = 0.0
        self.order: list[int] = []

    def add_users(self, market, uids):
        for uid in uids:
            p = market.preferences(uid)
            self.rho[uid] = self.rho0
            self.theta[uid] = self.theta0
            self.omega[uid] = preference_ratio(p, market.target)
            self.gap[uid] = _gap(p, market.target)
        self.sort()

    def remove_users(self, uids):
        for uid in uids:
            for table in (self.rho, self.theta, self.omega, self.gap):
                table.pop(uid, None)
        self.sort()

    def update_estimates(self, degrees):
        for uid, d in degrees.items():
            if uid in self.theta:
                self.theta[uid] = d
        self.sort()

    def sort(self) -> None:
        self.order = sorted(self.rho, key=lambda u: (-(self.theta[u] + self.rho[u]), u))

    def step(self, market, budget, t):
        remaining = budget
        offers, actions = {}, {}
        for uid in self.order:
            r = dgia_incentive(self.rho[uid], self.theta[uid], self.gaup_prev, self.gap[uid])
            if remaining < r:
                r = remaining
            a = market.offer(uid, r)
            offers[uid], actions[uid] = r, a
            took = a == market.target
            if took:
                remaining -= r
            self.rho[uid] = update_sensitivity(self.rho[uid], self.omega[uid], took, self.gamma)
        self.gaup_prev = sum(a == market.target for a in actions.values()) / len(actions)
        self.sort()
        return StepOutcome(offers, actions, budget - remaining)


class DBPUCB(Strategy):
    """Budgeted posted-price bandit over a fixed price grid.

    One arm (a single price for everyone) is played per step. The index of an
    arm is the share of the population it can activate: its optimistic
    acceptance rate, capped by the share of users the step budget can pay at
    that price. This reconstruction keeps only what the published baseline
    description fixes, the nine-price grid and UCB exploration.
    """

    name = "dbp-ucb"

    def __init__(self, prices: Sequence[float] = PRICE_GRID, eps: float = PRICE_EPS):
        self.prices = np.asarray(prices, dtype=float)
        self.eps = eps
        self.pulls = np.zeros(len(self.prices), dtype=np.int64)
        self.mean = np.zeros(len(self.prices))
        self.history: list[int] = []

    def index(self, budget: float, n_users: int) -> np.ndarray:
        total = max(int(self.pulls.sum()), 1)
        bonus = np.sqrt(2.0 * math.log(total) / np.maximum(self.pulls, 1))
        ucb = np.minimum(1.0, self.mean + bonus)
        affordable = budget / (n_users * np.maximum(self.prices, self.eps))
        return np.minimum(ucb, affordable)

    def select(self, budget: float, n_users: int) -> int:
        unplayed = np.flatnonzero(self.pulls == 0)
        if len(unplayed):
            return int(unplayed[0])
        idx = self.index(budget, n_users)
        # argmax keeps the cheapest arm among ties
        return int(np.argmax(idx))

    def step(self, market, budget, t):
        users = sorted(market.users())
        arm = self.select(budget, len(users))
        price = float(self.prices[arm])
        out = _offer_in_order(market, users, lambda uid: price, budget)
        full = [uid for uid in users if out.offers[uid] >= price]
        reward = sum(out.actions[uid] == market.target for uid in full) / len(full) if full else 0.0
        n = self.pulls[arm] + 1
        self.pulls[arm] = n
        self.mean[arm] += (reward - self.mean[arm]) / n
        self.history.append(arm)
        return out


STRATEGIES = ("iud+dgia", "ipe+dgia", "dgia", "dbp-ucb", "uniform", "none")


def make_strategy(name: str, gamma: float = DEFAULT_GAMMA, rho0: float = DEFAULT_RHO,
                  theta0: float = 0.0) -> Strategy:
    if name == "iud+dgia":
        return DGIA(gamma, rho0, theta0, estimator="iud")
    if name == "ipe+dgia":
        return DGIA(gamma, rho0, theta0, estimator="ipe")
    if name == "dgia":
        return DGIA(gamma, rho0, theta0)
    if name == "dbp-ucb":
        return DBPUCB()
    if name == "uniform":
        return Uniform()
    if name == "none":
        return NoIncentive()
    raise ValueError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}")
