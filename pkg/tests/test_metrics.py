import numpy as np
import pytest

import oracles
from incentive_alloc import metrics as me


def test_gaup_examples():
    assert me.gaup({0: 0, 1: 0, 2: 1, 3: 2}, 0) == 0.5
    with pytest.raises(ValueError):
        me.gaup({}, 0)


def test_giac_counts_underpaid_adopters_only():
    prefs = {0: np.array([0.2, 0.6]), 1: np.array([0.2, 0.6]), 2: np.array([0.7, 0.1]), 3: np.array([0.1, 0.9])}
    actions = {0: 0, 1: 0, 2: 0, 3: 1}
    offers = {0: 0.1, 1: 0.4, 2: 0.0}
    # user 0 underpaid, user 1 paid exactly the gap, user 2 had no gap to close
    assert me.giac(actions, offers, prefs, 0) == 0.25
    assert me.giac(actions, offers, prefs, 0) == oracles.giac(actions, offers, {u: list(p) for u, p in prefs.items()}, 0)
    with pytest.raises(ValueError):
        me.giac({}, {}, {}, 0)


def _rec(t, g, c, spend, budget=10.0):
    return me.StepRecord(t, 4, g, c, spend, budget)


def test_summarize_means_and_utilization():
    s = me.summarize("dgia", [_rec(1, 0.2, 0.1, 5.0), _rec(2, 0.4, 0.3, 3.0)])
    assert s.total_budget == 20.0
    assert s.spend == 8.0
    assert s.mean_gaup == pytest.approx(0.3)
    assert s.mean_giac == pytest.approx(0.2)
    assert s.utilization == pytest.approx(0.4)
    with pytest.raises(ValueError):
        me.summarize("x", [])


def test_total_budget_over_horizon():
    s = me.summarize("uniform", [_rec(t, 0.1, 0.0, 1.0, 200.0) for t in range(1, 151)])
    assert s.total_budget == 30000.0


def test_return_rates_example():
    mine = me.RunSummary("iud+dgia", 1.0, 0.671, 0.665, 0.419, 0.671)
    base = me.RunSummary("none", 1.0, 0.0, 0.196, 0.109, 0.0)
    r_mu, r_tau = me.return_rates(mine, base)
    assert r_mu == pytest.approx(0.698, abs=0.002)
    assert r_tau == pytest.approx(0.461, abs=0.002)
    assert me.return_rates(base, base) == (None, None)
    assert me.with_return_rates(mine, base).r_mu == r_mu
