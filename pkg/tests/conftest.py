import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from incentive_alloc import network as net  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture
def tiny_graph():
    return net.read_edge_list(DATA / "tiny.txt")


def random_histories(rng, n_users, n_steps, n_actions, late_joiners=False):
    hist = {}
    for u in range(n_users):
        start = int(rng.integers(1, max(2, n_steps // 2))) if late_joiners and u % 3 == 2 else 1
        hist[u] = [(t, int(rng.integers(n_actions))) for t in range(start, n_steps + 1)]
    return hist


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
