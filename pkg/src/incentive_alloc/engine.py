"""Simulation loop.

Per step t = 1..T:

1. apply the churn event for t, if any
2. reset the step budget to B (unspent budget is discarded)
3. freeze the t-1 action map and derive every user's utilities from it
4. let the strategy interleave offers and observations
5. append the observed actions to the histories
6. refresh influential degrees when the strategy uses an estimator
7. record the step

Randomness comes from one master seed split into independent sub-streams,
consumed in the fixed order graph, weights, preferences, churn, strategy.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from . import network as net
from .adm import ActionSet, AgentState, ResponseTable
from .allocation import STRATEGIES, Strategy, make_strategy
from .influence import InfluenceEstimator
from .metrics import RunSummary, StepRecord, gaup, giac, summarize

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("t", "population", "gaup", "giac", "spend", "budget", "strategy", "seed")
SUMMARY_COLUMNS = ("strategy", "total_budget", "spend", "mean_gaup", "mean_giac", "utilization", "r_mu", "r_tau")


class RunError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    dataset: str
    budget: float
    strategy: str
    seed: int = 0
    undirected: bool = False
    closure: float = 0.0
    weighting: str = "indegree"
    actions: int = 4
    target: int = 0
    horizon: int = 150
    lam: float = 0.1
    gamma: float = 0.9
    rho0: float = 0.5
    theta0: float = 0.0
    churn: str = "none"
    churn_join: tuple[int, int] | None = None
    churn_leave: tuple[int, int] | None = None
    churn_log: str | None = None
    influence_dump: str | None = None
    name: str = ""

    def validate(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {', '.join(STRATEGIES)}")
        ActionSet(self.actions, self.target)
        if self.weighting not in net.WEIGHT_SCHEMES:
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if self.churn != "none" and self.churn not in net.DN_PRESETS:
            raise ValueError(f"unknown churn preset {self.churn!r}")

    @property
    def label(self) -> str:
        return self.name or f"{self.strategy}-s{self.seed}"


@dataclass
class SimulationTrace:
    config: ExperimentConfig
    records: list[StepRecord]
    summary: RunSummary
    elapsed: float = 0.0
    final_population: int = 0


@dataclass
class RunFailure:
    config: ExperimentConfig
    error: str


class Population:
    """Ground-truth side of the simulation; exposes only the allocator-facing market."""

    def __init__(self, g: net.SocialNetwork, prefs: dict[int, np.ndarray], actions: ActionSet,
                 scheme: str = "cap"):
        self.g = g
        self.scheme = scheme
        self.action_set = actions
        self.target = actions.target
        self.agents = {uid: AgentState(uid, prefs[uid]) for uid in sorted(g.users)}
        self.prev: dict[int, int] = {}
        self.t = 0
        self._weights = None
        self._order: list[int] = []
        self._responses: ResponseTable | None = None
        self._observed: dict[int, int] = {}

    # -- mutation between steps --------------------------------------------

    def apply(self, ev: net.ChurnEvent, retired: set[int]) -> None:
        net.apply_churn(self.g, ev, retired, self.scheme)
        for uid in ev.leavers:
            del self.agents[uid]
            self.prev.pop(uid, None)
        for j in ev.joiners:
            self.agents[j.uid] = AgentState(j.uid, np.asarray(j.preferences, dtype=float))
        self._weights = None

    def _weight_matrix(self):
        # row v holds the weights of v's in-neighbours
        if self._weights is None:
            pos = {u: k for k, u in enumerate(self._order)}
            indptr, cols, vals = [0], [], []
            for v in self._order:
                d = self.g.in_edges[v]
                cols.extend(map(pos.__getitem__, d))
                vals.extend(d.values())
                indptr.append(len(cols))
            n = len(self._order)
            self._weights = sparse.csr_matrix(
                (np.array(vals), np.array(cols, dtype=np.int64), np.array(indptr, dtype=np.int64)), shape=(n, n)
            )
        return self._weights

    def begin_step(self, t: int) -> None:
        self.t = t
        order = sorted(self.agents)
        if order != self._order:
            self._order = order
            self._weights = None
        self._pos = {u: k for k, u in enumerate(order)}
        n, m = len(order), self.action_set.count
        onehot = np.zeros((n, m))
        for k, uid in enumerate(order):
            a = self.prev.get(uid)
            if a is not None:
                onehot[k, a] = 1.0
        influence = self._weight_matrix() @ onehot
        prefs = np.array([self.agents[u].preferences for u in order]).reshape(n, m)
        self.base = prefs + influence
        self._responses = ResponseTable(self.base, self.target)
        self._observed = {}

    def commit(self) -> dict[int, int]:
        missing = set(self._order) - set(self._observed)
        if missing:
            raise RunError(f"step {self.t}: strategy did not observe users {sorted(missing)[:5]}")
        for uid in self._order:
            self.agents[uid].record(self.t, self._observed[uid])
        self.prev = dict(self._observed)
        # callers keep the returned map, churn later edits self.prev
        return dict(self._observed)

    # -- market interface ------------------------------------------------------

    def users(self):
        return list(self._order)

    def preferences(self, uid: int) -> np.ndarray:
        return self.agents[uid].preferences.copy()

    def offer(self, uid: int, incentive: float) -> int:
        if incentive < 0:
            raise RunError(f"negative offer {incentive} to user {uid}")
        if uid in self._observed:
            raise RunError(f"user {uid} already acted at step {self.t}")
        a = self._responses.respond(self._pos[uid], incentive)
        self._observed[uid] = a
        return a


def _load_graph(cfg: ExperimentConfig, rng: np.random.Generator) -> net.SocialNetwork:
    if cfg.dataset.startswith("synthetic:"):
        try:
            _, n, m = cfg.dataset.split(":")
            return net.synthetic_graph(int(n), int(m), rng, undirected=cfg.undirected, closure=cfg.closure)
        except ValueError as exc:
            raise RunError(f"bad synthetic dataset string {cfg.dataset!r}: {exc}") from exc
    return net.read_edge_list(cfg.dataset, undirected=cfg.undirected)


def _churn_events(cfg: ExperimentConfig, g: net.SocialNetwork, rng) -> dict[int, net.ChurnEvent]:
    if cfg.churn_log:
        events = net.load_churn_log(Path(cfg.churn_log).read_text(encoding="utf-8"))
    elif cfg.churn != "none":
        params = dict(net.DN_PRESETS[cfg.churn])
        if cfg.churn_join:
            params["join_min"], params["join_max"] = cfg.churn_join
        if cfg.churn_leave:
            params["leave_min"], params["leave_max"] = cfg.churn_leave
        churn_cfg = net.ChurnConfig(**params, horizon=cfg.horizon, action_count=cfg.actions)
        events = net.generate_churn_schedule(g, churn_cfg, rng)
    else:
        events = []
    return {ev.t: ev for ev in events}


def run(cfg: ExperimentConfig) -> SimulationTrace:
    cfg.validate()
    started = time.perf_counter()
    graph_ss, weight_ss, pref_ss, churn_ss, _strategy_ss = np.random.SeedSequence(cfg.seed).spawn(5)
    try:
        g = _load_graph(cfg, np.random.default_rng(graph_ss))
    except net.EdgeListError as exc:
        raise RunError(f"{cfg.label}: dataset load failed: {exc}") from exc
    g = net.assign_weights(g, np.random.default_rng(weight_ss), cfg.weighting)
    prefs = net.assign_preferences(g, cfg.actions, np.random.default_rng(pref_ss))
    events = _churn_events(cfg, g, np.random.default_rng(churn_ss))

    actions = ActionSet(cfg.actions, cfg.target)
    pop = Population(g, prefs, actions, cfg.weighting)
    strategy: Strategy = make_strategy(cfg.strategy, cfg.gamma, cfg.rho0, cfg.theta0)
    strategy.add_users(pop, sorted(pop.agents))
    estimator = None
    if strategy.estimator:
        estimator = InfluenceEstimator(sorted(pop.agents), cfg.actions, cfg.lam, strategy.estimator)
    dump = Path(cfg.influence_dump) if cfg.influence_dump else None
    if dump:
        dump.mkdir(parents=True, exist_ok=True)

    retired: set[int] = set()
    records = []
    for t in range(1, cfg.horizon + 1):
        ev = events.get(t)
        if ev:
            try:
                pop.apply(ev, retired)
            except net.ChurnError as exc:
                raise RunError(f"{cfg.label}: {exc}") from exc
            if ev.leavers:
                strategy.remove_users(ev.leavers)
                if estimator:
                    estimator.remove_users(ev.leavers)
            if ev.joiners:
                new = [j.uid for j in ev.joiners]
                strategy.add_users(pop, new)
                if estimator:
                    estimator.add_users(new)
        budget = float(cfg.budget)
        pop.begin_step(t)
        out = strategy.step(pop, budget, t)
        observed = pop.commit()
        if out.spend > budget + 1e-9:
            raise RunError(f"{cfg.label}: step {t} spent {out.spend} of {budget}")
        if estimator:
            estimator.observe(t, observed)
            strategy.update_estimates(dict(zip(estimator.users, estimator.degrees())))
            if dump:
                write_influence_csv(estimator.estimate(), dump, t)
        prefs_now = {uid: pop.agents[uid].preferences for uid in observed}
        records.append(StepRecord(
            t=t,
            population=len(observed),
            gaup=gaup(observed, actions.target),
            giac=giac(observed, out.offers, prefs_now, actions.target),
            spend=float(out.spend),
            budget=budget,
            actions=observed,
            offers=out.offers,
        ))
    elapsed = time.perf_counter() - started
    log.info("%s: %d steps in %.2fs", cfg.label, cfg.horizon, elapsed)
    return SimulationTrace(cfg, records, summarize(cfg.strategy, records), elapsed, len(pop.agents))


def _run_safe(cfg: ExperimentConfig):
    try:
        return run(cfg)
    except Exception as exc:  # reported per config, siblings keep running
        return RunFailure(cfg, f"{type(exc).__name__}: {exc}")


def run_matrix(cfgs: list[ExperimentConfig], parallelism: int = 1) -> list[SimulationTrace | RunFailure]:
    """Run independent configs; results come back in input order."""
    if not cfgs:
        raise ValueError("run_matrix needs at least one config")
    if parallelism <= 1 or len(cfgs) == 1:
        return [_run_safe(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_safe, cfgs))


# --- serialization -----------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def trace_csv(trace: SimulationTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in trace.records:
        w.writerow([r.t, r.population, _fmt(r.gaup), _fmt(r.giac), _fmt(r.spend), _fmt(r.budget),
                    trace.config.strategy, trace.config.seed])
    return buf.getvalue()


def load_trace_csv(text: str) -> tuple[str, list[StepRecord]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty trace")
    records = [
        StepRecord(int(r["t"]), int(r["population"]), float(r["gaup"]), float(r["giac"]),
                   float(r["spend"]), float(r["budget"]))
        for r in rows
    ]
    return rows[0]["strategy"], records


def summary_csv(summaries: list[RunSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for s in summaries:
        d = asdict(s)
        w.writerow([_fmt(d[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def load_summary_csv(text: str) -> list[RunSummary]:
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        vals = {c: (float(r[c]) if r[c] != "" else None) for c in SUMMARY_COLUMNS if c != "strategy"}
        out.append(RunSummary(strategy=r["strategy"], **vals))
    return out


def write_influence_csv(est, directory: Path, t: int) -> None:
    """Pairwise matrix (rows influencers, columns influencees) plus degree log."""
    with open(directory / f"pairwise_{t:04d}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["influencer"] + est.users)
        for uid, row in zip(est.users, est.pairwise):
            w.writerow([uid] + [repr(float(x)) for x in row])
    new = not (directory / "degrees.csv").exists()
    with open(directory / "degrees.csv", "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(["t", "user", "theta"])
        for uid, d in zip(est.users, est.degrees):
            w.writerow([t, uid, repr(float(d))])
