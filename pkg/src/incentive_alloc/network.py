"""Ground-truth influence graph: ingestion, preprocessing and churn.

The graph stored here is hidden from every allocator. Edges point from the
influencer to the influenced user, so ``in_edges[v]`` maps each incoming
neighbour ``u`` to the weight ``w_uv`` with which ``u`` sways ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

WEIGHT_TOL = 1e-9


class EdgeListError(ValueError):
    """Raised for unreadable or malformed edge-list input."""


class ChurnError(ValueError):
    """Raised when a churn event does not fit the current network."""


@dataclass
class SocialNetwork:
    users: set[int] = field(default_factory=set)
    in_edges: dict[int, dict[int, float]] = field(default_factory=dict)
    out_edges: dict[int, dict[int, float]] = field(default_factory=dict)
    weighted: bool = False

    def add_user(self, uid: int) -> None:
        if uid in self.users:
            return
        self.users.add(uid)
        self.in_edges[uid] = {}
        self.out_edges[uid] = {}

    def add_edge(self, src: int, dst: int, weight: float = 1.0) -> bool:
        """Insert ``src -> dst``; self-loops and duplicates are ignored."""
        if src == dst or dst in self.out_edges.get(src, ()):
            return False
        self.add_user(src)
        self.add_user(dst)
        self.out_edges[src][dst] = weight
        self.in_edges[dst][src] = weight
        return True

    def remove_user(self, uid: int) -> None:
        for dst in self.out_edges.pop(uid):
            del self.in_edges[dst][uid]
        for src in self.in_edges.pop(uid):
            del self.out_edges[src][uid]
        self.users.remove(uid)

    def set_weight(self, src: int, dst: int, weight: float) -> None:
        self.out_edges[src][dst] = weight
        self.in_edges[dst][src] = weight

    @property
    def edge_count(self) -> int:
        return sum(len(d) for d in self.out_edges.values())

    def edges(self) -> Iterable[tuple[int, int, float]]:
        """All edges in ascending (source, target) order."""
        for src in sorted(self.out_edges):
            outs = self.out_edges[src]
            for dst in sorted(outs):
                yield src, dst, outs[dst]

    def in_weight_sum(self, uid: int) -> float:
        return sum(self.in_edges[uid].values())

    def normalize_in_weights(self, uids: Iterable[int] | None = None) -> None:
        """Scale incoming weights by 1/S wherever their sum S exceeds 1."""
        for v in sorted(self.users if uids is None else uids):
            total = self.in_weight_sum(v)
            if total > 1.0:
                for u, w in list(self.in_edges[v].items()):
                    self.set_weight(u, v, w / total)

    def check_invariants(self) -> None:
        for v in self.users:
            if v in self.in_edges[v]:
                raise AssertionError(f"self-loop on {v}")
            for u, w in self.in_edges[v].items():
                if u not in self.users:
                    raise AssertionError(f"dangling edge {u}->{v}")
                if self.out_edges[u].get(v) != w:
                    raise AssertionError(f"adjacency mismatch on {u}->{v}")
                if self.weighted and not 0.0 < w <= 1.0:
                    raise AssertionError(f"weight {w} on {u}->{v} outside (0,1]")
            if self.weighted and self.in_weight_sum(v) > 1.0 + WEIGHT_TOL:
                raise AssertionError(f"incoming weight of {v} exceeds 1")

    def copy(self) -> "SocialNetwork":
        return SocialNetwork(
            users=set(self.users),
            in_edges={k: dict(v) for k, v in self.in_edges.items()},
            out_edges={k: dict(v) for k, v in self.out_edges.items()},
            weighted=self.weighted,
        )


def load_edge_list(text: str, undirected: bool = False) -> SocialNetwork:
    """Parse a SNAP-style edge list ("src dst" per line, "#" comments).

    Undirected sources are expanded into both directions.
    """
    g = SocialNetwork()
    seen_any = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListError(f"line {lineno}: expected two node ids, got {raw!r}")
        try:
            src, dst = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"line {lineno}: node ids must be integers, got {raw!r}") from None
        seen_any = True
        if src == dst:
            continue
        g.add_edge(src, dst)
        if undirected:
            g.add_edge(dst, src)
    if not seen_any:
        raise EdgeListError("edge list contains no edges")
    return g


def read_edge_list(path: str | Path, undirected: bool = False) -> SocialNetwork:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise EdgeListError(f"cannot read {path}: {exc}") from exc
    return load_edge_list(text, undirected=undirected)


def _open_unit(rng: np.random.Generator, size=None):
    # uniform on (0, 1]
    return 1.0 - rng.random(size)


WEIGHT_SCHEMES = ("cap", "indegree")


def assign_weights(
    g: SocialNetwork, seed: int | np.random.Generator, scheme: str = "cap"
) -> SocialNetwork:
    """Draw a weight per edge so every user's incoming weights sum to at most 1.

    ``cap``: raw draws on (0, 1], incoming weights rescaled by 1/S wherever
    their sum S exceeds 1. ``indegree``: each raw draw divided by the target's
    in-degree, which bounds the sum without rescaling (expected sum 1/2).
    """
    if scheme not in WEIGHT_SCHEMES:
        raise ValueError(f"unknown weight scheme {scheme!r}")
    rng = np.random.default_rng(seed)
    out = g.copy()
    edges = list(out.edges())
    draws = _open_unit(rng, len(edges))
    for (src, dst, _), w in zip(edges, draws):
        if scheme == "indegree":
            w = w / len(out.in_edges[dst])
        out.set_weight(src, dst, float(w))
    out.weighted = True
    out.normalize_in_weights()
    return out


def draw_preferences(rng: np.random.Generator, action_count: int) -> np.ndarray:
    pref = rng.random(action_count)
    while not pref.any():  # preference ratio needs a positive sum
        pref = rng.random(action_count)
    return pref


def assign_preferences(
    g: SocialNetwork, action_count: int, seed: int | np.random.Generator
) -> dict[int, np.ndarray]:
    if action_count < 2:
        raise ValueError(f"action_count must be >= 2, got {action_count}")
    rng = np.random.default_rng(seed)
    return {uid: draw_preferences(rng, action_count) for uid in sorted(g.users)}


# --- synthetic stand-ins -------------------------------------------------


def synthetic_graph(
    n: int,
    m: int,
    seed: int | np.random.Generator,
    undirected: bool = False,
    closure: float = 0.0,
) -> SocialNetwork:
    """Seeded random graph with exactly ``n`` users and ``m`` edges.

    A random spanning tree keeps everyone connected; the remaining edges
    either close a triangle (probability ``closure``, via a two-hop walk from
    the source) or attach preferentially by degree. ``closure`` is the knob
    for matching a dataset's clustering coefficient. With ``undirected`` the
    ``m`` pairs are expanded to ``2m`` directed edges.
    """
    max_pairs = n * (n - 1) // (2 if undirected else 1)
    if n < 2 or not n - 1 <= m <= max_pairs:
        raise ValueError(f"cannot place {m} edges on {n} users")
    rng = np.random.default_rng(seed)
    degree = np.ones(n)
    pairs: set[tuple[int, int]] = set()
    nbrs: list[list[int]] = [[] for _ in range(n)]

    def link(a: int, b: int) -> None:
        p = _pair(a, b, undirected)
        if a == b or p in pairs:
            return
        pairs.add(p)
        degree[a] += 1
        degree[b] += 1
        nbrs[a].append(b)
        nbrs[b].append(a)

    for u in range(1, n):
        v = int(rng.integers(u))
        if rng.random() < 0.5:
            link(u, v)
        else:
            link(v, u)
    while len(pairs) < m:
        src = int(rng.integers(n))
        if rng.random() < closure and nbrs[src]:
            mid = nbrs[src][int(rng.integers(len(nbrs[src])))]
            dst = nbrs[mid][int(rng.integers(len(nbrs[mid])))]
        else:
            dst = int(rng.choice(n, p=degree / degree.sum()))
        link(src, dst)
    g = SocialNetwork()
    for uid in range(n):
        g.add_user(uid)
    for src, dst in sorted(pairs):
        g.add_edge(src, dst)
        if undirected:
            g.add_edge(dst, src)
    return g


def average_clustering(g: SocialNetwork) -> float:
    """Mean local clustering coefficient of the undirected skeleton."""
    nb = {v: set(g.in_edges[v]) | set(g.out_edges[v]) for v in g.users}
    total = 0.0
    for ns in nb.values():
        d = len(ns)
        if d < 2:
            continue
        links = sum(1 for a in ns for b in nb[a] if b in ns) / 2
        total += links / (d * (d - 1) / 2)
    return total / len(nb) if nb else 0.0


def _pair(a: int, b: int, undirected: bool) -> tuple[int, int]:
    return (min(a, b), max(a, b)) if undirected else (a, b)


# --- churn ------------------------------------------------------------------


@dataclass
class Joiner:
    uid: int
    edges: list[tuple[int, int, float]]
    preferences: np.ndarray


@dataclass
class ChurnEvent:
    t: int
    joiners: list[Joiner] = field(default_factory=list)
    leavers: list[int] = field(default_factory=list)


@dataclass
class ChurnConfig:
    join_min: int = 1
    join_max: int = 50
    leave_min: int = 1
    leave_max: int = 20
    leave_period: int = 5
    attach_min: int = 1
    attach_max: int = 20
    horizon: int = 150
    action_count: int = 4


DN_PRESETS = {
    "dn1": dict(join_min=1, join_max=50, leave_min=1, leave_max=20),
    "dn2": dict(join_min=1, join_max=50, leave_min=1, leave_max=50),
    "dn3": dict(join_min=1, join_max=100, leave_min=1, leave_max=50),
}


def apply_churn(
    g: SocialNetwork, ev: ChurnEvent, retired: set[int] | None = None, scheme: str = "cap"
) -> SocialNetwork:
    """Remove leavers, then attach joiners. Mutates and returns ``g``.

    ``retired`` collects ids that have left so they are never reused. Under
    the ``indegree`` weight scheme a new edge's raw weight is divided by the
    target's in-degree once the joiner is attached.
    """
    for uid in ev.leavers:
        if uid not in g.users:
            raise ChurnError(f"step {ev.t}: leaver {uid} is not in the network")
    for uid in ev.leavers:
        g.remove_user(uid)
        if retired is not None:
            retired.add(uid)
    touched: set[int] = set()
    for j in ev.joiners:
        if j.uid in g.users or (retired is not None and j.uid in retired):
            raise ChurnError(f"step {ev.t}: joiner id {j.uid} collides with an existing id")
        g.add_user(j.uid)
        for src, dst, w in j.edges:
            if j.uid not in (src, dst):
                raise ChurnError(f"step {ev.t}: edge {src}->{dst} does not touch joiner {j.uid}")
            other = dst if src == j.uid else src
            if other not in g.users:
                raise ChurnError(f"step {ev.t}: joiner {j.uid} attaches to absent user {other}")
            if g.add_edge(src, dst, w):
                touched.add(dst)
        if scheme == "indegree":
            for src, dst, w in j.edges:
                g.set_weight(src, dst, w / len(g.in_edges[dst]))
    g.normalize_in_weights(touched)
    return g


def generate_churn_schedule(
    g: SocialNetwork, cfg: ChurnConfig, seed: int | np.random.Generator
) -> list[ChurnEvent]:
    """One event per step 1..horizon; departures only every ``leave_period`` steps."""
    rng = np.random.default_rng(seed)
    live = sorted(g.users)
    next_id = max(live, default=-1) + 1
    events = []
    for t in range(1, cfg.horizon + 1):
        ev = ChurnEvent(t)
        if t % cfg.leave_period == 0 and live:
            k = min(int(rng.integers(cfg.leave_min, cfg.leave_max + 1)), len(live))
            picked = rng.choice(len(live), size=k, replace=False)
            ev.leavers = sorted(live[i] for i in picked)
            gone = set(ev.leavers)
            live = [u for u in live if u not in gone]
        n_join = int(rng.integers(cfg.join_min, cfg.join_max + 1))
        for _ in range(n_join):
            uid = next_id
            next_id += 1
            edges = []
            if live:
                k = min(int(rng.integers(cfg.attach_min, cfg.attach_max + 1)), len(live))
                targets = rng.choice(len(live), size=k, replace=False)
                flips = rng.random(k) < 0.5
                weights = _open_unit(rng, k)
                for idx, outward, w in zip(targets, flips, weights):
                    other = live[idx]
                    edge = (uid, other) if outward else (other, uid)
                    edges.append((*edge, float(w)))
            ev.joiners.append(Joiner(uid, edges, draw_preferences(rng, cfg.action_count)))
        live.extend(j.uid for j in ev.joiners)
        events.append(ev)
    return events


def dump_churn_log(events: list[ChurnEvent]) -> str:
    """Serialize a schedule as "t JOIN id k" / "t EDGE src dst w" / "t PREF ..." / "t LEAVE id"."""
    lines = []
    for ev in events:
        for uid in ev.leavers:
            lines.append(f"{ev.t} LEAVE {uid}")
        for j in ev.joiners:
            lines.append(f"{ev.t} JOIN {j.uid} {len(j.edges)}")
            for src, dst, w in j.edges:
                lines.append(f"{ev.t} EDGE {src} {dst} {w!r}")
            lines.append(f"{ev.t} PREF {j.uid} " + " ".join(repr(float(p)) for p in j.preferences))
    return "\n".join(lines) + "\n"


def load_churn_log(text: str) -> list[ChurnEvent]:
    events: dict[int, ChurnEvent] = {}
    current: Joiner | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            t, kind = int(parts[0]), parts[1]
            ev = events.setdefault(t, ChurnEvent(t))
            if kind == "LEAVE":
                ev.leavers.append(int(parts[2]))
            elif kind == "JOIN":
                current = Joiner(int(parts[2]), [], np.zeros(0))
                ev.joiners.append(current)
            elif kind == "EDGE":
                current.edges.append((int(parts[2]), int(parts[3]), float(parts[4])))
            elif kind == "PREF":
                current.preferences = np.array([float(p) for p in parts[3:]])
            else:
                raise ValueError(kind)
        except (IndexError, ValueError, AttributeError):
            raise ChurnError(f"churn log line {lineno}: cannot parse {raw!r}") from None
    return [events[t] for t in sorted(events)]
