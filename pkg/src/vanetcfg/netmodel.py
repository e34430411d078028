"""Geometric VANET model: node placement, mobility, LOS channel and link capacities.

Unit conventions (all conversions happen in :class:`ChannelParams`):

* transmit power ``p_t_dbm`` in dBm -> watts: ``10 ** ((p - 30) / 10)``
* antenna gain ``g0_dbi`` in dBi -> linear: ``10 ** (g / 10)``
* noise density ``n0_dbm_per_mhz`` is integrated over the bandwidth:
  ``10 ** ((n0 + 10 log10(W / 1 MHz) - 30) / 10)`` watts
* path loss ``(lambda / 4 pi) ** alpha_l * d ** -alpha_l`` is a linear power gain
* link rate ``W * log2(1 + SINR)`` in bits/s
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, replace

import numpy as np

from .config import ConfigError, SimConfig


class DomainError(ValueError):
    """Raised for physically meaningless inputs (e.g. two nodes at the same spot)."""


class NoEdgeError(KeyError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    pos: tuple[float, float]
    vel: tuple[float, float]
    range: float
    is_rsu: bool = False

    def to_dict(self) -> dict:
        return {"id": self.id, "pos": list(self.pos), "vel": list(self.vel),
                "range": self.range, "is_rsu": self.is_rsu}

    @classmethod
    def from_dict(cls, d: dict) -> "Node":
        return cls(int(d["id"]), tuple(map(float, d["pos"])), tuple(map(float, d["vel"])),
                   float(d["range"]), bool(d["is_rsu"]))


@dataclass(frozen=True)
class ChannelParams:
    p_t_dbm: float = 30.0
    g0_dbi: float = 20.0
    bandwidth_hz: float = 800e6
    n0_dbm_per_mhz: float = -134.0
    alpha_l: float = 2.0
    wavelength: float = 299_792_458.0 / 5.9e9
    interference: bool = False
    fading: bool = False

    def __post_init__(self) -> None:
        if not (self.alpha_l > 0 and self.bandwidth_hz > 0 and self.wavelength > 0):
            raise ConfigError("alpha_l, bandwidth_hz and wavelength must be > 0")

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "ChannelParams":
        return cls(cfg.p_t_dbm, cfg.g0_dbi, cfg.bandwidth_hz, cfg.n0_dbm_per_mhz,
                   cfg.alpha_l, cfg.wavelength, cfg.interference, cfg.fading)

    @property
    def p_t_w(self) -> float:
        return 10.0 ** ((self.p_t_dbm - 30.0) / 10.0)

    @property
    def g0(self) -> float:
        return 10.0 ** (self.g0_dbi / 10.0)

    @property
    def noise_w(self) -> float:
        dbm = self.n0_dbm_per_mhz + 10.0 * math.log10(self.bandwidth_hz / 1e6)
        return 10.0 ** ((dbm - 30.0) / 10.0)

    @property
    def unit_loss(self) -> float:
        return (self.wavelength / (4.0 * math.pi)) ** self.alpha_l


# ---------------------------------------------------------------------------
# Scenario generation and mobility
# ---------------------------------------------------------------------------

def generate_scenario(cfg: SimConfig, seed: int | np.random.SeedSequence) -> list[Node]:
    """Place ``cfg.n_nodes`` nodes uniformly on the square, flag RSUs, draw velocities."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    n = cfg.n_nodes
    pos = rng.uniform(0.0, cfg.area, size=(n, 2))
    n_rsu = int(math.floor(cfg.prp_rsu * n + 1e-9))
    rsu = np.zeros(n, dtype=bool)
    rsu[rng.choice(n, size=n_rsu, replace=False)] = True
    speed = rng.uniform(cfg.v_ref_min, cfg.v_ref_max, size=n)
    heading = rng.uniform(0.0, 2.0 * math.pi, size=n)
    radius = rng.uniform(cfg.d_ref_min, cfg.d_ref_max, size=n)

    nodes = []
    for i in range(n):
        if rsu[i]:
            vel = (0.0, 0.0)
            r = radius[i] * cfg.rsu_range_factor
        else:
            vel = (float(speed[i] * math.cos(heading[i])), float(speed[i] * math.sin(heading[i])))
            r = radius[i]
        nodes.append(Node(i, (float(pos[i, 0]), float(pos[i, 1])), vel, float(r), bool(rsu[i])))
    return nodes


def _reflect(x: float, v: float, bound: float) -> tuple[float, float]:
    while x < 0.0 or x > bound:
        if x < 0.0:
            x, v = -x, -v
        else:
            x, v = 2.0 * bound - x, -v
    return x, v


def step_mobility(nodes: list[Node], dt: float, bounds: float) -> list[Node]:
    """Constant-velocity move with specular reflection at the square's edges."""
    out = []
    for nd in nodes:
        if nd.is_rsu or nd.vel == (0.0, 0.0):
            out.append(nd)
            continue
        x, vx = _reflect(nd.pos[0] + nd.vel[0] * dt, nd.vel[0], bounds)
        y, vy = _reflect(nd.pos[1] + nd.vel[1] * dt, nd.vel[1], bounds)
        out.append(replace(nd, pos=(x, y), vel=(vx, vy)))
    return out


# ---------------------------------------------------------------------------
# Channel model
# ---------------------------------------------------------------------------

def path_loss(d: float, ch: ChannelParams) -> float:
    if d <= 0:
        raise DomainError(f"path loss undefined at distance {d}")
    return ch.unit_loss * d ** (-ch.alpha_l)


def sinr(i: int, j: int, pos: np.ndarray, ch: ChannelParams, h: np.ndarray | None = None) -> float:
    """SINR at receiver ``j`` for transmitter ``i``.

    With interference on, every other node ``k`` (not ``i``, not the receiver
    itself) is treated as a concurrent transmitter.
    """
    if i == j:
        raise DomainError("sinr needs two distinct nodes")
    pos = np.asarray(pos, dtype=float)

    def dist(a: int, b: int) -> float:
        return math.hypot(pos[a, 0] - pos[b, 0], pos[a, 1] - pos[b, 1])

    def gain(a: int, b: int) -> float:
        return 1.0 if h is None else float(h[a, b])

    signal = ch.p_t_w * ch.g0 * gain(i, j) * path_loss(dist(i, j), ch)
    interference = 0.0
    if ch.interference:
        terms = [ch.p_t_w * ch.g0 * gain(k, j) * path_loss(dist(k, j), ch)
                 for k in range(len(pos)) if k != i and k != j]
        interference = math.fsum(terms)
    return signal / (ch.noise_w + interference)


def shannon_rate(snr: float, bandwidth_hz: float) -> float:
    return bandwidth_hz * math.log2(1.0 + snr)


# ---------------------------------------------------------------------------
# Network graph
# ---------------------------------------------------------------------------

class NetworkGraph:
    """Frozen snapshot of the network: symmetric edges, directed rates, lazy routes.

    ``rt[i, j]`` is the achievable rate of link i -> j (0 off-edge).
    Multi-hop capacity follows the fewest-hop path, breaking ties by the
    largest bottleneck rate; route rows are computed on demand and cached.
    """

    def __init__(self, pos: np.ndarray, ranges: np.ndarray, adj: np.ndarray, rt: np.ndarray):
        self.pos = np.asarray(pos, dtype=float)
        self.ranges = np.asarray(ranges, dtype=float)
        self.adj = np.asarray(adj, dtype=bool)
        self.rt = np.asarray(rt, dtype=float)
        self.n = len(self.pos)
        self.neighbors: list[tuple[int, ...]] = [tuple(np.flatnonzero(self.adj[i]).tolist())
                                                 for i in range(self.n)]
        self._routes: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._kappa: dict[float, np.ndarray] = {}

    @classmethod
    def from_edges(cls, n: int, rates: dict[tuple[int, int], float]) -> "NetworkGraph":
        """Graph with given undirected edges; a rate applies to both directions."""
        adj = np.zeros((n, n), dtype=bool)
        rt = np.zeros((n, n))
        for (i, j), r in rates.items():
            adj[i, j] = adj[j, i] = True
            rt[i, j] = rt[j, i] = r
        return cls(np.zeros((n, 2)), np.zeros(n), adj, rt)

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adj[i, j])

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as (i, j) with i < j."""
        ii, jj = np.nonzero(np.triu(self.adj, 1))
        return list(zip(ii.tolist(), jj.tolist()))

    def link_rate(self, i: int, j: int) -> float:
        if not self.adj[i, j]:
            raise NoEdgeError((i, j))
        return float(self.rt[i, j])

    def invalidate(self) -> None:
        self._routes.clear()
        self._kappa.clear()

    def routes_from(self, s: int) -> tuple[np.ndarray, np.ndarray]:
        """(hops, bottleneck) from ``s`` to every node; hops = -1 when unreachable."""
        cached = self._routes.get(s)
        if cached is not None:
            return cached
        hops = np.full(self.n, -1, dtype=np.int64)
        best = np.zeros(self.n)
        hops[s] = 0
        best[s] = math.inf
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if hops[v] == -1:
                    hops[v] = hops[u] + 1
                    queue.append(v)
                if hops[v] == hops[u] + 1:
                    cand = min(best[u], self.rt[u, v])
                    if cand > best[v]:
                        best[v] = cand
        best[s] = 0.0
        self._routes[s] = (hops, best)
        return hops, best

    def kappa(self, i: int, j: int, alpha: float) -> float:
        if i == j:
            return 0.0
        hops, best = self.routes_from(i)
        if hops[j] <= 0:
            return 0.0
        return float(best[j] / (alpha * hops[j]))

    def kappa_matrix(self, alpha: float) -> np.ndarray:
        cached = self._kappa.get(alpha)
        if cached is not None:
            return cached
        k = np.zeros((self.n, self.n))
        for i in range(self.n):
            if not self.neighbors[i]:
                continue
            hops, best = self.routes_from(i)
            reach = hops > 0
            k[i, reach] = best[reach] / (alpha * hops[reach])
        k.setflags(write=False)
        self._kappa[alpha] = k
        return k

    def shortest_path(self, i: int, j: int) -> list[int] | None:
        """Fewest hops, then widest bottleneck, then lexicographically smallest ids."""
        if i == j:
            return [i]
        hops, best = self.routes_from(i)
        if hops[j] < 0:
            return None
        floor = best[j]
        # hop distance to j using only links that keep the bottleneck
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[j] = 0
        queue = deque([j])
        while queue:
            v = queue.popleft()
            for u in self.neighbors[v]:
                if dist[u] == -1 and self.rt[u, v] >= floor:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        path = [i]
        cur = i
        while cur != j:
            cur = min(u for u in self.neighbors[cur]
                      if dist[u] == dist[cur] - 1 and self.rt[cur, u] >= floor)
            path.append(cur)
        return path

    def hop_distances_within(self, members: frozenset[int] | set[int], src: int) -> dict[int, int]:
        """BFS hop counts from ``src`` in the subgraph induced by ``members``."""
        dist = {src: 0}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if v in members and v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist


def build_graph(nodes: list[Node], ch: ChannelParams,
                rng: np.random.Generator | None = None) -> NetworkGraph:
    """Edges between nodes within each other's range, rates from the SINR model.

    With ``ch.fading`` a symmetric exponential(1) power gain is drawn per node
    pair from ``rng``; otherwise every gain is 1.
    """
    n = len(nodes)
    pos = np.array([nd.pos for nd in nodes], dtype=float).reshape(n, 2)
    ranges = np.array([nd.range for nd in nodes], dtype=float)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    reach = np.minimum(ranges[:, None], ranges[None, :])
    adj = dist <= reach
    np.fill_diagonal(adj, False)

    h = None
    if ch.fading:
        if rng is None:
            raise ValueError("fading requires an rng")
        draws = rng.exponential(1.0, size=(n, n))
        h = np.triu(draws, 1)
        h = h + h.T

    rt = np.zeros((n, n))
    ii, jj = np.nonzero(adj)
    if len(ii) and not np.all(dist[ii, jj] > 0):
        raise DomainError("collocated nodes cannot share a link")
    if ch.interference:
        for i, j in zip(ii.tolist(), jj.tolist()):
            rt[i, j] = shannon_rate(sinr(i, j, pos, ch, h), ch.bandwidth_hz)
    else:
        gain = 1.0 if h is None else h[ii, jj]
        snr = ch.p_t_w * ch.g0 * gain * ch.unit_loss * dist[ii, jj] ** (-ch.alpha_l) / ch.noise_w
        rt[ii, jj] = ch.bandwidth_hz * np.log2(1.0 + snr)
    return NetworkGraph(pos, ranges, adj, rt)


class MobileNetwork:
    """Scenario whose graph is rebuilt after every mobility step."""

    def __init__(self, nodes: list[Node], ch: ChannelParams, area: float, dt: float = 1.0,
                 rng: np.random.Generator | None = None):
        if dt <= 0:
            raise ValueError("dt must be > 0")
        self.nodes = nodes
        self.ch = ch
        self.area = area
        self.dt = dt
        self.rng = rng
        self.graph = build_graph(nodes, ch, rng)

    def step(self) -> NetworkGraph:
        self.nodes = step_mobility(self.nodes, self.dt, self.area)
        self.graph = build_graph(self.nodes, self.ch, self.rng)
        return self.graph


# ---------------------------------------------------------------------------
# Snapshot export
# ---------------------------------------------------------------------------

def scenario_to_json(nodes: list[Node], ch: ChannelParams, seed: int | None = None) -> str:
    return json.dumps({"seed": seed, "channel": asdict(ch),
                       "nodes": [nd.to_dict() for nd in nodes]}, indent=2, sort_keys=True)


def scenario_from_json(text: str) -> tuple[list[Node], ChannelParams, int | None]:
    data = json.loads(text)
    nodes = [Node.from_dict(d) for d in data["nodes"]]
    return nodes, ChannelParams(**data["channel"]), data.get("seed")


def graph_from_positions(positions, ranges=None, ch: ChannelParams | None = None,
                         comm_range: float = 250.0) -> NetworkGraph:
    """Convenience for tests and small experiments: static nodes at given points."""
    ch = ch or ChannelParams()
    pos = np.asarray(positions, dtype=float)
    if ranges is None:
        ranges = np.full(len(pos), comm_range)
    nodes = [Node(i, (float(p[0]), float(p[1])), (0.0, 0.0), float(r))
             for i, (p, r) in enumerate(zip(pos, ranges))]
    return build_graph(nodes, ch)
