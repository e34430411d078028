"""Cooperative capacity, management overhead and the normalized clustering score.

A coalition's value is

    v(S) = (1 - zeta) * (chi_intra(S) + chi_inter(S)) / chi_max
           + zeta * (E_max / M - E_intra(S) - E_inter(S)) / E_max

for feasible S (size <= n_max, connected, hop diameter <= d_max) and 0
otherwise.  ``E_inter(S) = v_inter * (M - 1)`` is one head's share of the
head-to-head overhead, so summing v over a feasible partition gives exactly
the global score G1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .config import SimConfig
from .netmodel import NetworkGraph
from .partition import Coalition, Partition


@dataclass(frozen=True)
class ObjectiveParams:
    zeta: float = 0.5
    beta: float = 0.1
    alpha: float = 2.0
    v_intra: float = 1.0
    v_inter: float = 0.2
    n_max: int = 15
    d_max: int = 2
    chi_max: float | None = None  # None: derived from the graph
    e_max: float | None = None  # None: derived from the node count

    def __post_init__(self) -> None:
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError("zeta must lie in [0, 1]")
        if self.n_max < 1 or self.d_max < 1:
            raise ValueError("n_max and d_max must be >= 1")
        if not self.alpha > 1:
            raise ValueError("alpha must be > 1")
        if self.chi_max is not None and not self.chi_max > 0:
            raise ValueError("chi_max must be > 0")
        if self.e_max is not None and not self.e_max > 0:
            raise ValueError("e_max must be > 0")

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "ObjectiveParams":
        return cls(cfg.zeta, cfg.beta, cfg.alpha, cfg.v_intra, cfg.v_inter, cfg.n_max, cfg.d_max)


@dataclass(frozen=True)
class Breakdown:
    chi_intra: float
    chi_inter: float
    e_intra: float
    e_inter: float
    G1: float

    @property
    def chi_total(self) -> float:
        return self.chi_intra + self.chi_inter

    @property
    def e_total(self) -> float:
        return self.e_intra + self.e_inter

    def as_dict(self) -> dict:
        return asdict(self)


def default_chi_max(graph: NetworkGraph, alpha: float) -> float:
    """Sum of single-hop capacities Rt/alpha over all directed edges (1.0 if edgeless)."""
    total = float(graph.rt[graph.adj].sum()) / alpha
    return total if total > 0 else 1.0


def default_e_max(n: int, params: ObjectiveParams) -> float:
    total = (params.v_intra + params.v_inter) * n * (n - 1)
    return total if total > 0 else 1.0


class Objective:
    """Scoring functions bound to one graph snapshot."""

    def __init__(self, graph: NetworkGraph, params: ObjectiveParams):
        self.graph = graph
        self.params = params
        self.chi_max = params.chi_max if params.chi_max is not None else default_chi_max(graph, params.alpha)
        self.e_max = params.e_max if params.e_max is not None else default_e_max(graph.n, params)
        self._kappa: np.ndarray | None = None
        self._feasible: dict[frozenset, bool] = {}
        self._chi_intra: dict[frozenset, float] = {}

    @property
    def kappa(self) -> np.ndarray:
        if self._kappa is None:
            self._kappa = self.graph.kappa_matrix(self.params.alpha)
        return self._kappa

    # -- capacity -----------------------------------------------------------

    def chi_intra(self, members: frozenset[int]) -> float:
        """Sum of kappa over ordered one-hop neighbour pairs inside the coalition."""
        if isinstance(members, Coalition):
            members = members.members
        cached = self._chi_intra.get(members)
        if cached is None:
            k = self.kappa
            nbrs = self.graph.neighbors
            cached = 0.0
            for i in sorted(members):
                for j in nbrs[i]:
                    if j in members:
                        cached += k[i, j]
            self._chi_intra[members] = cached
        return cached

    def chi_inter(self, coalition: Coalition, partition: Partition) -> float:
        """beta * sum of kappa from this coalition's head to every other head."""
        h = coalition.head
        k = self.kappa
        return self.params.beta * float(sum(k[h, x] for x in partition.heads if x != h))

    # -- overhead -----------------------------------------------------------

    def e_intra(self, members: frozenset[int]) -> float:
        s = len(members)
        return self.params.v_intra * s * (s - 1)

    def overhead(self, coalition: Coalition, partition: Partition) -> tuple[float, float]:
        """(E_intra, E_inter) of one coalition inside a partition of M coalitions."""
        m = len(partition)
        return self.e_intra(coalition.members), self.params.v_inter * (m - 1)

    # -- constraints --------------------------------------------------------

    def diameter(self, members: frozenset[int]) -> float:
        """Hop diameter of the induced subgraph; inf when disconnected."""
        worst = 0
        for src in members:
            dist = self.graph.hop_distances_within(members, src)
            if len(dist) < len(members):
                return math.inf
            worst = max(worst, max(dist.values()))
        return worst

    def feasible(self, members: frozenset[int]) -> bool:
        if isinstance(members, Coalition):
            members = members.members
        cached = self._feasible.get(members)
        if cached is None:
            p = self.params
            cached = len(members) <= p.n_max and self.diameter(members) <= p.d_max
            self._feasible[members] = cached
        return cached

    # -- values -------------------------------------------------------------

    def value_given(self, coalition: Coalition, m: int, head_capacity: float) -> float:
        """v(S) given the coalition count ``m`` and sum of kappa from S's head to other heads."""
        if not self.feasible(coalition.members):
            return 0.0
        p = self.params
        chi = self.chi_intra(coalition.members) + p.beta * head_capacity
        e = self.e_intra(coalition.members) + p.v_inter * (m - 1)
        return (1.0 - p.zeta) * chi / self.chi_max + p.zeta * (self.e_max / m - e) / self.e_max

    def coalition_value(self, coalition: Coalition, partition: Partition) -> float:
        if not self.feasible(coalition.members):
            return 0.0
        p = self.params
        chi = self.chi_intra(coalition.members) + self.chi_inter(coalition, partition)
        e_intra, e_inter = self.overhead(coalition, partition)
        m = len(partition)
        return (1.0 - p.zeta) * chi / self.chi_max + p.zeta * (self.e_max / m - e_intra - e_inter) / self.e_max

    def potential(self, partition: Partition) -> float:
        """Sum of coalition values; equals G1 on feasible partitions."""
        return math.fsum(self.coalition_value(c, partition) for c in partition)

    def breakdown(self, partition: Partition) -> Breakdown:
        """Network-wide totals.  Infeasible coalitions still contribute their raw terms."""
        p = self.params
        m = len(partition)
        heads = partition.heads
        k = self.kappa
        chi_intra = math.fsum(self.chi_intra(c.members) for c in partition)
        if m > 1:
            hk = k[np.ix_(heads, heads)]
            chi_inter = p.beta * float(hk.sum())
        else:
            chi_inter = 0.0
        e_intra = math.fsum(self.e_intra(c.members) for c in partition)
        e_inter = p.v_inter * m * (m - 1)
        g1 = ((1.0 - p.zeta) * (chi_intra + chi_inter) / self.chi_max
              + p.zeta * (self.e_max - e_intra - e_inter) / self.e_max)
        return Breakdown(chi_intra, chi_inter, e_intra, e_inter, g1)

    def global_objective(self, partition: Partition) -> float:
        return self.breakdown(partition).G1

    def partition_feasible(self, partition: Partition) -> bool:
        return all(self.feasible(c.members) for c in partition)
