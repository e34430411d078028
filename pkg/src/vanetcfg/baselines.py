"""Reference clustering algorithms used for comparison with DCA."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

from .engine import GAIN_TOL, CoalitionGame, EngineState, LearningParams, run
from .netmodel import MobileNetwork, NetworkGraph
from .objective import ObjectiveParams
from .partition import Coalition, Partition


class BaselineKind(str, Enum):
    CABP = "CABP"
    GREEDY_UNILATERAL = "GreedyUnilateral"
    MERGE_SPLIT_TRANSFER = "MSTCFA"


def ca_bp_init(graph: NetworkGraph, n_max: int | None = None) -> Partition:
    """Lowest-ID clustering.

    Repeatedly the smallest unclustered id becomes a head and absorbs its
    unclustered one-hop neighbours, so a node within reach of several heads
    ends up with the lowest-id one.  Clusters above ``n_max`` keep their
    lowest ids; the dropped members become singletons.
    """
    n = graph.n
    assigned = [False] * n
    coalitions: list[Coalition] = []
    for h in range(n):
        if assigned[h]:
            continue
        members = [h] + [j for j in graph.neighbors[h] if not assigned[j]]
        for j in members:
            assigned[j] = True
        members.sort()
        keep, drop = (members, []) if n_max is None else (members[:n_max], members[n_max:])
        coalitions.append(Coalition(frozenset(keep), h))
        coalitions.extend(Coalition(frozenset([j]), j) for j in drop)
    return Partition(coalitions, n)


def greedy_unilateral(state: EngineState, network: NetworkGraph | MobileNetwork,
                      params: ObjectiveParams, slots: int) -> EngineState:
    """Same scheduler as DCA, but only unilateral joins and deterministic take-best."""
    return run(state, network, params, LearningParams(greedy=True), slots, unilateral_only=True)


@dataclass
class MSTResult:
    partition: Partition
    iterations: int
    potentials: list[float] = field(default_factory=list)
    moves: list[str] = field(default_factory=list)


def _with_best_heads(game: CoalitionGame, partition: Partition, removed: tuple[int, ...],
                     blocks: list[frozenset[int]]):
    """Best potential change over every joint head assignment of the new blocks."""
    best = None
    for heads in itertools.product(*(sorted(b) for b in blocks)):
        added = [Coalition(blk, h) for blk, h in zip(blocks, heads)]
        res = game.delta(partition, removed, added)
        if res is None:
            return None  # feasibility does not depend on the heads
        if best is None or res[0] > best[0] + GAIN_TOL:
            best = (res[0], added)
    return best


def _candidates(game: CoalitionGame, part: Partition):
    """Yield (label, removed indices, new blocks) for every merge, split and transfer."""
    graph = game.graph
    obj = game.objective
    n_max = game.params.n_max
    # merge: coalitions joined by at least one edge
    pairs = set()
    for u, v in graph.edges():
        a, b = part.node_index[u], part.node_index[v]
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    for a, b in sorted(pairs):
        A, B = part.coalitions[a], part.coalitions[b]
        merged = A.members | B.members
        if len(merged) <= n_max and obj.feasible(merged):
            yield f"merge({A.head},{B.head})", (a, b), [merged]
    # split: peel one member off, or cut the head's star from the periphery
    for k, c in enumerate(part.coalitions):
        if len(c) < 2:
            continue
        for x in sorted(c.members):
            rest = c.members - {x}
            yield f"split({c.head}|{x})", (k,), [rest, frozenset([x])]
        star = frozenset([c.head, *(x for x in graph.neighbors[c.head] if x in c.members)])
        rim = c.members - star
        if rim:
            yield f"cut({c.head})", (k,), [star, rim]
    # transfer: move one node into a coalition holding one of its neighbours
    for x in range(graph.n):
        src = part.node_index[x]
        S = part.coalitions[src]
        for dst in sorted({part.node_index[j] for j in graph.neighbors[x]} - {src}):
            T = part.coalitions[dst]
            grown = T.members | {x}
            if len(grown) > n_max:
                continue
            rest = S.members - {x}
            blocks = [rest, grown] if rest else [grown]
            yield f"transfer({x}->{T.head})", (src, dst), blocks


def mst_cfa(graph: NetworkGraph, params: ObjectiveParams, init: Partition | None = None,
            max_iter: int = 100_000) -> MSTResult:
    """Centralised merge/split/transfer hill climbing on the potential.

    Every iteration scans all candidate merges, splits and transfers, applies
    the single best improving one, and stops when nothing improves.
    """
    game = CoalitionGame.on(graph, params)
    part = init if init is not None else Partition.singletons(graph.n)
    result = MSTResult(part, 0, [game.objective.potential(part)])
    for _ in range(max_iter):
        best = None
        for label, removed, blocks in _candidates(game, part):
            scored = _with_best_heads(game, part, removed, blocks)
            if scored is None or scored[0] <= GAIN_TOL:
                continue
            if best is None or scored[0] > best[0] + GAIN_TOL:
                best = (scored[0], label, removed, scored[1])
        if best is None:
            break
        part = part.replace(best[2], best[3])
        result.iterations += 1
        result.moves.append(best[1])
        result.potentials.append(game.objective.potential(part))
    result.partition = part
    return result
