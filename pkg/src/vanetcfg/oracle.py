"""Brute-force ground truth for tiny networks.

Nothing here reuses the engine's operation enumeration or incremental gains:
partitions are enumerated outright and every candidate deviation is built as
a full partition and rescored from scratch through :class:`Objective`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from .objective import Objective
from .partition import Coalition, Partition

GAIN_TOL = 1e-12


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class EnumeratedPartition:
    partition: Partition
    score: float
    feasible: bool


def set_partitions(items: list[int]) -> Iterator[list[list[int]]]:
    """All set partitions of ``items`` via restricted growth strings."""
    n = len(items)
    if n == 0:
        yield []
        return
    codes = [0] * n

    def rec(pos: int, top: int):
        if pos == n:
            blocks: list[list[int]] = [[] for _ in range(top + 1)]
            for item, c in zip(items, codes):
                blocks[c].append(item)
            yield blocks
            return
        for c in range(top + 2):
            codes[pos] = c
            yield from rec(pos + 1, max(top, c))

    codes[0] = 0
    yield from rec(1, 0)


@lru_cache(maxsize=None)
def pointed_partition_count(n: int) -> int:
    """Number of set partitions with one marked element per block.

    Condition on the block holding the first element: size k, C(n-1, k-1)
    ways to fill it, k choices of head.
    """
    if n == 0:
        return 1
    return sum(math.comb(n - 1, k - 1) * k * pointed_partition_count(n - k) for k in range(1, n + 1))


def enumerate_all(objective: Objective, max_n: int = 10) -> Iterator[EnumeratedPartition]:
    """Every set partition crossed with every head assignment, scored by G1."""
    n = objective.graph.n
    if n > max_n:
        raise OracleSizeError(f"enumeration limited to {max_n} nodes, got {n}")
    for blocks in set_partitions(list(range(n))):
        for heads in itertools.product(*blocks):
            part = Partition([Coalition(frozenset(b), h) for b, h in zip(blocks, heads)], n)
            yield EnumeratedPartition(part, objective.global_objective(part),
                                      objective.partition_feasible(part))


def global_optimum(objective: Objective, max_n: int = 10) -> EnumeratedPartition:
    """Best feasible partition; skips infeasible block sets before assigning heads."""
    n = objective.graph.n
    if n > max_n:
        raise OracleSizeError(f"enumeration limited to {max_n} nodes, got {n}")
    p = objective.params
    kappa = objective.kappa
    best: tuple[float, Partition] | None = None
    for blocks in set_partitions(list(range(n))):
        sets = [frozenset(b) for b in blocks]
        if not all(objective.feasible(s) for s in sets):
            continue
        m = len(sets)
        chi_intra = sum(objective.chi_intra(s) for s in sets)
        e_total = sum(objective.e_intra(s) for s in sets) + p.v_inter * m * (m - 1)
        base = ((1 - p.zeta) * chi_intra / objective.chi_max
                + p.zeta * (objective.e_max - e_total) / objective.e_max)
        for heads in itertools.product(*blocks):
            inter = sum(kappa[a, b] for a in heads for b in heads if a != b)
            score = base + (1 - p.zeta) * p.beta * inter / objective.chi_max
            if best is None or score > best[0]:
                best = (score, Partition([Coalition(s, h) for s, h in zip(sets, heads)], n))
    assert best is not None
    return EnumeratedPartition(best[1], best[0], True)


# ---------------------------------------------------------------------------
# Nash stability from first principles
# ---------------------------------------------------------------------------

def _successor_head(old_head: int, members: frozenset[int], objective: Objective) -> int:
    if old_head in members:
        return old_head
    g = objective.graph
    ranked = sorted(members, key=lambda m: (-sum(g.rt[m, x] + g.rt[x, m]
                                                 for x in members if x != m and g.adj[m, x]), m))
    return ranked[0]


def _deviations(i: int, partition: Partition, objective: Objective):
    """Yield (label, new partition, receiving coalition or None) for every move of node i."""
    g = objective.graph
    S = partition.coalition_of(i)
    others = [c for c in partition if c is not S]
    if S.head != i:
        yield f"elect({i})", Partition(others + [Coalition(S.members, i)], partition.n), None
    reachable = [T for T in others if any(g.adj[i, x] for x in T.members)]
    for T in reachable:
        rest = [c for c in others if c is not T]
        left = S.members - {i}
        left_c = [Coalition(left, _successor_head(S.head, left, objective))] if left else []
        joined = Coalition(T.members | {i}, T.head)
        yield f"join({i}->{T.head})", Partition(rest + left_c + [joined], partition.n), joined
        for j in sorted(T.members):
            seat = (T.members - {j}) | {i}
            seated = Coalition(seat, _successor_head(T.head, seat, objective))
            back = left | {j}
            swapped = Coalition(back, _successor_head(S.head, back, objective))
            yield f"switch({i},{j})", Partition(rest + [swapped, seated], partition.n), seated
            yield (f"replace({i},{j})",
                   Partition(rest + left_c + [seated, Coalition(frozenset([j]), j)], partition.n), None)


def verify_nash(partition: Partition, objective: Objective,
                max_n: int | None = 12) -> tuple[bool, str | None]:
    """True iff no node has an admissible deviation that raises sum_S v(S).

    A deviation is admissible when every coalition it creates respects the
    size/diameter limits and, for joins and switches, the receiving
    coalition has positive value.
    """
    n = partition.n
    if max_n is not None and n > max_n:
        raise OracleSizeError(f"verify_nash limited to {max_n} nodes, got {n}")
    base = objective.potential(partition)
    old = set(partition.coalitions)
    for i in range(n):
        for label, new, receiving in _deviations(i, partition, objective):
            created = [c for c in new if c not in old]
            if not all(objective.feasible(c.members) for c in created):
                continue
            if receiving is not None and objective.coalition_value(receiving, new) <= 0:
                continue
            gain = objective.potential(new) - base
            if gain > GAIN_TOL:
                return False, f"{label} gains {gain:.6g}"
    return True, None
