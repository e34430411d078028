"""Coalition formation dynamics: operations, gains, the per-node DCA step and the scheduler.

Operations available to node ``i`` sitting in coalition ``S``:

* head election ``(i, head(S))`` - ``i`` takes over as head of ``S``;
* switch ``(i, j)`` with ``j`` in a neighbouring coalition ``S'`` - the two
  nodes trade places; with ``j = None`` node ``i`` simply joins ``S'``;
* replace ``(i, j)`` - ``i`` takes ``j``'s seat in ``S'`` and ``j`` is left
  on its own.

The gain of an operation is the change of the potential ``sum_S v(S)`` over
the whole partition, which includes the effect a changed coalition count or
head set has on every other coalition.  It is computed incrementally from a
per-partition snapshot; :mod:`vanetcfg.oracle` checks it from scratch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Iterable

import numpy as np

from .netmodel import MobileNetwork, NetworkGraph
from .objective import Objective, ObjectiveParams
from .partition import Coalition, Partition

# gains at or below this are treated as zero (floating-point noise)
GAIN_TOL = 1e-12


class OpKind(IntEnum):
    HEAD_ELECTION = 0
    SWITCH = 1
    REPLACE = 2


class OperationError(ValueError):
    pass


@dataclass(frozen=True)
class Operation:
    kind: OpKind
    actor: int
    counterpart: int | None
    src: int
    dst: int | None
    gain: float
    dst_head: int | None = None  # identifies the target coalition of a unilateral join

    @property
    def is_join(self) -> bool:
        return self.kind == OpKind.SWITCH and self.counterpart is None

    def sort_key(self) -> tuple:
        cp = -1 if self.counterpart is None else self.counterpart
        anchor = -1 if self.dst_head is None else self.dst_head
        return (-self.gain, int(self.kind), cp, anchor)

    def describe(self) -> str:
        name = {OpKind.HEAD_ELECTION: "elect", OpKind.SWITCH: "switch", OpKind.REPLACE: "replace"}[self.kind]
        if self.is_join:
            return f"join({self.actor} -> head {self.dst_head}, g={self.gain:.3g})"
        return f"{name}({self.actor}, {self.counterpart}, g={self.gain:.3g})"


@dataclass
class LearningParams:
    epsilon: float = 0.1
    decay: float = 0.98
    floor: float = 1e-3
    greedy: bool = False

    def __post_init__(self) -> None:
        if not self.greedy and not self.epsilon > 0:
            raise ValueError("epsilon must be > 0 outside greedy mode")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must lie in (0, 1]")

    def epsilon_at(self, slot: int) -> float:
        if self.greedy:
            return 0.0
        return max(self.floor, self.epsilon * self.decay ** slot)


def acceptance_probability(g_trial: float, g_keep: float, epsilon: float) -> float:
    """exp(g_trial/eps) / (exp(g_trial/eps) + exp(g_keep/eps)), overflow-safe."""
    z = (g_keep - g_trial) / epsilon
    if z > 700:
        return 0.0
    return 1.0 / (1.0 + math.exp(z))


def accept_draw(rng: np.random.Generator, g_trial: float, g_keep: float, epsilon: float) -> bool:
    """One Bernoulli draw of the log-linear rule."""
    return bool(rng.random() < acceptance_probability(g_trial, g_keep, epsilon))


@dataclass
class SlotRecord:
    slot: int
    G1: float
    chi_total: float
    E_total: float
    M: int
    ops_applied: int
    proposals: int
    epsilon: float


@dataclass
class EngineState:
    partition: Partition
    rng: np.random.Generator
    slot: int = 0
    last_op: dict[int, Operation] = field(default_factory=dict)
    trace: list[SlotRecord] = field(default_factory=list)
    converged: bool = False

    @classmethod
    def start(cls, partition: Partition, seed) -> "EngineState":
        return cls(partition, np.random.default_rng(seed))


@dataclass
class _Snapshot:
    m: int
    feasible: list[bool]
    n_feasible: int
    headsum: np.ndarray  # headsum[y] = sum_{heads x} kappa[y, x]
    fcol: np.ndarray  # fcol[x] = sum_{feasible coalitions S} kappa[head(S), x]
    values: list[float]


def pick_head(members: Iterable[int], graph: NetworkGraph) -> int:
    """Member with the largest one-hop rate to the rest of the coalition (lowest id on ties)."""
    members = sorted(members)
    inside = set(members)
    best, best_score = members[0], -1.0
    for m in members:
        score = sum(graph.rt[m, x] + graph.rt[x, m] for x in graph.neighbors[m] if x in inside)
        if score > best_score:
            best, best_score = m, score
    return best


class CoalitionGame:
    """Operation enumeration and gain evaluation on one graph snapshot."""

    def __init__(self, objective: Objective):
        self.objective = objective
        self.graph = objective.graph
        self.params = objective.params
        self._snap_key: Partition | None = None
        self._snap: _Snapshot | None = None

    @classmethod
    def on(cls, graph: NetworkGraph, params: ObjectiveParams) -> "CoalitionGame":
        return cls(Objective(graph, params))

    # -- structure ------------------------------------------------------------

    def _keep_or_pick(self, head: int, members: frozenset[int]) -> int:
        return head if head in members else pick_head(members, self.graph)

    def mapping(self, partition: Partition, kind: OpKind, actor: int, counterpart: int | None,
                dst: int | None) -> tuple[tuple[int, ...], list[Coalition], int | None] | None:
        """Coalitions removed / added by an operation, plus the index (in ``added``)
        of the coalition that receives the actor.  None if structurally invalid."""
        src = partition.node_index[actor]
        S = partition.coalitions[src]
        if kind == OpKind.HEAD_ELECTION:
            if S.head == actor:
                return None
            return (src,), [Coalition(S.members, actor)], None
        if dst is None or dst == src:
            return None
        T = partition.coalitions[dst]
        added: list[Coalition] = []
        if counterpart is None:
            if kind != OpKind.SWITCH:
                return None
            rest = S.members - {actor}
            if rest:
                added.append(Coalition(rest, self._keep_or_pick(S.head, rest)))
            added.append(Coalition(T.members | {actor}, T.head))
            return (src, dst), added, len(added) - 1
        if counterpart not in T.members:
            return None
        seat = (T.members - {counterpart}) | {actor}
        if kind == OpKind.SWITCH:
            back = (S.members - {actor}) | {counterpart}
            added.append(Coalition(back, self._keep_or_pick(S.head, back)))
            added.append(Coalition(seat, self._keep_or_pick(T.head, seat)))
            return (src, dst), added, 1
        rest = S.members - {actor}
        if rest:
            added.append(Coalition(rest, self._keep_or_pick(S.head, rest)))
        added.append(Coalition(seat, self._keep_or_pick(T.head, seat)))
        receiving = len(added) - 1
        added.append(Coalition(frozenset([counterpart]), counterpart))
        return (src, dst), added, receiving

    # -- gains ----------------------------------------------------------------

    def _snapshot(self, partition: Partition) -> _Snapshot:
        if self._snap_key is partition and self._snap is not None:
            return self._snap
        obj = self.objective
        k = obj.kappa
        heads = np.array(partition.heads, dtype=np.int64)
        feas = [obj.feasible(c.members) for c in partition]
        headsum = k[:, heads].sum(axis=1)
        fheads = heads[np.array(feas, dtype=bool)]
        fcol = k[fheads, :].sum(axis=0) if len(fheads) else np.zeros(self.graph.n)
        m = len(partition)
        values = [obj.value_given(c, m, headsum[c.head]) for c in partition]
        self._snap = _Snapshot(m, feas, sum(feas), headsum, fcol, values)
        self._snap_key = partition
        return self._snap

    def delta(self, partition: Partition, removed: tuple[int, ...],
              added: list[Coalition]) -> tuple[float, list[float]] | None:
        """Potential change for swapping ``removed`` coalitions for ``added`` ones.

        Returns None if an added coalition violates the size/diameter limits.
        """
        obj = self.objective
        for c in added:
            if not obj.feasible(c.members):
                return None
        snap = self._snapshot(partition)
        p = self.params
        k = obj.kappa
        m_old = snap.m
        m_new = m_old - len(removed) + len(added)
        old_heads = [partition.coalitions[r].head for r in removed]
        new_heads = [c.head for c in added]
        gained = [h for h in new_heads if h not in old_heads]
        lost = [h for h in old_heads if h not in new_heads]

        new_vals = []
        for c in added:
            hc = snap.headsum[c.head]
            for h in lost:
                hc -= k[c.head, h]
            for h in gained:
                hc += k[c.head, h]
            new_vals.append(obj.value_given(c, m_new, hc))
        total = math.fsum(new_vals) - math.fsum(snap.values[r] for r in removed)

        removed_feasible = [r for r in removed if snap.feasible[r]]
        n_rest = snap.n_feasible - len(removed_feasible)
        if n_rest:
            if gained or lost:
                def column(x: int) -> float:
                    col = snap.fcol[x]
                    for r in removed_feasible:
                        col -= k[partition.coalitions[r].head, x]
                    return col
                shift = sum(column(h) for h in gained) - sum(column(h) for h in lost)
                total += (1.0 - p.zeta) * p.beta * shift / obj.chi_max
            if m_new != m_old:
                per = obj.e_max / m_new - obj.e_max / m_old - p.v_inter * (m_new - m_old)
                total += n_rest * p.zeta * per / obj.e_max
        return total, new_vals

    def gain(self, partition: Partition, kind: OpKind, actor: int, counterpart: int | None = None,
             dst: int | None = None) -> float:
        """Potential change of one operation; raises for malformed operations,
        returns -inf when the result would break the cluster constraints."""
        if not 0 <= actor < partition.n:
            raise OperationError(f"unknown actor {actor}")
        if kind != OpKind.HEAD_ELECTION and dst is None and counterpart is not None:
            dst = partition.node_index[counterpart]
        mp = self.mapping(partition, kind, actor, counterpart, dst)
        if mp is None:
            raise OperationError(f"operation {kind.name}({actor}, {counterpart}) invalid here")
        res = self.delta(partition, mp[0], mp[1])
        return -math.inf if res is None else res[0]

    # -- enumeration ------------------------------------------------------------

    def _proposal(self, partition, kind, actor, counterpart, dst, gate_receiving: bool):
        mp = self.mapping(partition, kind, actor, counterpart, dst)
        if mp is None:
            return None
        removed, added, receiving = mp
        res = self.delta(partition, removed, added)
        if res is None:
            return None
        g, vals = res
        if g <= GAIN_TOL:
            return None
        if gate_receiving and vals[receiving] <= 0:
            return None
        anchor = partition.coalitions[dst].head if dst is not None else None
        return Operation(kind, actor, counterpart, partition.node_index[actor], dst, g, anchor)

    def neighbor_coalitions(self, actor: int, partition: Partition) -> list[int]:
        own = partition.node_index[actor]
        return sorted({partition.node_index[j] for j in self.graph.neighbors[actor]} - {own})

    def enumerate_operations(self, actor: int, partition: Partition,
                             unilateral_only: bool = False) -> list[Operation]:
        """Every positive-gain operation available to ``actor``."""
        ops = []
        for dst in self.neighbor_coalitions(actor, partition):
            op = self._proposal(partition, OpKind.SWITCH, actor, None, dst, True)
            if op:
                ops.append(op)
            if unilateral_only:
                continue
            for j in sorted(partition.coalitions[dst].members):
                for kind, gate in ((OpKind.SWITCH, True), (OpKind.REPLACE, False)):
                    op = self._proposal(partition, kind, actor, j, dst, gate)
                    if op:
                        ops.append(op)
        if not unilateral_only:
            op = self._proposal(partition, OpKind.HEAD_ELECTION, actor,
                                partition.coalition_of(actor).head, None, False)
            if op:
                ops.append(op)
        return ops

    # -- application --------------------------------------------------------------

    def _locate(self, op: Operation, partition: Partition) -> int | None:
        if op.kind == OpKind.HEAD_ELECTION:
            return None
        anchor = op.dst_head if op.counterpart is None else op.counterpart
        return partition.node_index[anchor]

    def regain(self, op: Operation | None, partition: Partition) -> float:
        """Gain of a previously chosen operation against the current partition (0 if stale)."""
        if op is None:
            return 0.0
        cp = partition.coalition_of(op.actor).head if op.kind == OpKind.HEAD_ELECTION else op.counterpart
        mp = self.mapping(partition, op.kind, op.actor, cp, self._locate(op, partition))
        if mp is None:
            return 0.0
        res = self.delta(partition, mp[0], mp[1])
        return 0.0 if res is None else res[0]

    def apply(self, op: Operation, partition: Partition) -> Partition:
        cp = op.counterpart
        if op.kind == OpKind.HEAD_ELECTION:
            cp = partition.coalition_of(op.actor).head
        mp = self.mapping(partition, op.kind, op.actor, cp, self._locate(op, partition))
        if mp is None:
            raise OperationError(f"cannot apply {op.describe()}")
        return partition.replace(mp[0], mp[1])


def select_trail(ops: list[Operation]) -> Operation:
    """Largest gain; ties prefer head election < switch < replace, then lower counterpart id."""
    return min(ops, key=Operation.sort_key)


def is_nash_stable(partition: Partition, game: CoalitionGame,
                   unilateral_only: bool = False) -> tuple[bool, Operation | None]:
    for i in range(partition.n):
        ops = game.enumerate_operations(i, partition, unilateral_only)
        if ops:
            return False, select_trail(ops)
    return True, None


def repair(partition: Partition, objective: Objective) -> Partition:
    """Break coalitions that a topology change made infeasible.

    Each connected piece that is still feasible survives; otherwise the piece
    keeps its head with that head's direct neighbours and the rest go solo.
    """
    bad = [k for k, c in enumerate(partition) if not objective.feasible(c.members)]
    if not bad:
        return partition
    graph = objective.graph
    added: list[Coalition] = []
    for k in bad:
        c = partition.coalitions[k]
        left = set(c.members)
        while left:
            seed = c.head if c.head in left else min(left)
            comp = frozenset(graph.hop_distances_within(frozenset(left), seed))
            left -= comp
            head = c.head if c.head in comp else pick_head(comp, graph)
            if objective.feasible(comp):
                added.append(Coalition(comp, head))
                continue
            star = frozenset([head, *(x for x in graph.neighbors[head] if x in comp)])
            added.append(Coalition(star, head))
            added.extend(Coalition(frozenset([x]), x) for x in sorted(comp - star))
    return partition.replace(bad, added)


Observer = Callable[[Operation, Partition, Partition, Objective], None]


def _activate(i: int, state: EngineState, game: CoalitionGame, learn: LearningParams,
              unilateral_only: bool, observer: Observer | None) -> tuple[bool, bool]:
    ops = game.enumerate_operations(i, state.partition, unilateral_only)
    if not ops:
        return False, False
    trail = select_trail(ops)
    if learn.greedy:
        accept = True
    else:
        keep = game.regain(state.last_op.get(i), state.partition)
        accept = accept_draw(state.rng, trail.gain, keep, learn.epsilon_at(state.slot))
    if not accept:
        return True, False
    before = state.partition
    state.partition = game.apply(trail, before)
    state.last_op[i] = trail
    if observer is not None:
        observer(trail, before, state.partition, game.objective)
    return True, True


def dca_step(i: int, state: EngineState, game: CoalitionGame, learn: LearningParams,
             unilateral_only: bool = False, observer: Observer | None = None) -> bool:
    """One activation of node ``i``; returns whether the partition changed."""
    return _activate(i, state, game, learn, unilateral_only, observer)[1]


def run(state: EngineState, network: NetworkGraph | MobileNetwork, params: ObjectiveParams,
        learn: LearningParams, slots: int, unilateral_only: bool = False,
        observer: Observer | None = None, stop_when_stable: bool = True) -> EngineState:
    """Asynchronous dynamics: each slot moves the network (if mobile), then
    activates every node once in a fresh random order.

    On a frozen graph the run ends early after a slot in which no node had a
    positive-gain operation.
    """
    if slots < 1:
        raise ValueError("slots must be >= 1")
    mobile = isinstance(network, MobileNetwork)
    graph = network.graph if mobile else network
    game = CoalitionGame.on(graph, params)
    n = graph.n
    for t in range(slots):
        if mobile and t > 0:
            graph = network.step()
            game = CoalitionGame.on(graph, params)
        state.partition = repair(state.partition, game.objective)
        applied = proposals = 0
        for i in state.rng.permutation(n).tolist():
            had, did = _activate(i, state, game, learn, unilateral_only, observer)
            proposals += had
            applied += did
        b = game.objective.breakdown(state.partition)
        state.trace.append(SlotRecord(state.slot, b.G1, b.chi_total, b.e_total, len(state.partition),
                                      applied, proposals, learn.epsilon_at(state.slot)))
        state.slot += 1
        if not mobile and proposals == 0 and stop_when_stable:
            state.converged = True
            break
    return state
