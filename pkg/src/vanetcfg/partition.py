"""Coalition and partition types shared by every algorithm in the package."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence


class PartitionError(ValueError):
    """Raised when a partition breaks the disjoint-cover / one-head invariant."""


@dataclass(frozen=True)
class Coalition:
    members: frozenset[int]
    head: int

    def __post_init__(self) -> None:
        if not self.members:
            raise PartitionError("coalition must be non-empty")
        if self.head not in self.members:
            raise PartitionError(f"head {self.head} is not a member of {sorted(self.members)}")

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, node: int) -> bool:
        return node in self.members

    @classmethod
    def of(cls, members: Iterable[int], head: int) -> "Coalition":
        return cls(frozenset(int(m) for m in members), int(head))

    def to_dict(self) -> dict:
        return {"head": self.head, "members": sorted(self.members)}


class Partition:
    """Disjoint cover of ``range(n)`` by coalitions, each with one head.

    Instances are treated as immutable; operations build new partitions via
    :meth:`replace`.
    """

    __slots__ = ("coalitions", "node_index", "n")

    def __init__(self, coalitions: Sequence[Coalition], n: int | None = None):
        self.coalitions: tuple[Coalition, ...] = tuple(coalitions)
        size = sum(len(c) for c in self.coalitions)
        self.n = size if n is None else n
        index = [-1] * self.n
        for k, c in enumerate(self.coalitions):
            for m in c.members:
                if m < 0 or m >= self.n:
                    raise PartitionError(f"node {m} outside [0, {self.n})")
                if index[m] != -1:
                    raise PartitionError(f"node {m} appears in two coalitions")
                index[m] = k
        if size != self.n or -1 in index:
            missing = [i for i, k in enumerate(index) if k == -1]
            raise PartitionError(f"partition does not cover nodes {missing}")
        self.node_index: tuple[int, ...] = tuple(index)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls([Coalition(frozenset([i]), i) for i in range(n)], n)

    def __len__(self) -> int:
        return len(self.coalitions)

    def __iter__(self):
        return iter(self.coalitions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.n == other.n and set(self.coalitions) == set(other.coalitions)

    def __hash__(self) -> int:
        return hash(frozenset(self.coalitions))

    def __repr__(self) -> str:
        body = ", ".join(f"{c.head}:{sorted(c.members)}" for c in self.canonical().coalitions)
        return f"Partition({body})"

    def coalition_of(self, node: int) -> Coalition:
        return self.coalitions[self.node_index[node]]

    @property
    def heads(self) -> list[int]:
        return [c.head for c in self.coalitions]

    def is_head(self, node: int) -> bool:
        return self.coalition_of(node).head == node

    def replace(self, removed: Iterable[int], added: Iterable[Coalition]) -> "Partition":
        """New partition with coalitions at indices ``removed`` swapped for ``added``."""
        drop = set(removed)
        kept = [c for k, c in enumerate(self.coalitions) if k not in drop]
        return Partition(kept + list(added), self.n)

    def canonical(self) -> "Partition":
        """Same partition with coalitions ordered by smallest member."""
        return Partition(sorted(self.coalitions, key=lambda c: min(c.members)), self.n)

    def to_json_obj(self) -> list[dict]:
        return [c.to_dict() for c in self.canonical().coalitions]

    @classmethod
    def from_json_obj(cls, obj: list[dict], n: int | None = None) -> "Partition":
        return cls([Coalition.of(c["members"], c["head"]) for c in obj], n)

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj())
