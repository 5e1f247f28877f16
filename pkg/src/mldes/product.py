"""Most refined product system: grouping plants by alphabet overlap.

Two plants that share an event must synchronize and therefore belong to the
same product-system component; the finest partition with pairwise disjoint
group alphabets is the union-find closure of the "shares an event" relation.
Downstream component indices refer to these groups, not to raw plants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .model import Automaton


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass(frozen=True)
class ProductSystem:
    """Plants partitioned into components with pairwise disjoint alphabets.

    ``groups[i]`` lists plant indices (sorted); groups are ordered by their
    smallest member.  A group is composed lazily: synthesis works on the
    member automata directly.
    """

    plants: tuple[Automaton, ...]
    groups: tuple[tuple[int, ...], ...]

    @property
    def n_components(self) -> int:
        return len(self.groups)

    def group_automata(self, i: int) -> tuple[Automaton, ...]:
        return tuple(self.plants[p] for p in self.groups[i])

    def group_alphabet(self, i: int) -> frozenset[str]:
        out: set[str] = set()
        for p in self.groups[i]:
            out |= self.plants[p].alphabet
        return frozenset(out)

    def group_name(self, i: int) -> str:
        return "+".join(self.plants[p].name for p in self.groups[i])

    def component_names(self) -> tuple[str, ...]:
        return tuple(self.group_name(i) for i in range(self.n_components))

    def group_of_plant(self, name: str) -> int:
        for i, grp in enumerate(self.groups):
            for p in grp:
                if self.plants[p].name == name:
                    return i
        raise KeyError(f"unknown plant '{name}'")

    def mapping_json(self) -> str:
        doc = [
            {
                "component": self.group_name(i),
                "plants": [self.plants[p].name for p in self.groups[i]],
                "alphabet": sorted(self.group_alphabet(i)),
            }
            for i in range(self.n_components)
        ]
        return json.dumps(doc, indent=2) + "\n"


def refine(plants: Sequence[Automaton]) -> ProductSystem:
    """Group ``plants`` into the most refined product system.

    Groups are the connected components of the "shares at least one event"
    graph, ordered by smallest member index.
    """
    uf = _UnionFind(len(plants))
    owner: dict[str, int] = {}
    for i, plant in enumerate(plants):
        for ev in plant.alphabet:
            if ev in owner:
                uf.union(owner[ev], i)
            else:
                owner[ev] = i
    cells: dict[int, list[int]] = {}
    for i in range(len(plants)):
        cells.setdefault(uf.find(i), []).append(i)
    groups = tuple(
        tuple(sorted(members)) for _, members in sorted(cells.items(), key=lambda kv: min(kv[1]))
    )
    return ProductSystem(plants=tuple(plants), groups=groups)
