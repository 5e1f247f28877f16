"""Core discrete-event model types: events, automata, requirements.

Plants and automaton-form requirements are deterministic finite automata over
a shared event table.  Invariant-form requirements guard a single event with
a boolean predicate over plant locations.  All types are immutable after
construction and validate their own well-formedness.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import ModelError


@dataclass(frozen=True)
class Event:
    """A named event with a global controllability attribute."""

    name: str
    controllable: bool


@dataclass(frozen=True)
class Automaton:
    """Deterministic finite automaton.

    ``states`` fixes a canonical state order (declaration or discovery
    order); ``transitions`` hold (source, event, target) triples.  At most
    one transition may leave a state on a given event, every transition
    event must be in the alphabet, and initial/marked states must exist.
    """

    name: str
    alphabet: frozenset[str]
    states: tuple[str, ...]
    initial: str
    marked: frozenset[str]
    transitions: tuple[tuple[str, str, str], ...]
    _next: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _enabled: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        states = set(self.states)
        if len(states) != len(self.states):
            raise ModelError(f"automaton '{self.name}' repeats a location name")
        if self.initial not in states:
            raise ModelError(
                f"automaton '{self.name}' initial location '{self.initial}' is not declared"
            )
        bad_marked = self.marked - states
        if bad_marked:
            raise ModelError(
                f"automaton '{self.name}' marks undeclared location "
                f"'{sorted(bad_marked)[0]}'"
            )
        nxt: dict[tuple[str, str], str] = {}
        enabled: dict[str, list[str]] = {s: [] for s in self.states}
        for src, ev, dst in self.transitions:
            if ev not in self.alphabet:
                raise ModelError(
                    f"automaton '{self.name}' uses event '{ev}' outside its alphabet"
                )
            if src not in states or dst not in states:
                raise ModelError(
                    f"automaton '{self.name}' transition {src} -{ev}-> {dst} "
                    "references an undeclared location"
                )
            if (src, ev) in nxt:
                raise ModelError(
                    f"automaton '{self.name}' is nondeterministic: two transitions "
                    f"leave '{src}' on '{ev}'"
                )
            nxt[(src, ev)] = dst
            enabled[src].append(ev)
        object.__setattr__(self, "_next", nxt)
        object.__setattr__(
            self, "_enabled", {s: tuple(sorted(evs)) for s, evs in enabled.items()}
        )

    def successor(self, state: str, event: str) -> str | None:
        return self._next.get((state, event))

    def enabled(self, state: str) -> tuple[str, ...]:
        """Events with an outgoing transition at ``state``, sorted by name."""
        return self._enabled[state]

    def state_index(self, state: str) -> int:
        return self.states.index(state)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def reachable_states(self) -> tuple[str, ...]:
        """States reachable from the initial state, in BFS discovery order."""
        seen = {self.initial}
        order = [self.initial]
        queue = deque([self.initial])
        while queue:
            s = queue.popleft()
            for ev in self._enabled[s]:
                t = self._next[(s, ev)]
                if t not in seen:
                    seen.add(t)
                    order.append(t)
                    queue.append(t)
        return tuple(order)


class Predicate:
    """Boolean formula over location atoms ``Plant.Location``."""

    def evaluate(self, locations: Mapping[str, str]) -> bool:
        raise NotImplementedError

    def atoms(self) -> Iterator["Atom"]:
        raise NotImplementedError


@dataclass(frozen=True)
class Atom(Predicate):
    plant: str
    location: str

    def evaluate(self, locations):
        return locations[self.plant] == self.location

    def atoms(self):
        yield self

    def __str__(self):
        return f"{self.plant}.{self.location}"


@dataclass(frozen=True)
class Not(Predicate):
    operand: Predicate

    def evaluate(self, locations):
        return not self.operand.evaluate(locations)

    def atoms(self):
        yield from self.operand.atoms()

    def __str__(self):
        inner = str(self.operand)
        if isinstance(self.operand, (And, Or)):
            inner = f"({inner})"
        return f"not {inner}"


@dataclass(frozen=True)
class And(Predicate):
    left: Predicate
    right: Predicate

    def evaluate(self, locations):
        return self.left.evaluate(locations) and self.right.evaluate(locations)

    def atoms(self):
        yield from self.left.atoms()
        yield from self.right.atoms()

    def __str__(self):
        parts = []
        for side in (self.left, self.right):
            s = str(side)
            parts.append(f"({s})" if isinstance(side, Or) else s)
        return " and ".join(parts)


@dataclass(frozen=True)
class Or(Predicate):
    left: Predicate
    right: Predicate

    def evaluate(self, locations):
        return self.left.evaluate(locations) or self.right.evaluate(locations)

    def atoms(self):
        yield from self.left.atoms()
        yield from self.right.atoms()

    def __str__(self):
        return f"{self.left} or {self.right}"


@dataclass(frozen=True)
class AutomatonRequirement:
    """Requirement expressed as an automaton synchronized with the plants."""

    name: str
    automaton: Automaton


@dataclass(frozen=True)
class InvariantRequirement:
    """State-event invariant: ``event`` may fire only while ``predicate`` holds."""

    name: str
    event: str
    predicate: Predicate


Requirement = AutomatonRequirement | InvariantRequirement


@dataclass(frozen=True)
class ModelSet:
    """A validated collection of plants and requirements over one event table.

    Declaration order of plants and requirements is the determinism anchor
    for all downstream indexing.
    """

    events: tuple[Event, ...]
    plants: tuple[Automaton, ...]
    requirements: tuple[Requirement, ...]

    def __post_init__(self):
        table: dict[str, Event] = {}
        for ev in self.events:
            if ev.name in table:
                raise ModelError(f"event '{ev.name}' declared twice")
            table[ev.name] = ev
        seen_plants: set[str] = set()
        plant_events: set[str] = set()
        for plant in self.plants:
            if plant.name in seen_plants:
                raise ModelError(f"plant '{plant.name}' declared twice")
            seen_plants.add(plant.name)
            for ev in plant.alphabet:
                if ev not in table:
                    raise ModelError(
                        f"plant '{plant.name}' uses undeclared event '{ev}'"
                    )
            plant_events.update(plant.alphabet)
        plants_by_name = {p.name: p for p in self.plants}
        seen_reqs: set[str] = set()
        for req in self.requirements:
            if req.name in seen_reqs:
                raise ModelError(f"requirement '{req.name}' declared twice")
            seen_reqs.add(req.name)
            if isinstance(req, AutomatonRequirement):
                for ev in req.automaton.alphabet:
                    if ev not in table:
                        raise ModelError(
                            f"requirement '{req.name}' uses undeclared event '{ev}'"
                        )
                    if ev not in plant_events:
                        raise ModelError(
                            f"requirement '{req.name}' uses unowned event '{ev}' "
                            "(no plant has it in its alphabet)"
                        )
            else:
                if req.event not in table:
                    raise ModelError(
                        f"requirement '{req.name}' guards undeclared event "
                        f"'{req.event}'"
                    )
                if req.event not in plant_events:
                    raise ModelError(
                        f"requirement '{req.name}' guards unowned event "
                        f"'{req.event}' (no plant has it in its alphabet)"
                    )
                for atom in req.predicate.atoms():
                    plant = plants_by_name.get(atom.plant)
                    if plant is None:
                        raise ModelError(
                            f"requirement '{req.name}' refers to unknown plant "
                            f"'{atom.plant}'"
                        )
                    if atom.location not in plant.states:
                        raise ModelError(
                            f"requirement '{req.name}' refers to unknown location "
                            f"'{atom.plant}.{atom.location}'"
                        )
        object.__setattr__(self, "_table", table)

    def event(self, name: str) -> Event:
        return self._table[name]  # type: ignore[attr-defined]

    def is_controllable(self, name: str) -> bool:
        return self._table[name].controllable  # type: ignore[attr-defined]

    def controllability(self) -> dict[str, bool]:
        return {ev.name: ev.controllable for ev in self.events}

    def plant(self, name: str) -> Automaton:
        for p in self.plants:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def n_plants(self) -> int:
        return len(self.plants)

    @property
    def n_requirements(self) -> int:
        return len(self.requirements)


def sync_compose(automata: Sequence[Automaton], name: str | None = None) -> Automaton:
    """Synchronous product of ``automata``, restricted to reachable states.

    A shared event fires only when every owner enables it; an event outside
    an automaton's alphabet leaves that automaton in place.  A composed state
    is marked iff all components are marked.  Composed states are ordered by
    breadth-first discovery and named by their component location tuple.
    """
    if not automata:
        raise ValueError("sync_compose needs at least one automaton")
    from .engine import explore_components

    product = explore_components(list(automata))
    return product.to_automaton(name or "||".join(a.name for a in automata))


def language_equivalent(a: Automaton, b: Automaton) -> bool:
    """Whether two deterministic automata generate the same (prefix-closed)
    language and mark the same words.

    Decided by a lockstep walk over the reachable product: every reachable
    state pair must enable identical event sets and agree on marking.
    """
    start = (a.initial, b.initial)
    seen = {start}
    queue = deque([start])
    while queue:
        sa, sb = queue.popleft()
        if (sa in a.marked) != (sb in b.marked):
            return False
        ea = a.enabled(sa)
        eb = b.enabled(sb)
        if ea != eb:
            return False
        for ev in ea:
            nxt = (a.successor(sa, ev), b.successor(sb, ev))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return True


def automaton_from_parts(
    name: str,
    alphabet: Iterable[str],
    states: Iterable[str],
    initial: str,
    marked: Iterable[str],
    transitions: Iterable[tuple[str, str, str]],
) -> Automaton:
    """Convenience constructor normalizing container types."""
    return Automaton(
        name=name,
        alphabet=frozenset(alphabet),
        states=tuple(states),
        initial=initial,
        marked=frozenset(marked),
        transitions=tuple(transitions),
    )
