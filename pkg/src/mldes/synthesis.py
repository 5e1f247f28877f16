"""Monolithic supervisor synthesis and whole-tree orchestration.

``synthesize`` composes the given plants with the automaton-form
requirements, cuts transitions whose invariant predicate fails at the source
state, and then iterates a greatest fixpoint that deletes states which are
not coreachable to a marked state or at which a plant-enabled uncontrollable
event is cut or leads into a deleted state.  The survivor set, trimmed to
reachable states, is the maximally permissive safe, controllable,
nonblocking behavior; an empty result is a legal value.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import engine
from .errors import StateBudgetExceeded
from .model import (
    Automaton,
    AutomatonRequirement,
    InvariantRequirement,
    ModelSet,
    Requirement,
    language_equivalent,
)
from .product import ProductSystem, refine
from .transform import SynthesisTree


@dataclass(frozen=True)
class Supervisor:
    """Supervised behavior of one synthesis node.

    ``automaton`` is None when synthesis deleted the initial state; ``css``
    counts the reachable states of the supervised behavior (0 when empty).
    """

    automaton: Automaton | None
    css: int
    node_path: str = ""

    @property
    def empty(self) -> bool:
        return self.automaton is None


@dataclass(frozen=True)
class TreeSynthesisResult:
    """Per-node supervisors for every node owning requirements."""

    supervisors: tuple[Supervisor, ...]
    skipped: tuple[str, ...]
    total_css: int
    empty_nodes: tuple[str, ...]

    @property
    def max_css(self) -> int:
        return max((s.css for s in self.supervisors), default=0)

    def css_by_path(self) -> dict[str, int]:
        return {s.node_path: s.css for s in self.supervisors}


def synthesize(
    plants: Sequence[Automaton],
    requirements: Sequence[Requirement],
    controllable: Mapping[str, bool],
    *,
    state_budget: int | None = None,
    node_path: str = "",
) -> Supervisor:
    """Maximally permissive supervisor for ``plants`` under ``requirements``.

    Every event a requirement mentions must be owned by one of the given
    plants.  Raises StateBudgetExceeded when the composed product grows past
    ``state_budget``.
    """
    if not plants:
        raise ValueError("synthesize needs at least one plant")
    plant_events: set[str] = set()
    for p in plants:
        plant_events |= p.alphabet
    components: list[Automaton] = list(plants)
    is_plant = [True] * len(plants)
    invariants: list[tuple[str, object]] = []
    plant_names = {p.name for p in plants}
    for req in requirements:
        if isinstance(req, AutomatonRequirement):
            missing = req.automaton.alphabet - plant_events
            if missing:
                raise ValueError(
                    f"requirement '{req.name}' mentions events {sorted(missing)} "
                    "not owned by the given plants"
                )
            components.append(req.automaton)
            is_plant.append(False)
        else:
            if req.event not in plant_events:
                raise ValueError(
                    f"requirement '{req.name}' guards event '{req.event}' "
                    "not owned by the given plants"
                )
            for atom in req.predicate.atoms():
                if atom.plant not in plant_names:
                    raise ValueError(
                        f"requirement '{req.name}' mentions plant '{atom.plant}' "
                        "not among the given plants"
                    )
            invariants.append((req.event, req.predicate))

    product = engine.explore_components(
        components,
        invariants=invariants,
        is_plant=is_plant,
        controllable=dict(controllable),
        budget=state_budget,
        track_unc=True,
    )
    good = engine.supcn(product)
    name = f"sup({'+'.join(p.name for p in plants)})"
    automaton = product.restrict(good, name)
    css = automaton.n_states if automaton is not None else 0
    return Supervisor(automaton=automaton, css=css, node_path=node_path)


def synthesize_tree(
    tree: SynthesisTree,
    model: ModelSet,
    ps: ProductSystem | None = None,
    *,
    jobs: int = 1,
    state_budget: int | None = None,
) -> TreeSynthesisResult:
    """Synthesize every node with requirements; sum the css values.

    Nodes without requirements are listed as skipped.  Node syntheses are
    independent and may run on a thread pool; results are merged in preorder
    regardless of completion order.
    """
    if ps is None:
        ps = refine(model.plants)
    controllable = model.controllability()

    work: list[tuple[str, list[Automaton], list[Requirement]]] = []
    skipped: list[str] = []
    for node in tree.nodes():
        if not node.synthesizes:
            skipped.append(node.path)
            continue
        autos: list[Automaton] = []
        for comp in sorted(node.plants):
            autos.extend(ps.group_automata(comp))
        reqs = [model.requirements[r] for r in sorted(node.requirements)]
        work.append((node.path, autos, reqs))

    def run(item) -> Supervisor:
        path, autos, reqs = item
        return synthesize(
            autos, reqs, controllable, state_budget=state_budget, node_path=path
        )

    if jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            sups = list(pool.map(run, work))
    else:
        sups = [run(item) for item in work]

    return TreeSynthesisResult(
        supervisors=tuple(sups),
        skipped=tuple(skipped),
        total_css=sum(s.css for s in sups),
        empty_nodes=tuple(s.node_path for s in sups if s.empty),
    )


def check_nonblocking(auto: Automaton) -> bool:
    """Every reachable state can continue to a marked state."""
    reach = auto.reachable_states()
    incoming: dict[str, list[str]] = {s: [] for s in reach}
    reach_set = set(reach)
    for s in reach:
        for ev in auto.enabled(s):
            t = auto.successor(s, ev)
            if t in reach_set:
                incoming[t].append(s)
    coreach = {s for s in reach if s in auto.marked}
    queue = deque(coreach)
    while queue:
        s = queue.popleft()
        for p in incoming[s]:
            if p not in coreach:
                coreach.add(p)
                queue.append(p)
    return coreach >= reach_set


def check_controllability(
    plant: Automaton, sup: Automaton, controllable: Mapping[str, bool]
) -> bool:
    """No reachable supervised state disables a plant-enabled uncontrollable
    event.  The supervised behavior is walked in lockstep with the plant."""
    start = (plant.initial, sup.initial)
    seen = {start}
    queue = deque([start])
    while queue:
        ps_, ss = queue.popleft()
        sup_enabled = set(sup.enabled(ss))
        for ev in plant.enabled(ps_):
            if not controllable.get(ev, True) and ev not in sup_enabled:
                return False
        for ev in sup_enabled:
            if plant.successor(ps_, ev) is None:
                continue
            nxt = (plant.successor(ps_, ev), sup.successor(ss, ev))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return True


@dataclass(frozen=True)
class GlobalCheck:
    """Outcome of comparing composed node supervisors with the monolithic one."""

    equivalent: bool
    composition_nonblocking: bool
    composition_empty: bool
    monolithic_css: int


def global_check(
    result: TreeSynthesisResult,
    model: ModelSet,
    *,
    state_budget: int = 10**6,
) -> GlobalCheck:
    """Compose all node supervisors with the global plant and compare with
    monolithic synthesis of the whole model.

    With prefix-closed requirements (all requirement automaton states
    marked, or invariant form) and fully marked plants the two coincide; a
    blocking composition is reported so callers can flag that nonblocking is
    not guaranteed.
    """
    controllable = model.controllability()
    mono = synthesize(
        list(model.plants),
        list(model.requirements),
        controllable,
        state_budget=state_budget,
    )
    if any(s.empty for s in result.supervisors):
        composed = None
    else:
        parts = [s.automaton for s in result.supervisors] + list(model.plants)
        product = engine.explore_components(parts, budget=state_budget)
        composed = product.to_automaton("composed")
    if composed is None or mono.automaton is None:
        equivalent = composed is None and mono.automaton is None
    else:
        equivalent = language_equivalent(composed, mono.automaton)
    nonblocking = True if composed is None else check_nonblocking(composed)
    return GlobalCheck(
        equivalent=equivalent,
        composition_nonblocking=nonblocking,
        composition_empty=composed is None,
        monolithic_css=mono.css,
    )


def global_equivalence(
    result: TreeSynthesisResult,
    model: ModelSet,
    *,
    state_budget: int = 10**6,
) -> bool:
    """True iff the composed node supervisors equal the monolithic supervisor."""
    return global_check(result, model, state_budget=state_budget).equivalent
