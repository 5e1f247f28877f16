"""State-space engine: encoding plus kernel backend selection.

The hot kernels (product exploration, synthesis fixpoint, trim) exist twice:
a compiled Cython extension (``_kernels``) and a pure-Python twin
(``kernels_py``).  The compiled backend is used when it imported cleanly and
the full product capacity fits its packed 64-bit state keys; setting
``MLDES_PURE=1`` in the environment forces the pure backend.  Both produce
identical arrays.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from ..errors import StateBudgetExceeded
from . import kernels_py

if TYPE_CHECKING:  # pragma: no cover
    from ..model import Automaton, Predicate

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - extension not built
    _compiled = None

if os.environ.get("MLDES_PURE"):
    _compiled = None

# packed keys hold sum(coord*stride) with strides up to the full capacity
_PACK_LIMIT = 2**62

OP_NOT = kernels_py.OP_NOT
OP_AND = kernels_py.OP_AND
OP_OR = kernels_py.OP_OR
ATOM_STRIDE = kernels_py.ATOM_STRIDE


def backend_name() -> str:
    return "compiled" if _compiled is not None else "pure"


def has_compiled_backend() -> bool:
    return _compiled is not None


@dataclass
class Product:
    """Explored synchronous product in array form.

    ``coords[i]`` holds the component-local state indices of product state
    ``i``; state 0 is the composed initial state and states follow BFS
    discovery order.  Transition CSR arrays are ordered by source state and,
    within a state, by event index.
    """

    components: list
    event_names: list[str]
    coords: np.ndarray
    marked: np.ndarray
    t_ptr: np.ndarray
    t_ev: np.ndarray
    t_dst: np.ndarray
    u_ptr: np.ndarray
    u_ev: np.ndarray
    u_dst: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.marked)

    def state_name(self, i: int) -> str:
        parts = [
            comp.states[self.coords[i, c]] for c, comp in enumerate(self.components)
        ]
        if len(parts) == 1:
            return parts[0]
        return "(" + ",".join(parts) + ")"

    def alphabet(self) -> frozenset[str]:
        out: set[str] = set()
        for comp in self.components:
            out |= comp.alphabet
        return frozenset(out)

    def to_automaton(self, name: str):
        """Materialize the whole explored product as an Automaton."""
        mask = np.ones(self.n_states, dtype=np.uint8)
        return self.restrict(mask, name)

    def restrict(self, good: np.ndarray, name: str):
        """Automaton over the ``good`` states reachable from the initial one.

        Returns None when the initial state is excluded (empty behavior).
        """
        order, count = reach_order(self.t_ptr, self.t_ev, self.t_dst, good)
        if count == 0:
            return None
        from ..model import Automaton

        names = [""] * count
        marked = []
        order_l = order.tolist()
        for i, o in enumerate(order_l):
            if o >= 0:
                names[o] = self.state_name(i)
                if self.marked[i]:
                    marked.append(names[o])
        transitions = []
        tp = self.t_ptr.tolist()
        te = self.t_ev.tolist()
        td = self.t_dst.tolist()
        for i, o in enumerate(order_l):
            if o < 0:
                continue
            src = names[o]
            for k in range(tp[i], tp[i + 1]):
                if order_l[td[k]] >= 0:
                    transitions.append(
                        (src, self.event_names[te[k]], names[order_l[td[k]]])
                    )
        return Automaton(
            name=name,
            alphabet=self.alphabet(),
            states=tuple(names),
            initial=names[0],
            marked=frozenset(marked),
            transitions=tuple(transitions),
        )


def _compile_predicate(pred, comp_index: dict[str, int], comp_states: dict[str, tuple]):
    """Predicate AST -> RPN opcode list over component coordinates."""
    from ..model import And, Atom, Not, Or

    if isinstance(pred, Atom):
        c = comp_index[pred.plant]
        loc = comp_states[pred.plant].index(pred.location)
        return [c * ATOM_STRIDE + loc]
    if isinstance(pred, Not):
        return _compile_predicate(pred.operand, comp_index, comp_states) + [OP_NOT]
    if isinstance(pred, And):
        return (
            _compile_predicate(pred.left, comp_index, comp_states)
            + _compile_predicate(pred.right, comp_index, comp_states)
            + [OP_AND]
        )
    if isinstance(pred, Or):
        return (
            _compile_predicate(pred.left, comp_index, comp_states)
            + _compile_predicate(pred.right, comp_index, comp_states)
            + [OP_OR]
        )
    raise TypeError(f"unknown predicate node {pred!r}")


def explore_components(
    components: Sequence,
    *,
    invariants: Sequence[tuple[str, "Predicate"]] = (),
    is_plant: Sequence[bool] | None = None,
    controllable: dict[str, bool] | None = None,
    budget: int | None = None,
    track_unc: bool = False,
) -> Product:
    """Explore the synchronous product of ``components``.

    ``invariants`` are (event, predicate) guards evaluated over the component
    coordinates; a transition on the event is cut when any guard fails.
    With ``track_unc`` the product records, per state, the plant-enabled
    uncontrollable events (``is_plant`` marks which components count as
    plant; ``controllable`` maps event names).
    """
    comps = list(components)
    event_names = sorted(set().union(*(c.alphabet for c in comps)))
    ev_index = {e: i for i, e in enumerate(event_names)}
    n_events = len(event_names)
    n_comps = len(comps)

    offsets = np.zeros(n_comps + 1, dtype=np.int32)
    for i, c in enumerate(comps):
        offsets[i + 1] = offsets[i] + c.n_states
    total = int(offsets[-1])

    trans = np.full((total, n_events), -1, dtype=np.int32)
    in_alpha = np.zeros((n_comps, n_events), dtype=np.uint8)
    marked = np.zeros(total, dtype=np.uint8)
    initial = np.zeros(n_comps, dtype=np.int32)
    for i, c in enumerate(comps):
        st_index = {s: j for j, s in enumerate(c.states)}
        initial[i] = st_index[c.initial]
        for s in c.marked:
            marked[offsets[i] + st_index[s]] = 1
        for e in c.alphabet:
            if e in ev_index:
                in_alpha[i, ev_index[e]] = 1
        for src, ev, dst in c.transitions:
            trans[offsets[i] + st_index[src], ev_index[ev]] = st_index[dst]

    plant_mask = np.ones(n_comps, dtype=np.uint8)
    if is_plant is not None:
        plant_mask = np.array([1 if p else 0 for p in is_plant], dtype=np.uint8)
    ctrl = np.zeros(n_events, dtype=np.uint8)
    if controllable is not None:
        for e, i in ev_index.items():
            ctrl[i] = 1 if controllable.get(e, True) else 0

    comp_index = {c.name: i for i, c in enumerate(comps)}
    comp_states = {c.name: c.states for c in comps}
    programs: dict[int, list[int]] = {}
    for ev, pred in invariants:
        if ev not in ev_index:
            raise ValueError(f"invariant event '{ev}' not in the composed alphabet")
        code = _compile_predicate(pred, comp_index, comp_states)
        e = ev_index[ev]
        if e in programs:
            programs[e] = programs[e] + code + [OP_AND]
        else:
            programs[e] = code
    inv_ptr = np.zeros(n_events + 1, dtype=np.int32)
    flat: list[int] = []
    for e in range(n_events):
        flat.extend(programs.get(e, []))
        inv_ptr[e + 1] = len(flat)
    inv_code = np.array(flat, dtype=np.int32)

    capacity = 1
    for c in comps:
        capacity *= max(c.n_states, 1)
        if capacity >= _PACK_LIMIT:
            break
    kern = _compiled if (_compiled is not None and capacity < _PACK_LIMIT) else kernels_py

    try:
        out = kern.explore(
            trans,
            offsets,
            in_alpha,
            initial,
            marked,
            plant_mask,
            ctrl,
            inv_ptr,
            inv_code,
            int(budget) if budget else 0,
            bool(track_unc),
        )
    except ValueError as exc:
        if "state budget" in str(exc):
            raise StateBudgetExceeded(int(budget)) from None
        raise
    coords, pmarked, t_ptr, t_ev, t_dst, u_ptr, u_ev, u_dst = out
    return Product(
        components=comps,
        event_names=event_names,
        coords=coords,
        marked=pmarked,
        t_ptr=t_ptr,
        t_ev=t_ev,
        t_dst=t_dst,
        u_ptr=u_ptr,
        u_ev=u_ev,
        u_dst=u_dst,
    )


def supcn(product: Product) -> np.ndarray:
    """Survivor mask of the nonblocking+controllability greatest fixpoint."""
    kern = _compiled if _compiled is not None else kernels_py
    return kern.supcn(
        product.t_ptr,
        product.t_ev,
        product.t_dst,
        product.marked,
        product.u_ptr,
        product.u_dst,
    )


def reach_order(t_ptr, t_ev, t_dst, good):
    kern = _compiled if _compiled is not None else kernels_py
    return kern.reach_order(t_ptr, t_ev, t_dst, good)
