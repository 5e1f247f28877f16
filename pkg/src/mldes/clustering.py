"""Multilevel clustering of a DSM with recursive local-bus detection.

The partitioning step is a deterministic Markov-flow clustering: the working
matrix (off-diagonal DSM plus stabilizing self-loops, column-stochastic) is
alternately expanded (matrix power ``alpha``) and inflated (elementwise power
``beta``, columns renormalized) until it stops changing; clusters are the
nodes attracted to the same surviving attractor row.

Bus detection scores each node by accumulated Markov flow: with T the
column-stochastic off-diagonal DSM, the flow matrix is
``F = sum_{k=1..alpha} (mu*T)^k`` and a node whose row sum of F exceeds
``gamma`` times the median positive score is a bus.  Detection recurses into
every subcluster when ``local_bus`` is set, runs only at the top level
otherwise, and is skipped entirely when ``gamma`` is unset.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .depmatrix import DSM
from .errors import ClusteringError, ConvergenceError
from .product import ProductSystem

_CONVERGENCE_TOL = 1e-9
_ITERATION_CAP = 200
_MASS_EPS = 1e-6


@dataclass(frozen=True)
class ClusterParams:
    """Knobs of the Markov clustering and bus detection.

    ``gamma=None`` disables bus detection everywhere; ``local_bus=False``
    restricts it to the top level.  The defaults are pragmatic, not tuned.
    """

    alpha: int = 2
    beta: float = 1.7
    mu: float = 1.0
    gamma: float | None = 2.0
    local_bus: bool = True
    max_depth: int | None = None

    def __post_init__(self):
        if self.alpha < 1:
            raise ClusteringError("alpha must be an integer >= 1")
        if self.beta <= 1.0:
            raise ClusteringError("beta must be > 1")
        if not 0.0 < self.mu <= 1.0:
            raise ClusteringError("mu must be in (0, 1]")
        if self.gamma is not None and self.gamma < 1.0:
            raise ClusteringError("gamma must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ClusteringError("max_depth must be >= 1 when given")

    @property
    def mode(self) -> str:
        if self.gamma is None:
            return "no-bus"
        return "local-bus" if self.local_bus else "global-bus"


@dataclass(frozen=True)
class MultilevelClustering:
    """Recursive cluster node: members, bus children, non-bus children,
    owned requirement indices, and this node's own bus designation."""

    members: frozenset[int]
    bus_children: tuple["MultilevelClustering", ...]
    nonbus_children: tuple["MultilevelClustering", ...]
    requirements: frozenset[int]
    is_bus: bool = False

    @property
    def is_leaf(self) -> bool:
        return not self.bus_children and not self.nonbus_children

    @property
    def children(self) -> tuple["MultilevelClustering", ...]:
        return self.bus_children + self.nonbus_children

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.depth() for c in self.children)

    def iter_nodes(self) -> Iterator["MultilevelClustering"]:
        yield self
        for c in self.children:
            yield from c.iter_nodes()

    def with_requirements(self, requirements) -> "MultilevelClustering":
        return MultilevelClustering(
            self.members,
            self.bus_children,
            self.nonbus_children,
            frozenset(requirements),
            self.is_bus,
        )


def validate_clustering(node: MultilevelClustering, *, _root: bool = True) -> None:
    """Check the structural invariants; raises ClusteringError on violation."""
    if not node.members:
        raise ClusteringError("cluster with empty member set")
    if node.is_leaf:
        if len(node.members) != 1:
            raise ClusteringError(
                f"leaf cluster must have exactly one member, got {sorted(node.members)}"
            )
    else:
        seen: set[int] = set()
        for child in node.children:
            if child.members & seen:
                raise ClusteringError(
                    f"component(s) {sorted(child.members & seen)} appear in two sibling cells"
                )
            seen |= child.members
        if seen != node.members:
            raise ClusteringError(
                "children's members do not partition the cluster "
                f"({sorted(seen)} vs {sorted(node.members)})"
            )
        for child in node.bus_children:
            if not child.is_bus:
                raise ClusteringError("bus child not flagged as bus")
        for child in node.nonbus_children:
            if child.is_bus:
                raise ClusteringError("non-bus child flagged as bus")
    if not _root and node.requirements:
        raise ClusteringError("only the root cluster may carry requirements")
    for child in node.children:
        validate_clustering(child, _root=False)


# ---------------------------------------------------------------------------
# numeric core


def flow_scores(matrix: np.ndarray, alpha: int, mu: float) -> np.ndarray:
    """Row sums of the damped flow matrix F = sum_{k=1..alpha} (mu*T)^k."""
    t = np.asarray(matrix, dtype=float).copy()
    np.fill_diagonal(t, 0.0)
    colsum = t.sum(axis=0)
    nz = colsum > 0
    t[:, nz] /= colsum[nz]
    power = np.eye(t.shape[0])
    flow = np.zeros_like(t)
    for _ in range(alpha):
        power = (mu * t) @ power
        flow += power
    return flow.sum(axis=1)


def _detect_bus_local(matrix: np.ndarray, params: ClusterParams) -> list[int]:
    """Local indices of bus rows; empty for degenerate or un-bussed inputs."""
    n = matrix.shape[0]
    if params.gamma is None or n <= 2:
        return []
    scores = flow_scores(matrix, params.alpha, params.mu)
    positive = scores[scores > 0]
    if positive.size == 0:
        return []
    threshold = params.gamma * float(np.median(positive))
    return [i for i in range(n) if scores[i] > threshold]


def detect_bus(dsm: DSM, gamma: float) -> tuple[frozenset[int], frozenset[int]]:
    """Split DSM indices into (bus, non-bus) by flow score."""
    params = ClusterParams(gamma=gamma)
    bus = _detect_bus_local(dsm.entries, params)
    nonbus = [i for i in range(dsm.n_components) if i not in set(bus)]
    return frozenset(bus), frozenset(nonbus)


def _markov_partition_local(matrix: np.ndarray, params: ClusterParams) -> list[list[int]]:
    """Partition local indices 0..n-1; cells ordered by smallest member."""
    n = matrix.shape[0]
    if n == 1:
        return [[0]]
    w = np.asarray(matrix, dtype=float).copy()
    np.fill_diagonal(w, 0.0)
    # self-loops at each node's strongest incident weight keep regular blocks
    # stationary instead of inflating toward the identity
    loops = np.maximum(w.max(axis=0), 1.0)
    w += np.diag(loops)
    w /= w.sum(axis=0)
    delta = np.inf
    for _ in range(_ITERATION_CAP):
        nxt = np.linalg.matrix_power(w, params.alpha)
        nxt **= params.beta
        colsum = nxt.sum(axis=0)
        colsum[colsum == 0.0] = 1.0
        nxt /= colsum
        delta = float(np.abs(nxt - w).max())
        w = nxt
        if delta < _CONVERGENCE_TOL:
            break
    else:
        raise ConvergenceError(_ITERATION_CAP, delta)
    attractors = [i for i in range(n) if w[i, i] > _MASS_EPS]
    cells: dict[int, list[int]] = {}
    for j in range(n):
        pulls = [i for i in attractors if w[i, j] > _MASS_EPS]
        cells.setdefault(min(pulls) if pulls else j, []).append(j)
    return [cells[k] for k in sorted(cells)]


def markov_partition(dsm: DSM, params: ClusterParams) -> tuple[frozenset[int], ...]:
    """Partition all DSM indices by Markov-flow attractors."""
    cells = _markov_partition_local(dsm.entries, params)
    return tuple(frozenset(cell) for cell in cells)


# ---------------------------------------------------------------------------
# recursive clustering


def cluster(
    dsm: DSM,
    params: ClusterParams,
    requirements: Sequence[int] | frozenset[int] = frozenset(),
    *,
    diagnostics: list[str] | None = None,
) -> MultilevelClustering:
    """Build the multilevel clustering of a DSM.

    The root carries ``requirements`` (the full requirement index set in the
    pipeline); every other node starts with an empty set.  ``diagnostics``
    collects a note for every forced progress split.
    """
    if dsm.n_components == 0:
        raise ClusteringError("cannot cluster an empty DSM")
    matrix = dsm.entries
    root = _cluster_rec(
        matrix,
        list(range(dsm.n_components)),
        params,
        depth=0,
        is_bus=False,
        diagnostics=diagnostics,
    )
    return root.with_requirements(frozenset(requirements))


def _cluster_rec(
    matrix: np.ndarray,
    indices: list[int],
    params: ClusterParams,
    depth: int,
    is_bus: bool,
    diagnostics: list[str] | None,
) -> MultilevelClustering:
    if len(indices) == 1:
        return MultilevelClustering(
            frozenset(indices), (), (), frozenset(), is_bus
        )

    sub = matrix[np.ix_(indices, indices)]
    at_depth_cap = params.max_depth is not None and depth >= params.max_depth
    detect_here = params.gamma is not None and (depth == 0 or params.local_bus)

    if at_depth_cap:
        bus_local: list[int] = []
        nonbus_cells = [[i] for i in range(len(indices))]
        bus_cells: list[list[int]] = []
    else:
        bus_local = _detect_bus_local(sub, params) if detect_here else []
        nonbus_local = [i for i in range(len(indices)) if i not in set(bus_local)]
        bus_cells = (
            _markov_partition_local(sub[np.ix_(bus_local, bus_local)], params)
            if bus_local
            else []
        )
        bus_cells = [[bus_local[i] for i in cell] for cell in bus_cells]
        nonbus_cells = _markov_partition_local(
            sub[np.ix_(nonbus_local, nonbus_local)], params
        )
        nonbus_cells = [[nonbus_local[i] for i in cell] for cell in nonbus_cells]
        if not bus_cells and len(nonbus_cells) == 1:
            # whole level came back as one cell: force progress
            if diagnostics is not None:
                diagnostics.append(
                    "forced split of non-separable cluster "
                    f"{{{','.join(str(indices[i]) for i in nonbus_cells[0])}}}"
                )
            nonbus_cells = [[0], list(range(1, len(indices)))]

    def build(cells: list[list[int]], child_bus: bool):
        out = []
        for cell in cells:
            glob = [indices[i] for i in cell]
            out.append(
                _cluster_rec(matrix, glob, params, depth + 1, child_bus, diagnostics)
            )
        return tuple(sorted(out, key=lambda c: min(c.members)))

    return MultilevelClustering(
        members=frozenset(indices),
        bus_children=build(bus_cells, True),
        nonbus_children=build(nonbus_cells, False),
        requirements=frozenset(),
        is_bus=is_bus,
    )


# ---------------------------------------------------------------------------
# clustering files

_TOKEN = re.compile(r"\s*(bus:|[{}\[\],]|[A-Za-z_][A-Za-z0-9_+]*)")


class _ClusterParser:
    """Nested-bracket clustering text, e.g.
    ``{bus:[A1], [{[TaH]}, {bus:[Ro], [{[TaV]}, {[Pr],[A2]}]}]}``.

    ``{...}`` opens a cluster, ``[...]`` splices its elements into the
    surrounding child list, a name is a leaf, and ``bus:`` marks the element
    that follows (every child it contributes) as bus-side.
    """

    def __init__(self, text: str):
        self.tokens: list[str] = []
        pos = 0
        stripped = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
        while pos < len(stripped):
            m = _TOKEN.match(stripped, pos)
            if not m:
                if stripped[pos:].strip():
                    raise ClusteringError(
                        f"bad clustering syntax near '{stripped[pos:pos + 20].strip()}'"
                    )
                break
            self.tokens.append(m.group(1))
            pos = m.end()
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ClusteringError("clustering text ends unexpectedly")
        self.i += 1
        return tok

    def parse(self):
        node = self.parse_cluster()
        if self.peek() is not None:
            raise ClusteringError(f"unexpected trailing '{self.peek()}'")
        return node

    def parse_cluster(self):
        if self.take() != "{":
            raise ClusteringError("expected '{'")
        bus: list = []
        nonbus: list = []
        while True:
            tok = self.peek()
            if tok == "}":
                self.take()
                break
            target = nonbus
            if tok == "bus:":
                self.take()
                target = bus
            target.extend(self.parse_element())
            if self.peek() == ",":
                self.take()
        if not bus and not nonbus:
            raise ClusteringError("empty cluster '{}'")
        return ("cluster", bus, nonbus)

    def parse_element(self) -> list:
        tok = self.peek()
        if tok == "{":
            return [self.parse_cluster()]
        if tok == "[":
            self.take()
            out: list = []
            while self.peek() != "]":
                out.extend(self.parse_element())
                if self.peek() == ",":
                    self.take()
            self.take()
            return out
        name = self.take()
        if name in ("}", ",", "bus:", "]"):
            raise ClusteringError(f"unexpected '{name}' in clustering text")
        return [("leaf", name)]


def _resolve_component(name: str, ps: ProductSystem) -> int:
    names = ps.component_names()
    if name in names:
        return names.index(name)
    try:
        return ps.group_of_plant(name)
    except KeyError:
        raise ClusteringError(f"unknown component '{name}'") from None


def _build_loaded(node, ps: ProductSystem, used: set[int], is_bus: bool) -> MultilevelClustering:
    if node[0] == "leaf":
        idx = _resolve_component(node[1], ps)
        if idx in used:
            raise ClusteringError(
                f"component '{ps.group_name(idx)}' appears in two sibling cells"
            )
        used.add(idx)
        return MultilevelClustering(frozenset([idx]), (), (), frozenset(), is_bus)
    _, bus_items, nonbus_items = node
    if not bus_items and len(nonbus_items) == 1:
        # single-cell wrapper: collapse to its only child
        return _build_loaded(nonbus_items[0], ps, used, is_bus)
    bus_children = tuple(_build_loaded(c, ps, used, True) for c in bus_items)
    nonbus_children = tuple(_build_loaded(c, ps, used, False) for c in nonbus_items)
    members = frozenset().union(*(c.members for c in bus_children + nonbus_children))
    return MultilevelClustering(
        members,
        tuple(sorted(bus_children, key=lambda c: min(c.members))),
        tuple(sorted(nonbus_children, key=lambda c: min(c.members))),
        frozenset(),
        is_bus,
    )


def load_clustering(
    text: str,
    ps: ProductSystem,
    requirements: Sequence[int] | frozenset[int] = frozenset(),
) -> MultilevelClustering:
    """Parse a user-supplied clustering (text or JSON mirror).

    Component names may be refined-group names or any member plant's name.
    Every component must appear exactly once.
    """
    if re.match(r'\s*\{\s*"', text):
        node = _clustering_json_node(json.loads(text))
    else:
        node = _ClusterParser(text).parse()
    used: set[int] = set()
    root = _build_loaded(node, ps, used, False)
    missing = set(range(ps.n_components)) - used
    if missing:
        names = ", ".join(ps.group_name(i) for i in sorted(missing))
        raise ClusteringError(f"missing component(s): {names}")
    validate_clustering(root)
    return root.with_requirements(frozenset(requirements))


def _clustering_json_node(doc):
    if isinstance(doc, str):
        return ("leaf", doc)
    if isinstance(doc, dict):
        bus = [_clustering_json_node(c) for c in doc.get("bus", [])]
        nonbus = [_clustering_json_node(c) for c in doc.get("children", [])]
        return ("cluster", bus, nonbus)
    raise ClusteringError(f"bad clustering JSON node: {doc!r}")


def clustering_to_text(node: MultilevelClustering, names: Sequence[str]) -> str:
    def render(n: MultilevelClustering) -> str:
        if n.is_leaf:
            return names[min(n.members)]
        parts = [f"bus:{render(c)}" for c in n.bus_children]
        parts += [render(c) for c in n.nonbus_children]
        return "{" + ", ".join(parts) + "}"

    if node.is_leaf:
        return "{" + names[min(node.members)] + "}\n"
    return render(node) + "\n"


def clustering_to_json(node: MultilevelClustering, names: Sequence[str]) -> str:
    def doc(n: MultilevelClustering):
        if n.is_leaf:
            return names[min(n.members)]
        out: dict = {}
        if n.bus_children:
            out["bus"] = [doc(c) for c in n.bus_children]
        out["children"] = [doc(c) for c in n.nonbus_children]
        return out

    root = doc(node)
    if isinstance(root, str):
        root = {"children": [root]}
    return json.dumps(root, indent=2) + "\n"
