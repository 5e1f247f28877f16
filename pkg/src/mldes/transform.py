"""Turning a multilevel clustering into a tree of synthesis subproblems.

Requirements start at the root and sink down the clustering by a preorder
pass: a requirement moves into a non-bus child when exactly one non-bus
child is related to it (shares a referenced component) regardless of related
bus children, moves into a bus child when that is the only related child at
all, and otherwise stays put, pulling every component it references into the
current node's plant set.  Leaf clusters own their component plus everything
referenced by the requirements that reached them.

Nodes that end up without requirements are kept (the tree mirrors the
clustering) but flagged so synthesis skips them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

from .clustering import MultilevelClustering, validate_clustering
from .depmatrix import DMM
from .errors import TransformError


@dataclass(frozen=True)
class SynthesisNode:
    """One synthesis subproblem: plant component indices and owned
    requirement indices, plus the originating cluster's shape."""

    path: str
    plants: frozenset[int]
    requirements: frozenset[int]
    children: tuple["SynthesisNode", ...]
    cluster_members: frozenset[int]
    from_bus: bool

    @property
    def synthesizes(self) -> bool:
        return bool(self.requirements)

    def iter_nodes(self) -> Iterator["SynthesisNode"]:
        yield self
        for c in self.children:
            yield from c.iter_nodes()


@dataclass(frozen=True)
class SynthesisTree:
    root: SynthesisNode
    n_components: int
    n_requirements: int

    def nodes(self) -> Iterator[SynthesisNode]:
        return self.root.iter_nodes()

    def synthesis_nodes(self) -> list[SynthesisNode]:
        return [n for n in self.nodes() if n.synthesizes]

    def depth(self) -> int:
        def d(node: SynthesisNode) -> int:
            return 0 if not node.children else 1 + max(d(c) for c in node.children)

        return d(self.root)


class _WorkNode:
    """Mutable mirror of a cluster used while requirements are distributed."""

    __slots__ = ("members", "bus", "nonbus", "requirements", "is_bus")

    def __init__(self, cluster: MultilevelClustering):
        self.members = cluster.members
        self.bus = [_WorkNode(c) for c in cluster.bus_children]
        self.nonbus = [_WorkNode(c) for c in cluster.nonbus_children]
        self.requirements = set(cluster.requirements)
        self.is_bus = cluster.is_bus

    @property
    def children(self) -> list["_WorkNode"]:
        return self.bus + self.nonbus

    @property
    def is_leaf(self) -> bool:
        return not self.bus and not self.nonbus

    def iter_nodes(self) -> Iterator["_WorkNode"]:
        yield self
        for c in self.children:
            yield from c.iter_nodes()


def compute_related_clusters(
    children: Sequence, dmm: DMM, r: int
) -> list:
    """Children whose member set meets the components referenced by ``r``."""
    refs = dmm.references(r)
    return [c for c in children if c.members & refs]


def prop_req(
    node: _WorkNode,
    dmm: DMM,
    on_step: Callable[[], None] | None = None,
) -> frozenset[int]:
    """Distribute the node's requirements over its children (in place).

    Returns the plant index set of the requirements that stay.  ``on_step``
    fires after each requirement's placement decision.
    """
    plants: set[int] = set()
    for r in sorted(node.requirements):
        related_bus = compute_related_clusters(node.bus, dmm, r)
        related_nonbus = compute_related_clusters(node.nonbus, dmm, r)
        if len(related_nonbus) == 1:
            related_nonbus[0].requirements.add(r)
            node.requirements.discard(r)
        elif len(related_bus) == 1 and not related_nonbus:
            related_bus[0].requirements.add(r)
            node.requirements.discard(r)
        else:
            plants |= dmm.references(r)
        if on_step is not None:
            on_step()
    return frozenset(plants)


def _child_order(work: _WorkNode) -> list[_WorkNode]:
    """Bus children first, each side by smallest contained component."""
    return sorted(work.bus, key=lambda c: min(c.members)) + sorted(
        work.nonbus, key=lambda c: min(c.members)
    )


def _transform_rec(
    work: _WorkNode,
    dmm: DMM,
    path: str,
    on_step: Callable[[], None] | None,
) -> SynthesisNode:
    if work.is_leaf:
        plants = set(work.members)
        for r in work.requirements:
            plants |= dmm.references(r)
        children: tuple[SynthesisNode, ...] = ()
    else:
        plants = set(prop_req(work, dmm, on_step))
        kids = []
        for i, child in enumerate(_child_order(work)):
            kids.append(_transform_rec(child, dmm, f"{path}.{i}", on_step))
        children = tuple(kids)
    return SynthesisNode(
        path=path,
        plants=frozenset(plants),
        requirements=frozenset(work.requirements),
        children=children,
        cluster_members=work.members,
        from_bus=work.is_bus,
    )


def transform(
    clustering: MultilevelClustering,
    dmm: DMM,
    *,
    on_step: Callable[[_WorkNode], None] | None = None,
) -> SynthesisTree:
    """Preorder transform of a clustering into a synthesis tree.

    The root cluster must own every requirement index of the DMM.  When
    given, ``on_step(root)`` fires after every single requirement placement
    with the mutable working tree, so invariants can be checked stepwise.
    """
    try:
        validate_clustering(clustering)
    except Exception as exc:
        raise TransformError(f"invalid clustering: {exc}") from exc
    if clustering.members != frozenset(range(dmm.n_components)):
        raise TransformError(
            "clustering members do not match the DMM components "
            f"({sorted(clustering.members)} vs 0..{dmm.n_components - 1})"
        )
    if clustering.requirements != frozenset(range(dmm.n_requirements)):
        raise TransformError(
            "root cluster must carry the full requirement index set"
        )
    root_work = _WorkNode(clustering)
    callback = (lambda: on_step(root_work)) if on_step is not None else None
    root = _transform_rec(root_work, dmm, "0", callback)
    return SynthesisTree(
        root=root,
        n_components=dmm.n_components,
        n_requirements=dmm.n_requirements,
    )


# ---------------------------------------------------------------------------
# structural checks (the transform's contracts)


def check_valid_synthesis(tree: SynthesisTree, dmm: DMM) -> bool:
    """Every node owning requirements also holds all referenced components."""
    for node in tree.nodes():
        for r in node.requirements:
            if not dmm.references(r) <= node.plants:
                return False
    return True


def check_plant_conservation(tree: SynthesisTree) -> bool:
    """Every component appears in some node; leaves hold their own member."""
    seen: set[int] = set()
    for node in tree.nodes():
        seen |= node.plants
        if not node.children and not node.cluster_members <= node.plants:
            return False
    return seen >= set(range(tree.n_components))


def check_requirement_conservation(tree: SynthesisTree) -> bool:
    """Node requirement sets are pairwise disjoint and union to all of J."""
    seen: set[int] = set()
    for node in tree.nodes():
        if node.requirements & seen:
            return False
        seen |= node.requirements
    return seen == set(range(tree.n_requirements))


# ---------------------------------------------------------------------------
# emission


def tree_to_json(
    tree: SynthesisTree,
    component_names: Sequence[str],
    requirement_names: Sequence[str],
    css: Mapping[str, int] | None = None,
) -> str:
    def doc(node: SynthesisNode) -> dict:
        out = {
            "path": node.path,
            "plants": [component_names[i] for i in sorted(node.plants)],
            "requirements": [requirement_names[i] for i in sorted(node.requirements)],
            "cluster": [component_names[i] for i in sorted(node.cluster_members)],
            "bus": node.from_bus,
            "synthesizes": node.synthesizes,
        }
        if css is not None and node.path in css:
            out["css"] = css[node.path]
        out["children"] = [doc(c) for c in node.children]
        return out

    return json.dumps(
        {
            "components": list(component_names),
            "requirement_names": list(requirement_names),
            "root": doc(tree.root),
        },
        indent=2,
    ) + "\n"


def tree_to_dot(
    tree: SynthesisTree,
    component_names: Sequence[str],
    css: Mapping[str, int] | None = None,
) -> str:
    lines = [
        "digraph synthesis_tree {",
        '  node [shape=box, fontname="Helvetica"];',
    ]
    for node in tree.nodes():
        plants = ",".join(component_names[i] for i in sorted(node.plants))
        label = f"G:{{{plants}}}" if plants else "G:{}"
        if node.synthesizes:
            label += f"\\n|R|: {len(node.requirements)}"
            if css is not None and node.path in css:
                label += f"\\ncss: {css[node.path]}"
        else:
            label += "\\n(no synthesis)"
        style = ', style=filled, fillcolor="lightcyan"' if node.from_bus else ""
        lines.append(f'  "{node.path}" [label="{label}"{style}];')
    for node in tree.nodes():
        for child in node.children:
            lines.append(f'  "{node.path}" -> "{child.path}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_from_json(text: str) -> tuple[SynthesisTree, list[str], list[str]]:
    """Inverse of ``tree_to_json``; returns (tree, component names, requirement names)."""
    doc = json.loads(text)
    comp_names: list[str] = doc["components"]
    req_names: list[str] = doc["requirement_names"]
    comp_index = {n: i for i, n in enumerate(comp_names)}
    req_index = {n: i for i, n in enumerate(req_names)}

    def node(d: dict) -> SynthesisNode:
        return SynthesisNode(
            path=d["path"],
            plants=frozenset(comp_index[n] for n in d["plants"]),
            requirements=frozenset(req_index[n] for n in d["requirements"]),
            children=tuple(node(c) for c in d["children"]),
            cluster_members=frozenset(comp_index[n] for n in d["cluster"]),
            from_bus=bool(d["bus"]),
        )

    tree = SynthesisTree(
        root=node(doc["root"]),
        n_components=len(comp_names),
        n_requirements=len(req_names),
    )
    return tree, comp_names, req_names
