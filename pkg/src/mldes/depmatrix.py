"""Dependency matrices: component-requirement DMM and component DSM.

The DMM marks which product-system components a requirement touches (shared
event, or a location mentioned by an invariant predicate).  The DSM is its
Gram matrix: entry (a, b) counts the requirements touching both components.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import AutomatonRequirement, InvariantRequirement, Requirement
from .product import ProductSystem


@dataclass(frozen=True)
class DMM:
    """Binary component x requirement reference matrix."""

    entries: np.ndarray  # uint8, (n_components, n_requirements)
    component_names: tuple[str, ...]
    requirement_names: tuple[str, ...]

    @property
    def n_components(self) -> int:
        return self.entries.shape[0]

    @property
    def n_requirements(self) -> int:
        return self.entries.shape[1]

    def references(self, r: int) -> frozenset[int]:
        """Component indices referenced by requirement ``r``."""
        return frozenset(int(i) for i in np.flatnonzero(self.entries[:, r]))

    def to_csv(self) -> str:
        rows = ["component," + ",".join(self.requirement_names)]
        for i, name in enumerate(self.component_names):
            rows.append(name + "," + ",".join(str(int(v)) for v in self.entries[i]))
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class DSM:
    """Symmetric nonnegative component dependency matrix.

    The diagonal (requirements per component) is stored for reporting but
    ignored by clustering.
    """

    entries: np.ndarray  # int64, (n, n)
    component_names: tuple[str, ...]

    @property
    def n_components(self) -> int:
        return self.entries.shape[0]

    def to_csv(self) -> str:
        rows = ["component," + ",".join(self.component_names)]
        for i, name in enumerate(self.component_names):
            rows.append(name + "," + ",".join(str(int(v)) for v in self.entries[i]))
        return "\n".join(rows) + "\n"

    def to_ppm(self, scale: int = 12) -> str:
        """Plain-text PPM heat grid of the matrix (white -> dark blue)."""
        n = self.n_components
        vmax = max(1, int(self.entries.max()))
        out = [f"P3 {n * scale} {n * scale} 255"]
        for i in range(n):
            row_px: list[str] = []
            for j in range(n):
                v = int(self.entries[i, j]) / vmax
                r = int(255 - 215 * v)
                g = int(255 - 195 * v)
                b = 255
                row_px.extend([f"{r} {g} {b}"] * scale)
            line = " ".join(row_px)
            out.extend([line] * scale)
        return "\n".join(out) + "\n"


def referenced_components(ps: ProductSystem, req: Requirement) -> frozenset[int]:
    """Component indices a requirement references.

    Automaton form: components whose alphabet meets the requirement's.
    Invariant form: the guarded event's owner plus every component hosting a
    plant mentioned by the predicate.
    """
    refs: set[int] = set()
    if isinstance(req, AutomatonRequirement):
        alpha = req.automaton.alphabet
        for i in range(ps.n_components):
            if ps.group_alphabet(i) & alpha:
                refs.add(i)
    else:
        assert isinstance(req, InvariantRequirement)
        for i in range(ps.n_components):
            if req.event in ps.group_alphabet(i):
                refs.add(i)
        for atom in req.predicate.atoms():
            refs.add(ps.group_of_plant(atom.plant))
    return frozenset(refs)


def build_dmm(ps: ProductSystem, requirements: Sequence[Requirement]) -> DMM:
    entries = np.zeros((ps.n_components, len(requirements)), dtype=np.uint8)
    for j, req in enumerate(requirements):
        for i in referenced_components(ps, req):
            entries[i, j] = 1
    return DMM(
        entries=entries,
        component_names=ps.component_names(),
        requirement_names=tuple(r.name for r in requirements),
    )


def dsm_from_dmm(dmm: DMM) -> DSM:
    pr = dmm.entries.astype(np.int64)
    return DSM(entries=pr @ pr.T, component_names=dmm.component_names)
