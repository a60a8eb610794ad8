"""Exhaustive structural audit of a simplicial mesh.

Used as an oracle in tests: it knows nothing about how a mesh was built and
only inspects cells, facets and tags.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geometry import Mesh


@dataclass
class AuditReport:
    n_cells: int
    min_volume: float
    n_nonpositive: int
    n_overshared_facets: int
    n_open_facets: int
    n_tagged_facets: int
    n_untagged_open: int
    n_tagged_not_open: int
    n_duplicate_tags: int
    n_outside_vertices: int
    measure: float

    @property
    def ok(self) -> bool:
        return (
            self.n_nonpositive == 0
            and self.n_overshared_facets == 0
            and self.n_untagged_open == 0
            and self.n_tagged_not_open == 0
            and self.n_duplicate_tags == 0
            and self.n_outside_vertices == 0
        )


def audit_mesh(mesh: Mesh, inside=None) -> AuditReport:
    """Check orientation, facet incidence and tag partition of ``mesh``.

    A conforming mesh has every facet shared by at most two cells, and the
    facets owned by a single cell are exactly the tagged boundary facets. A
    hanging node would leave unmatched interior facets, so it is caught by the
    tag comparison. ``inside`` is an optional ``points -> bool mask`` predicate
    for the source domain.
    """
    vol = mesh.cell_volumes()
    d = mesh.dim
    incidence: Counter = Counter()
    for cell in mesh.cells.tolist():
        for face in combinations(sorted(cell), d):
            incidence[face] += 1
    open_facets = {f for f, c in incidence.items() if c == 1}
    overshared = sum(1 for c in incidence.values() if c > 2)
    tagged = Counter(tuple(sorted(f)) for f in mesh.facets.tolist())
    duplicates = sum(c - 1 for c in tagged.values() if c > 1)
    tagged_set = set(tagged)
    outside = 0
    if inside is not None:
        outside = int(np.count_nonzero(~inside(mesh.vertices)))
    return AuditReport(
        n_cells=mesh.n_cells,
        min_volume=float(vol.min()),
        n_nonpositive=int(np.count_nonzero(vol <= 0)),
        n_overshared_facets=overshared,
        n_open_facets=len(open_facets),
        n_tagged_facets=len(mesh.facets),
        n_untagged_open=len(open_facets - tagged_set),
        n_tagged_not_open=len(tagged_set - open_facets),
        n_duplicate_tags=duplicates,
        n_outside_vertices=outside,
        measure=float(vol.sum()),
    )
