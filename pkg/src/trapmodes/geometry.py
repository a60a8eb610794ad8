"""Parametrized pointed strips and chamfered quarter-layers, with structured meshes.

All domains here are images of the unit square (2D) or unit cube (3D) under
maps that are affine along each grid line, so every cell of the parameter grid
maps to a convex polygon/polyhedron with planar faces. Quads are split into two
triangles and hexahedra into six Kuhn tetrahedra, which gives a conforming
simplicial mesh with an exact boundary representation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np


class Tag(enum.IntEnum):
    """Boundary facet tags."""

    DIRICHLET_SIGMA = 1
    NEUMANN_PHYS = 2
    ARTIFICIAL = 3


class BC(str, enum.Enum):
    """Condition imposed on the artificial truncation boundary."""

    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


def as_bc(value) -> BC:
    if isinstance(value, BC):
        return value
    try:
        return BC(str(value).lower())
    except ValueError:
        raise ValueError(f"artificial_bc must be 'dirichlet' or 'neumann', got {value!r}") from None


@dataclass(frozen=True)
class KappaPair:
    """Chamfer slopes ``(kappa1, kappa2)`` with ``kappa1 >= 0`` and ``|kappa2| <= kappa1``."""

    kappa1: float
    kappa2: float

    def __post_init__(self):
        k1, k2 = float(self.kappa1), float(self.kappa2)
        if not (math.isfinite(k1) and math.isfinite(k2)):
            raise ValueError("kappa components must be finite")
        if k1 < 0:
            raise ValueError(f"kappa1 must satisfy kappa1 >= 0, got {k1}")
        if abs(k2) > k1:
            raise ValueError(f"kappa must satisfy |kappa2| <= kappa1, got kappa=({k1}, {k2})")
        object.__setattr__(self, "kappa1", k1)
        object.__setattr__(self, "kappa2", k2)

    @property
    def alpha1(self) -> float:
        return math.atan(self.kappa1)

    @property
    def alpha2(self) -> float:
        return math.atan(self.kappa2)


@dataclass(frozen=True)
class StripSpec:
    """Truncated pointed strip ``{xi1 > xi2 tan(alpha), 0 < xi2 < 1, xi1 < R}``."""

    alpha: float
    R: float = 12.0
    artificial_bc: BC = BC.DIRICHLET

    def __post_init__(self):
        if not (0.0 <= self.alpha < math.pi / 2):
            raise ValueError(f"alpha must lie in [0, pi/2), got {self.alpha}")
        if not self.R > math.tan(self.alpha):
            raise ValueError(
                f"R must exceed tan(alpha) = {math.tan(self.alpha):.6g}, got R={self.R}"
            )
        object.__setattr__(self, "artificial_bc", as_bc(self.artificial_bc))

    @property
    def area(self) -> float:
        return self.R - math.tan(self.alpha) / 2


@dataclass(frozen=True)
class IncisorSpec:
    """Truncated incisor ``{k1 x3 < x1 < R1, k2 x3 < x2 < R2, 0 < x3 < 1}``.

    With ``dirichlet_everywhere`` the two slanted faces carry Dirichlet data as well.
    """

    kappa: KappaPair
    R1: float = 6.0
    R2: float = 6.0
    artificial_bc: BC = BC.NEUMANN
    dirichlet_everywhere: bool = False

    def __post_init__(self):
        k = self.kappa
        if not isinstance(k, KappaPair):
            k = KappaPair(*k)
            object.__setattr__(self, "kappa", k)
        if not self.R1 > k.kappa1:
            raise ValueError(f"R1 must exceed kappa1 = {k.kappa1}, got R1={self.R1}")
        if not self.R2 > max(k.kappa2, 0.0) or not self.R2 > abs(k.kappa2):
            raise ValueError(f"R2 must exceed |kappa2| = {abs(k.kappa2)}, got R2={self.R2}")
        object.__setattr__(self, "artificial_bc", as_bc(self.artificial_bc))

    @property
    def volume(self) -> float:
        k1, k2 = self.kappa.kappa1, self.kappa.kappa2
        return self.R1 * self.R2 - (k1 * self.R2 + k2 * self.R1) / 2 + k1 * k2 / 3


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming simplicial mesh with tagged boundary facets.

    Attributes
    ----------
    vertices : (N, dim) float array
    cells : (M, dim+1) int array, positively oriented
    facets : (F, dim) int array of boundary facets
    facet_tags : (F,) int array of :class:`Tag` values
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    facets: np.ndarray
    facet_tags: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("vertices", "cells", "facets", "facet_tags"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_volumes(self) -> np.ndarray:
        """Signed cell volumes (positive for a valid mesh)."""
        return signed_volumes(self.vertices, self.cells)

    def measure(self) -> float:
        return float(self.cell_volumes().sum())


def signed_volumes(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    p = vertices[cells]
    edges = p[:, 1:, :] - p[:, :1, :]
    d = edges.shape[-1]
    return np.linalg.det(edges) / math.factorial(d)


def graded_nodes(n: int, ratio: float = 1.0, cap: float = 8.0) -> np.ndarray:
    """Nodes on [0, 1] with cell sizes proportional to ``min(ratio**i, cap)``.

    ``ratio > 1`` clusters nodes toward 0; growth stops once cells are ``cap``
    times the first one.
    """
    if n < 1:
        raise ValueError("cell count must be >= 1")
    if ratio < 1.0:
        raise ValueError("grading ratio must be >= 1")
    sizes = np.minimum(ratio ** np.arange(n, dtype=float), cap)
    nodes = np.concatenate([[0.0], np.cumsum(sizes)])
    nodes /= nodes[-1]
    nodes[-1] = 1.0
    return nodes


def symmetric_graded_nodes(n: int, ratio: float = 1.0, cap: float = 8.0) -> np.ndarray:
    """Nodes on [0, 1] clustered toward both ends (mirror-symmetric)."""
    if ratio == 1.0:
        return np.linspace(0.0, 1.0, n + 1)
    half = n // 2
    sizes = np.minimum(ratio ** np.arange(half, dtype=float), cap)
    mid = [sizes[-1] * ratio if sizes[-1] * ratio < cap else cap] if n % 2 else []
    sizes = np.concatenate([sizes, mid, sizes[::-1]])
    nodes = np.concatenate([[0.0], np.cumsum(sizes)])
    nodes /= nodes[-1]
    nodes[-1] = 1.0
    return nodes


# -- 2D ----------------------------------------------------------------------

def build_strip_mesh(
    spec: StripSpec,
    nx: int,
    ny: int,
    grading: float = 1.0,
    grading_cap: float = 8.0,
    t_grading: float = 1.0,
) -> Mesh:
    """Triangulate the truncated pointed strip.

    The unit square ``(s, t)`` is mapped by ``xi2 = t``,
    ``xi1 = t tan(alpha) + s (R - t tan(alpha))``. ``grading`` clusters columns
    toward the slanted edge ``s = 0``; ``t_grading`` clusters rows toward both
    horizontal edges.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    ta = math.tan(spec.alpha)
    R = spec.R
    s = graded_nodes(nx, grading, grading_cap)
    t = symmetric_graded_nodes(ny, t_grading, grading_cap)
    S, T = np.meshgrid(s, t, indexing="ij")
    X1 = T * ta + S * (R - T * ta)
    # keep boundary lines exact
    X1[0, :] = t * ta
    X1[-1, :] = R
    vertices = np.column_stack([X1.ravel(), T.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    I, J = I.ravel(), J.ravel()
    a, b, c, d = vid(I, J), vid(I + 1, J), vid(I + 1, J + 1), vid(I, J + 1)
    # Columns lean toward +xi1, so b and d are the obtuse corners; the b-d
    # diagonal keeps every angle below the obtuse one.
    cells = np.concatenate([np.column_stack([a, b, d]), np.column_stack([b, c, d])])

    i = np.arange(nx)
    j = np.arange(ny)
    facets, tags = [], []
    # bottom and top: Dirichlet
    facets.append(np.column_stack([vid(i, 0), vid(i + 1, 0)]))
    facets.append(np.column_stack([vid(i, ny), vid(i + 1, ny)]))
    tags += [Tag.DIRICHLET_SIGMA] * (2 * nx)
    facets.append(np.column_stack([vid(0, j), vid(0, j + 1)]))
    tags += [Tag.NEUMANN_PHYS] * ny
    facets.append(np.column_stack([vid(nx, j), vid(nx, j + 1)]))
    tags += [Tag.ARTIFICIAL] * ny

    return Mesh(
        dim=2,
        vertices=vertices,
        cells=cells.astype(np.int64),
        facets=np.concatenate(facets).astype(np.int64),
        facet_tags=np.asarray(tags, dtype=np.int64),
        meta={"kind": "strip", "spec": spec, "shape": (nx, ny)},
    )


# -- 3D ----------------------------------------------------------------------

# Kuhn subdivision: one tetrahedron per path 000 -> 111 through the unit cube.
def _kuhn_tets() -> list[tuple[int, ...]]:
    tets = []
    for perm in permutations(range(3)):
        corner = [0, 0, 0]
        path = [0]
        for axis in perm:
            corner[axis] = 1
            path.append(corner[0] + 2 * corner[1] + 4 * corner[2])
        tets.append(tuple(path))
    return tets


_KUHN = _kuhn_tets()


def build_incisor_mesh(
    spec: IncisorSpec,
    n1: int,
    n2: int,
    n3: int,
    grading: float = 1.0,
    grading_cap: float = 8.0,
    t_grading: float = 1.0,
) -> Mesh:
    """Tetrahedralize the truncated incisor.

    The unit cube ``(s1, s2, t)`` is mapped by ``x3 = t``,
    ``x1 = k1 t + s1 (R1 - k1 t)``, ``x2 = k2 t + s2 (R2 - k2 t)``; each grid
    hexahedron is split into the six Kuhn tetrahedra sharing its main diagonal,
    which makes the face diagonals agree between neighbours.
    """
    if min(n1, n2, n3) < 1:
        raise ValueError("n1, n2, n3 must be >= 1")
    k1, k2 = spec.kappa.kappa1, spec.kappa.kappa2
    R1, R2 = spec.R1, spec.R2
    s1 = graded_nodes(n1, grading, grading_cap)
    s2 = graded_nodes(n2, grading, grading_cap)
    t = symmetric_graded_nodes(n3, t_grading, grading_cap)
    S1, S2, T = np.meshgrid(s1, s2, t, indexing="ij")
    X1 = k1 * T + S1 * (R1 - k1 * T)
    X2 = k2 * T + S2 * (R2 - k2 * T)
    X1[0] = k1 * T[0]
    X1[-1] = R1
    X2[:, 0] = k2 * T[:, 0]
    X2[:, -1] = R2
    vertices = np.column_stack([X1.ravel(), X2.ravel(), T.ravel()])

    def vid(i, j, k):
        return (i * (n2 + 1) + j) * (n3 + 1) + k

    I, J, K = (a.ravel() for a in np.meshgrid(np.arange(n1), np.arange(n2), np.arange(n3), indexing="ij"))
    corners = np.column_stack(
        [vid(I + (c & 1), J + ((c >> 1) & 1), K + ((c >> 2) & 1)) for c in range(8)]
    )
    cells = np.concatenate([corners[:, list(tet)] for tet in _KUHN])
    vol = signed_volumes(vertices, cells)
    neg = vol < 0
    cells[neg] = cells[neg][:, [0, 2, 1, 3]]

    neumann_tag = Tag.DIRICHLET_SIGMA if spec.dirichlet_everywhere else Tag.NEUMANN_PHYS
    facets, tags = [], []

    def add_face(quads, tag):
        # quads: (q, 4) corners (a, b, c, d) in cyclic order with a the lowest
        # parameter corner, c the highest; split along a-c to match Kuhn.
        a, b, c, d = quads.T
        facets.append(np.column_stack([a, b, c]))
        facets.append(np.column_stack([a, c, d]))
        tags.extend([tag] * (2 * len(quads)))

    ii, jj = (a.ravel() for a in np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij"))
    for k, tag in ((0, Tag.DIRICHLET_SIGMA), (n3, Tag.DIRICHLET_SIGMA)):
        add_face(np.column_stack([vid(ii, jj, k), vid(ii + 1, jj, k), vid(ii + 1, jj + 1, k), vid(ii, jj + 1, k)]), tag)
    jj, kk = (a.ravel() for a in np.meshgrid(np.arange(n2), np.arange(n3), indexing="ij"))
    for i, tag in ((0, neumann_tag), (n1, Tag.ARTIFICIAL)):
        add_face(np.column_stack([vid(i, jj, kk), vid(i, jj + 1, kk), vid(i, jj + 1, kk + 1), vid(i, jj, kk + 1)]), tag)
    ii, kk = (a.ravel() for a in np.meshgrid(np.arange(n1), np.arange(n3), indexing="ij"))
    for j, tag in ((0, neumann_tag), (n2, Tag.ARTIFICIAL)):
        add_face(np.column_stack([vid(ii, j, kk), vid(ii + 1, j, kk), vid(ii + 1, j, kk + 1), vid(ii, j, kk + 1)]), tag)

    return Mesh(
        dim=3,
        vertices=vertices,
        cells=cells.astype(np.int64),
        facets=np.concatenate(facets).astype(np.int64),
        facet_tags=np.asarray(tags, dtype=np.int64),
        meta={"kind": "incisor", "spec": spec, "shape": (n1, n2, n3)},
    )


def reflect_mesh(mesh: Mesh, plane: int) -> Mesh:
    """Mirror ``mesh`` through the coordinate plane ``x[plane] = 0``.

    Two vertices of every cell are swapped so the orientation stays positive.
    """
    if not 0 <= plane < mesh.dim:
        raise ValueError(f"plane axis must be in [0, {mesh.dim})")
    vertices = mesh.vertices.copy()
    vertices[:, plane] = -vertices[:, plane]
    cells = mesh.cells.copy()
    cells[:, [0, 1]] = cells[:, [1, 0]]
    meta = dict(mesh.meta)
    meta["reflected"] = meta.get("reflected", ()) + (plane,)
    return Mesh(mesh.dim, vertices, cells, mesh.facets.copy(), mesh.facet_tags.copy(), meta)


def transform_mesh(mesh: Mesh, func) -> Mesh:
    """Apply an orientation-preserving vertex map ``func(vertices) -> vertices``."""
    vertices = np.asarray(func(mesh.vertices.copy()), dtype=float)
    out = Mesh(mesh.dim, vertices, mesh.cells.copy(), mesh.facets.copy(), mesh.facet_tags.copy(), dict(mesh.meta))
    if np.any(out.cell_volumes() <= 0):
        raise ValueError("vertex map does not preserve orientation")
    return out


def in_closure(spec, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Boolean mask of points lying in the closed domain of ``spec`` (within ``tol``)."""
    p = np.asarray(points, dtype=float)
    if isinstance(spec, StripSpec):
        ta = math.tan(spec.alpha)
        return (
            (p[:, 0] >= p[:, 1] * ta - tol)
            & (p[:, 0] <= spec.R + tol)
            & (p[:, 1] >= -tol)
            & (p[:, 1] <= 1 + tol)
        )
    if isinstance(spec, IncisorSpec):
        k1, k2 = spec.kappa.kappa1, spec.kappa.kappa2
        return (
            (p[:, 0] >= k1 * p[:, 2] - tol)
            & (p[:, 0] <= spec.R1 + tol)
            & (p[:, 1] >= k2 * p[:, 2] - tol)
            & (p[:, 1] <= spec.R2 + tol)
            & (p[:, 2] >= -tol)
            & (p[:, 2] <= 1 + tol)
        )
    raise TypeError(f"unsupported spec type {type(spec).__name__}")
