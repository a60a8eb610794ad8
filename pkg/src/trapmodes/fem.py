"""Lagrange P1/P2 spaces on simplicial meshes and stiffness/mass assembly."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .geometry import BC, Mesh, Tag, as_bc
from .quadrature import simplex_rule


def local_edges(dim: int) -> list[tuple[int, int]]:
    return list(combinations(range(dim + 1), 2))


def basis(order: int, dim: int, lam: np.ndarray):
    """Reference basis values and barycentric derivatives.

    Parameters
    ----------
    lam : (nq, dim+1) barycentric coordinates

    Returns
    -------
    phi : (nq, nb)
    dphi : (nq, nb, dim+1), derivative of each basis function w.r.t. each
        barycentric coordinate
    """
    lam = np.atleast_2d(lam)
    nq, nl = lam.shape
    if order == 1:
        return lam.copy(), np.broadcast_to(np.eye(nl), (nq, nl, nl)).copy()
    if order != 2:
        raise ValueError(f"order must be 1 or 2, got {order}")
    edges = local_edges(dim)
    nb = nl + len(edges)
    phi = np.empty((nq, nb))
    dphi = np.zeros((nq, nb, nl))
    for i in range(nl):
        phi[:, i] = lam[:, i] * (2 * lam[:, i] - 1)
        dphi[:, i, i] = 4 * lam[:, i] - 1
    for e, (i, j) in enumerate(edges):
        phi[:, nl + e] = 4 * lam[:, i] * lam[:, j]
        dphi[:, nl + e, i] = 4 * lam[:, j]
        dphi[:, nl + e, j] = 4 * lam[:, i]
    return phi, dphi


@dataclass(frozen=True, eq=False)
class FeSpace:
    """Continuous Lagrange space with a Dirichlet mask.

    Dofs are numbered lexicographically by node coordinates (first coordinate
    most significant), so numbering depends only on geometry.
    """

    mesh: Mesh
    order: int
    artificial_bc: BC
    dof_coords: np.ndarray
    cell_dofs: np.ndarray
    dirichlet_mask: np.ndarray

    @property
    def n_dofs(self) -> int:
        return len(self.dof_coords)

    @property
    def free_dofs(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet_mask)

    def expand(self, free_values: np.ndarray) -> np.ndarray:
        """Embed a vector on free dofs into the full dof vector (zeros elsewhere)."""
        free_values = np.asarray(free_values)
        out = np.zeros((self.n_dofs,) + free_values.shape[1:], dtype=free_values.dtype)
        out[self.free_dofs] = free_values
        return out

    def vertex_values(self, values: np.ndarray) -> np.ndarray:
        """Restrict a full dof vector to mesh vertices (P2 drops edge dofs)."""
        return np.asarray(values)[self._vertex_dofs]

    @property
    def _vertex_dofs(self) -> np.ndarray:
        nl = self.mesh.dim + 1
        vd = np.empty(self.mesh.n_vertices, dtype=np.int64)
        vd[self.mesh.cells.ravel()] = self.cell_dofs[:, :nl].ravel()
        return vd


def build_space(mesh: Mesh, order: int = 2, artificial_bc=BC.DIRICHLET) -> FeSpace:
    """Build the P1 or P2 space on ``mesh``.

    Dofs on DIRICHLET_SIGMA facets are masked, and also those on ARTIFICIAL
    facets when ``artificial_bc`` is Dirichlet.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    bc = as_bc(artificial_bc)
    d = mesh.dim
    nv = mesh.n_vertices
    coords = [mesh.vertices]
    cell_nodes = [mesh.cells]
    edge_index = None
    if order == 2:
        le = local_edges(d)
        pairs = np.sort(np.concatenate([mesh.cells[:, [i, j]] for i, j in le]), axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        inverse = inverse.reshape(len(le), mesh.n_cells).T
        coords.append(0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]]))
        cell_nodes.append(nv + inverse)
        edge_index = {tuple(e): nv + k for k, e in enumerate(edges.tolist())}
    nodes = np.concatenate(coords)
    cell_nodes = np.concatenate(cell_nodes, axis=1)

    # lexicographic dof numbering
    perm = np.lexsort(nodes.T[::-1])
    node_to_dof = np.empty(len(nodes), dtype=np.int64)
    node_to_dof[perm] = np.arange(len(nodes))

    dirichlet_tags = {int(Tag.DIRICHLET_SIGMA)}
    if bc is BC.DIRICHLET:
        dirichlet_tags.add(int(Tag.ARTIFICIAL))
    sel = np.isin(mesh.facet_tags, list(dirichlet_tags))
    bfacets = mesh.facets[sel]
    node_mask = np.zeros(len(nodes), dtype=bool)
    node_mask[bfacets.ravel()] = True
    if edge_index is not None and len(bfacets):
        for i, j in combinations(range(d), 2):
            for a, b in np.sort(bfacets[:, [i, j]], axis=1).tolist():
                node_mask[edge_index[(a, b)]] = True

    mask = np.empty(len(nodes), dtype=bool)
    mask[node_to_dof] = node_mask
    dof_coords = nodes[perm]
    for a in (dof_coords, mask):
        a.setflags(write=False)
    cell_dofs = node_to_dof[cell_nodes]
    cell_dofs.setflags(write=False)
    return FeSpace(mesh, order, bc, dof_coords, cell_dofs, mask)


def _barycentric_gradients(mesh: Mesh):
    p = mesh.vertices[mesh.cells]
    B = p[:, 1:, :] - p[:, :1, :]
    det = np.linalg.det(B)
    bad = np.flatnonzero(~(det > 0))
    if bad.size:
        c = int(bad[0])
        raise ValueError(
            f"degenerate or inverted cell {c} (signed volume {det[c]:.3e}, vertices {mesh.cells[c].tolist()})"
        )
    G = np.linalg.inv(np.transpose(B, (0, 2, 1)))  # rows: grad lambda_1..d
    g0 = -G.sum(axis=1, keepdims=True)
    grads = np.concatenate([g0, G], axis=1)  # (M, d+1, d)
    vol = det / (2.0 if mesh.dim == 2 else 6.0)
    return grads, vol


@dataclass(frozen=True, eq=False)
class AssembledPair:
    """Stiffness ``K`` and mass ``M`` restricted to free dofs (CSR)."""

    K: sp.csr_matrix
    M: sp.csr_matrix
    free: np.ndarray
    space: FeSpace

    @property
    def n(self) -> int:
        return self.K.shape[0]


def reference_tensors(order: int, dim: int):
    """Mass matrix and stiffness coupling tensor on the unit-measure reference cell."""
    lam, w = simplex_rule(dim, 2 * order)
    phi, dphi = basis(order, dim, lam)
    mass = np.einsum("q,qa,qb->ab", w, phi, phi)
    coupling = np.einsum("q,qal,qbm->ablm", w, dphi, dphi)
    return mass, coupling


def assemble_full(space: FeSpace) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Global stiffness and mass on all dofs (no boundary elimination)."""
    mesh = space.mesh
    grads, vol = _barycentric_gradients(mesh)
    mass_ref, coupling = reference_tensors(space.order, mesh.dim)
    gram = np.einsum("mld,mkd->mlk", grads, grads)
    Ke = np.einsum("ablk,mlk->mab", coupling, gram) * vol[:, None, None]
    Ke = 0.5 * (Ke + np.transpose(Ke, (0, 2, 1)))
    Me = mass_ref[None, :, :] * vol[:, None, None]
    cd = space.cell_dofs
    nb = cd.shape[1]
    rows = np.repeat(cd, nb, axis=1).ravel()
    cols = np.tile(cd, (1, nb)).ravel()
    n = space.n_dofs
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    M.sum_duplicates()
    return K, M


def assemble(space: FeSpace) -> AssembledPair:
    """Assemble ``K`` and ``M`` and eliminate Dirichlet dofs."""
    K, M = assemble_full(space)
    free = space.free_dofs
    Kf = K[free][:, free].tocsr()
    Mf = M[free][:, free].tocsr()
    Kf.sort_indices()
    Mf.sort_indices()
    return AssembledPair(Kf, Mf, free, space)


# -- evaluation ----------------------------------------------------------------

def cell_quadrature(space: FeSpace, values: np.ndarray, degree: int | None = None):
    """Physical quadrature data for a full dof vector ``values``.

    Returns points ``(M, nq, d)``, weights ``(M, nq)`` (including cell
    measure), function values ``(M, nq)`` and gradients ``(M, nq, d)``.
    """
    mesh = space.mesh
    if degree is None:
        degree = 2 * space.order
    lam, w = simplex_rule(mesh.dim, degree)
    phi, dphi = basis(space.order, mesh.dim, lam)
    grads, vol = _barycentric_gradients(mesh)
    p = mesh.vertices[mesh.cells]
    points = np.einsum("ql,mld->mqd", lam, p)
    coef = np.asarray(values)[space.cell_dofs]  # (M, nb)
    u = coef @ phi.T
    dref = np.einsum("mb,qbl->mql", coef, dphi)
    du = np.einsum("mql,mld->mqd", dref, grads)
    weights = vol[:, None] * w[None, :]
    return points, weights, u, du


class PointLocator:
    """Locate points in cells using a k-d tree over cell centroids."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        p = mesh.vertices[mesh.cells]
        self._p0 = p[:, 0, :]
        B = p[:, 1:, :] - p[:, :1, :]
        self._Binv = np.linalg.inv(np.transpose(B, (0, 2, 1)))
        self._tree = cKDTree(p.mean(axis=1))

    def barycentric(self, cells: np.ndarray, points: np.ndarray) -> np.ndarray:
        rest = np.einsum("nij,nj->ni", self._Binv[cells], points - self._p0[cells])
        return np.column_stack([1 - rest.sum(axis=1), rest])

    def locate(self, points: np.ndarray, tol: float = 1e-10):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = len(points)
        cells = np.full(n, -1, dtype=np.int64)
        lam = np.zeros((n, self.mesh.dim + 1))
        todo = np.arange(n)
        k = 8
        while todo.size:
            k = min(k, self.mesh.n_cells)
            _, cand = self._tree.query(points[todo], k=k)
            cand = np.atleast_2d(cand).reshape(len(todo), -1)
            found = np.zeros(len(todo), dtype=bool)
            for col in range(cand.shape[1]):
                idx = np.flatnonzero(~found)
                if not idx.size:
                    break
                c = cand[idx, col]
                bl = self.barycentric(c, points[todo[idx]])
                ok = bl.min(axis=1) >= -tol
                hit = idx[ok]
                cells[todo[hit]] = c[ok]
                lam[todo[hit]] = bl[ok]
                found[hit] = True
            todo = todo[~found]
            if todo.size and k >= self.mesh.n_cells:
                bad = points[todo[0]].tolist()
                raise ValueError(f"point {bad} lies outside the mesh")
            k *= 4
        return cells, lam


def evaluate(space: FeSpace, values: np.ndarray, points: np.ndarray, locator: PointLocator | None = None,
             gradient: bool = False):
    """Evaluate a full dof vector at arbitrary points inside the mesh."""
    locator = locator or PointLocator(space.mesh)
    cells, lam = locator.locate(points)
    phi, dphi = basis(space.order, space.mesh.dim, lam)
    coef = np.asarray(values)[space.cell_dofs[cells]]
    u = np.einsum("nb,nb->n", coef, phi)
    if not gradient:
        return u
    grads, _ = _barycentric_gradients_subset(space.mesh, cells)
    du = np.einsum("nb,nbl,nld->nd", coef, dphi, grads)
    return u, du


def _barycentric_gradients_subset(mesh: Mesh, cells: np.ndarray):
    p = mesh.vertices[mesh.cells[cells]]
    B = p[:, 1:, :] - p[:, :1, :]
    G = np.linalg.inv(np.transpose(B, (0, 2, 1)))
    return np.concatenate([-G.sum(axis=1, keepdims=True), G], axis=1), None
