"""P1 stiffness and mass matrices with Dirichlet vertices eliminated."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import kernels
from ._pykernels import GAUSS_BARY
from .mesh import BoundaryTag, Mesh

CONSTRAINED = -1

# Dirichlet tag sets of the three problem families
DN_TAGS = frozenset({BoundaryTag.ARC, BoundaryTag.DIAM_LEFT})
ND_TAGS = frozenset({BoundaryTag.ARC, BoundaryTag.DIAM_RIGHT})
DISK_TAGS = frozenset({BoundaryTag.ARC})


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class DofMap:
    free_index: np.ndarray  # vertex -> dof index or CONSTRAINED
    n_free: int

    @property
    def free_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.free_index != CONSTRAINED)

    def expand(self, u: np.ndarray) -> np.ndarray:
        """Vertex values from a dof vector (zero on constrained vertices)."""
        out = np.zeros(len(self.free_index) if u.ndim == 1 else (len(self.free_index), u.shape[1]))
        out[self.free_vertices] = u
        return out


def build_dofmap(mesh: Mesh, dirichlet_tags) -> DofMap:
    tags = {BoundaryTag(t) for t in dirichlet_tags}
    constrained = mesh.vertices_with_tags(tags) if tags else np.empty(0, dtype=np.int64)
    free_index = np.zeros(mesh.n_vertices, dtype=np.int64)
    free_index[constrained] = CONSTRAINED
    free = free_index != CONSTRAINED
    n_free = int(free.sum())
    if n_free == 0:
        raise AssemblyError("no free degrees of freedom")
    free_index[free] = np.arange(n_free)
    return DofMap(free_index, n_free)


def _element_matrices(mesh: Mesh, weight=None):
    pts = np.ascontiguousarray(mesh.vertices, dtype=np.float64)
    tris = np.ascontiguousarray(mesh.triangles, dtype=np.int64)
    wq = None
    if weight is not None:
        qp = np.einsum("qk,tkd->tqd", GAUSS_BARY, pts[tris])
        wq = np.asarray(weight(qp[..., 0], qp[..., 1]), dtype=float).reshape(len(tris), 3)
    try:
        return kernels.element_matrices(pts, tris, wq)
    except ValueError as exc:
        raise AssemblyError(str(exc)) from exc


def _scatter(mesh: Mesh, dofmap: DofMap, local: np.ndarray) -> sparse.csr_matrix:
    dofs = dofmap.free_index[mesh.triangles]  # (nt, 3)
    rows = np.repeat(dofs, 3, axis=1).ravel()
    cols = np.tile(dofs, (1, 3)).ravel()
    vals = local.reshape(len(dofs), 9).ravel()
    keep = (rows != CONSTRAINED) & (cols != CONSTRAINED)
    n = dofmap.n_free
    mat = sparse.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def assemble_stiffness(mesh: Mesh, dofmap: DofMap) -> sparse.csr_matrix:
    ke, _, _ = _element_matrices(mesh)
    return _scatter(mesh, dofmap, ke)


def assemble_mass(mesh: Mesh, dofmap: DofMap, weight=None) -> sparse.csr_matrix:
    """Mass matrix; ``weight(x, y)`` (vectorised) is integrated with the
    3-point rule, the unweighted matrix is exact."""
    _, me, area = _element_matrices(mesh, weight)
    volume = me.sum(axis=(1, 2))
    if np.any(volume <= 0):
        raise AssemblyError("nonpositive weighted element volume")
    return _scatter(mesh, dofmap, me)


def assemble(mesh: Mesh, dofmap: DofMap, weight=None):
    """Stiffness and mass in one pass over the elements."""
    ke, me, _ = _element_matrices(mesh, weight)
    if weight is not None and np.any(me.sum(axis=(1, 2)) <= 0):
        raise AssemblyError("nonpositive weighted element volume")
    return _scatter(mesh, dofmap, ke), _scatter(mesh, dofmap, me)


def double_cover_weight(x, y):
    """4 |y|^2 on the covering disk."""
    return 4.0 * (x * x + y * y)


def write_matrix(mat: sparse.spmatrix, fh) -> None:
    """Lower triangle as ``i j value`` lines."""
    low = sparse.tril(mat).tocoo()
    order = np.lexsort((low.col, low.row))
    for i, j, v in zip(low.row[order], low.col[order], low.data[order]):
        fh.write(f"{int(i)} {int(j)} {float(v)!r}\n")
