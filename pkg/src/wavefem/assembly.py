"""Global operator assembly for the mixed velocity/scalar wave system.

Assembles, with quadrature exact for every integrand:

* the block-diagonal velocity mass matrix (one dense block per cell,
  since the velocity space is discontinuous),
* the sparse symmetric scalar mass matrix,
* one sparse gradient matrix per spatial direction, including the
  boundary facet term that imposes Dirichlet data on the scalar weakly,
* the boundary data vectors entering the two semi-discrete equations.

The semi-discrete system reads, per velocity component i:

    d/dt (u_mass u_i) = -grad_i h - dirichlet_rhs_i
    d/dt (h_mass  h)  = sum_i grad_i^T u_i - neumann_rhs
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elements import DofMap, P1_DG, P2_CG, quadrature, reference_element, tabulate
from .mesh import BcSpec, Mesh

__all__ = [
    "BlockDiagonalMatrix",
    "AssembledOperators",
    "assemble",
    "assemble_divergence",
    "apply_u_mass_inverse",
    "semidiscrete_rhs",
    "export_matrix_market",
]

QUAD_DEGREE = 4  # highest assembled integrand: quadratic x quadratic


class BlockDiagonalMatrix:
    """Symmetric block-diagonal matrix, one dense block per mesh cell."""

    def __init__(self, blocks: np.ndarray):
        blocks = np.asarray(blocks, dtype=float)
        if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2]:
            raise ValueError("blocks must have shape (n, b, b)")
        self.blocks = blocks
        self._inv = None

    @property
    def n_blocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def block_size(self) -> int:
        return self.blocks.shape[1]

    @property
    def shape(self):
        n = self.n_blocks * self.block_size
        return (n, n)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        xb = np.asarray(x, dtype=float).reshape(self.n_blocks, self.block_size)
        return np.einsum("cij,cj->ci", self.blocks, xb).ravel()

    def inverse_blocks(self) -> np.ndarray:
        if self._inv is None:
            try:
                inv = np.linalg.inv(self.blocks)
            except np.linalg.LinAlgError as exc:
                raise RuntimeError("singular velocity mass block") from exc
            inv.setflags(write=False)
            self._inv = inv
        return self._inv

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Exact per-block solve; the result on a cell depends only on that
        cell's entries of ``b``."""
        bb = np.asarray(b, dtype=float).reshape(self.n_blocks, self.block_size)
        return np.einsum("cij,cj->ci", self.inverse_blocks(), bb).ravel()

    def to_csr(self) -> sp.csr_matrix:
        n, b = self.n_blocks, self.block_size
        mat = sp.bsr_matrix((self.blocks, np.arange(n), np.arange(n + 1)),
                            shape=self.shape)
        return mat.tocsr()

    def inverse_to_csr(self) -> sp.csr_matrix:
        n, b = self.n_blocks, self.block_size
        mat = sp.bsr_matrix((self.inverse_blocks(), np.arange(n), np.arange(n + 1)),
                            shape=self.shape)
        return mat.tocsr()


@dataclass
class AssembledOperators:
    """Global matrices and boundary vectors of the semi-discrete system."""

    dim: int
    dofs: DofMap
    u_mass: BlockDiagonalMatrix
    h_mass: sp.csr_matrix
    grad: tuple                 # d sparse matrices, shape (m_u, m_h)
    dirichlet_rhs: tuple        # d vectors of length m_u
    neumann_rhs: np.ndarray     # length m_h
    _h_factor: object = field(default=None, repr=False, compare=False)

    def h_mass_solver(self):
        """Cached factorization of the scalar mass matrix."""
        if self._h_factor is None:
            self._h_factor = spla.factorized(self.h_mass.tocsc())
        return self._h_factor


def _cell_jacobians(mesh: Mesh):
    """Batched inverse Jacobians and volume scale factors of the affine maps."""
    X = mesh.cell_coords
    J = np.transpose(X[:, 1:, :] - X[:, :1, :], (0, 2, 1))
    det = mesh.cell_measures * factorial(mesh.dim)
    Jinv = np.linalg.inv(J)
    return Jinv, det


def _barycentric_on_cell(corners: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of physical points w.r.t. a simplex."""
    d1 = corners.shape[0]
    A = np.vstack([np.ones(d1), corners.T])
    rhs = np.vstack([np.ones(len(points)), points.T])
    return np.linalg.solve(A, rhs).T


def _facet_quadrature(mesh: Mesh, k: int):
    """Physical quadrature points/weights on boundary facet ``k`` plus the
    owning cell and its outward unit normal."""
    cell, coords, normal, measure = mesh.boundary_facet_geometry(k)
    if mesh.dim == 1:
        return cell, coords, np.ones(1), normal
    rule = quadrature(mesh.dim - 1, QUAD_DEGREE)
    pts = rule.points @ coords
    w = rule.weights * (measure / rule.weights.sum())
    return cell, pts, w, normal


def assemble(mesh: Mesh, dofs: DofMap, bc: BcSpec) -> AssembledOperators:
    """Assemble all global operators for a mesh and boundary assignment.

    Every marker in ``bc`` must be present on the mesh boundary and every
    boundary marker must be assigned to one of the two sets.
    """
    present = set(np.unique(mesh.boundary_markers).tolist())
    declared = set(bc.dirichlet_markers) | set(bc.neumann_markers)
    if declared - present:
        raise ValueError(f"markers {sorted(declared - present)} not on mesh boundary")
    if present - declared:
        raise ValueError(f"boundary markers {sorted(present - declared)} not "
                         "assigned to either condition")

    d = mesh.dim
    p1 = reference_element(d, P1_DG)
    p2 = reference_element(d, P2_CG)
    rule = quadrature(d, QUAD_DEGREE)
    v1, _ = tabulate(p1, rule.points)
    v2, g2 = tabulate(p2, rule.points)

    Jinv, det = _cell_jacobians(mesh)

    # Affine cells: both mass matrices are the reference ones scaled by det.
    mu_ref = np.einsum("q,qa,qb->ab", rule.weights, v1, v1)
    mh_ref = np.einsum("q,qa,qb->ab", rule.weights, v2, v2)
    u_mass = BlockDiagonalMatrix(det[:, None, None] * mu_ref)
    mh_cells = det[:, None, None] * mh_ref

    # Volume gradient term: contract the reference tensor with each cell's
    # inverse Jacobian (d(basis)/dx_i = d(basis)/dxi_k * Jinv[k, i]).
    grad_ref = np.einsum("q,qa,qbk->abk", rule.weights, v1, g2)
    grad_cells = det[:, None, None, None] * np.einsum("abk,cki->cabi", grad_ref, Jinv)

    m_u, m_h = dofs.m_u, dofs.m_h
    hd = dofs.h_cell_dofs
    ud = dofs.u_cell_dofs
    n1, n2 = p1.n_local, p2.n_local

    mh_rows = np.repeat(hd, n2, axis=1).ravel()
    mh_cols = np.tile(hd, (1, n2)).ravel()
    h_mass = sp.coo_matrix((mh_cells.ravel(), (mh_rows, mh_cols)),
                           shape=(m_h, m_h)).tocsr()

    g_rows = np.repeat(ud, n2, axis=1).ravel()
    g_cols = np.tile(hd, (1, n1)).ravel()
    grad_entries = [
        [grad_cells[:, :, :, i].ravel()] for i in range(d)
    ]
    grad_rows = [g_rows]
    grad_cols = [g_cols]

    dirichlet_rhs = [np.zeros(m_u) for _ in range(d)]
    neumann_rhs = np.zeros(m_h)

    for k in range(len(mesh.boundary_facets)):
        marker = int(mesh.boundary_markers[k])
        cell, pts, w, normal = _facet_quadrature(mesh, k)
        lam = _barycentric_on_cell(mesh.cell_coords[cell], pts)
        fv1, _ = tabulate(p1, lam)
        fv2, _ = tabulate(p2, lam)
        if marker in bc.dirichlet_markers:
            block = np.einsum("q,qa,qb->ab", w, fv1, fv2)
            rows = np.repeat(ud[cell], n2)
            cols = np.tile(hd[cell], n1)
            gvals = np.array([float(bc.g(x)) for x in pts])
            gvec = np.einsum("q,qa->a", w * gvals, fv1)
            for i in range(d):
                grad_entries[i].append((-normal[i] * block).ravel())
                dirichlet_rhs[i][ud[cell]] += normal[i] * gvec
            grad_rows.append(rows)
            grad_cols.append(cols)
        else:
            fvals = np.array([float(bc.f(x)) for x in pts])
            neumann_rhs[hd[cell]] += np.einsum("q,qb->b", w * fvals, fv2)

    rows = np.concatenate(grad_rows)
    cols = np.concatenate(grad_cols)
    grad = tuple(
        sp.coo_matrix((np.concatenate(grad_entries[i]), (rows, cols)),
                      shape=(m_u, m_h)).tocsr()
        for i in range(d)
    )

    return AssembledOperators(
        dim=d, dofs=dofs, u_mass=u_mass, h_mass=h_mass, grad=grad,
        dirichlet_rhs=tuple(dirichlet_rhs), neumann_rhs=neumann_rhs)


def assemble_divergence(mesh: Mesh, dofs: DofMap, bc: BcSpec) -> tuple:
    """Assemble the scalar-equation operators directly from their own weak
    integrals (test gradient against velocity, minus the Dirichlet facet
    term). By the structure of the weak form these must equal the
    transposed gradient matrices entrywise; assembling them independently
    gives a cross-check of the facet machinery.
    """
    d = mesh.dim
    p1 = reference_element(d, P1_DG)
    p2 = reference_element(d, P2_CG)
    rule = quadrature(d, QUAD_DEGREE)
    v1, _ = tabulate(p1, rule.points)
    v2, g2 = tabulate(p2, rule.points)
    Jinv, det = _cell_jacobians(mesh)

    div_ref = np.einsum("q,qbk,qa->bak", rule.weights, g2, v1)
    div_cells = det[:, None, None, None] * np.einsum("bak,cki->cbai", div_ref, Jinv)

    n1, n2 = p1.n_local, p2.n_local
    hd, ud = dofs.h_cell_dofs, dofs.u_cell_dofs
    rows = [np.repeat(hd, n1, axis=1).ravel()]
    cols = [np.tile(ud, (1, n2)).ravel()]
    entries = [[div_cells[:, :, :, i].ravel()] for i in range(d)]

    for k in range(len(mesh.boundary_facets)):
        if int(mesh.boundary_markers[k]) not in bc.dirichlet_markers:
            continue
        cell, pts, w, normal = _facet_quadrature(mesh, k)
        lam = _barycentric_on_cell(mesh.cell_coords[cell], pts)
        fv1, _ = tabulate(p1, lam)
        fv2, _ = tabulate(p2, lam)
        block = np.einsum("q,qb,qa->ba", w, fv2, fv1)
        rows.append(np.repeat(hd[cell], n1))
        cols.append(np.tile(ud[cell], n2))
        for i in range(d):
            entries[i].append((-normal[i] * block).ravel())

    r = np.concatenate(rows)
    c = np.concatenate(cols)
    return tuple(
        sp.coo_matrix((np.concatenate(entries[i]), (r, c)),
                      shape=(dofs.m_h, dofs.m_u)).tocsr()
        for i in range(d)
    )


def apply_u_mass_inverse(u_mass: BlockDiagonalMatrix, vector: np.ndarray) -> np.ndarray:
    """Apply the inverse of the velocity mass matrix, cell block by cell
    block; no global solve and no lumping."""
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (u_mass.shape[0],):
        raise ValueError(f"expected vector of length {u_mass.shape[0]}")
    return u_mass.solve(vector)


def semidiscrete_rhs(ops: AssembledOperators, u_components, h: np.ndarray):
    """Right-hand sides of the semi-discrete equations (before the mass
    solves): ``-grad_i h - dirichlet_rhs_i`` per velocity component and
    ``sum_i grad_i^T u_i - neumann_rhs`` for the scalar."""
    h = np.asarray(h, dtype=float)
    if h.shape != (ops.dofs.m_h,):
        raise ValueError(f"expected scalar vector of length {ops.dofs.m_h}")
    if len(u_components) != ops.dim:
        raise ValueError(f"expected {ops.dim} velocity components")
    du = []
    dh = -ops.neumann_rhs.copy()
    for i in range(ops.dim):
        u_i = np.asarray(u_components[i], dtype=float)
        if u_i.shape != (ops.dofs.m_u,):
            raise ValueError(f"expected velocity vectors of length {ops.dofs.m_u}")
        du.append(-(ops.grad[i] @ h) - ops.dirichlet_rhs[i])
        dh += ops.grad[i].T @ u_i
    return du, dh


def export_matrix_market(ops: AssembledOperators, directory):
    """Write the assembled matrices in Matrix Market coordinate format."""
    import os

    os.makedirs(directory, exist_ok=True)
    written = []
    targets = {"u_mass": ops.u_mass.to_csr(), "h_mass": ops.h_mass}
    for i, mat in enumerate(ops.grad):
        targets[f"grad_{'xyz'[i]}"] = mat
    for name, mat in targets.items():
        path = os.path.join(directory, f"{name}.mtx")
        scipy.io.mmwrite(path, mat.tocoo())
        written.append(path)
    return written
