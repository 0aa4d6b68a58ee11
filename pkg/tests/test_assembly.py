import numpy as np
import pytest
import scipy.io

import wavefem as wf
from wavefem.assembly import (apply_u_mass_inverse, assemble,
                              assemble_divergence, export_matrix_market,
                              semidiscrete_rhs)

from conftest import assemble_all

# 1D element matrices in spatial node order (left vertex, midpoint, right
# vertex); the P2 DOF order is (left, right, midpoint), permutation below.
C_LOCAL = np.array([[-5.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
                    [-1.0 / 6.0, -2.0 / 3.0, 5.0 / 6.0]])
MU_LOCAL = np.array([[1.0 / 3.0, 1.0 / 6.0],
                     [1.0 / 6.0, 1.0 / 3.0]])
MH_LOCAL = np.array([[2.0 / 15.0, 1.0 / 15.0, -1.0 / 30.0],
                     [1.0 / 15.0, 8.0 / 15.0, 1.0 / 15.0],
                     [-1.0 / 30.0, 1.0 / 15.0, 2.0 / 15.0]])
SPATIAL_ORDER = [0, 2, 1]


def one_element_ops(dx):
    mesh = wf.generate_interval_mesh(1, dx)
    dofs = wf.build_dof_maps(mesh)
    ops = assemble(mesh, dofs, wf.BcSpec.all_neumann(mesh))
    return ops


@pytest.mark.parametrize("dx", [1.0, 2.0])
def test_local_1d_matrices(dx):
    ops = one_element_ops(dx)
    c = ops.grad[0].toarray()[:, SPATIAL_ORDER]
    mh = ops.h_mass.toarray()[np.ix_(SPATIAL_ORDER, SPATIAL_ORDER)]
    assert np.abs(c - C_LOCAL).max() <= 1e-14
    assert np.abs(ops.u_mass.blocks[0] - dx * MU_LOCAL).max() <= 1e-14
    assert np.abs(mh - dx * MH_LOCAL).max() <= 1e-14


def test_scaling_1d():
    # scaling the element stretches both mass matrices, not the gradient
    ops1 = one_element_ops(1.0)
    ops3 = one_element_ops(3.0)
    assert np.allclose(ops3.u_mass.blocks[0], 3.0 * ops1.u_mass.blocks[0])
    assert np.allclose(ops3.h_mass.toarray(), 3.0 * ops1.h_mass.toarray())
    assert np.allclose(ops3.grad[0].toarray(), ops1.grad[0].toarray())


def test_gradient_of_constant_is_zero(square_150, cube_200):
    for mesh in (square_150, cube_200, wf.generate_interval_mesh(5, 2.0)):
        dofs, ops = assemble_all(mesh, "neumann")
        ones = np.ones(dofs.m_h)
        for g in ops.grad:
            assert np.abs(g @ ones).max() <= 1e-13


def test_h_mass_total_is_domain_area(square_150):
    _, ops = assemble_all(square_150, "neumann")
    assert abs(ops.h_mass.sum() - 1.0) <= 1e-12


def test_h_mass_positive_definite(square_36):
    _, ops = assemble_all(square_36, "dirichlet")
    vals = np.linalg.eigvalsh(ops.h_mass.toarray())
    assert vals.min() > 0


def test_h_mass_symmetric(cube_44):
    _, ops = assemble_all(cube_44, "neumann")
    asym = (ops.h_mass - ops.h_mass.T)
    assert abs(asym).max() <= 1e-14 * abs(ops.h_mass).max()


@pytest.mark.parametrize("bc_kind", ["neumann", "dirichlet"])
def test_adjointness(square_36, bc_kind):
    # the scalar-side operator assembled from its own integrals must be
    # the exact transpose of the gradient matrices
    mesh = square_36
    dofs = wf.build_dof_maps(mesh)
    bc = (wf.BcSpec.all_neumann(mesh) if bc_kind == "neumann"
          else wf.BcSpec.all_dirichlet(mesh))
    ops = assemble(mesh, dofs, bc)
    div = assemble_divergence(mesh, dofs, bc)
    for i in range(mesh.dim):
        diff = abs(div[i] - ops.grad[i].T)
        scale = abs(ops.grad[i]).max()
        assert diff.max() <= 1e-13 * scale


def test_adjointness_3d(cube_44):
    dofs = wf.build_dof_maps(cube_44)
    bc = wf.BcSpec.all_dirichlet(cube_44)
    ops = assemble(cube_44, dofs, bc)
    div = assemble_divergence(cube_44, dofs, bc)
    for i in range(3):
        assert abs(div[i] - ops.grad[i].T).max() <= 1e-13 * abs(ops.grad[i]).max()


def test_dirichlet_facet_term_vs_boundary_data(square_150):
    # with g == 1, the facet part of the gradient applied to the constant
    # scalar equals minus the assembled boundary vector
    mesh = square_150
    dofs = wf.build_dof_maps(mesh)
    ops = assemble(mesh, dofs, wf.BcSpec.all_dirichlet(mesh, g=lambda x: 1.0))
    ones = np.ones(dofs.m_h)
    for i in range(mesh.dim):
        assert np.abs(ops.grad[i] @ ones + ops.dirichlet_rhs[i]).max() <= 1e-13


def test_u_mass_inverse_roundtrip(square_36):
    dofs, ops = assemble_all(square_36)
    rng = np.random.default_rng(3)
    x = rng.standard_normal(dofs.m_u)
    back = apply_u_mass_inverse(ops.u_mass, ops.u_mass.matvec(x))
    assert np.abs(back - x).max() <= 1e-12 * np.abs(x).max()


def test_u_mass_inverse_block_1d():
    ops = one_element_ops(1.0)
    inv = ops.u_mass.inverse_blocks()[0]
    assert np.abs(inv - np.array([[4.0, -2.0], [-2.0, 4.0]])).max() <= 1e-12


def test_u_mass_inverse_block_locality(square_36):
    dofs, ops = assemble_all(square_36)
    rng = np.random.default_rng(4)
    x = rng.standard_normal(dofs.m_u)
    y = ops.u_mass.solve(x)
    x2 = x.copy()
    x2[dofs.u_cell_dofs[7]] += 1.0
    y2 = ops.u_mass.solve(x2)
    changed = np.nonzero(np.abs(y2 - y) > 1e-14)[0]
    assert set(changed.tolist()) <= set(dofs.u_cell_dofs[7].tolist())


def test_semidiscrete_rhs_zero_state(square_36):
    dofs, ops = assemble_all(square_36)
    du, dh = semidiscrete_rhs(ops, [np.zeros(dofs.m_u)] * 2, np.zeros(dofs.m_h))
    assert all(np.abs(v).max() == 0.0 for v in du)
    assert np.abs(dh).max() == 0.0


def test_constant_scalar_exerts_no_force(square_150):
    dofs, ops = assemble_all(square_150, "neumann")
    du, _ = semidiscrete_rhs(ops, [np.zeros(dofs.m_u)] * 2,
                             3.7 * np.ones(dofs.m_h))
    for v in du:
        assert np.abs(v).max() <= 1e-13


def test_periodic_stencil_rows():
    # assembled rows on a uniform periodic grid must reproduce the
    # hand-derived stencil: midpoint mass row dx/30*(2, 16, 2) and
    # divergence row (4, -4)/6
    n, length = 8, 8.0  # dx = 1
    mesh = wf.generate_interval_mesh(n, length, periodic=True)
    dofs = wf.build_dof_maps(mesh)
    ops = assemble(mesh, dofs, wf.BcSpec())
    cell = 3
    mid = dofs.h_cell_dofs[cell, 2]
    left, right = dofs.h_cell_dofs[cell, 0], dofs.h_cell_dofs[cell, 1]
    row = ops.h_mass[mid].toarray().ravel()
    assert abs(row[mid] - 16.0 / 30.0) <= 1e-14
    assert abs(row[left] - 2.0 / 30.0) <= 1e-14
    assert abs(row[right] - 2.0 / 30.0) <= 1e-14
    div_row = ops.grad[0].T[mid].toarray().ravel()
    u_plus, u_minus = dofs.u_cell_dofs[cell]
    assert abs(div_row[u_plus] - 4.0 / 6.0) <= 1e-14
    assert abs(div_row[u_minus] + 4.0 / 6.0) <= 1e-14
    # vertex-equation coupling: (1, 5, -5, -1)/6 over the four flanking DOFs
    vrow = ops.grad[0].T[left].toarray().ravel()
    prev_plus, prev_minus = dofs.u_cell_dofs[cell - 1]
    assert abs(vrow[prev_plus] - 1.0 / 6.0) <= 1e-14
    assert abs(vrow[prev_minus] - 5.0 / 6.0) <= 1e-14
    assert abs(vrow[u_plus] + 5.0 / 6.0) <= 1e-14
    assert abs(vrow[u_minus] + 1.0 / 6.0) <= 1e-14


def test_assembly_deterministic(square_36):
    dofs = wf.build_dof_maps(square_36)
    bc = wf.BcSpec.all_dirichlet(square_36)
    a = assemble(square_36, dofs, bc)
    b = assemble(square_36, dofs, bc)
    assert np.array_equal(a.h_mass.data, b.h_mass.data)
    assert np.array_equal(a.grad[0].data, b.grad[0].data)
    assert np.array_equal(a.u_mass.blocks, b.u_mass.blocks)


def test_unknown_marker_rejected(square_150):
    dofs = wf.build_dof_maps(square_150)
    with pytest.raises(ValueError, match="not on mesh boundary"):
        assemble(square_150, dofs, wf.BcSpec(dirichlet_markers={9},
                                             neumann_markers={1}))
    with pytest.raises(ValueError, match="not\\s+assigned"):
        assemble(square_150, dofs, wf.BcSpec())


def test_neumann_data_vector():
    # f == 1 on the whole boundary integrates the P2 trace: the entries
    # must sum to the boundary length
    mesh = wf.generate_square_mesh(2)
    dofs = wf.build_dof_maps(mesh)
    ops = assemble(mesh, dofs, wf.BcSpec.all_neumann(mesh, f=lambda x: 1.0))
    assert abs(ops.neumann_rhs.sum() - 4.0) <= 1e-13


def test_matrix_market_export(tmp_path, square_36):
    _, ops = assemble_all(square_36)
    paths = export_matrix_market(ops, str(tmp_path))
    assert len(paths) == 4
    back = scipy.io.mmread(str(tmp_path / "h_mass.mtx"))
    assert np.abs((back - ops.h_mass)).max() <= 1e-15
