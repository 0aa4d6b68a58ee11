from math import factorial

import numpy as np
import pytest

import wavefem as wf
from wavefem.elements import (P1_DG, P2_CG, build_dof_maps, eval_basis,
                              h_dof_coords, quadrature, reference_element,
                              tabulate)


def random_interior_points(dim, n, rng):
    """Barycentric coordinates strictly inside the reference simplex."""
    x = rng.dirichlet(np.ones(dim + 1) * 2.0, size=n)
    return x


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("family", [P1_DG, P2_CG])
def test_partition_of_unity_and_gradient_sum(dim, family):
    elem = reference_element(dim, family)
    rng = np.random.default_rng(42 + dim)
    pts = random_interior_points(dim, 50, rng)
    vals, grads = tabulate(elem, pts)
    assert np.abs(vals.sum(axis=1) - 1.0).max() <= 1e-13
    assert np.abs(grads.sum(axis=1)).max() <= 1e-13


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("family", [P1_DG, P2_CG])
def test_kronecker_at_nodes(dim, family):
    elem = reference_element(dim, family)
    vals, _ = tabulate(elem, elem.node_coords)
    assert np.abs(vals - np.eye(elem.n_local)).max() <= 1e-13


def test_p2_vertex_values():
    elem = reference_element(2, P2_CG)
    vals, _ = eval_basis(elem, (1.0, 0.0, 0.0))
    assert np.allclose(vals, [1, 0, 0, 0, 0, 0], atol=1e-14)


def test_p1_interval_midpoint():
    elem = reference_element(1, P1_DG)
    vals, _ = eval_basis(elem, (0.5, 0.5))
    assert np.allclose(vals, [0.5, 0.5])


def test_eval_basis_outside_raises():
    elem = reference_element(2, P2_CG)
    with pytest.raises(ValueError, match="outside"):
        eval_basis(elem, (1.2, -0.2, 0.0))


def simplex_monomial_integral(exponents):
    """Closed-form integral of prod(x_i^a_i) over the unit simplex."""
    a = list(exponents)
    num = 1
    for e in a:
        num *= factorial(e)
    return num / factorial(sum(a) + len(a))


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5, 6])
def test_quadrature_exactness(dim, degree):
    rule = quadrature(dim, degree)
    xyz = rule.points[:, 1:]  # reference coordinates
    for exps in np.ndindex(*([degree + 1] * dim)):
        if sum(exps) > degree:
            continue
        approx = float(rule.weights @ np.prod(xyz ** np.array(exps), axis=1))
        exact = simplex_monomial_integral(exps)
        assert abs(approx - exact) <= 1e-13 * max(1.0, abs(exact))


def test_quadrature_weight_sums():
    assert abs(quadrature(2, 1).weights.sum() - 0.5) <= 1e-15
    assert abs(quadrature(3, 1).weights.sum() - 1.0 / 6.0) <= 1e-16


def test_quadrature_x2y2():
    rule = quadrature(2, 4)
    xy = rule.points[:, 1:]
    val = float(rule.weights @ (xy[:, 0] ** 2 * xy[:, 1] ** 2))
    assert abs(val - 1.0 / 180.0) <= 1e-16


def test_quadrature_unsupported():
    with pytest.raises(ValueError):
        quadrature(2, 7)
    with pytest.raises(ValueError):
        quadrature(4, 2)


def test_dof_counts_1d():
    mesh = wf.generate_interval_mesh(4, 1.0)
    assert wf.count_dofs(mesh) == (8, 9)
    mesh = wf.generate_interval_mesh(4, 1.0, periodic=True)
    assert wf.count_dofs(mesh) == (8, 8)


def test_dof_counts_2d_paper_mesh(square_36):
    # 36 triangles, 24 vertices, 61 edges
    assert wf.count_dofs(square_36) == (108, 85)


def test_dof_counts_3d_paper_mesh(cube_44):
    # 44 tets, 26 vertices, 93 edges
    assert wf.count_dofs(cube_44) == (176, 119)


def test_dof_map_invariants(square_150):
    dofs = build_dof_maps(square_150)
    # velocity DOFs partition [0, m_u)
    flat = dofs.u_cell_dofs.ravel()
    assert np.array_equal(np.sort(flat), np.arange(dofs.m_u))
    # scalar map is continuous: shared edges reference the same global DOF
    mesh = square_150
    edge_index = {tuple(e): mesh.n_vertices + i for i, e in enumerate(mesh.edges)}
    for c in range(mesh.n_cells):
        cell = mesh.cells[c]
        assert np.array_equal(dofs.h_cell_dofs[c, :3], cell)
        for k, (a, b) in enumerate([(0, 1), (0, 2), (1, 2)]):
            key = tuple(sorted((cell[a], cell[b])))
            assert dofs.h_cell_dofs[c, 3 + k] == edge_index[key]
    assert dofs.m_h == mesh.n_vertices + mesh.n_edges


def test_dof_ratio_trends():
    # 2D: ratio of velocity to scalar DOFs climbs toward 1.5
    ratios2 = []
    for n in (4, 8, 16, 32, 64):
        mu, mh = wf.count_dofs(wf.generate_square_mesh(n))
        ratios2.append(mu / mh)
    assert all(b > a for a, b in zip(ratios2, ratios2[1:]))
    assert abs(ratios2[-1] - 1.5) / 1.5 <= 0.05
    # 3D: climbs toward 2.5
    ratios3 = []
    for n in (1, 2, 4, 8):
        mu, mh = wf.count_dofs(wf.generate_cube_mesh(n))
        ratios3.append(mu / mh)
    assert all(b > a for a, b in zip(ratios3, ratios3[1:]))
    assert abs(ratios3[-1] - 2.5) / 2.5 <= 0.05


def test_h_dof_coords_midpoints():
    mesh = wf.generate_square_mesh(1)
    dofs = build_dof_maps(mesh)
    coords = h_dof_coords(mesh, dofs)
    assert np.array_equal(coords[:4], mesh.vertices)
    mids = mesh.vertices[mesh.edges].mean(axis=1)
    assert np.allclose(coords[4:], mids)
