"""Assembly checks against straight-loop quadrature evaluators.

The evaluators below integrate each bilinear form element by element
(edge by edge) with explicit Python loops; the assembled matrices must
reproduce them as quadratic forms.
"""

import numpy as np
import pytest

from trifield.assembly import (
    assemble,
    assemble_penalty_norm_product,
    dual_pairing_matrix,
)
from trifield.femcore import (
    DualBasis,
    dual_basis_values,
    edge_quadrature,
    triangle_quadrature,
)
from trifield.mesh import all_element_geometry, build_structured_unit_square
from trifield.problems import example1, example2, linear_patch


def eval_grad_grad(mesh, x_dofs, y_dofs):
    areas, grads = all_element_geometry(mesh)
    total = 0.0
    for t, tri in enumerate(mesh.triangles):
        gu = sum(x_dofs[tri[a]] * grads[t, a] for a in range(3))
        gv = sum(y_dofs[tri[a]] * grads[t, a] for a in range(3))
        total += areas[t] * (gu @ gv)
    return total


def eval_vector_mass(mesh, x_vec, y_vec):
    nvert = mesh.num_vertices
    areas, _ = all_element_geometry(mesh)
    rule = triangle_quadrature(2)
    total = 0.0
    for t, tri in enumerate(mesh.triangles):
        for q, w in enumerate(rule.weights):
            lam = rule.points[q]
            for c in range(2):
                u = sum(x_vec[c * nvert + tri[a]] * lam[a] for a in range(3))
                v = sum(y_vec[c * nvert + tri[a]] * lam[a] for a in range(3))
                total += 2.0 * areas[t] * w * u * v
    return total


def eval_dual_vector_pairing(mesh, tau_vec, phi_vec, dual=None):
    nvert = mesh.num_vertices
    areas, _ = all_element_geometry(mesh)
    rule = triangle_quadrature(2)
    mu = dual_basis_values(rule.points, dual)
    total = 0.0
    for t, tri in enumerate(mesh.triangles):
        for q, w in enumerate(rule.weights):
            lam = rule.points[q]
            for c in range(2):
                tau = sum(tau_vec[c * nvert + tri[a]] * lam[a] for a in range(3))
                phi = sum(phi_vec[c * nvert + tri[a]] * mu[q, a] for a in range(3))
                total += 2.0 * areas[t] * w * tau * phi
    return total


def eval_grad_dual(mesh, v_dofs, phi_vec, dual=None):
    nvert = mesh.num_vertices
    areas, grads = all_element_geometry(mesh)
    rule = triangle_quadrature(2)
    mu = dual_basis_values(rule.points, dual)
    total = 0.0
    for t, tri in enumerate(mesh.triangles):
        gv = sum(v_dofs[tri[a]] * grads[t, a] for a in range(3))
        for q, w in enumerate(rule.weights):
            phi = np.array([
                sum(phi_vec[c * nvert + tri[a]] * mu[q, a] for a in range(3))
                for c in range(2)
            ])
            total += 2.0 * areas[t] * w * (gv @ phi)
    return total


def eval_boundary_flux(mesh, sigma_vec, v_dofs):
    nvert = mesh.num_vertices
    rule = edge_quadrature(3)
    total = 0.0
    for (a, b), normal, h in zip(
        mesh.boundary_edges, mesh.boundary_normal, mesh.boundary_length
    ):
        for s, w in zip(rule.points, rule.weights):
            tr = (1.0 - s, s)
            v = tr[0] * v_dofs[a] + tr[1] * v_dofs[b]
            sig = np.array([
                tr[0] * sigma_vec[c * nvert + a] + tr[1] * sigma_vec[c * nvert + b]
                for c in range(2)
            ])
            total += h * w * (sig @ normal) * v
    return total


def eval_penalty(mesh, u_dofs, v_dofs):
    rule = edge_quadrature(3)
    total = 0.0
    for (a, b), h in zip(mesh.boundary_edges, mesh.boundary_length):
        for s, w in zip(rule.points, rule.weights):
            u = (1.0 - s) * u_dofs[a] + s * u_dofs[b]
            v = (1.0 - s) * v_dofs[a] + s * v_dofs[b]
            total += (1.0 / h) * h * w * u * v
    return total


def boundary_vertex_mask(mesh):
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    return (x == 0.0) | (x == 1.0) | (y == 0.0) | (y == 1.0)


@pytest.fixture(scope="module")
def system_n3():
    mesh = build_structured_unit_square(3)
    return mesh, assemble(mesh, example2(), alpha=10.0)


def _close(got, want, tol=1e-12):
    assert abs(got - want) <= tol * max(1.0, abs(want))


def test_matrix_form_agreement(system_n3):
    mesh, blocks = system_n3
    nvert = mesh.num_vertices
    rng = np.random.default_rng(101)
    for _ in range(5):
        x = rng.standard_normal(nvert)
        y = rng.standard_normal(nvert)
        xv = rng.standard_normal(2 * nvert)
        yv = rng.standard_normal(2 * nvert)

        _close(x @ blocks.S.to_scipy() @ y, eval_grad_grad(mesh, x, y))
        _close(xv @ blocks.M.to_scipy() @ yv, eval_vector_mass(mesh, xv, yv))
        _close(xv @ (blocks.D * yv), eval_dual_vector_pairing(mesh, xv, yv))
        _close(x @ blocks.A.to_scipy() @ xv, eval_boundary_flux(mesh, xv, x))
        _close(x @ blocks.B.to_scipy() @ yv, eval_grad_dual(mesh, x, yv))
        _close(x @ blocks.C.to_scipy() @ y, eval_penalty(mesh, x, y))


def test_symmetry_and_row_sums(system_n3):
    _, blocks = system_n3
    for mat in (blocks.S, blocks.M, blocks.C):
        dense = mat.to_dense()
        scale = np.abs(dense).max()
        assert np.abs(dense - dense.T).max() <= 1e-13 * scale
    assert np.abs(blocks.S.to_scipy().sum(axis=1)).max() < 1e-12


def test_stiffness_and_mass_positive_semidefinite(system_n3):
    _, blocks = system_n3
    for mat in (blocks.S, blocks.M):
        eigs = np.linalg.eigvalsh(mat.to_dense())
        assert eigs.min() >= -1e-12 * max(1.0, eigs.max())


def test_boundary_structure(system_n3):
    mesh, blocks = system_n3
    interior = ~boundary_vertex_mask(mesh)
    c_dense = blocks.C.to_dense()
    assert np.all(c_dense[interior, :] == 0.0)
    assert np.all(c_dense[:, interior] == 0.0)
    a_dense = blocks.A.to_dense()
    assert np.all(a_dense[interior, :] == 0.0)


def test_dual_pairing_diagonal_value(system_n3):
    mesh, blocks = system_n3
    nvert = mesh.num_vertices
    areas, _ = all_element_geometry(mesh)
    want = np.zeros(nvert)
    for t, tri in enumerate(mesh.triangles):
        for a in range(3):
            want[tri[a]] += areas[t] / 3.0
    assert np.all(blocks.D > 0.0)
    np.testing.assert_allclose(blocks.D[:nvert], want, rtol=1e-13)
    np.testing.assert_allclose(blocks.D[nvert:], want, rtol=1e-13)


@pytest.mark.parametrize("n", [2, 8])
def test_biorthogonality_of_assembled_pairing(n):
    mesh = build_structured_unit_square(n)
    pairing = dual_pairing_matrix(mesh).to_dense()
    diag = np.diag(pairing).copy()
    off = pairing - np.diag(diag)
    assert np.abs(off).max() <= 1e-13

    areas, _ = all_element_geometry(mesh)
    want = np.zeros(mesh.num_vertices)
    for t, tri in enumerate(mesh.triangles):
        want[tri] += areas[t] / 3.0
    np.testing.assert_allclose(diag, want, rtol=1e-13)


def test_scaled_dual_basis_scales_pairing():
    mesh = build_structured_unit_square(2)
    base = dual_pairing_matrix(mesh).to_dense()
    scaled = dual_pairing_matrix(mesh, dual=DualBasis().scaled(7.0)).to_dense()
    np.testing.assert_allclose(scaled, 7.0 * base, rtol=1e-14)


def test_zero_data_gives_zero_loads():
    mesh = build_structured_unit_square(1)
    blocks = assemble(mesh, linear_patch(0.0, 0.0, 0.0), alpha=10.0)
    np.testing.assert_array_equal(blocks.f1, 0.0)
    np.testing.assert_array_equal(blocks.f2, 0.0)


def test_homogeneous_dirichlet_gives_zero_f2():
    mesh = build_structured_unit_square(2)
    blocks = assemble(mesh, example1(), alpha=10.0)
    np.testing.assert_array_equal(blocks.f2, 0.0)


def test_penalty_norm_product_closed_forms():
    mesh = build_structured_unit_square(2)
    ones = np.ones(mesh.num_vertices)
    assert abs(assemble_penalty_norm_product(mesh, ones, ones) - 8.0) < 1e-13
    zero = np.zeros(mesh.num_vertices)
    assert assemble_penalty_norm_product(mesh, zero, ones) == 0.0


def test_penalty_norm_product_matches_matrix(system_n3):
    mesh, blocks = system_n3
    rng = np.random.default_rng(55)
    for _ in range(5):
        u = rng.standard_normal(mesh.num_vertices)
        v = rng.standard_normal(mesh.num_vertices)
        got = assemble_penalty_norm_product(mesh, u, v)
        want = u @ blocks.C.to_scipy() @ v
        assert abs(got - want) <= 1e-13 * max(1.0, abs(want))


def test_penalty_norm_product_rejects_bad_shapes():
    mesh = build_structured_unit_square(2)
    with pytest.raises(ValueError):
        assemble_penalty_norm_product(mesh, np.ones(3), np.ones(mesh.num_vertices))


def test_constant_flux_closed_boundary_identity(system_n3):
    # sigma = (1, 0), v = 1: the pairing is the integral of n_x over a
    # closed curve, which vanishes
    mesh, blocks = system_n3
    nvert = mesh.num_vertices
    sigma = np.concatenate([np.ones(nvert), np.zeros(nvert)])
    ones = np.ones(nvert)
    assert abs(ones @ blocks.A.to_scipy() @ sigma) <= 1e-12


def test_assemble_rejects_negative_alpha():
    mesh = build_structured_unit_square(1)
    with pytest.raises(ValueError):
        assemble(mesh, example1(), alpha=-1.0)
