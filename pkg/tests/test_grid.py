# tests/test_grid.py

import logging

import numpy as np
import pytest

from vortexlab.grid import (
    Params,
    bc_residual,
    build_grid,
    covariant_laplacian,
    integrate,
    laplacian_matrix,
    link_phases,
    pt_partner,
    trapezoid_weights,
    validate_field,
    y_reflect,
)
from vortexlab.spectral import assemble_L


def test_params_defaults(canonical):
    assert canonical.L == 1.0
    assert canonical.K == pytest.approx(2.0 / 3.0)
    assert canonical.delta == pytest.approx(4.0 / 15.0)
    assert not canonical.full_side_leads
    assert canonical.leads_enabled


def test_params_rejects_delta_above_K():
    with pytest.raises(ValueError, match="delta must be < K"):
        Params(delta=0.9)


def test_params_gamma_and_eps_are_exclusive():
    with pytest.raises(ValueError):
        Params(gamma=1.0, eps=0.1)


def test_resolve_gamma_from_eps():
    assert Params(eps=0.5).resolve_gamma(3.0) == pytest.approx(3.5)
    assert Params(gamma=2.0).resolve_eps(1.5) == pytest.approx(0.5)


@pytest.mark.parametrize("nx, ny", [(16, 13), (17, 12), (3, 13)])
def test_build_grid_rejects_bad_counts(canonical, nx, ny):
    with pytest.raises(ValueError):
        build_grid(canonical, nx, ny)


def test_build_grid_warns_on_coarse_grid(canonical, caplog):
    with caplog.at_level(logging.WARNING):
        build_grid(canonical, 9, 13)
    assert "below the recommended" in caplog.text


def test_axes_are_symmetric(grid):
    np.testing.assert_array_equal(grid.x, -grid.x[::-1])
    np.testing.assert_array_equal(grid.y, -grid.y[::-1])
    i0, j0 = grid.center
    assert grid.x[i0] == 0.0 and grid.y[j0] == 0.0


def test_lead_nodes_canonical(grid):
    # dy = 1/9: y = 0, +-1/9, +-2/9 lie inside |y| < 4/15
    assert int(grid.lead_rows.sum()) == 5
    assert grid.dirichlet[0].sum() == 5 and grid.dirichlet[-1].sum() == 5
    assert not grid.dirichlet[1:-1].any()


def test_full_side_and_disabled_leads(full_leads, no_leads):
    g = build_grid(full_leads, 17, 5)
    assert g.dirichlet[0].all() and g.dirichlet[-1].all()
    g0 = build_grid(no_leads, 17, 13)
    assert not g0.dirichlet.any()


def test_trapezoid_integrates_constants_and_quadratics(grid):
    area = 4.0 * grid.L * grid.K
    assert integrate(np.ones(grid.shape), grid) == pytest.approx(area, rel=1e-14)
    X, _ = grid.mesh
    # Trapezoid error for x^2 is exactly dx^2/6 per unit length in x
    exact = (2.0 / 3.0) * grid.L**3 * 2.0 * grid.K
    correction = grid.dx**2 / 6.0 * 2.0 * grid.L * 2.0 * grid.K
    assert integrate(X**2, grid) == pytest.approx(exact + correction, rel=1e-12)
    assert trapezoid_weights(grid).sum() == pytest.approx(area)


def test_validate_field_checks_shape_and_finiteness(grid):
    with pytest.raises(ValueError):
        validate_field(np.zeros((3, 3)), grid)
    bad = np.zeros(grid.shape)
    bad[2, 2] = np.nan
    with pytest.raises(ValueError):
        validate_field(bad, grid)


def test_reflections(grid, rng):
    u = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    np.testing.assert_array_equal(pt_partner(pt_partner(u)), u)
    np.testing.assert_array_equal(y_reflect(u)[:, 0], u[:, -1])


def test_laplacian_matrix_matches_stencil(grid, rng):
    h = 3.0
    psi = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    from_matrix = (laplacian_matrix(grid, h) @ psi.ravel()).reshape(grid.shape)
    direct = covariant_laplacian(psi, grid, h)
    np.testing.assert_allclose(from_matrix[1:-1, 1:-1], direct[1:-1, 1:-1], rtol=1e-12, atol=1e-9)


def test_constant_is_harmonic_at_zero_field(no_leads):
    g = build_grid(no_leads, 17, 13)
    op = assemble_L(g, no_leads)
    np.testing.assert_allclose(op.apply(np.ones(g.shape)), 0.0, atol=1e-9)


def test_weighted_operator_is_hermitian_without_current(grid, canonical):
    op = assemble_L(grid, canonical.with_(h=7.5))
    S = op.stiffness.toarray()
    assert np.abs(S - S.conj().T).max() <= 1e-10 * np.abs(S).max()


def test_bc_residual_reports_lead_values(grid):
    psi = np.ones(grid.shape, dtype=complex)
    res = bc_residual(psi, grid, 0.0)
    np.testing.assert_allclose(res[grid.dirichlet], 1.0)
    np.testing.assert_allclose(res[:, 0], 0.0, atol=1e-12)


def test_covariant_laplacian_is_gauge_covariant(grid, rng):
    psi = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    g = rng.uniform(-np.pi, np.pi, grid.shape)
    ux = link_phases(grid, 3.0)
    uy = np.ones((grid.nx, grid.ny - 1), dtype=complex)
    ux_g = ux * np.exp(1j * (g[:-1, :] - g[1:, :]))
    uy_g = uy * np.exp(1j * (g[:, :-1] - g[:, 1:]))

    before = covariant_laplacian(psi, grid, 0.0, links=(ux, uy))
    after = covariant_laplacian(np.exp(1j * g) * psi, grid, 0.0, links=(ux_g, uy_g))
    np.testing.assert_allclose(after, np.exp(1j * g) * before, atol=1e-10 * np.abs(before).max())
    np.testing.assert_allclose(before, covariant_laplacian(psi, grid, 3.0), atol=1e-12 * np.abs(before).max())


def test_side_condition_residual_is_second_order(no_leads):
    """exp(-i h x y) (1 + (x^2 - L^2)^2) satisfies Psi_x + i h y Psi = 0 on x = +-L exactly."""
    h = 2.0
    errors = []
    for nx in (17, 33, 65):
        g = build_grid(no_leads, nx, 13)
        X, Y = g.mesh
        psi = np.exp(-1j * h * X * Y) * (1.0 + (X**2 - g.L**2) ** 2)
        res = bc_residual(psi, g, h)
        errors.append(np.abs(res[[0, -1], 1:-1]).max())
    assert errors[-1] < 0.01
    for coarse, fine in zip(errors, errors[1:]):
        assert 3.5 < coarse / fine < 4.5
