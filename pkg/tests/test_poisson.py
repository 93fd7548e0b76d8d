# tests/test_poisson.py

import numpy as np
import pytest

from vortexlab.grid import Params, build_grid, integrate
from vortexlab.poisson import (
    EdgeFlux,
    bilinear_current,
    divergence_rhs,
    poisson_solver,
    solve_divform,
    solve_phi0,
    supercurrent,
)


def test_phi0_is_linear_with_full_side_leads(full_leads):
    grid = build_grid(full_leads, 17, 13)
    X, _ = grid.mesh
    np.testing.assert_allclose(solve_phi0(grid), -X, atol=1e-10)


def test_phi0_symmetries(grid):
    phi0 = solve_phi0(grid)
    np.testing.assert_allclose(phi0[::-1, :], -phi0, atol=1e-12)
    np.testing.assert_allclose(phi0[:, ::-1], phi0, atol=1e-12)
    assert abs(integrate(phi0, grid)) < 1e-12
    # Current enters at x = -L, so the potential drops from left to right
    i0, j0 = grid.center
    assert phi0[0, j0] > 0 > phi0[-1, j0]


def test_phi0_is_cached_and_read_only(grid):
    phi0 = solve_phi0(grid)
    assert solve_phi0(grid) is phi0
    with pytest.raises(ValueError):
        phi0[0, 0] = 1.0


def test_phi0_rejects_mismatched_geometry(grid):
    with pytest.raises(ValueError):
        solve_phi0(grid, Params(delta=1.0 / 6.0))


def test_uniform_flux_gives_zero_potential(grid):
    phi = solve_divform(grid, EdgeFlux.uniform(grid, 0.7, -1.3))
    np.testing.assert_allclose(phi, 0.0, atol=1e-12)


def test_random_flux_solve(grid, rng):
    flux = EdgeFlux(
        rng.standard_normal((grid.nx - 1, grid.ny)),
        rng.standard_normal((grid.nx, grid.ny - 1)),
    )
    phi = solve_divform(grid, flux)
    assert poisson_solver(grid).residual(phi, divergence_rhs(flux, grid)) < 1e-10
    assert abs(integrate(phi, grid)) < 1e-12


def test_complex_flux_splits_into_parts(grid, rng):
    fr = EdgeFlux(rng.standard_normal((grid.nx - 1, grid.ny)), rng.standard_normal((grid.nx, grid.ny - 1)))
    fi = EdgeFlux(rng.standard_normal((grid.nx - 1, grid.ny)), rng.standard_normal((grid.nx, grid.ny - 1)))
    combined = solve_divform(grid, fr + fi.scaled(1j))
    np.testing.assert_allclose(combined, solve_divform(grid, fr) + 1j * solve_divform(grid, fi), atol=1e-12)


def test_edge_flux_shape_check(grid):
    with pytest.raises(ValueError):
        EdgeFlux(np.zeros((3, 3)), np.zeros((grid.nx, grid.ny - 1))).check(grid)


def test_bilinear_current_reduces_to_supercurrent(grid, rng):
    u = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    h = 4.0
    b = bilinear_current(u, u, grid, h)
    s = supercurrent(u, grid, h)
    np.testing.assert_allclose(b.fx, s.fx, atol=1e-12)
    np.testing.assert_allclose(b.fy, s.fy, atol=1e-12)


def test_bilinear_current_is_sesquilinear(grid, rng):
    a = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    b = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    h = 2.5
    ab = bilinear_current(a, b, grid, h)
    ba = bilinear_current(b, a, grid, h)
    np.testing.assert_allclose(ab.fx, np.conj(ba.fx), atol=1e-12)

    alpha, beta = 0.3 - 1.1j, 0.8 + 0.4j
    whole = supercurrent(alpha * a + beta * b, grid, h)
    expanded = (
        bilinear_current(a, a, grid, h).scaled(abs(alpha) ** 2)
        + ab.scaled(alpha * np.conj(beta))
        + ba.scaled(np.conj(alpha) * beta)
        + bilinear_current(b, b, grid, h).scaled(abs(beta) ** 2)
    )
    np.testing.assert_allclose(expanded.fx, whole.fx, atol=1e-10)
    np.testing.assert_allclose(expanded.fy, whole.fy, atol=1e-10)


def test_real_field_carries_no_current_without_field(grid, rng):
    u = rng.standard_normal(grid.shape)
    s = supercurrent(u, grid, 0.0)
    np.testing.assert_allclose(s.fx, 0.0, atol=1e-14)
    np.testing.assert_allclose(s.fy, 0.0, atol=1e-14)
