# tests/test_spectral.py

import numpy as np
import pytest

from vortexlab.errors import InvalidBracketError
from vortexlab.grid import build_grid, pt_partner
from vortexlab.poisson import solve_phi0
from vortexlab.spectral import (
    _dense_eigs,
    assemble_L,
    biorthogonality_matrix,
    conjugation_gap,
    find_Ic,
    leading_eigenpairs,
    rayleigh_quotient,
    solve_point,
    spectral_bounds,
    track_branches,
)


@pytest.fixture(scope="module")
def driven(canonical):
    """h = 5, I = 10 on the 17 x 13 canonical grid."""
    params = canonical.with_(h=5.0, I=10.0)
    op, pairs = solve_point(params, 17, 13, 4, method="dense")
    return params, op, pairs


# --- Separable oracle ---

@pytest.mark.parametrize("method", ["dense", "arnoldi"])
def test_separable_ground_state(full_leads, method):
    grid = build_grid(full_leads, 17, 5)
    op = assemble_L(grid, full_leads)
    assert op.size == 15 * 5
    pairs = leading_eigenpairs(op, 2, method=method)
    expected = (2.0 - 2.0 * np.cos(np.pi * grid.dx / (2.0 * grid.L))) / grid.dx**2
    assert pairs[0].lam.real == pytest.approx(expected, rel=1e-8)
    assert abs(pairs[0].lam.imag) < 1e-8
    # x-profile only, constant in y
    u = pairs[0].u
    np.testing.assert_allclose(u, u[:, [0]] * np.ones((1, grid.ny)), atol=1e-8)


@pytest.mark.slow
def test_separable_ground_state_converges(full_leads):
    errors = []
    for nx in (33, 65, 129):
        op = assemble_L(build_grid(full_leads, nx, 5), full_leads)
        lam = leading_eigenpairs(op, 1)[0].lam.real
        errors.append(abs(lam - np.pi**2 / 4.0))
    assert errors[-1] <= 0.01 * np.pi**2 / 4.0
    # Second order: halving dx divides the error by about four
    for coarse, fine in zip(errors, errors[1:]):
        assert 3.5 < coarse / fine < 4.5


def test_eigenfunction_normalization(driven):
    _, op, pairs = driven
    w = op.grid.weights
    i0, j0 = op.grid.center
    for p in pairs:
        assert np.sum(w * p.u * p.u) == pytest.approx(1.0, abs=1e-10)
        assert p.u[i0, j0].real >= 0.0
        np.testing.assert_array_equal(p.u[op.grid.dirichlet], 0.0)


def test_ordering_by_real_part(driven):
    _, _, pairs = driven
    re = [p.lam.real for p in pairs]
    assert re == sorted(re)


def test_full_spectrum_is_closed_under_conjugation(driven):
    _, op, _ = driven
    vals, _ = _dense_eigs(op)
    assert conjugation_gap(vals) < 1e-6 * np.abs(vals).max()


def test_biorthogonality(driven):
    _, op, pairs = driven
    M = biorthogonality_matrix(pairs, op.grid)
    w = op.grid.weights
    norms = np.array([np.sqrt(np.sum(w * np.abs(p.u) ** 2)) for p in pairs])
    scaled = np.abs(M) / np.outer(norms, norms)
    off = scaled[~np.eye(len(pairs), dtype=bool)]
    assert off.max() < 1e-6


def test_rayleigh_quotient_matches_eigenvalue(driven):
    params, op, pairs = driven
    for p in pairs:
        rq = rayleigh_quotient(p.u, op.grid, params, op.phi0)
        assert abs(rq - p.lam) <= 1e-7 * max(1.0, abs(p.lam))


def test_spectral_bounds_hold(driven):
    params, op, pairs = driven
    bounds = spectral_bounds(pairs, params, op.phi0)
    assert bounds.ok
    assert bounds.phi0_max == pytest.approx(np.abs(solve_phi0(op.grid)).max())


def test_zero_current_spectrum_is_real(canonical):
    _, pairs = solve_point(canonical.with_(h=5.0), 17, 13, 3, method="dense")
    for p in pairs:
        assert abs(p.lam.imag) < 1e-8 * max(1.0, abs(p.lam))


def test_k_out_of_range(driven):
    _, op, _ = driven
    with pytest.raises(ValueError):
        leading_eigenpairs(op, 13)


# --- Critical current ---

def _fake_lambda1(params, nx, ny, method, dense_limit):
    if params.I < 20.0:
        return complex(5.0, 0.0)
    return complex(5.0, 10.0 * (params.I - 20.0))


def test_find_Ic_bisects_to_collision(monkeypatch, canonical):
    monkeypatch.setattr("vortexlab.spectral._lambda1_at", _fake_lambda1)
    ic = find_Ic(canonical, (0.0, 40.0), 17, 13)
    assert ic.value == pytest.approx(20.0, abs=0.05)
    assert ic.lower <= 20.0 <= ic.upper + 1e-6
    assert ic.upper - ic.lower <= 40.0 * 1e-3
    assert ic.history[0][0] == 0.0 and ic.history[1][0] == 40.0


def test_find_Ic_rejects_bracket_without_collision(monkeypatch, canonical):
    monkeypatch.setattr("vortexlab.spectral._lambda1_at", lambda *args: complex(5.0, 0.0))
    with pytest.raises(InvalidBracketError):
        find_Ic(canonical, (0.0, 40.0), 17, 13)


def test_find_Ic_rejects_decreasing_bracket(canonical):
    with pytest.raises(ValueError):
        find_Ic(canonical, (10.0, 5.0), 17, 13)


# --- Branch tracking ---

def test_track_branches_follows_smooth_branches(full_leads):
    sweep = track_branches("h", [0.0, 0.1, 0.2], full_leads, 17, 5, k=2, guard=1, method="dense")
    assert sweep.eigenvalues.shape == (3, 2)
    np.testing.assert_array_equal(sweep.labels, [[0, 1], [0, 1], [0, 1]])
    assert sweep.encounters == []
    assert np.all(np.isfinite(sweep.branch(0)))
    assert np.all(np.diff(sweep.branch(0).real) >= 0)


def test_track_branches_rejects_non_monotone_axis(full_leads):
    with pytest.raises(ValueError):
        track_branches("I", [0.0, 2.0, 1.0], full_leads, 17, 5)
    with pytest.raises(ValueError):
        track_branches("gamma", [0.0, 1.0], full_leads, 17, 5)


def test_near_defective_check_uses_reflected_norm(driven):
    from vortexlab.spectral import is_near_defective

    _, op, pairs = driven
    assert not is_near_defective(pairs, op.grid, tol=1e-12)


def test_pt_partner_is_an_eigenfunction(driven):
    _, op, pairs = driven
    for p in pairs:
        u2 = pt_partner(p.u)
        res = op.apply(u2) + np.conj(p.lam) * u2
        assert np.abs(res).max() <= 1e-6 * max(1.0, abs(p.lam)) * np.abs(u2).max()
