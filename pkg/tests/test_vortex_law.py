# tests/test_vortex_law.py

import numpy as np
import pytest

from vortexlab.commands.common import centre_line_field
from vortexlab.config import DEFAULT_NX, DEFAULT_NY
from vortexlab.errors import NormalizationError
from vortexlab.grid import build_grid, pt_partner
from vortexlab.normal_form import NormalFormData, compute_normal_form, hopf_orbit
from vortexlab.spectral import solve_point
from vortexlab.vortex_law import (
    BOUNDARY_ENTRY,
    BOUNDARY_EXIT,
    COLLISION,
    DOWNWARD_HUMP,
    MIN_AND_MAX,
    MONOTONE,
    OTHER,
    PAIR_ANNIHILATION,
    PAIR_CREATION,
    UPWARD_HUMP,
    beta_shape,
    classify_scenario,
    extract_beta,
    predict_vortices,
    roots_at,
    winding_on_centre_line,
)


def _mode_with_phase(grid, phase):
    """u1 whose centre-line phase is phase(y), scaled by an arbitrary constant."""
    X, Y = grid.mesh
    return (0.8 - 0.3j) * np.cos(0.5 * np.pi * X) * np.exp(1j * phase(Y))


def test_extract_beta_recovers_phase(grid):
    profile = extract_beta(_mode_with_phase(grid, lambda y: -3.0 * y**2), grid)
    np.testing.assert_allclose(profile.beta, -3.0 * grid.y**2, atol=1e-12)
    np.testing.assert_allclose(profile.g, 1.0, atol=1e-12)
    assert not profile.unreliable.any()
    assert profile.normalization == pytest.approx(0.8 - 0.3j)


def test_extract_beta_unwraps_past_pi(grid):
    profile = extract_beta(_mode_with_phase(grid, lambda y: 9.0 * y), grid)
    np.testing.assert_allclose(profile.beta, 9.0 * grid.y, atol=1e-12)


def test_extract_beta_needs_nonzero_centre(grid):
    u1 = _mode_with_phase(grid, lambda y: y)
    u1[grid.center] = 0.0
    with pytest.raises(NormalizationError):
        extract_beta(u1, grid)


def test_boundary_slopes_of_linear_phase(grid):
    profile = extract_beta(_mode_with_phase(grid, lambda y: 2.0 * y), grid)
    lower, upper = profile.boundary_slopes()
    assert lower == pytest.approx(2.0)
    assert upper == pytest.approx(2.0)


@pytest.mark.parametrize(
    "phase, expected",
    [
        (lambda y: -3.0 * y**2, DOWNWARD_HUMP),
        (lambda y: 3.0 * y**2, UPWARD_HUMP),
        (lambda y: 2.0 * y, MONOTONE),
        (lambda y: 0.5 * np.sin(2.25 * np.pi * y), MIN_AND_MAX),
        (lambda y: 0.0 * y, OTHER),
    ],
)
def test_classify_scenario(grid, phase, expected):
    profile = extract_beta(_mode_with_phase(grid, phase), grid)
    assert classify_scenario(profile) == expected


def test_roots_satisfy_motion_law(grid):
    profile = extract_beta(_mode_with_phase(grid, lambda y: 2.0 * y), grid)
    chi = 1.3
    for t in (0.0, 0.4, 2.0, 5.1):
        for y in roots_at(profile, chi, t):
            n = (chi * t - 0.5 * np.pi - profile.value_at(y)) / np.pi
            assert n == pytest.approx(round(n), abs=1e-9)
            assert -grid.K <= y <= grid.K


def test_roots_of_hump_come_in_pairs(grid):
    profile = extract_beta(_mode_with_phase(grid, lambda y: -3.0 * y**2), grid)
    # chi t - pi/2 = -1 lies strictly inside the range of beta
    roots = roots_at(profile, 1.0, 0.5 * np.pi - 1.0)
    assert len(roots) == 2
    assert roots[0] == pytest.approx(-roots[1], abs=1e-12)


def test_hump_event_cycle(grid):
    profile = extract_beta(_mode_with_phase(grid, lambda y: -3.0 * y**2), grid)
    tracks, events = predict_vortices(profile, 1.0, (0.0, 3.0 * np.pi))
    kinds = [e.kind for e in events]
    assert kinds == [BOUNDARY_ENTRY, BOUNDARY_ENTRY, PAIR_ANNIHILATION] * 3

    depth = 3.0 * grid.K**2
    for k in range(3):
        entry_a, entry_b, meet = events[3 * k: 3 * k + 3]
        assert sorted([entry_a.y, entry_b.y]) == pytest.approx([-grid.K, grid.K])
        assert meet.y == pytest.approx(0.0, abs=1e-12)
        assert meet.t - entry_a.t == pytest.approx(depth)
        assert len(meet.tracks) == 2
    assert events[3].t - events[0].t == pytest.approx(np.pi)

    for track in tracks:
        law = track.t - 0.5 * np.pi - track.n * np.pi - profile.value_at(track.y)
        np.testing.assert_allclose(law, 0.0, atol=1e-9)


def test_predict_vortices_argument_checks(grid):
    profile = extract_beta(_mode_with_phase(grid, lambda y: 2.0 * y), grid)
    with pytest.raises(ValueError):
        predict_vortices(profile, 0.0, (0.0, 1.0))
    with pytest.raises(ValueError):
        predict_vortices(profile, 1.0, (1.0, 1.0))
    with pytest.raises(ValueError):
        predict_vortices(profile, 1.0, (0.0, 1.0), psi_at=lambda t: None)


def test_roots_match_fine_scan(grid):
    phase = lambda y: 0.5 * np.sin(2.25 * np.pi * y)
    profile = extract_beta(_mode_with_phase(grid, phase), grid)
    y_fine = np.linspace(-grid.K, grid.K, 10 * (grid.ny - 1) + 1)
    for level in (-0.4, -0.1, 0.2, 0.35):
        t = 0.5 * np.pi + level
        line = np.cos(t - phase(y_fine))
        crossings = np.flatnonzero(np.sign(line[:-1]) != np.sign(line[1:]))
        roots = roots_at(profile, 1.0, t)
        assert len(roots) == len(crossings) == 3
        np.testing.assert_allclose(roots, y_fine[crossings], atol=0.5 * grid.dy)


def test_event_times_scale_with_frequency(grid):
    profile = extract_beta(_mode_with_phase(grid, lambda y: 0.5 * np.sin(2.25 * np.pi * y)), grid)
    _, slow = predict_vortices(profile, 1.0, (0.0, 2.0 * np.pi))
    _, fast = predict_vortices(profile, 2.0, (0.0, np.pi))
    assert [(e.kind, e.y, e.n) for e in fast] == [(e.kind, e.y, e.n) for e in slow]
    np.testing.assert_allclose([e.t for e in fast], [0.5 * e.t for e in slow], rtol=1e-12)


def test_flat_stretch_stays_in_one_segment(grid):
    phase = lambda y: np.where(np.abs(y) < 0.15, 0.0, 2.0 * np.sign(y) * (np.abs(y) - 0.15))
    profile = extract_beta(_mode_with_phase(grid, phase), grid)
    assert classify_scenario(profile) == MONOTONE
    _, events = predict_vortices(profile, 1.0, (0.0, 2.0 * np.pi))
    assert events
    assert {e.kind for e in events} <= {BOUNDARY_ENTRY, BOUNDARY_EXIT}
    assert all(abs(e.y) == pytest.approx(grid.K) for e in events)


def test_small_wiggle_is_ignored_by_tag_and_events(canonical):
    fine = build_grid(canonical, 17, 49)
    phase = lambda y: -0.5 * y + 0.06 * np.exp(-((y + 0.05) / 0.06) ** 2)
    profile = extract_beta(_mode_with_phase(fine, phase), fine)
    assert np.any(np.diff(profile.beta) > 0)

    assert classify_scenario(profile) == MONOTONE
    tracks, events = predict_vortices(profile, 1.0, (0.0, 2.0 * np.pi))
    assert [(e.kind, np.sign(e.y)) for e in events[:2]] in (
        [(BOUNDARY_ENTRY, 1.0), (BOUNDARY_EXIT, -1.0)],
        [(BOUNDARY_EXIT, -1.0), (BOUNDARY_ENTRY, 1.0)],
    )
    assert {e.kind for e in events} <= {BOUNDARY_ENTRY, BOUNDARY_EXIT}
    for t in np.linspace(0.0, np.pi, 37):
        assert len(roots_at(profile, 1.0, t)) <= 1

    skeleton = beta_shape(profile).beta
    for track in tracks:
        law = track.t - 0.5 * np.pi - track.n * np.pi - np.interp(track.y, profile.y, skeleton)
        np.testing.assert_allclose(law, 0.0, atol=1e-9)


# --- Degrees ---

def test_winding_on_centre_line(grid):
    X, Y = grid.mesh
    y0 = grid.y[4] + 0.3 * grid.dy
    psi = X + 1j * (Y - y0)
    assert winding_on_centre_line(psi, grid, y0) == 1
    assert winding_on_centre_line(np.conj(psi), grid, y0) == -1
    assert winding_on_centre_line(psi, grid, grid.y[10]) == 0


def _orbit_data(grid, phase):
    """Normal-form data whose u1 has centre-line phase phase(y) and an arbitrary centre value."""
    X, Y = grid.mesh
    u1 = 0.7 * np.exp(0.8j) * (1.0 + 0.5 * X) * np.exp(1j * phase(Y))
    zeros = np.zeros(grid.shape)
    return NormalFormData(-1.0 + 0.5j, 0.3 + 2.0j, u1, pt_partner(u1), zeros, zeros, zeros, zeros, 1.0 + 0j, grid, 0.0)


def test_annihilating_pair_has_opposite_degrees(grid):
    nf = _orbit_data(grid, lambda y: -3.0 * y**2)
    eps = 0.1
    chi = hopf_orbit(nf, eps).chi
    profile = extract_beta(nf.u1, grid)
    depth = 3.0 * grid.K**2
    window = ((0.5 * np.pi - depth) / chi - 0.01, 0.5 * np.pi / chi + 0.01)
    tracks, events = predict_vortices(profile, chi, window, psi_at=centre_line_field(nf, profile, eps), grid=grid)

    assert [e.kind for e in events] == [BOUNDARY_ENTRY, BOUNDARY_ENTRY, PAIR_ANNIHILATION]
    assert sorted(t.degree for t in tracks) == [-1, 1]
    assert sum(tracks[k].degree for k in events[-1].tracks) == 0


def test_created_pair_has_opposite_degrees(grid):
    nf = _orbit_data(grid, lambda y: 3.0 * y**2)
    eps = 0.1
    chi = hopf_orbit(nf, eps).chi
    profile = extract_beta(nf.u1, grid)
    depth = 3.0 * grid.K**2
    window = (0.5 * np.pi / chi - 0.01, (0.5 * np.pi + depth) / chi + 0.01)
    tracks, events = predict_vortices(profile, chi, window, psi_at=centre_line_field(nf, profile, eps), grid=grid)

    assert [e.kind for e in events] == [PAIR_CREATION, BOUNDARY_EXIT, BOUNDARY_EXIT]
    assert events[0].y == pytest.approx(0.0, abs=1e-12)
    assert len(events[0].tracks) == 2
    assert sorted(tracks[k].degree for k in events[0].tracks) == [-1, 1]


def test_same_degree_merge_is_a_collision(grid):
    profile = extract_beta(_mode_with_phase(grid, lambda y: -3.0 * y**2), grid)
    X, Y = grid.mesh

    def same_sign_field(t):
        psi = np.ones(grid.shape, dtype=complex)
        for y0 in roots_at(profile, 1.0, t):
            psi = psi * (X + 1j * (Y - y0))
        return psi

    tracks, events = predict_vortices(profile, 1.0, (0.0, 0.5 * np.pi + 0.1), psi_at=same_sign_field, grid=grid)
    assert [t.degree for t in tracks] == [1, 1]
    assert [e.kind for e in events] == [BOUNDARY_ENTRY, BOUNDARY_ENTRY, COLLISION]


# --- Operator at the published parameter sets ---

def _where(event, grid):
    """+1 / -1 for the upper / lower boundary, 0 inside."""
    return int(np.sign(event.y)) if event.y == pytest.approx(np.sign(event.y) * grid.K) else 0


def _one_cycle(events, grid, event_period):
    late = [e for e in events if e.t >= event_period]
    start = late[0].t
    return [(e.kind, _where(e, grid)) for e in late if e.t < start + event_period - 1e-9]


def _is_rotation(seq, expected):
    return len(seq) == len(expected) and any(seq[k:] + seq[:k] == expected for k in range(len(seq)))


@pytest.mark.slow
@pytest.mark.parametrize(
    "h, current, tag, cycle",
    [
        (0.05, 25.0, DOWNWARD_HUMP, [(BOUNDARY_ENTRY, 1), (BOUNDARY_ENTRY, -1), (PAIR_ANNIHILATION, 0)]),
        (0.05, 110.0, UPWARD_HUMP, [(PAIR_CREATION, 0), (BOUNDARY_EXIT, 1), (BOUNDARY_EXIT, -1)]),
        (0.2, 110.0, MONOTONE, [(BOUNDARY_ENTRY, 1), (BOUNDARY_EXIT, -1)]),
        (20.0, 25.0, MIN_AND_MAX, None),
    ],
)
def test_scenario_and_event_cycle(canonical, h, current, tag, cycle):
    """Shape of beta and one period of centre-line events at the four reference points."""
    op, pairs = solve_point(canonical.with_(h=h, I=current), DEFAULT_NX, DEFAULT_NY, 2)
    grid = op.grid
    lead = pairs[0]
    profile = extract_beta(lead.u, grid)
    assert classify_scenario(profile) == tag

    nf = compute_normal_form(lead, grid, h)
    eps = 0.01 * lead.lam.real
    chi = hopf_orbit(nf, eps).chi
    event_period = np.pi / chi
    tracks, events = predict_vortices(
        profile, chi, (0.0, 3.0 * event_period), psi_at=centre_line_field(nf, profile, eps), grid=grid
    )
    observed = _one_cycle(events, grid, event_period)
    if cycle is not None:
        assert _is_rotation(observed, cycle), observed
    else:
        merges = [k for k, _ in observed if k in (PAIR_ANNIHILATION, COLLISION)]
        assert sorted(o for o in observed if o[0] not in (PAIR_ANNIHILATION, COLLISION)) == sorted(
            [(BOUNDARY_ENTRY, 1), (PAIR_CREATION, 0), (BOUNDARY_EXIT, -1)]
        )
        assert len(merges) == 1

    if h < 1.0:
        whole = {k for k, t in enumerate(tracks) if t.t[0] > 0.0 and t.t[-1] < 3.0 * event_period}
        assert whole and all(abs(tracks[k].degree) == 1 for k in whole)
        for e in events:
            if e.kind in (PAIR_ANNIHILATION, PAIR_CREATION) and set(e.tracks) <= whole:
                assert sum(tracks[k].degree for k in e.tracks) == 0
