# src/vortexlab/tdgl.py

"""
Time integration of the full TDGL system

    psi_t + i phi psi = (grad - i h A0)^2 psi + (Gamma - |psi|^2) psi
    Laplace(phi) = div(Im(conj(psi)(grad - i h A0) psi))

with phi = I phi0 + phi_tilde[psi], and the diagnostics used to compare it
with the reduced theory: plaquette vortex detection, vortex tracking,
period detection and the discrete current balance.

The stepper is first-order IMEX: the covariant Laplacian with its boundary
rows and the fixed potential term -i I phi0 are implicit, the reaction term
and -i phi_tilde psi explicit. Lead nodes are eliminated, so the boundary
conditions hold after every step by construction.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pubsub import pub
from scipy import ndimage, sparse
from scipy.signal import correlate, find_peaks
from scipy.sparse.linalg import splu

from vortexlab.errors import BlowUpError, TrackingError
from vortexlab.grid import Grid, Params, build_grid, pt_partner, validate_field
from vortexlab.poisson import PoissonSolver, divergence_rhs, phi0_rhs, poisson_solver, solve_divform, solve_phi0, supercurrent
from vortexlab.spectral import assemble_L, solve_point
from vortexlab.vortex_law import (
    BOUNDARY_ENTRY,
    BOUNDARY_EXIT,
    COLLISION,
    PAIR_ANNIHILATION,
    PAIR_CREATION,
)

TOPIC_FRAME = "vortexlab.frame"

BLOWUP_FACTOR: float = 10.0
VORTEX_THRESHOLD: float = 0.5
MAX_STEP_CELLS: float = 3.0
BOUNDARY_CELLS: float = 2.0
PAIR_CELLS: float = 3.0
COLLISION_CELLS: float = 2.0
PERIOD_THRESHOLD: float = 0.9


def default_dt(grid: Grid) -> float:
    return 0.5 * min(grid.dx, grid.dy) ** 2


@dataclass(frozen=True)
class SimOptions:
    """
    Attributes:
        dt: Time step (default 0.5 min(dx, dy)^2).
        nonlinear: False drops the cubic and phi_tilde terms (linearized mode).
        blowup_factor: Abort once max|psi| exceeds this multiple of the amplitude scale.
    """

    dt: Optional[float] = None
    nonlinear: bool = True
    blowup_factor: float = BLOWUP_FACTOR


@dataclass
class SimState:
    t: float
    psi: np.ndarray
    phi: np.ndarray
    step_count: int
    grid: Grid
    gamma: float
    solver: PoissonSolver
    scale: float = 1.0    # amplitude scale for the blow-up test

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.psi).max())


class Stepper:
    """Factorized implicit part (I - dt L) on the free nodes for one (grid, h, I, dt)."""

    def __init__(self, grid: Grid, params: Params, dt: float) -> None:
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        self.grid = grid
        self.dt = dt
        self.op = assemble_L(grid, params, solve_phi0(grid))
        implicit = sparse.identity(self.op.size, format="csc", dtype=complex) - dt * self.op.matrix.tocsc()
        self._lu = splu(implicit.tocsc())
        logging.debug(f"Factorized IMEX operator: dt={dt:.3e}, {self.op.size} unknowns")

    def solve(self, rhs_field: np.ndarray) -> np.ndarray:
        return self.op.lift(self._lu.solve(self.op.restrict(rhs_field).astype(complex)))


@lru_cache(maxsize=8)
def _stepper(grid: Grid, h: float, current: float, dt: float) -> Stepper:
    return Stepper(grid, Params(L=grid.L, K=grid.K, delta=grid.delta, h=h, I=current), dt)


def potential(psi: np.ndarray, grid: Grid, params: Params) -> np.ndarray:
    """phi = I phi0 + phi_tilde[psi], mean zero."""
    phi_tilde = solve_divform(grid, supercurrent(psi, grid, params.h))
    return params.I * solve_phi0(grid) + phi_tilde


def initial_state(
    params: Params,
    grid: Grid,
    gamma: float,
    psi0: Optional[np.ndarray] = None,
    u1: Optional[np.ndarray] = None,
    scale: float = 1e-3,
    seed: int = -1,
) -> SimState:
    """
    Initial state from explicit data, from c (u1 + u1^dagger), or from a
    seeded PT-symmetric random field. Lead nodes are set to zero.
    """
    if psi0 is not None:
        psi = np.array(validate_field(psi0, grid, "psi0"), dtype=complex)
    elif u1 is not None:
        psi = scale * (u1 + pt_partner(u1))
    elif seed >= 0:
        rng = np.random.default_rng(seed)
        r = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        psi = 0.5 * scale * (r + pt_partner(r))
    else:
        raise ValueError("initial data needs psi0, u1 or a non-negative seed")
    psi[grid.dirichlet] = 0.0
    amp = max(np.sqrt(max(gamma, 0.0)), float(np.abs(psi).max()), 1e-12)
    return SimState(
        t=0.0,
        psi=psi,
        phi=potential(psi, grid, params),
        step_count=0,
        grid=grid,
        gamma=float(gamma),
        solver=poisson_solver(grid),
        scale=amp,
    )


def step(state: SimState, dt: float, params: Params, options: SimOptions = SimOptions()) -> SimState:
    """
    One IMEX step.

    Raises:
        BlowUpError: max|psi| above blowup_factor times the amplitude scale.
    """
    grid = state.grid
    stepper = _stepper(grid, float(params.h), float(params.I), float(dt))
    psi = state.psi
    if options.nonlinear:
        phi_tilde = state.phi - params.I * solve_phi0(grid)
        rhs = psi + dt * ((state.gamma - np.abs(psi) ** 2) * psi - 1j * phi_tilde * psi)
    else:
        rhs = psi + dt * state.gamma * psi
    psi_new = stepper.solve(rhs)
    peak = float(np.abs(psi_new).max())
    bound = options.blowup_factor * state.scale
    if not np.isfinite(peak) or peak > bound:
        raise BlowUpError(
            f"max|psi| = {peak:.3e} exceeds {bound:.3e} at t={state.t + dt:.6g} "
            f"(step {state.step_count + 1}, dt={dt:.3e}, Gamma={state.gamma:.6g})"
        )
    phi_new = potential(psi_new, grid, params) if options.nonlinear else params.I * solve_phi0(grid)
    return SimState(
        t=state.t + dt,
        psi=psi_new,
        phi=phi_new,
        step_count=state.step_count + 1,
        grid=grid,
        gamma=state.gamma,
        solver=state.solver,
        scale=state.scale,
    )


def current_residual(state: SimState, params: Params) -> float:
    """Relative residual of the discrete potential equation (total current balance)."""
    grid = state.grid
    rhs = params.I * phi0_rhs(grid) + divergence_rhs(supercurrent(state.psi, grid, params.h), grid)
    return state.solver.residual(state.phi, rhs)


# --- Vortex detection ---

@dataclass
class Vortex:
    x: float
    y: float
    degree: int


@dataclass
class VortexSnapshot:
    t: float
    vortices: List[Vortex]

    @property
    def total_degree(self) -> int:
        return int(sum(v.degree for v in self.vortices))


def _bilinear_zero(a, b, c, d) -> Tuple[float, float]:
    """Zero of a(1-s)(1-t) + b s(1-t) + c s t + d (1-s) t on the unit square (Newton)."""
    s, t = 0.5, 0.5
    for _ in range(12):
        f = a * (1 - s) * (1 - t) + b * s * (1 - t) + c * s * t + d * (1 - s) * t
        fs = (b - a) * (1 - t) + (c - d) * t
        ft = (d - a) * (1 - s) + (c - b) * s
        jac = np.array([[fs.real, ft.real], [fs.imag, ft.imag]])
        try:
            ds, dtt = np.linalg.solve(jac, [-f.real, -f.imag])
        except np.linalg.LinAlgError:
            break
        s, t = float(np.clip(s + ds, 0.0, 1.0)), float(np.clip(t + dtt, 0.0, 1.0))
        if abs(ds) + abs(dtt) < 1e-12:
            break
    return s, t


def plaquette_winding(psi: np.ndarray) -> np.ndarray:
    """Winding number per plaquette, counterclockwise positive, shape (nx-1, ny-1)."""
    a, b, c, d = psi[:-1, :-1], psi[1:, :-1], psi[1:, 1:], psi[:-1, 1:]
    total = np.angle(b * np.conj(a)) + np.angle(c * np.conj(b)) + np.angle(d * np.conj(c)) + np.angle(a * np.conj(d))
    return np.rint(total / (2.0 * np.pi)).astype(int)


def detect_vortices(psi: np.ndarray, grid: Grid, threshold: float = VORTEX_THRESHOLD, t: float = 0.0) -> VortexSnapshot:
    """
    Phase singularities of psi.

    A plaquette holds a vortex when its winding is nonzero and all four corner
    moduli are below threshold * max|psi|. Adjacent same-sign plaquettes merge
    into one vortex at the centroid of their bilinear zeros.
    """
    psi = validate_field(psi, grid, "psi")
    peak = float(np.abs(psi).max())
    if peak == 0.0:
        return VortexSnapshot(t=t, vortices=[])
    wind = plaquette_winding(psi)
    mod = np.abs(psi)
    low = (
        (mod[:-1, :-1] < threshold * peak)
        & (mod[1:, :-1] < threshold * peak)
        & (mod[1:, 1:] < threshold * peak)
        & (mod[:-1, 1:] < threshold * peak)
    )
    vortices: List[Vortex] = []
    for sign in (1, -1):
        mask = (np.sign(wind) == sign) & low
        labels, count = ndimage.label(mask)
        for lab in range(1, count + 1):
            cells = np.argwhere(labels == lab)
            xs, ys = [], []
            for i, j in cells:
                s, tt = _bilinear_zero(psi[i, j], psi[i + 1, j], psi[i + 1, j + 1], psi[i, j + 1])
                xs.append(grid.x[i] + s * grid.dx)
                ys.append(grid.y[j] + tt * grid.dy)
            vortices.append(Vortex(x=float(np.mean(xs)), y=float(np.mean(ys)), degree=sign))
    vortices.sort(key=lambda v: (v.y, v.x))
    return VortexSnapshot(t=t, vortices=vortices)


# --- Tracking ---

@dataclass
class TrackEvent:
    t: float
    x: float
    y: float
    kind: str
    tracks: Tuple[int, ...]


@dataclass
class Track:
    id: int
    degree: int
    t: List[float] = field(default_factory=list)
    x: List[float] = field(default_factory=list)
    y: List[float] = field(default_factory=list)


@dataclass
class FullTrack:
    tracks: List[Track]
    events: List[TrackEvent]
    total_degree: List[int]


def _cells(grid: Grid, ax, ay, bx, by) -> float:
    return float(np.hypot((ax - bx) / grid.dx, (ay - by) / grid.dy))


def _near_boundary(grid: Grid, x: float, y: float, band: float) -> bool:
    return (
        (grid.L - abs(x)) / grid.dx <= band
        or (grid.K - abs(y)) / grid.dy <= band
    )


def _pair_off(grid, items, max_cells):
    """Greedy opposite-degree pairing of (track_or_index, vortex) items."""
    pairs = []
    candidates = sorted(
        (
            (_cells(grid, a[1].x, a[1].y, b[1].x, b[1].y), ia, ib)
            for ia, a in enumerate(items)
            for ib, b in enumerate(items)
            if ia < ib and a[1].degree == -b[1].degree
        ),
        key=lambda c: c[0],
    )
    used = set()
    for dist, ia, ib in candidates:
        if dist <= max_cells and ia not in used and ib not in used:
            used.update((ia, ib))
            pairs.append((items[ia], items[ib]))
    left = [it for k, it in enumerate(items) if k not in used]
    return pairs, left


def track_vortices(
    snapshots: Sequence[VortexSnapshot],
    grid: Grid,
    max_step_cells: float = MAX_STEP_CELLS,
    boundary_cells: float = BOUNDARY_CELLS,
    pair_cells: float = PAIR_CELLS,
    collision_cells: float = COLLISION_CELLS,
) -> FullTrack:
    """
    Links time-ordered snapshots by greedy nearest-neighbour matching of
    equal-degree vortices and classifies births and deaths.

    Raises:
        TrackingError: unmatched interior births and deaths of the same degree
            in one frame, i.e. vortices moved more than max_step_cells.
    """
    tracks: List[Track] = []
    events: List[TrackEvent] = []
    active: List[Tuple[Track, Vortex]] = []
    close_pairs = set()

    def open_track(snap_t: float, v: Vortex) -> Track:
        tr = Track(id=len(tracks), degree=v.degree)
        tr.t.append(snap_t)
        tr.x.append(v.x)
        tr.y.append(v.y)
        tracks.append(tr)
        return tr

    for f, snap in enumerate(snapshots):
        if f == 0:
            active = [(open_track(snap.t, v), v) for v in snap.vortices]
            continue
        cands = sorted(
            (
                (_cells(grid, v.x, v.y, w.x, w.y), ia, ib)
                for ia, (_, v) in enumerate(active)
                for ib, w in enumerate(snap.vortices)
                if v.degree == w.degree
            ),
            key=lambda c: c[0],
        )
        used_a, used_b, matched = set(), set(), []
        for dist, ia, ib in cands:
            if dist <= max_step_cells and ia not in used_a and ib not in used_b:
                used_a.add(ia)
                used_b.add(ib)
                matched.append((ia, ib))
        new_active: List[Tuple[Track, Vortex]] = []
        for ia, ib in matched:
            tr, _ = active[ia]
            w = snap.vortices[ib]
            tr.t.append(snap.t)
            tr.x.append(w.x)
            tr.y.append(w.y)
            new_active.append((tr, w))

        deaths = [active[k] for k in range(len(active)) if k not in used_a]
        births = [(None, snap.vortices[k]) for k in range(len(snap.vortices)) if k not in used_b]

        dead_pairs, deaths = _pair_off(grid, deaths, pair_cells)
        for (ta, va), (tb, vb) in dead_pairs:
            events.append(TrackEvent(snap.t, 0.5 * (va.x + vb.x), 0.5 * (va.y + vb.y), PAIR_ANNIHILATION, (ta.id, tb.id)))
        born_pairs, births = _pair_off(grid, births, pair_cells)
        for (_, va), (_, vb) in born_pairs:
            ta, tb = open_track(snap.t, va), open_track(snap.t, vb)
            new_active.extend([(ta, va), (tb, vb)])
            events.append(TrackEvent(snap.t, 0.5 * (va.x + vb.x), 0.5 * (va.y + vb.y), PAIR_CREATION, (ta.id, tb.id)))

        interior_deaths = []
        for tr, v in deaths:
            if _near_boundary(grid, v.x, v.y, boundary_cells):
                events.append(TrackEvent(snap.t, v.x, v.y, BOUNDARY_EXIT, (tr.id,)))
            else:
                interior_deaths.append((tr, v))
        interior_births = []
        for _, v in births:
            tr = open_track(snap.t, v)
            new_active.append((tr, v))
            if _near_boundary(grid, v.x, v.y, boundary_cells):
                events.append(TrackEvent(snap.t, v.x, v.y, BOUNDARY_ENTRY, (tr.id,)))
            else:
                interior_births.append((tr, v))
        for _, vd in interior_deaths:
            if any(vb.degree == vd.degree for _, vb in interior_births):
                raise TrackingError(
                    f"vortex of degree {vd.degree} vanished at ({vd.x:.3f}, {vd.y:.3f}) and reappeared elsewhere "
                    f"at t={snap.t:.6g}: snapshot stride too coarse (> {max_step_cells} cells per frame)"
                )
        for tr, v in interior_deaths + interior_births:
            logging.warning(f"Unpaired interior vortex event at t={snap.t:.6g}, ({v.x:.3f}, {v.y:.3f})")

        # Same-degree near approaches
        now_close = set()
        for ia in range(len(new_active)):
            for ib in range(ia + 1, len(new_active)):
                (ta, va), (tb, vb) = new_active[ia], new_active[ib]
                if va.degree == vb.degree and _cells(grid, va.x, va.y, vb.x, vb.y) <= collision_cells:
                    key = (min(ta.id, tb.id), max(ta.id, tb.id))
                    now_close.add(key)
                    if key not in close_pairs:
                        events.append(TrackEvent(snap.t, 0.5 * (va.x + vb.x), 0.5 * (va.y + vb.y), COLLISION, key))
        close_pairs = now_close
        active = new_active

    events.sort(key=lambda e: (e.t, e.y))
    return FullTrack(tracks=tracks, events=events, total_degree=[s.total_degree for s in snapshots])


# --- Period detection ---

@dataclass
class PeriodEstimate:
    period: float
    confidence: float
    periodic: bool


def detect_period(series: Sequence[float], dt: float, threshold: float = PERIOD_THRESHOLD) -> PeriodEstimate:
    """
    Period of a uniformly sampled series from its unbiased autocorrelation.

    The first autocorrelation peak after the first zero crossing whose value
    reaches threshold is refined by a parabola through its neighbours.
    Returns periodic=False (period NaN) when no such peak exists.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    x = x - x.mean()
    var = float(np.mean(x * x))
    if n < 8 or var <= 1e-14 * max(1.0, float(np.max(np.abs(series))) ** 2):
        return PeriodEstimate(period=float("nan"), confidence=0.0, periodic=False)
    full = correlate(x, x, mode="full", method="fft")[n - 1:]
    ac = full / (var * (n - np.arange(n)))
    max_lag = n // 2
    ac = ac[: max_lag + 1]
    below = np.nonzero(ac < 0)[0]
    if below.size == 0:
        return PeriodEstimate(period=float("nan"), confidence=0.0, periodic=False)
    peaks, _ = find_peaks(ac)
    peaks = peaks[peaks > below[0]]
    good = peaks[ac[peaks] >= threshold]
    if good.size == 0:
        best = float(ac[peaks].max()) if peaks.size else 0.0
        logging.info(f"No autocorrelation peak above {threshold} (best {best:.3f}): not periodic at tolerance")
        return PeriodEstimate(period=float("nan"), confidence=best, periodic=False)
    k = int(good[0])
    lag = float(k)
    if 0 < k < ac.size - 1:
        denom = ac[k - 1] - 2.0 * ac[k] + ac[k + 1]
        if denom != 0.0:
            lag = k + 0.5 * (ac[k - 1] - ac[k + 1]) / denom
    return PeriodEstimate(period=lag * dt, confidence=float(ac[k]), periodic=True)


# --- Runs ---

@dataclass
class Frame:
    t: float
    step: int
    psi: np.ndarray
    phi: np.ndarray
    max_abs: float
    probe: complex
    vortices: VortexSnapshot


@dataclass
class Trajectory:
    times: np.ndarray
    max_abs: np.ndarray
    total_degree: np.ndarray
    probe: np.ndarray
    snapshots: List[VortexSnapshot]
    final: SimState
    gamma: float
    dt: float


def _frame(state: SimState, params: Params, j_probe: int, threshold: float) -> Frame:
    i0, _ = state.grid.center
    return Frame(
        t=state.t,
        step=state.step_count,
        psi=state.psi,
        phi=state.phi,
        max_abs=state.max_abs,
        probe=complex(state.psi[i0, j_probe]),
        vortices=detect_vortices(state.psi, state.grid, threshold, t=state.t),
    )


def run(
    params: Params,
    psi0: np.ndarray,
    t_end: float,
    observers: Iterable[Callable] = (),
    *,
    gamma: Optional[float] = None,
    dt: Optional[float] = None,
    stride: int = 10,
    y_probe: float = 0.0,
    nonlinear: bool = True,
    vortex_threshold: float = VORTEX_THRESHOLD,
) -> Trajectory:
    """
    Integrates from psi0 to t_end, recording every stride steps.

    Observers are subscribed to the "vortexlab.frame" topic for the length
    of the run and receive each recorded Frame as ``frame=``.

    Args:
        params: Parameters; Gamma comes from ``gamma`` or params (gamma, or
            eps above Re lambda_1).
        psi0: Initial field; its shape fixes the grid.
        t_end: Final time (>= 0).
        observers: Callables taking ``frame``.
        dt: Time step (default 0.5 min(dx, dy)^2).
        stride: Steps between recorded frames.
        y_probe: y of the centre-line probe psi(0, y_probe, t).

    Returns:
        Trajectory with the recorded series and the final state.
    """
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    nx, ny = np.shape(psi0)
    grid = build_grid(params, nx, ny)
    if gamma is None:
        if params.gamma is not None:
            gamma = float(params.gamma)
        else:
            _, pairs = solve_point(params, nx, ny, 1)
            gamma = params.resolve_gamma(pairs[0].lam.real)
    dt = default_dt(grid) if dt is None else float(dt)
    options = SimOptions(dt=dt, nonlinear=nonlinear)
    j_probe = int(np.argmin(np.abs(grid.y - y_probe)))
    n_steps = int(np.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0

    listeners = list(observers)
    for listener in listeners:
        pub.subscribe(listener, TOPIC_FRAME)
    try:
        state = initial_state(params, grid, gamma, psi0=psi0)
        logging.info(
            f"TDGL run: {nx}x{ny} grid, Gamma={gamma:.6g}, dt={dt:.3e}, {n_steps} steps, "
            f"{'nonlinear' if nonlinear else 'linearized'}"
        )
        times: List[float] = []
        max_abs: List[float] = []
        probe: List[complex] = []
        snapshots: List[VortexSnapshot] = []

        def record(s: SimState) -> None:
            # Frames go to observers only; the run keeps the scalar series and vortex snapshots
            fr = _frame(s, params, j_probe, vortex_threshold)
            times.append(fr.t)
            max_abs.append(fr.max_abs)
            probe.append(fr.probe)
            snapshots.append(fr.vortices)
            pub.sendMessage(TOPIC_FRAME, frame=fr)
            if logging.getLogger().isEnabledFor(logging.DEBUG):
                logging.debug(
                    f"t={s.t:.4f} max|psi|={fr.max_abs:.4e} degree={fr.vortices.total_degree} "
                    f"current residual={current_residual(s, params):.2e}"
                )

        record(state)
        for k in range(1, n_steps + 1):
            state = step(state, dt, params, options)
            if k % stride == 0 or k == n_steps:
                record(state)
    finally:
        for listener in listeners:
            pub.unsubscribe(listener, TOPIC_FRAME)

    return Trajectory(
        times=np.array(times),
        max_abs=np.array(max_abs),
        total_degree=np.array([snap.total_degree for snap in snapshots]),
        probe=np.array(probe),
        snapshots=snapshots,
        final=state,
        gamma=float(gamma),
        dt=dt,
    )
