# src/vortexlab/vortex_law.py

"""
Kinematic vortices on the centre line x = 0.

On the Hopf orbit the leading-order order parameter is real on x = 0:

    psi(0, y, t) = 2 r g(y) cos(-chi t + beta(y)),

where u1(0, y) = g(y) exp(i beta(y)) under the normalization u1(0, 0) = 1.
Its zeros move according to chi t = beta(y) + pi/2 + n pi. Roots are found on
the monotone legs of beta between its prominent turning points (beta_shape),
so every track point is an exact inversion of the piecewise-linear legs and
the scenario tag counts the same extrema the events are built from.

Degree convention: counterclockwise winding of the phase counts +1.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.signal import savgol_filter

from vortexlab.errors import NormalizationError
from vortexlab.grid import Grid

# --- Scenario tags ---
DOWNWARD_HUMP = "DOWNWARD_HUMP"
UPWARD_HUMP = "UPWARD_HUMP"
MONOTONE = "MONOTONE"
MIN_AND_MAX = "MIN_AND_MAX"
OTHER = "OTHER"

# --- Event kinds ---
BOUNDARY_ENTRY = "BOUNDARY_ENTRY"
BOUNDARY_EXIT = "BOUNDARY_EXIT"
PAIR_CREATION = "PAIR_CREATION"
PAIR_ANNIHILATION = "PAIR_ANNIHILATION"
COLLISION = "COLLISION"

NORMALIZATION_FLOOR: float = 1e-8
UNRELIABLE_REL: float = 1e-6
PROMINENCE: float = 0.1           # Fraction of the range of beta
FLAT_SPAN: float = 1e-6           # rad
SMOOTH_WINDOW: int = 5


@dataclass
class BetaProfile:
    """
    Centre-line amplitude and unwrapped phase of u1 / u1(0, 0).

    Attributes:
        y: Sample positions (grid y nodes).
        g: |u1(0, y)| after rescaling.
        beta: Unwrapped phase, beta(0) = 0.
        unreliable: Samples where g is below 1e-6 max(g); beta is interpolated there.
        normalization: The factor u1(0, 0) divided out.
    """

    y: np.ndarray
    g: np.ndarray
    beta: np.ndarray
    unreliable: np.ndarray
    normalization: complex

    def boundary_slopes(self) -> Tuple[float, float]:
        """One-sided second-order beta'(-K) and beta'(+K)."""
        dy = self.y[1] - self.y[0]
        b = self.beta
        lower = (-3.0 * b[0] + 4.0 * b[1] - b[2]) / (2.0 * dy)
        upper = (3.0 * b[-1] - 4.0 * b[-2] + b[-3]) / (2.0 * dy)
        return float(lower), float(upper)

    def value_at(self, y) -> np.ndarray:
        return np.interp(y, self.y, self.beta)


def extract_beta(u1: np.ndarray, grid: Grid) -> BetaProfile:
    """
    Rescales u1 by 1/u1(0, 0) and unwraps its phase on x = 0 outward from y = 0.

    Raises:
        NormalizationError: |u1(0, 0)| <= 1e-8.
    """
    i0, j0 = grid.center
    c = complex(u1[i0, j0])
    if abs(c) <= NORMALIZATION_FLOOR:
        raise NormalizationError(
            f"|u1(0,0)| = {abs(c):.3e}: cannot normalize by u1(0,0); "
            "use the integral normalization and carry the phase of the centre value as a beta offset"
        )
    v = np.asarray(u1[i0, :]) / c
    g = np.abs(v)
    raw = np.angle(v)
    unreliable = g < UNRELIABLE_REL * g.max()
    unreliable[j0] = False

    beta_rel = {j0: 0.0}
    for direction in (1, -1):
        prev_j, prev_beta = j0, 0.0
        j = j0 + direction
        while 0 <= j < grid.ny:
            if not unreliable[j]:
                step = np.angle(np.exp(1j * (raw[j] - raw[prev_j])))
                prev_beta = prev_beta + step
                prev_j = j
                beta_rel[j] = prev_beta
            j += direction
    idx = np.array(sorted(beta_rel))
    beta = np.interp(grid.y, grid.y[idx], np.array([beta_rel[j] for j in idx]))
    beta[j0] = 0.0
    if unreliable.any():
        logging.warning(f"{int(unreliable.sum())} centre-line sample(s) of u1 are near zeros; phase interpolated there")
    return BetaProfile(y=np.array(grid.y), g=g, beta=beta, unreliable=unreliable, normalization=c)


@dataclass
class BetaShape:
    """
    Monotone skeleton of beta shared by the scenario tag and the motion law.

    Attributes:
        turning: Sample indices of the kept turning points, both ends included.
        beta: Samples of beta, made monotone between consecutive turning points.
        threshold: Smallest rise or fall kept, in rad.
    """

    turning: np.ndarray
    beta: np.ndarray
    threshold: float

    @property
    def maxima(self) -> np.ndarray:
        t, b = self.turning, self.beta
        return np.array([t[k] for k in range(1, len(t) - 1) if b[t[k]] > b[t[k - 1]]], dtype=int)

    @property
    def minima(self) -> np.ndarray:
        t, b = self.turning, self.beta
        return np.array([t[k] for k in range(1, len(t) - 1) if b[t[k]] < b[t[k - 1]]], dtype=int)


def _step_signs(values: np.ndarray) -> np.ndarray:
    """Signs of the steps of values; flat steps take the sign of the step before them."""
    signs = np.sign(np.diff(values))
    nonzero = np.flatnonzero(signs)
    if nonzero.size == 0:
        return signs
    signs[:nonzero[0]] = signs[nonzero[0]]
    for k in range(nonzero[0] + 1, len(signs)):
        if signs[k] == 0:
            signs[k] = signs[k - 1]
    return signs


def _turning_points(values: np.ndarray, threshold: float) -> List[int]:
    """Ends plus the slope changes of values, with every leg shorter than threshold merged away."""
    signs = _step_signs(values)
    points = [0] + [k for k in range(1, len(signs)) if signs[k] != signs[k - 1]] + [len(values) - 1]
    while len(points) > 2:
        legs = np.abs(np.diff(values[points]))
        k = int(np.argmin(legs))
        if legs[k] >= threshold:
            break
        if k == 0:
            del points[1]
        elif k == len(legs) - 1:
            del points[-2]
        else:
            del points[k:k + 2]
    return points


def beta_shape(profile: BetaProfile, prominence: float = PROMINENCE) -> BetaShape:
    """
    Turning points of the smoothed beta whose rise or fall exceeds prominence
    times the range of beta, moved onto the raw extremum nearby. Between
    them the raw beta is replaced by its running max (rising legs) or min
    (falling legs), so each leg is monotone and keeps its end values.
    """
    if not prominence >= 0:
        raise ValueError(f"prominence must be >= 0, got {prominence}")
    raw = profile.beta
    window = min(SMOOTH_WINDOW, len(raw) - (1 - len(raw) % 2))
    smooth = savgol_filter(raw, window_length=window, polyorder=2) if window >= 3 else raw
    threshold = max(prominence * float(np.ptp(smooth)), FLAT_SPAN)
    points = _turning_points(smooth, threshold)

    half = SMOOTH_WINDOW // 2
    for k in range(1, len(points) - 1):
        lo = max(points[k - 1] + 1, points[k] - half)
        hi = min(points[k + 1] - 1, points[k] + half)
        piece = raw[lo:hi + 1]
        rising = smooth[points[k]] > smooth[points[k - 1]]
        points[k] = lo + int(np.argmax(piece) if rising else np.argmin(piece))

    beta = raw.copy()
    for p, q in zip(points[:-1], points[1:]):
        piece = raw[p:q + 1]
        if raw[q] >= raw[p]:
            beta[p:q + 1] = np.clip(np.maximum.accumulate(piece), raw[p], raw[q])
        else:
            beta[p:q + 1] = np.clip(np.minimum.accumulate(piece), raw[q], raw[p])
    return BetaShape(turning=np.array(points, dtype=int), beta=beta, threshold=threshold)


def critical_points(profile: BetaProfile, prominence: float = PROMINENCE) -> Tuple[np.ndarray, np.ndarray]:
    """Interior maxima and minima of beta (sample indices)."""
    shape = beta_shape(profile, prominence)
    return shape.maxima, shape.minima


def classify_scenario(profile: BetaProfile, prominence: float = PROMINENCE) -> str:
    """Shape tag of beta from its prominent interior critical points."""
    shape = beta_shape(profile, prominence)
    n_max, n_min = len(shape.maxima), len(shape.minima)
    if n_max == 1 and n_min == 0:
        tag = DOWNWARD_HUMP
    elif n_max == 0 and n_min == 1:
        tag = UPWARD_HUMP
    elif n_max == 0 and n_min == 0:
        tag = MONOTONE if abs(shape.beta[-1] - shape.beta[0]) > FLAT_SPAN else OTHER
    elif n_max == 1 and n_min == 1:
        tag = MIN_AND_MAX
    else:
        tag = OTHER
    logging.info(f"beta scenario: {tag} ({n_max} interior max, {n_min} interior min, threshold {shape.threshold:.3g} rad)")
    return tag


# --- Motion law ---

@dataclass
class VortexTrack:
    """Root of chi t = beta(y) + pi/2 + n pi on one monotone piece of beta."""

    n: int
    segment: int
    degree: int
    t: np.ndarray
    y: np.ndarray


@dataclass
class VortexEvent:
    t: float
    y: float
    kind: str
    n: int
    tracks: Tuple[int, ...] = field(default_factory=tuple)


@dataclass
class _Segment:
    start: int
    stop: int          # inclusive
    y: np.ndarray
    beta: np.ndarray

    @property
    def low(self) -> float:
        return float(self.beta.min())

    @property
    def high(self) -> float:
        return float(self.beta.max())

    @property
    def low_index(self) -> int:
        return self.start if self.beta[0] <= self.beta[-1] else self.stop

    @property
    def high_index(self) -> int:
        return self.stop if self.beta[0] <= self.beta[-1] else self.start

    def invert(self, level):
        if self.beta[0] <= self.beta[-1]:
            return np.interp(level, self.beta, self.y)
        return np.interp(level, self.beta[::-1], self.y[::-1])


def _monotone_segments(y: np.ndarray, shape: BetaShape) -> List[_Segment]:
    """One segment per leg of the shape; flat legs carry no roots."""
    beta = shape.beta
    segments = [
        _Segment(p, q, y[p:q + 1], beta[p:q + 1])
        for p, q in zip(shape.turning[:-1], shape.turning[1:])
    ]
    return [s for s in segments if s.high > s.low]


def roots_at(profile: BetaProfile, chi: float, t: float, prominence: float = PROMINENCE) -> np.ndarray:
    """All centre-line zeros at time t (sorted y)."""
    shape = beta_shape(profile, prominence)
    segments = _monotone_segments(profile.y, shape)
    lo, hi = shape.beta.min(), shape.beta.max()
    base = chi * t - 0.5 * np.pi
    roots: List[float] = []
    for n in range(int(np.ceil((base - hi) / np.pi)), int(np.floor((base - lo) / np.pi)) + 1):
        level = base - n * np.pi
        for s in segments:
            if s.low <= level <= s.high:
                roots.append(float(s.invert(level)))
    # Shared segment endpoints report the same root twice
    roots = np.unique(np.round(np.array(roots), 12)) if roots else np.array([])
    return np.asarray(roots)


def winding_on_centre_line(psi: np.ndarray, grid: Grid, y: float) -> int:
    """Winding of psi on the 8-node loop around the node of x = 0 nearest to y."""
    i0, _ = grid.center
    jn = int(np.clip(np.rint((y + grid.K) / grid.dy), 1, grid.ny - 2))
    loop = [
        (i0 - 1, jn - 1), (i0, jn - 1), (i0 + 1, jn - 1), (i0 + 1, jn),
        (i0 + 1, jn + 1), (i0, jn + 1), (i0 - 1, jn + 1), (i0 - 1, jn),
    ]
    values = np.array([psi[i, j] for i, j in loop])
    steps = np.angle(np.roll(values, -1) * np.conj(values))
    return int(np.rint(steps.sum() / (2.0 * np.pi)))


def predict_vortices(
    profile: BetaProfile,
    chi: float,
    t_window: Tuple[float, float],
    psi_at: Optional[Callable[[float], np.ndarray]] = None,
    grid: Optional[Grid] = None,
    n_samples: int = 400,
    prominence: float = PROMINENCE,
) -> Tuple[List[VortexTrack], List[VortexEvent]]:
    """
    Tracks and events of the motion law over a time window.

    Args:
        profile: Centre-line beta.
        chi: Angular frequency of the orbit (> 0).
        t_window: (t0, t1) with t1 > t0.
        psi_at: Optional map t -> leading-order field; with grid, used to
            assign degrees by local winding.
        grid: Grid of the fields returned by psi_at.
        n_samples: Time samples per track.
        prominence: Relative size of the smallest beta extremum kept
            (see beta_shape). Track points satisfy the law against the
            monotone legs of that shape.

    Returns:
        (tracks, events), events sorted by time.
    """
    if not chi > 0:
        raise ValueError(f"chi must be > 0, got {chi}")
    t0, t1 = float(t_window[0]), float(t_window[1])
    if not t1 > t0:
        raise ValueError(f"empty time window [{t0}, {t1}]")
    if psi_at is not None and grid is None:
        raise ValueError("grid is required when psi_at is given")

    shape = beta_shape(profile, prominence)
    y, beta = profile.y, shape.beta
    segments = _monotone_segments(y, shape)
    last = len(y) - 1
    lo, hi = beta.min(), beta.max()
    n_first = int(np.ceil((chi * t0 - 0.5 * np.pi - hi) / np.pi))
    n_last = int(np.floor((chi * t1 - 0.5 * np.pi - lo) / np.pi))

    def time_of(level: float, n: int) -> float:
        return (level + 0.5 * np.pi + n * np.pi) / chi

    tracks: List[VortexTrack] = []
    owners = {}   # (n, sample index, "low"/"high") -> track indices ending there
    for n in range(n_first, n_last + 1):
        for s_idx, s in enumerate(segments):
            ta, tb = time_of(s.low, n), time_of(s.high, n)
            a, b = max(ta, t0), min(tb, t1)
            if b < a:
                continue
            times = np.linspace(a, b, max(2, n_samples))
            ys = s.invert(chi * times - 0.5 * np.pi - n * np.pi)
            degree = 0
            if psi_at is not None:
                tm = 0.5 * (a + b)
                degree = winding_on_centre_line(psi_at(tm), grid, float(s.invert(chi * tm - 0.5 * np.pi - n * np.pi)))
            tracks.append(VortexTrack(n=n, segment=s_idx, degree=degree, t=times, y=ys))
            owners.setdefault((n, s.low_index, "low"), []).append(len(tracks) - 1)
            owners.setdefault((n, s.high_index, "high"), []).append(len(tracks) - 1)

    events: List[VortexEvent] = []
    for (n, idx, end), members in owners.items():
        level = beta[idx]
        t_ev = time_of(level, n)
        if not t0 <= t_ev <= t1:
            continue
        boundary = idx in (0, last)
        if boundary:
            kind = BOUNDARY_ENTRY if end == "low" else BOUNDARY_EXIT
        elif end == "low":
            kind = PAIR_CREATION
        else:
            degrees = {tracks[m].degree for m in members}
            same = len(members) == 2 and len(degrees) == 1 and 0 not in degrees
            kind = COLLISION if same else PAIR_ANNIHILATION
        events.append(VortexEvent(t=float(t_ev), y=float(y[idx]), kind=kind, n=n, tracks=tuple(members)))
    events.sort(key=lambda e: (e.t, e.y))
    logging.info(f"Motion law over t in [{t0:.4g}, {t1:.4g}]: {len(tracks)} track piece(s), {len(events)} event(s)")
    return tracks, events
