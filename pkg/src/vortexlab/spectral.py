# src/vortexlab/spectral.py

"""
Leading spectrum of the non-self-adjoint operator

    L[u] = (grad - i h A0)^2 u - i I phi0 u = -lambda u

on the free (non-lead) nodes, posed as the pencil K u = lambda W u with
stiffness K = -W L and mass W (trapezoid weights). Eigenvalues are found by
shift-invert Arnoldi (ARPACK through scipy) with a dense fallback for small
grids, refined by one inverse-iteration step, ordered by real part and
normalized with the bilinear condition sum(w u^2) = 1.

Also provides the critical-current search and branch tracking over a
parameter axis.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from joblib import Parallel, delayed
from scipy import sparse
from scipy.optimize import linear_sum_assignment
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs, splu

from vortexlab.errors import EigenSolverError, InvalidBracketError, RefinementNeeded
from vortexlab.grid import Grid, Params, apply_bcs, build_grid, laplacian_matrix, link_phases
from vortexlab.poisson import solve_phi0

# --- Solver defaults ---
DENSE_LIMIT: int = 2500        # Free unknowns up to which "auto" uses the dense solver
ARNOLDI_EXTRA: int = 6         # Extra Ritz values requested beyond k
EIG_TOL: float = 1e-8          # Target residual ||L u + lambda u|| / ||u||, scaled by max(1, |lambda|)
EIG_MAXITER: int = 5000
IM_TOL_REL: float = 1e-6       # |Im lambda| test scale relative to ||phi0||_inf * I
DEFECTIVE_TOL: float = 1e-4    # |M11| below this marks a near-defective point
OVERLAP_MIN: float = 0.8
ENCOUNTER_REL: float = 1e-6


@dataclass(eq=False)
class DiscreteOperator:
    """Assembled L restricted to the free nodes of one grid."""

    grid: Grid
    params: Params
    matrix: sparse.csr_matrix
    phi0: np.ndarray

    @property
    def free(self) -> np.ndarray:
        return self.grid.free

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def mass(self) -> sparse.dia_matrix:
        return sparse.diags(self.grid.weights.ravel()[self.free])

    @property
    def stiffness(self) -> sparse.csr_matrix:
        return (-(self.mass @ self.matrix)).tocsr()

    def lift(self, vec: np.ndarray) -> np.ndarray:
        """Free-node vector -> full field with zeros on the leads."""
        out = np.zeros(self.grid.size, dtype=complex)
        out[self.free] = vec
        return out.reshape(self.grid.shape)

    def restrict(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u).ravel()[self.free]

    def apply(self, u: np.ndarray) -> np.ndarray:
        """L u as a full field (zero on the leads)."""
        return self.lift(self.matrix @ self.restrict(u))


@dataclass
class EigenPair:
    """Eigenvalue lam of L u = -lam u, the full-grid eigenfunction and its residual."""

    lam: complex
    u: np.ndarray
    residual_norm: float


def assemble_L(grid: Grid, params: Params, phi0: Optional[np.ndarray] = None) -> DiscreteOperator:
    """
    Assembles L = (grad - i h A0)^2 - i I phi0 with closed boundary rows.

    Args:
        grid: The grid.
        params: Supplies h and I.
        phi0: Unit-current potential on the same grid (solved if omitted).

    Returns:
        The operator on the free nodes.
    """
    if phi0 is None:
        phi0 = solve_phi0(grid, params)
    full = apply_bcs(laplacian_matrix(grid, params.h), params, grid)
    free = grid.free
    potential = sparse.diags(np.where(free, -1j * params.I * np.asarray(phi0).ravel(), 0.0))
    full = (full + potential).tocsr()
    matrix = full[free][:, free].tocsr()
    logging.debug(f"Assembled L: {matrix.shape[0]} free nodes, nnz={matrix.nnz}, h={params.h}, I={params.I}")
    return DiscreteOperator(grid=grid, params=params, matrix=matrix, phi0=np.asarray(phi0))


def im_tolerance(lam: complex, phi0_max: float, current: float, rel: float = IM_TOL_REL) -> float:
    """Threshold for deciding that an eigenvalue is non-real."""
    return max(rel * phi0_max * current, 1e-9 * max(1.0, abs(lam)))


# --- Eigen-solve ---

def _dense_eigs(op: DiscreteOperator) -> Tuple[np.ndarray, np.ndarray]:
    K = op.stiffness.toarray().astype(complex)
    W = op.mass.toarray()
    vals, vecs = scipy.linalg.eig(K, W)
    keep = np.isfinite(vals)
    return vals[keep], vecs[:, keep]


def _arnoldi_pass(op: DiscreteOperator, nev: int, sigma: float, tol: float, maxiter: int):
    K = op.stiffness.astype(complex)
    W = op.mass.tocsc()
    lu = splu((K - sigma * W).tocsc())
    opinv = LinearOperator(shape=K.shape, matvec=lu.solve, dtype=complex)
    try:
        return eigs(K, k=nev, M=W, sigma=sigma, OPinv=opinv, which="LM", tol=tol, maxiter=maxiter)
    except ArpackNoConvergence as e:
        n_conv = len(e.eigenvalues)
        raise EigenSolverError(
            f"Arnoldi did not converge after maxiter={maxiter} iterations (shift {sigma:.4g}); "
            f"{n_conv} of {nev} Ritz values converged"
        ) from e


def _arnoldi_eigs(op: DiscreteOperator, k: int, tol: float, maxiter: int) -> Tuple[np.ndarray, np.ndarray]:
    nev = min(k + ARNOLDI_EXTRA, op.size - 2)
    vals, vecs = _arnoldi_pass(op, nev, -1.0, tol, maxiter)
    best = float(np.min(vals.real))
    sigma = best - 1e-3 * max(1.0, abs(best))
    vals2, vecs2 = _arnoldi_pass(op, nev, sigma, tol, maxiter)
    logging.debug(f"Arnoldi passes at shifts -1 and {sigma:.6g}")
    all_vals = np.concatenate([vals, vals2])
    all_vecs = np.concatenate([vecs, vecs2], axis=1)
    keep: List[int] = []
    for idx in np.argsort(all_vals.real):
        lam = all_vals[idx]
        if all(abs(lam - all_vals[j]) > 1e-8 * max(1.0, abs(lam)) for j in keep):
            keep.append(idx)
    return all_vals[keep], all_vecs[:, keep]


def _refine(op: DiscreteOperator, lam: complex, vec: np.ndarray) -> Tuple[complex, np.ndarray, float]:
    """One inverse-iteration step near lam, then the Rayleigh quotient."""
    K = op.stiffness.astype(complex)
    W = op.mass
    shift = lam + 1e-9 * max(1.0, abs(lam))
    try:
        lu = splu((K - shift * W).tocsc())
        y = lu.solve(np.asarray(W @ vec, dtype=complex))
    except RuntimeError:
        # Exactly singular shift: the vector is already converged
        y = np.asarray(vec, dtype=complex)
    y = y / np.linalg.norm(y)
    Wy = W @ y
    lam_new = complex(np.vdot(y, K @ y) / np.vdot(y, Wy))
    residual = float(np.linalg.norm(op.matrix @ y + lam_new * y))
    return lam_new, y, residual


def _order(lams: np.ndarray) -> np.ndarray:
    """Indices ordering by Re, ties by Im ascending, leading pair with Im > 0 first."""
    idx = list(np.argsort(lams.real, kind="stable"))
    ordered: List[int] = []
    i = 0
    while i < len(idx):
        group = [idx[i]]
        j = i + 1
        while j < len(idx) and abs(lams[idx[j]].real - lams[idx[i]].real) <= 1e-9 * max(1.0, abs(lams[idx[i]])):
            group.append(idx[j])
            j += 1
        ordered.extend(sorted(group, key=lambda g: lams[g].imag))
        i = j
    if len(ordered) >= 2:
        a, b = lams[ordered[0]], lams[ordered[1]]
        tied = abs(a.real - b.real) <= 1e-9 * max(1.0, abs(a))
        if tied and a.imag < 0 < b.imag:
            ordered[0], ordered[1] = ordered[1], ordered[0]
    return np.array(ordered, dtype=int)


def normalize_bilinear(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Scales u so that sum(w u^2) = 1 and Re u(0, 0) >= 0; L2 fallback when sum(w u^2) ~ 0."""
    w = grid.weights
    c = np.sum(w * u * u)
    l2 = np.sum(w * np.abs(u) ** 2)
    if abs(c) <= 1e-10 * l2:
        logging.warning("Bilinear norm of eigenfunction vanishes (near-defective point); using L2 normalization")
        u = u / np.sqrt(l2)
    else:
        u = u / np.sqrt(c)
    i0, j0 = grid.center
    if u[i0, j0].real < 0:
        u = -u
    return u


def leading_eigenpairs(
    op: DiscreteOperator,
    k: int,
    method: str = "auto",
    dense_limit: int = DENSE_LIMIT,
    tol: float = EIG_TOL,
    maxiter: int = EIG_MAXITER,
) -> List[EigenPair]:
    """
    The k eigenpairs of smallest real part.

    Args:
        op: Assembled operator.
        k: Number of pairs (1 <= k <= 12).
        method: "auto", "arnoldi" or "dense".
        dense_limit: Free-node count up to which "auto" picks the dense solver.
        tol: ARPACK tolerance; also the residual level above which a warning is logged.
        maxiter: ARPACK iteration cap.

    Returns:
        EigenPairs ordered by Re lambda (ties by Im ascending, Im lambda_1 > 0 for a
        leading conjugate pair), eigenfunctions normalized by sum(w u^2) = 1.

    Raises:
        EigenSolverError: ARPACK failed to converge.
    """
    if not 1 <= k <= 12:
        raise ValueError(f"k must be between 1 and 12, got {k}")
    if method not in ("auto", "arnoldi", "dense"):
        raise ValueError(f"unknown eigen-solver method '{method}'")
    if method == "auto":
        method = "dense" if op.size <= dense_limit else "arnoldi"
    if method == "arnoldi" and op.size < k + ARNOLDI_EXTRA + 3:
        method = "dense"

    if method == "dense":
        vals, vecs = _dense_eigs(op)
    else:
        vals, vecs = _arnoldi_eigs(op, k, tol, maxiter)
    if len(vals) < k:
        raise EigenSolverError(f"only {len(vals)} eigenvalues available, {k} requested")

    candidates = np.argsort(vals.real)[: min(len(vals), k + 2)]
    refined = [_refine(op, vals[c], vecs[:, c]) for c in candidates]
    # Eigenvalues within the real/complex tolerance are real
    c0 = float(np.abs(op.phi0).max())
    refined = [
        (complex(lam.real, 0.0) if abs(lam.imag) <= im_tolerance(lam, c0, op.params.I) else lam, vec, res)
        for lam, vec, res in refined
    ]
    lams = np.array([r[0] for r in refined])
    order = _order(lams)[:k]

    pairs: List[EigenPair] = []
    for n in order:
        lam, vec, residual = refined[n]
        if residual > tol * max(1.0, abs(lam)) * 1e3:
            logging.warning(f"Eigenpair residual {residual:.3e} for lambda={lam:.6g} is above tolerance")
        u = normalize_bilinear(op.lift(vec), op.grid)
        pairs.append(EigenPair(lam=lam, u=u, residual_norm=residual))
    logging.info(
        f"Leading eigenvalues ({method}, h={op.params.h}, I={op.params.I}): "
        + ", ".join(f"{p.lam.real:.6f}{p.lam.imag:+.6f}j" for p in pairs)
    )
    return pairs


# --- Structure checks ---

def biorthogonality_matrix(pairs: Sequence[EigenPair], grid: Grid) -> np.ndarray:
    """M[j, k] = sum(w u_j(x, -y) u_k(x, y)), bilinear."""
    U = np.stack([p.u for p in pairs])
    return np.einsum("jab,kab,ab->jk", U[:, :, ::-1], U, grid.weights)


def is_near_defective(pairs: Sequence[EigenPair], grid: Grid, tol: float = DEFECTIVE_TOL) -> bool:
    u = pairs[0].u
    return bool(abs(np.sum(grid.weights * u[:, ::-1] * u)) < tol)


def rayleigh_quotient(u: np.ndarray, grid: Grid, params: Params, phi0: np.ndarray) -> complex:
    """
    Discrete field-energy identity:
    lambda = (sum_edges kappa |U u_q - u_p|^2 + i I sum(w phi0 |u|^2)) / sum(w |u|^2).
    """
    ux = link_phases(grid, params.h)
    ex = np.abs(ux * u[1:, :] - u[:-1, :]) ** 2 * (grid.dy * grid.cy / grid.dx)[None, :]
    ey = np.abs(u[:, 1:] - u[:, :-1]) ** 2 * (grid.dx * grid.cx / grid.dy)[:, None]
    mass = np.sum(grid.weights * np.abs(u) ** 2)
    potential = 1j * params.I * np.sum(grid.weights * phi0 * np.abs(u) ** 2)
    return complex((ex.sum() + ey.sum() + potential) / mass)


@dataclass
class SpectralBounds:
    phi0_max: float
    min_re: float
    max_im_excess: float

    @property
    def ok(self) -> bool:
        return self.min_re > 0 and self.max_im_excess <= 0


def spectral_bounds(pairs: Sequence[EigenPair], params: Params, phi0: np.ndarray, slack: float = 1e-6) -> SpectralBounds:
    """Checks Re lambda > 0 and |Im lambda| <= ||phi0||_inf I + slack."""
    c0 = float(np.abs(phi0).max())
    lams = np.array([p.lam for p in pairs])
    excess = float(np.max(np.abs(lams.imag) - (c0 * params.I + slack)))
    return SpectralBounds(phi0_max=c0, min_re=float(lams.real.min()), max_im_excess=excess)


def conjugation_gap(lams: Sequence[complex]) -> float:
    """Hausdorff distance between {lambda} and {conj(lambda)}."""
    a = np.asarray(lams)
    if a.size == 0:
        return 0.0
    d = np.abs(a[:, None] - np.conj(a)[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def solve_point(
    params: Params,
    nx: int,
    ny: int,
    k: int,
    method: str = "auto",
    dense_limit: int = DENSE_LIMIT,
    tol: float = EIG_TOL,
    maxiter: int = EIG_MAXITER,
) -> Tuple[DiscreteOperator, List[EigenPair]]:
    """Grid, operator and leading pairs for one parameter point."""
    grid = build_grid(params, nx, ny)
    op = assemble_L(grid, params, solve_phi0(grid, params))
    return op, leading_eigenpairs(op, k, method=method, dense_limit=dense_limit, tol=tol, maxiter=maxiter)


# --- Critical current ---

@dataclass
class CriticalCurrent:
    value: float
    lower: float
    upper: float
    history: List[Tuple[float, complex]] = field(default_factory=list)


def _lambda1_at(params: Params, nx: int, ny: int, method: str, dense_limit: int) -> complex:
    _, pairs = solve_point(params, nx, ny, 2, method=method, dense_limit=dense_limit)
    return pairs[0].lam


def find_Ic(
    params: Params,
    bracket: Tuple[float, float],
    nx: int,
    ny: int,
    rel_width: float = 1e-3,
    im_tol_rel: float = IM_TOL_REL,
    method: str = "auto",
    dense_limit: int = DENSE_LIMIT,
) -> CriticalCurrent:
    """
    Bisects on the indicator |Im lambda_1| > tol_im for the current at which
    lambda_1 turns complex.

    Args:
        params: Parameters; I is ignored.
        bracket: (I_low, I_high); the indicator must differ at the two ends.
        nx, ny: Grid resolution.
        rel_width: Final bracket width relative to the initial one.
        im_tol_rel: Relative scale of tol_im (times ||phi0||_inf I).

    Returns:
        CriticalCurrent with the bracket midpoint and the evaluation history.

    Raises:
        InvalidBracketError: Same indicator at both ends.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ValueError(f"bracket must be increasing, got {bracket}")
    phi0_max = float(np.abs(solve_phi0(build_grid(params, nx, ny))).max())
    history: List[Tuple[float, complex]] = []

    def indicator(current: float) -> bool:
        lam = _lambda1_at(params.with_(I=current), nx, ny, method, dense_limit)
        history.append((current, lam))
        is_complex = abs(lam.imag) > im_tolerance(lam, phi0_max, current, im_tol_rel)
        logging.debug(f"I={current:.6g}: lambda_1={lam:.6g} ({'complex' if is_complex else 'real'})")
        return is_complex

    f_lo, f_hi = indicator(lo), indicator(hi)
    if f_lo == f_hi:
        state = "complex" if f_lo else "real"
        raise InvalidBracketError(f"lambda_1 is {state} at both ends of the bracket [{lo}, {hi}]")
    target = rel_width * (hi - lo)
    while hi - lo > target:
        mid = 0.5 * (lo + hi)
        if indicator(mid) == f_lo:
            lo = mid
        else:
            hi = mid
    value = 0.5 * (lo + hi)
    logging.info(f"Critical current I_c = {value:.6f} (bracket [{lo:.6f}, {hi:.6f}], {len(history)} solves)")
    return CriticalCurrent(value=value, lower=lo, upper=hi, history=history)


# --- Branch tracking ---

@dataclass
class Encounter:
    kind: str                 # "PASSING" or "COLLISION"
    branches: Tuple[int, int]
    index: int                # encounter lies between values[index] and values[index + 1]
    value: float              # estimated parameter value


@dataclass
class SpectrumSweep:
    axis: str
    values: np.ndarray
    eigenvalues: np.ndarray   # (n_points, k), lambda_1..lambda_k per point
    labels: np.ndarray        # (n_points, k) branch label of each slot
    encounters: List[Encounter]
    m11_abs: np.ndarray       # |sum(w u_1^* u_1)| per point

    def branch(self, label: int) -> np.ndarray:
        """Eigenvalue of one branch along the axis (NaN where it is not among the leading k)."""
        out = np.full(len(self.values), np.nan + 0j)
        for p in range(len(self.values)):
            hit = np.nonzero(self.labels[p] == label)[0]
            if hit.size:
                out[p] = self.eigenvalues[p, hit[0]]
        return out


def _sweep_point(params: Params, nx: int, ny: int, n_eigs: int, method: str, dense_limit: int, tol: float, maxiter: int):
    op, pairs = solve_point(params, nx, ny, n_eigs, method=method, dense_limit=dense_limit, tol=tol, maxiter=maxiter)
    c0 = float(np.abs(op.phi0).max())
    m11 = abs(np.sum(op.grid.weights * pairs[0].u[:, ::-1] * pairs[0].u))
    return [p.lam for p in pairs], np.stack([p.u for p in pairs]), op.grid.weights, c0, m11


def _overlaps(prev: np.ndarray, new: np.ndarray, w: np.ndarray) -> np.ndarray:
    """|<u_a, v_b>_W| / (|u_a| |v_b|) for stacks of fields."""
    g = np.abs(np.einsum("aij,bij,ij->ab", np.conj(prev), new, w))
    na = np.sqrt(np.einsum("aij,ij->a", np.abs(prev) ** 2, w))
    nb = np.sqrt(np.einsum("aij,ij->a", np.abs(new) ** 2, w))
    return g / np.outer(na, nb)


def track_branches(
    axis: str,
    values: Sequence[float],
    params: Params,
    nx: int,
    ny: int,
    k: int = 4,
    guard: int = 2,
    method: str = "auto",
    dense_limit: int = DENSE_LIMIT,
    tol: float = EIG_TOL,
    maxiter: int = EIG_MAXITER,
    overlap_min: float = OVERLAP_MIN,
    im_tol_rel: float = IM_TOL_REL,
    workers: int = 1,
) -> SpectrumSweep:
    """
    Leading eigenvalues along a monotone axis in "I" or "h", with branch labels.

    Points are solved independently (joblib); branches are then matched
    between consecutive points by maximal eigenfunction overlap, tracking
    k + guard pairs so that branches entering from above are recognized.

    Raises:
        RefinementNeeded: A leading branch has overlap below overlap_min
            between two consecutive points.
    """
    if axis not in ("I", "h"):
        raise ValueError(f"sweep axis must be 'I' or 'h', got '{axis}'")
    values = np.asarray(values, dtype=float)
    if values.size < 2 or not (np.all(np.diff(values) > 0) or np.all(np.diff(values) < 0)):
        raise ValueError("sweep axis must be strictly monotone with at least two points")
    n_track = min(k + guard, 12)

    logging.info(f"Spectrum sweep over {axis} in [{values[0]}, {values[-1]}] ({values.size} points, workers={workers})")
    results = Parallel(n_jobs=workers)(
        delayed(_sweep_point)(params.with_(**{axis: float(v)}), nx, ny, n_track, method, dense_limit, tol, maxiter)
        for v in values
    )

    lams = np.array([r[0] for r in results])          # (P, n_track)
    w = results[0][2]
    c0 = results[0][3]
    labels = np.zeros((values.size, n_track), dtype=int)
    labels[0] = np.arange(n_track)
    next_label = n_track
    for p in range(1, values.size):
        ov = _overlaps(results[p - 1][1], results[p][1], w)
        rows, cols = linear_sum_assignment(-ov)
        assigned = np.full(n_track, -1)
        for r, c in zip(rows, cols):
            if r < k and ov[r, c] < overlap_min:
                raise RefinementNeeded(float(values[p - 1]), float(values[p]), float(ov[r, c]))
            if ov[r, c] >= overlap_min:
                assigned[c] = labels[p - 1, r]
        for c in range(n_track):
            if assigned[c] < 0:
                assigned[c] = next_label
                next_label += 1
        labels[p] = assigned

    currents = values if axis == "I" else np.full(values.size, params.I)
    encounters = _encounters(values, lams, labels, currents, c0, im_tol_rel)
    for e in encounters:
        logging.info(f"{e.kind} of branches {e.branches} near {axis}={e.value:.4f}")
    return SpectrumSweep(
        axis=axis,
        values=values,
        eigenvalues=lams[:, :k],
        labels=labels[:, :k],
        encounters=encounters,
        m11_abs=np.array([r[4] for r in results]),
    )


def _encounters(values, lams, labels, currents, c0, im_tol_rel) -> List[Encounter]:
    found: List[Encounter] = []
    for p in range(values.size - 1):
        slot0 = {int(lab): s for s, lab in enumerate(labels[p])}
        slot1 = {int(lab): s for s, lab in enumerate(labels[p + 1])}
        common = [lab for lab in slot0 if lab in slot1]
        for ia, a in enumerate(common):
            for b in common[ia + 1:]:
                la0, lb0 = lams[p, slot0[a]], lams[p, slot0[b]]
                la1, lb1 = lams[p + 1, slot1[a]], lams[p + 1, slot1[b]]
                real0 = _is_real(la0, c0, currents[p], im_tol_rel) and _is_real(lb0, c0, currents[p], im_tol_rel)
                real1 = _is_real(la1, c0, currents[p + 1], im_tol_rel) and _is_real(lb1, c0, currents[p + 1], im_tol_rel)
                if (real0 and not real1 and _conjugate_pair(la1, lb1)) or (real1 and not real0 and _conjugate_pair(la0, lb0)):
                    found.append(Encounter("COLLISION", (a, b), p, float(0.5 * (values[p] + values[p + 1]))))
                elif real0 and real1:
                    d0, d1 = la0.real - lb0.real, la1.real - lb1.real
                    if d0 * d1 < 0:
                        t = d0 / (d0 - d1)
                        found.append(Encounter("PASSING", (a, b), p, float(values[p] + t * (values[p + 1] - values[p]))))
    found.sort(key=lambda e: (e.index, e.value))
    return found


def _is_real(lam: complex, c0: float, current: float, rel: float) -> bool:
    return abs(lam.imag) <= im_tolerance(lam, c0, current, rel)


def _conjugate_pair(a: complex, b: complex) -> bool:
    return abs(a - np.conj(b)) <= ENCOUNTER_REL * max(1.0, abs(a))
