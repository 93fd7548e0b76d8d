# src/vortexlab/poisson.py

"""
Neumann Poisson solves on the tensor grid.

The discrete problem is posed in weak (finite-volume) form: with the
trapezoid weights W and the closed five-point Laplacian Lap_N at h = 0, the
stiffness S = -W @ Lap_N is real symmetric with the constants as its only
null vectors. The constant nullspace is removed with a bordered system

    [ S   w ] [phi]   [b]
    [ w^T 0 ] [mu ] = [0]

whose last row fixes the trapezoid mean of phi to zero. Right-hand sides are
projected onto the range of S first, so mu vanishes up to roundoff.

Divergence-form sources are assembled edge by edge (flux differencing), so
the discrete compatibility condition holds exactly for any edge flux.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import norm as sparse_norm, splu

from vortexlab.errors import SolverError
from vortexlab.grid import Grid, Params, link_phases, stencil_matrix, validate_field


@dataclass(frozen=True)
class EdgeFlux:
    """
    Vector field sampled on grid edges.

    Attributes:
        fx: Component along x-edges, shape (nx-1, ny); fx[i, j] lives between
            nodes (i, j) and (i+1, j).
        fy: Component along y-edges, shape (nx, ny-1).
        normal_x: Optional outward normal flux F.n on x = -L (row 0) and
            x = +L (row 1), shape (2, ny). None means zero.
        normal_y: Optional outward normal flux on y = -K (column 0) and
            y = +K (column 1), shape (nx, 2). None means zero.
    """

    fx: np.ndarray
    fy: np.ndarray
    normal_x: Optional[np.ndarray] = None
    normal_y: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, grid: Grid, dtype=float) -> "EdgeFlux":
        return cls(np.zeros((grid.nx - 1, grid.ny), dtype=dtype), np.zeros((grid.nx, grid.ny - 1), dtype=dtype))

    @classmethod
    def uniform(cls, grid: Grid, fx: float, fy: float) -> "EdgeFlux":
        """Constant field (fx, fy) with its matching boundary normal flux."""
        nx_data = np.empty((2, grid.ny))
        nx_data[0], nx_data[1] = -fx, fx
        ny_data = np.empty((grid.nx, 2))
        ny_data[:, 0], ny_data[:, 1] = -fy, fy
        return cls(
            np.full((grid.nx - 1, grid.ny), float(fx)),
            np.full((grid.nx, grid.ny - 1), float(fy)),
            nx_data,
            ny_data,
        )

    @property
    def dtype(self):
        parts = [self.fx, self.fy] + [p for p in (self.normal_x, self.normal_y) if p is not None]
        return np.result_type(*parts)

    def scaled(self, factor) -> "EdgeFlux":
        return EdgeFlux(
            factor * self.fx,
            factor * self.fy,
            None if self.normal_x is None else factor * self.normal_x,
            None if self.normal_y is None else factor * self.normal_y,
        )

    def __add__(self, other: "EdgeFlux") -> "EdgeFlux":
        def _sum(a, b):
            if a is None and b is None:
                return None
            if a is None:
                return b
            if b is None:
                return a
            return a + b

        return EdgeFlux(
            self.fx + other.fx,
            self.fy + other.fy,
            _sum(self.normal_x, other.normal_x),
            _sum(self.normal_y, other.normal_y),
        )

    def check(self, grid: Grid) -> None:
        if self.fx.shape != (grid.nx - 1, grid.ny):
            raise ValueError(f"fx has shape {self.fx.shape}, expected {(grid.nx - 1, grid.ny)}")
        if self.fy.shape != (grid.nx, grid.ny - 1):
            raise ValueError(f"fy has shape {self.fy.shape}, expected {(grid.nx, grid.ny - 1)}")
        if self.normal_x is not None and self.normal_x.shape != (2, grid.ny):
            raise ValueError(f"normal_x has shape {self.normal_x.shape}, expected {(2, grid.ny)}")
        if self.normal_y is not None and self.normal_y.shape != (grid.nx, 2):
            raise ValueError(f"normal_y has shape {self.normal_y.shape}, expected {(grid.nx, 2)}")
        for part in (self.fx, self.fy, self.normal_x, self.normal_y):
            if part is not None and not np.all(np.isfinite(part)):
                raise ValueError("flux contains NaN or Inf values")


# --- Assembly ---

def neumann_stiffness(grid: Grid) -> sparse.csr_matrix:
    """S = -W @ Lap_N over all nodes, real symmetric, S @ 1 = 0."""
    lap = stencil_matrix(grid, 0.0, np.ones(grid.shape, dtype=bool)).real
    stiff = -(sparse.diags(grid.weights.ravel()) @ lap)
    return (0.5 * (stiff + stiff.T)).tocsr()


def divergence_rhs(flux: EdgeFlux, grid: Grid) -> np.ndarray:
    """Weak-form right-hand side of Laplace(phi) = div(F): b = D^T (kappa F) - ds (F.n)."""
    flux.check(grid)
    b = np.zeros(grid.shape, dtype=flux.dtype)
    kx = flux.fx * (grid.dy * grid.cy)[None, :]
    b[1:, :] += kx
    b[:-1, :] -= kx
    ky = flux.fy * (grid.dx * grid.cx)[:, None]
    b[:, 1:] += ky
    b[:, :-1] -= ky
    if flux.normal_x is not None:
        ds = grid.dy * grid.cy
        b[0, :] -= ds * flux.normal_x[0]
        b[-1, :] -= ds * flux.normal_x[1]
    if flux.normal_y is not None:
        ds = grid.dx * grid.cx
        b[:, 0] -= ds * flux.normal_y[:, 0]
        b[:, -1] -= ds * flux.normal_y[:, 1]
    return b


class PoissonSolver:
    """
    Factorized mean-zero Neumann solver for one grid.

    Read-only after construction; concurrent solves against one instance are
    safe because SuperLU.solve does not mutate the factorization.
    """

    def __init__(self, grid: Grid) -> None:
        self.grid = grid
        self.stiffness = neumann_stiffness(grid)
        w = grid.weights.ravel()
        self._w = w
        border = sparse.csr_matrix(w[None, :])
        bordered = sparse.bmat([[self.stiffness, border.T], [border, None]], format="csc")
        try:
            self._lu = splu(bordered)
        except RuntimeError as e:
            raise SolverError(f"Poisson factorization failed on {grid.nx}x{grid.ny} grid: {e}") from e
        logging.debug(f"Factorized Neumann Poisson system ({grid.size + 1} unknowns)")

    def project(self, rhs: np.ndarray) -> np.ndarray:
        """Removes the component of rhs outside range(S)."""
        total = rhs.sum()
        return rhs - self._w.reshape(rhs.shape) * (total / self._w.sum())

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """
        Solves S phi = rhs in the mean-zero subspace.

        Args:
            rhs: Weak-form load, shape (nx, ny), real or complex.

        Returns:
            phi with trapezoid mean zero, same dtype kind as rhs.
        """
        rhs = np.asarray(rhs)
        if rhs.shape != self.grid.shape:
            raise ValueError(f"rhs has shape {rhs.shape}, expected {self.grid.shape}")
        if np.iscomplexobj(rhs):
            return self._solve_real(rhs.real) + 1j * self._solve_real(rhs.imag)
        return self._solve_real(rhs)

    def _solve_real(self, rhs: np.ndarray) -> np.ndarray:
        b = self.project(np.asarray(rhs, dtype=float)).ravel()
        sol = self._lu.solve(np.append(b, 0.0))
        phi = sol[:-1]
        phi = phi - np.dot(self._w, phi) / self._w.sum()
        return phi.reshape(self.grid.shape)

    def residual(self, phi: np.ndarray, rhs: np.ndarray) -> float:
        """Relative residual ||S phi - P rhs|| / max(||P rhs||, ||S|| ||phi||)."""
        phi = np.asarray(phi)
        b = self.project(np.asarray(rhs)).ravel()
        res = self.stiffness @ phi.ravel() - b
        scale = max(np.linalg.norm(b), sparse_norm(self.stiffness, 1) * np.linalg.norm(phi.ravel()), 1e-300)
        return float(np.linalg.norm(res) / scale)


@lru_cache(maxsize=16)
def poisson_solver(grid: Grid) -> PoissonSolver:
    """Shared factorization per grid."""
    logging.info(f"Building Poisson factorization for {grid.nx}x{grid.ny} grid")
    return PoissonSolver(grid)


# --- Applied-current potential ---

def phi0_rhs(grid: Grid) -> np.ndarray:
    """Load for phi0_x = -1 on the lead part of x = +-L (unit current)."""
    b = np.zeros(grid.shape)
    ds = grid.dy * grid.cy * grid.lead_rows
    # Outward normal derivative is +1 at x = -L and -1 at x = +L
    b[0, :] += ds
    b[-1, :] -= ds
    return b


@lru_cache(maxsize=16)
def _phi0_cached(grid: Grid) -> np.ndarray:
    phi0 = poisson_solver(grid).solve(phi0_rhs(grid))
    phi0.flags.writeable = False
    logging.info(f"Solved phi0 on {grid.nx}x{grid.ny} grid: max|phi0| = {np.abs(phi0).max():.6f}")
    return phi0


def solve_phi0(grid: Grid, params: Optional[Params] = None) -> np.ndarray:
    """
    Unit-current potential phi0.

    Harmonic, phi0_x(+-L, y) = -1 for |y| < delta and 0 elsewhere on the
    sides, phi0_y(x, +-K) = 0, trapezoid mean zero. Independent of h and I.
    The returned array is cached and read-only.

    Args:
        grid: The grid; its delta defines the leads.
        params: Optional, checked for geometric consistency with the grid.
    """
    if params is not None and (params.L, params.K, params.delta) != (grid.L, grid.K, grid.delta):
        raise ValueError(
            f"params geometry (L={params.L}, K={params.K}, delta={params.delta}) does not match the grid"
        )
    return _phi0_cached(grid)


# --- Divergence-form solves ---

def solve_divform(grid: Grid, flux: EdgeFlux) -> np.ndarray:
    """
    Solves Laplace(phi) = div(flux) with the normal flux data carried by the
    EdgeFlux (zero when absent), homogeneous Neumann data for phi, mean zero.
    """
    return poisson_solver(grid).solve(divergence_rhs(flux, grid))


def bilinear_current(ui: np.ndarray, uj: np.ndarray, grid: Grid, h: float) -> EdgeFlux:
    """
    Edge sampling of (i/2)[u_i grad(u_j*) - u_j* grad(u_i)] + h y u_i u_j*,
    i.e. the sesquilinear supercurrent with A0 = (-y, 0).

    bilinear_current(u, u) is real; swapping the arguments conjugates the flux.
    """
    ui = validate_field(ui, grid, "u_i")
    uj = validate_field(uj, grid, "u_j")
    ux = link_phases(grid, h)
    ujc = np.conj(uj)
    gx = (ujc[:-1, :] * ux * ui[1:, :] - ui[:-1, :] * np.conj(ux) * ujc[1:, :]) / (2j * grid.dx)
    gy = (ujc[:, :-1] * ui[:, 1:] - ui[:, :-1] * ujc[:, 1:]) / (2j * grid.dy)
    return EdgeFlux(gx, gy)


def supercurrent(psi: np.ndarray, grid: Grid, h: float) -> EdgeFlux:
    """Gauge-invariant supercurrent Im(conj(psi_p) U psi_q) / d on every edge."""
    psi = validate_field(psi, grid, "psi")
    ux = link_phases(grid, h)
    jx = np.imag(np.conj(psi[:-1, :]) * ux * psi[1:, :]) / grid.dx
    jy = np.imag(np.conj(psi[:, :-1]) * psi[:, 1:]) / grid.dy
    return EdgeFlux(jx, jy)
