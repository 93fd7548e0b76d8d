# src/vortexlab/grid.py

"""
Uniform tensor-product grid on the rectangle [-L, L] x [-K, K] and the
gauge-covariant finite-difference operators shared by every solver.

Fields are plain numpy arrays of shape ``(nx, ny)``: ``field[i, j]`` is the
value at ``(x[i], y[j])``. Flattened vectors use C order, ``k = i * ny + j``.

The magnetic Laplacian (grad - i h A0)^2 with A0 = (-y, 0) is discretized with
link variables: the x-edge from node (i, j) to (i+1, j) carries the phase
``exp(-i h A0_x dx) = exp(i h y_j dx)``, y-edges carry unit phase.
Boundary nodes that are not Dirichlet (lead) nodes keep the PDE; their ghost
value is eliminated with the centred covariant form of the boundary
condition, so ``W @ L`` (W = trapezoid weights) stays Hermitian for I = 0.
"""

import dataclasses
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy import sparse

# --- Grid limits ---
MIN_NODES: int = 5            # Smallest admissible node count per direction
RECOMMENDED_NODES: int = 16   # Below this a warning is logged
MIN_LEAD_NODES: int = 3       # Lead nodes required on each side when leads are enabled
SNAP_TOL: float = 1e-12       # Relative tolerance for the strict |y| < delta lead test


@dataclass(frozen=True)
class Params:
    """Physical and geometric parameters of one run.

    Attributes:
        L: Half-width of the sample.
        K: Half-height of the sample.
        delta: Lead half-length. ``delta == K`` selects full-side leads,
            ``delta == 0`` disables the leads.
        h: Applied magnetic field.
        I: Applied current.
        gamma: Control value Gamma of the reaction term, if fixed directly.
        eps: Distance above threshold, Gamma = Re(lambda_1) + eps.
    """

    L: float = 1.0
    K: float = 2.0 / 3.0
    delta: float = 4.0 / 15.0
    h: float = 0.0
    I: float = 0.0
    gamma: Optional[float] = None
    eps: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ValueError(f"L must be > 0, got {self.L}")
        if not self.K > 0:
            raise ValueError(f"K must be > 0, got {self.K}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.delta > self.K:
            raise ValueError(f"delta must be < K (delta == K selects full-side leads), got delta={self.delta}, K={self.K}")
        if self.h < 0:
            raise ValueError(f"h must be >= 0, got {self.h}")
        if self.I < 0:
            raise ValueError(f"I must be >= 0, got {self.I}")
        if self.gamma is not None and self.eps is not None:
            raise ValueError("set either gamma or eps, not both")

    @property
    def full_side_leads(self) -> bool:
        return self.delta >= self.K

    @property
    def leads_enabled(self) -> bool:
        return self.delta > 0

    def with_(self, **changes) -> "Params":
        """Returns a copy with some fields replaced."""
        return dataclasses.replace(self, **changes)

    def resolve_gamma(self, re_lambda1: float) -> float:
        """Gamma for this run, given the real part of the leading eigenvalue."""
        if self.gamma is not None:
            return float(self.gamma)
        if self.eps is not None:
            return float(re_lambda1 + self.eps)
        raise ValueError("neither gamma nor eps is set")

    def resolve_eps(self, re_lambda1: float) -> float:
        if self.eps is not None:
            return float(self.eps)
        if self.gamma is not None:
            return float(self.gamma - re_lambda1)
        raise ValueError("neither gamma nor eps is set")


@dataclass(frozen=True)
class Grid:
    """Node set of the rectangle. Hashable, so factorizations can be cached per grid."""

    L: float
    K: float
    delta: float
    nx: int
    ny: int

    # --- Spacings and coordinates ---

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.nx - 1)

    @property
    def dy(self) -> float:
        return 2.0 * self.K / (self.ny - 1)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def center(self) -> Tuple[int, int]:
        """Index of the node at (0, 0)."""
        return ((self.nx - 1) // 2, (self.ny - 1) // 2)

    @cached_property
    def x(self) -> np.ndarray:
        return _symmetric_axis(self.L, self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return _symmetric_axis(self.K, self.ny)

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        X.flags.writeable = False
        Y.flags.writeable = False
        return X, Y

    # --- Boundary sets ---

    @cached_property
    def lead_rows(self) -> np.ndarray:
        """Boolean mask over y-indices: True where x = +-L is a lead node."""
        if self.delta >= self.K:
            rows = np.ones(self.ny, dtype=bool)
        elif self.delta <= 0:
            rows = np.zeros(self.ny, dtype=bool)
        else:
            rows = np.abs(self.y) < self.delta - SNAP_TOL * self.K
        rows.flags.writeable = False
        return rows

    @cached_property
    def dirichlet(self) -> np.ndarray:
        """(nx, ny) mask of lead (Dirichlet) nodes."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = self.lead_rows
        mask[-1, :] = self.lead_rows
        mask.flags.writeable = False
        return mask

    @cached_property
    def boundary(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        mask.flags.writeable = False
        return mask

    @cached_property
    def free(self) -> np.ndarray:
        """Flat mask of unknowns (every node that is not a lead node)."""
        mask = ~self.dirichlet.ravel()
        mask.flags.writeable = False
        return mask

    # --- Quadrature ---

    @cached_property
    def cx(self) -> np.ndarray:
        """1D trapezoid factors along x (1/2 at the ends)."""
        return _trapezoid_factors(self.nx)

    @cached_property
    def cy(self) -> np.ndarray:
        return _trapezoid_factors(self.ny)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights on the tensor grid."""
        w = self.dx * self.dy * np.outer(self.cx, self.cy)
        w.flags.writeable = False
        return w

    def integrate(self, values: np.ndarray):
        """Trapezoid integral of a field over the rectangle (bilinear, no conjugation)."""
        return np.sum(self.weights * values)

    def index(self, i: int, j: int) -> int:
        return i * self.ny + j


def _trapezoid_factors(n: int) -> np.ndarray:
    c = np.ones(n)
    c[[0, -1]] = 0.5
    c.flags.writeable = False
    return c


def _symmetric_axis(half: float, n: int) -> np.ndarray:
    # Exact antisymmetry so reflected nodes and the lead test agree bit for bit
    axis = half * np.linspace(-1.0, 1.0, n)
    axis = 0.5 * (axis - axis[::-1])
    axis.flags.writeable = False
    return axis


def build_grid(params: Params, nx: int, ny: int) -> Grid:
    """
    Builds the tensor grid for a parameter set.

    Args:
        params: Geometry (L, K, delta) and physics parameters.
        nx: Node count in x, boundary nodes included. Must be odd.
        ny: Node count in y, boundary nodes included. Must be odd.

    Returns:
        The validated Grid.

    Raises:
        ValueError: Counts too small, even, or leaving fewer than three lead
            nodes per side.
    """
    for name, count in (("nx", nx), ("ny", ny)):
        if not isinstance(count, (int, np.integer)):
            raise TypeError(f"{name} must be an integer, got {type(count).__name__}")
        if count < MIN_NODES:
            raise ValueError(f"{name}={count} is too coarse (need at least {MIN_NODES} nodes)")
        if count % 2 == 0:
            raise ValueError(f"{name}={count} must be odd so that the centre lines are grid lines")
        if count < RECOMMENDED_NODES:
            logging.warning(f"{name}={count} is below the recommended {RECOMMENDED_NODES} nodes")

    grid = Grid(L=float(params.L), K=float(params.K), delta=float(params.delta), nx=int(nx), ny=int(ny))
    if params.leads_enabled:
        n_lead = int(grid.lead_rows.sum())
        if n_lead < MIN_LEAD_NODES:
            raise ValueError(
                f"only {n_lead} lead node(s) per side with ny={ny}, delta={params.delta}; "
                f"need at least {MIN_LEAD_NODES}"
            )
    else:
        logging.info("Leads disabled (delta = 0): no Dirichlet nodes")
    logging.debug(f"Built grid {nx}x{ny}: dx={grid.dx:.4g}, dy={grid.dy:.4g}, lead nodes per side={int(grid.lead_rows.sum())}")
    return grid


def validate_field(field: np.ndarray, grid: Grid, name: str = "field") -> np.ndarray:
    """Checks shape and finiteness of a grid field; returns it as an ndarray."""
    arr = np.asarray(field)
    if arr.shape != grid.shape:
        raise ValueError(f"{name} has shape {arr.shape}, grid expects {grid.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf values")
    return arr


def pt_partner(u: np.ndarray) -> np.ndarray:
    """u^dagger(x, y) = conj(u(-x, y))."""
    return np.conj(u[::-1, :])


def y_reflect(u: np.ndarray) -> np.ndarray:
    """u^star(x, y) = u(x, -y)."""
    return u[:, ::-1]


# --- Link variables and the covariant Laplacian ---

def link_phases(grid: Grid, h: float) -> np.ndarray:
    """Phase factors on x-edges, shape (nx-1, ny): exp(-i h (-y_j) dx)."""
    theta = h * grid.y * grid.dx
    return np.broadcast_to(np.exp(1j * theta), (grid.nx - 1, grid.ny)).copy()


def covariant_laplacian(
    psi: np.ndarray,
    grid: Grid,
    h: float,
    links: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """
    Discrete (grad - i h A0)^2 psi at interior nodes.

    Args:
        psi: Complex field on the grid.
        grid: The grid.
        h: Field magnitude (ignored when ``links`` is given).
        links: Optional (ux, uy) edge phases of shapes (nx-1, ny) and (nx, ny-1)
            for a general vector potential.

    Returns:
        Field with the interior values filled; boundary nodes are zero (their
        rows come from apply_bcs).
    """
    psi = validate_field(psi, grid, "psi")
    if links is None:
        ux = link_phases(grid, h)
        uy = np.ones((grid.nx, grid.ny - 1))
    else:
        ux, uy = links
    c = psi[1:-1, 1:-1]
    fwd_x = ux[1:, 1:-1] * psi[2:, 1:-1]
    bwd_x = np.conj(ux[:-1, 1:-1]) * psi[:-2, 1:-1]
    fwd_y = uy[1:-1, 1:] * psi[1:-1, 2:]
    bwd_y = np.conj(uy[1:-1, :-1]) * psi[1:-1, :-2]
    out = np.zeros(grid.shape, dtype=complex)
    out[1:-1, 1:-1] = (fwd_x - 2.0 * c + bwd_x) / grid.dx**2 + (fwd_y - 2.0 * c + bwd_y) / grid.dy**2
    return out


def stencil_matrix(grid: Grid, h: float, rows: np.ndarray) -> sparse.csr_matrix:
    """
    Rows of the closed covariant Laplacian for the nodes selected by ``rows``.

    Interior nodes get the five-point link stencil. On a boundary node the
    missing neighbour is a ghost value eliminated with the centred covariant
    condition (Psi_x + i h y Psi = 0 on the sides, Psi_y = 0 on top and
    bottom), which doubles the coupling to the inner neighbour. Corners close
    in both directions.
    """
    nx, ny = grid.shape
    I, J = np.nonzero(np.asarray(rows).reshape(grid.shape))
    k = I * ny + J
    ux = link_phases(grid, h)
    idx2, idy2 = 1.0 / grid.dx**2, 1.0 / grid.dy**2

    r_parts = [k]
    c_parts = [k]
    v_parts = [np.full(k.shape, -2.0 * (idx2 + idy2), dtype=complex)]

    # x-neighbours
    m = I < nx - 1
    r_parts.append(k[m])
    c_parts.append(k[m] + ny)
    v_parts.append(ux[I[m], J[m]] * idx2 * np.where(I[m] == 0, 2.0, 1.0))
    m = I > 0
    r_parts.append(k[m])
    c_parts.append(k[m] - ny)
    v_parts.append(np.conj(ux[I[m] - 1, J[m]]) * idx2 * np.where(I[m] == nx - 1, 2.0, 1.0))

    # y-neighbours (unit links)
    m = J < ny - 1
    r_parts.append(k[m])
    c_parts.append(k[m] + 1)
    v_parts.append(idy2 * np.where(J[m] == 0, 2.0, 1.0).astype(complex))
    m = J > 0
    r_parts.append(k[m])
    c_parts.append(k[m] - 1)
    v_parts.append(idy2 * np.where(J[m] == ny - 1, 2.0, 1.0).astype(complex))

    mat = sparse.coo_matrix(
        (np.concatenate(v_parts), (np.concatenate(r_parts), np.concatenate(c_parts))),
        shape=(grid.size, grid.size),
    )
    return mat.tocsr()


def laplacian_matrix(grid: Grid, h: float) -> sparse.csr_matrix:
    """Interior rows of the covariant Laplacian; boundary rows are empty."""
    interior = ~grid.boundary
    return stencil_matrix(grid, h, interior)


def apply_bcs(op: sparse.spmatrix, params: Params, grid: Grid) -> sparse.csr_matrix:
    """
    Fills the boundary rows of an assembled operator.

    Lead nodes of x = +-L become identity rows (homogeneous Dirichlet);
    every other boundary node gets its closed covariant stencil row.

    Args:
        op: N x N operator whose interior rows are already assembled.
        params: Supplies h.
        grid: The grid (lead set included).

    Returns:
        The operator with boundary rows replaced.
    """
    keep = sparse.diags((~grid.boundary.ravel()).astype(float))
    interior_part = keep @ sparse.csr_matrix(op)
    closed = grid.boundary & ~grid.dirichlet
    bc_rows = stencil_matrix(grid, params.h, closed)
    lead = grid.dirichlet.ravel().astype(float)
    return (interior_part + bc_rows + sparse.diags(lead)).tocsr()


def bc_residual(psi: np.ndarray, grid: Grid, h: float) -> np.ndarray:
    """
    One-sided second-order residual of the boundary conditions.

    Lead nodes report Psi itself, other side nodes the covariant derivative
    Psi_x + i h y Psi, top and bottom nodes Psi_y. Interior entries are zero.
    Used to check that a field satisfies the boundary conditions to O(dx^2).
    """
    psi = validate_field(psi, grid, "psi")
    ux = link_phases(grid, h)
    res = np.zeros(grid.shape, dtype=complex)
    # x = -L: transport psi_1, psi_2 back to node 0
    t1 = ux[0] * psi[1]
    t2 = ux[0] * ux[1] * psi[2]
    res[0] = (-3.0 * psi[0] + 4.0 * t1 - t2) / (2.0 * grid.dx)
    # x = +L
    s1 = np.conj(ux[-1]) * psi[-2]
    s2 = np.conj(ux[-1]) * np.conj(ux[-2]) * psi[-3]
    res[-1] = (3.0 * psi[-1] - 4.0 * s1 + s2) / (2.0 * grid.dx)
    # y = -K and y = +K (corners take the y condition)
    res[:, 0] = (-3.0 * psi[:, 0] + 4.0 * psi[:, 1] - psi[:, 2]) / (2.0 * grid.dy)
    res[:, -1] = (3.0 * psi[:, -1] - 4.0 * psi[:, -2] + psi[:, -3]) / (2.0 * grid.dy)
    res[grid.dirichlet] = psi[grid.dirichlet]
    return res


def trapezoid_weights(grid: Grid) -> np.ndarray:
    return grid.weights


def integrate(values: np.ndarray, grid: Grid):
    """Bilinear trapezoid integral; callers conjugate explicitly when they need a norm."""
    return grid.integrate(values)
