# src/vortexlab/normal_form.py

"""
Hopf normal-form data for the bifurcation from the normal state.

Near Gamma = Re(lambda_1) the PT-symmetric reduced dynamics is

    da/dt = (eps - i Im lambda_1) a + n4 |a|^2 a,

with the cubic coefficient n4 computed from u_1, its PT partner
u_2 = conj(u_1(-x, y)), and the auxiliary potentials phi_ij. For Re n4 < 0
the periodic orbit a(t) = r exp(-i chi t) has r = sqrt(eps / |Re n4|) and
chi = Im lambda_1 + gamma eps with gamma = Im n4 / Re n4.

When lambda_1 is real (I below the critical current) the bifurcation is
stationary instead; see stationary_branch.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from vortexlab.errors import NearDefectiveError, UnsupportedPointError
from vortexlab.grid import Grid, pt_partner, validate_field, y_reflect
from vortexlab.poisson import bilinear_current, solve_divform
from vortexlab.spectral import DEFECTIVE_TOL, EigenPair

PhiSet = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]  # (phi11, phi22, phi12, phi21)


def solve_phi_ij(ui: np.ndarray, uj: np.ndarray, grid: Grid, h: float) -> np.ndarray:
    """
    Solves Laplace(phi_ij) = div((i/2)[u_i grad(u_j*) - u_j* grad(u_i)] + h y u_i u_j*)
    with homogeneous Neumann data and mean zero.

    The result is real for u_i = u_j and satisfies conj(phi_ij) = phi_ji.
    """
    ui = validate_field(ui, grid, "u_i")
    uj = validate_field(uj, grid, "u_j")
    phi = solve_divform(grid, bilinear_current(ui, uj, grid, h))
    if ui is uj or np.array_equal(ui, uj):
        return phi.real
    return phi


def compute_n4(u1: np.ndarray, u2: np.ndarray, phis: PhiSet, grid: Grid) -> complex:
    """
    Cubic coefficient

        n4 = [ -sum w (|u1|^2 + 2|u2|^2) u1 u1s - i sum w ((phi11 + phi22) u1 u1s + phi12 u1s u2) ]
             / sum w u1 u1s

    with u1s(x, y) = u1(x, -y) and trapezoid weights w.

    Raises:
        NearDefectiveError: |sum w u1 u1s| <= 1e-4 |sum w u1^2|.
    """
    phi11, phi22, phi12, _ = phis
    w = grid.weights
    u1s = y_reflect(u1)
    den = np.sum(w * u1 * u1s)
    scale = abs(np.sum(w * u1 * u1))
    if abs(den) <= DEFECTIVE_TOL * scale:
        raise NearDefectiveError(
            f"|sum w u1 u1*| = {abs(den):.3e} is too close to zero: the point is too close to the eigenvalue collision"
        )
    cubic = -np.sum(w * (np.abs(u1) ** 2 + 2.0 * np.abs(u2) ** 2) * u1 * u1s)
    nonlocal_ = -1j * np.sum(w * ((phi11 + phi22) * u1 * u1s + phi12 * u1s * u2))
    return complex((cubic + nonlocal_) / den)


@dataclass
class NormalFormData:
    """
    Normal-form data at one parameter point.

    Attributes:
        n4: Cubic coefficient.
        lambda1: Leading eigenvalue (Im > 0).
        u1, u2: Leading eigenfunction and its PT partner.
        phi11, phi22, phi12, phi21: Auxiliary potentials.
        m11: sum(w u1(x, -y) u1(x, y)).
    """

    n4: complex
    lambda1: complex
    u1: np.ndarray
    u2: np.ndarray
    phi11: np.ndarray
    phi22: np.ndarray
    phi12: np.ndarray
    phi21: np.ndarray
    m11: complex
    grid: Grid
    h: float

    @property
    def gamma_ratio(self) -> float:
        return self.n4.imag / self.n4.real

    @property
    def supercritical(self) -> bool:
        return self.n4.real < 0

    def amplitude(self, eps: float) -> float:
        return float(np.sqrt(eps / abs(self.n4.real)))

    def chi(self, eps: float) -> float:
        return float(self.lambda1.imag + self.gamma_ratio * eps)

    def rescaled(self, c: complex) -> "NormalFormData":
        """Data for u1 -> c u1; n4 scales by |c|^2, gamma is unchanged."""
        c = complex(c)
        return NormalFormData(
            n4=self.n4 * abs(c) ** 2,
            lambda1=self.lambda1,
            u1=c * self.u1,
            u2=np.conj(c) * self.u2,
            phi11=abs(c) ** 2 * self.phi11,
            phi22=abs(c) ** 2 * self.phi22,
            phi12=c * c * self.phi12,
            phi21=np.conj(c) ** 2 * self.phi21,
            m11=c * c * self.m11,
            grid=self.grid,
            h=self.h,
        )


def compute_normal_form(pair: EigenPair, grid: Grid, h: float) -> NormalFormData:
    """
    Normal-form data from the leading eigenpair.

    Raises:
        UnsupportedPointError: lambda_1 is real (stationary regime).
        NearDefectiveError: too close to the collision.
    """
    if pair.lam.imag <= 0:
        raise UnsupportedPointError(
            f"lambda_1 = {pair.lam:.6g} is not a complex eigenvalue with Im > 0; the bifurcation is stationary here"
        )
    u1 = pair.u
    u2 = pt_partner(u1)
    phi11 = solve_phi_ij(u1, u1, grid, h)
    phi22 = solve_phi_ij(u2, u2, grid, h)
    phi12 = solve_phi_ij(u1, u2, grid, h)
    phi21 = solve_phi_ij(u2, u1, grid, h)
    n4 = compute_n4(u1, u2, (phi11, phi22, phi12, phi21), grid)
    m11 = complex(np.sum(grid.weights * y_reflect(u1) * u1))
    nf = NormalFormData(n4, pair.lam, u1, u2, phi11, phi22, phi12, phi21, m11, grid, h)
    logging.info(f"n4 = {n4.real:.6g}{n4.imag:+.6g}j, gamma = {nf.gamma_ratio:.6g}, Im lambda_1 = {pair.lam.imag:.6g}")
    if not nf.supercritical:
        logging.warning(f"Re n4 = {n4.real:.6g} >= 0: point is UNSUPPORTED (not supercritical)")
    return nf


@dataclass
class HopfOrbit:
    r: float
    chi: float
    period: float
    r_printed: float    # eps^(1/2) / |Re n4|, reported next to the fixed-point amplitude


def hopf_orbit(nf: NormalFormData, eps: float, eps_max: Optional[float] = None) -> HopfOrbit:
    """
    Periodic orbit a(t) = r exp(-i chi t) of the amplitude equation.

    Args:
        nf: Normal-form data with Re n4 < 0.
        eps: Distance above threshold, 0 < eps (<= eps_max if given).

    Raises:
        ValueError: eps out of range or chi <= 0.
        UnsupportedPointError: Re n4 >= 0.
    """
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if eps_max is not None and eps > eps_max:
        raise ValueError(f"eps={eps} exceeds eps_max={eps_max}")
    if not nf.supercritical:
        raise UnsupportedPointError(f"Re n4 = {nf.n4.real:.6g} >= 0: no supercritical Hopf orbit")
    r = nf.amplitude(eps)
    chi = nf.chi(eps)
    if not chi > 0:
        raise ValueError(f"orbit frequency chi = {chi:.6g} is not positive at eps={eps}")
    return HopfOrbit(r=r, chi=chi, period=2.0 * np.pi / chi, r_printed=float(np.sqrt(eps) / abs(nf.n4.real)))


def leading_psi(nf: NormalFormData, eps: float, t: float) -> np.ndarray:
    """a(t) u1 + conj(a(t)) u2 with a(t) = r exp(-i chi t)."""
    orbit = hopf_orbit(nf, eps)
    a = orbit.r * np.exp(-1j * orbit.chi * t)
    return a * nf.u1 + np.conj(a) * nf.u2


# --- Stationary regime ---

@dataclass
class StationaryBranch:
    """psi ~ amplitude(eps) u1 for real lambda_1."""

    c: complex
    lambda1: complex
    u1: np.ndarray
    phi11: np.ndarray

    @property
    def supercritical(self) -> bool:
        return self.c.real < 0

    def amplitude(self, eps: float) -> float:
        if not eps > 0:
            raise ValueError(f"eps must be > 0, got {eps}")
        if not self.supercritical:
            raise UnsupportedPointError(f"Re c = {self.c.real:.6g} >= 0: no supercritical stationary branch")
        return float(np.sqrt(eps / abs(self.c.real)))


def stationary_branch(pair: EigenPair, grid: Grid, h: float) -> StationaryBranch:
    """
    Cubic coefficient of the one-dimensional reduction along u1:
    c = sum w u1s (-|u1|^2 u1 - i phi11 u1) / sum w u1s u1.
    """
    u = pair.u
    us = y_reflect(u)
    w = grid.weights
    den = np.sum(w * us * u)
    if abs(den) <= DEFECTIVE_TOL * abs(np.sum(w * u * u)):
        raise NearDefectiveError(f"|sum w u1 u1*| = {abs(den):.3e} is too close to zero")
    phi11 = solve_phi_ij(u, u, grid, h)
    c = complex(np.sum(w * us * (-(np.abs(u) ** 2) * u - 1j * phi11 * u)) / den)
    logging.info(f"Stationary branch coefficient c = {c.real:.6g}{c.imag:+.6g}j")
    return StationaryBranch(c=c, lambda1=pair.lam, u1=u, phi11=phi11)
