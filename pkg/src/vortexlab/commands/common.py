# src/vortexlab/commands/common.py

"""Helpers shared by the command modules."""

import logging
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from vortexlab.config import RunConfig
from vortexlab.errors import ConfigError
from vortexlab.normal_form import NormalFormData, leading_psi
from vortexlab.spectral import DiscreteOperator, EigenPair, solve_point
from vortexlab.tdgl import detect_vortices
from vortexlab.vortex_law import BetaProfile


def eigen_settings(cfg: RunConfig) -> Dict[str, Any]:
    return {
        "method": cfg.eig_method,
        "dense_limit": cfg.dense_limit,
        "tol": cfg.eig_tol,
        "maxiter": cfg.eig_maxiter,
    }


def leading_pairs(cfg: RunConfig, k: int = 0, **changes) -> Tuple[DiscreteOperator, List[EigenPair]]:
    """Operator and leading eigenpairs at the configured point (or with some parameters changed)."""
    params = cfg.params.with_(**changes) if changes else cfg.params
    return solve_point(params, cfg.nx, cfg.ny, k or cfg.n_eigs, **eigen_settings(cfg))


def resolve_eps(cfg: RunConfig, re_lambda1: float) -> float:
    """eps from the config: explicit eps, gamma - Re lambda_1, or eps_rel Re lambda_1."""
    if cfg.eps is not None:
        eps = float(cfg.eps)
    elif cfg.gamma is not None:
        eps = float(cfg.gamma) - re_lambda1
    else:
        eps = cfg.eps_rel * re_lambda1
        logging.info(f"Neither eps nor gamma set; using eps = {cfg.eps_rel} Re lambda_1 = {eps:.6g}")
    if not eps > 0:
        raise ConfigError(f"eps = {eps:.6g} is not above threshold (Re lambda_1 = {re_lambda1:.6g}); raise gamma or eps")
    return eps


def complex_summary(z: complex) -> Dict[str, float]:
    return {"re": float(z.real), "im": float(z.imag)}


def eigenfunction_vortices(u: np.ndarray, grid, threshold: float) -> Dict[str, int]:
    """Count and total degree of the zeros of an eigenfunction (magnetic vortices at large h)."""
    snap = detect_vortices(u, grid, threshold)
    return {"count": len(snap.vortices), "total_degree": snap.total_degree}


def centre_line_field(nf: NormalFormData, profile: BetaProfile, eps: float) -> Callable[[float], np.ndarray]:
    """
    t -> leading-order field on the orbit, with u1 rescaled so that u1(0, 0) = 1.

    beta is measured against that normalization, so the zeros of this field
    sit where the motion law puts them at the same t.
    """
    anchored = nf.rescaled(1.0 / profile.normalization)
    return lambda t: leading_psi(anchored, eps, t)
