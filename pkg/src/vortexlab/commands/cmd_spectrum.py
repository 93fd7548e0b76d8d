# src/vortexlab/commands/cmd_spectrum.py

"""
Command module for 'spectrum': the leading eigenvalues of L along an I or h
axis, with branch labels and PASSING/COLLISION encounters.
"""

import logging

import numpy as np

from vortexlab.commands.common import eigen_settings
from vortexlab.grid import build_grid
from vortexlab.poisson import solve_phi0
from vortexlab.spectral import track_branches

COMMAND_NAME = "spectrum"
COMMAND_HELP = "Leading eigenvalues along sweep_param (I or h) with branch tracking -> spectrum.csv, encounters.json"


def execute(ctx):
    """
    Executes the spectrum command.

    Args:
        ctx: The RunContext.

    Returns:
        Summary with lambda_1 at the first sweep value, the encounter sequence
        and the largest violation of the spectral bounds.
    """
    cfg = ctx.cfg
    values = cfg.sweep_values()
    settings = eigen_settings(cfg)
    sweep = track_branches(
        cfg.sweep_param,
        values,
        cfg.params,
        cfg.nx,
        cfg.ny,
        k=cfg.n_eigs,
        method=settings["method"],
        dense_limit=settings["dense_limit"],
        tol=settings["tol"],
        maxiter=settings["maxiter"],
        overlap_min=cfg.overlap_min,
        im_tol_rel=cfg.im_tol_rel,
        workers=cfg.workers,
    )

    k = sweep.eigenvalues.shape[1]
    columns = [cfg.sweep_param]
    for n in range(1, k + 1):
        columns += [f"re_lambda{n}", f"im_lambda{n}", f"branch{n}"]
    columns.append("abs_m11")
    rows = []
    for p, value in enumerate(sweep.values):
        row = [float(value)]
        for n in range(k):
            lam = sweep.eigenvalues[p, n]
            row += [float(lam.real), float(lam.imag), int(sweep.labels[p, n])]
        row.append(float(sweep.m11_abs[p]))
        rows.append(row)
    ctx.csv("spectrum.csv", columns, rows)

    encounters = [
        {"kind": e.kind, "branches": list(e.branches), "index": e.index, "value": e.value}
        for e in sweep.encounters
    ]
    ctx.json("encounters.json", {"axis": cfg.sweep_param, "encounters": encounters})

    # Re lambda > 0 and |Im lambda| <= ||phi0|| I at every point
    c0 = float(np.abs(solve_phi0(build_grid(cfg.params, cfg.nx, cfg.ny))).max())
    currents = sweep.values if cfg.sweep_param == "I" else np.full(len(sweep.values), cfg.I)
    im_excess = float(np.max(np.abs(sweep.eigenvalues.imag) - c0 * currents[:, None]))
    min_re = float(sweep.eigenvalues.real.min())
    if min_re <= 0 or im_excess > 1e-6:
        logging.warning(f"Spectral bounds violated: min Re lambda = {min_re:.3e}, Im excess = {im_excess:.3e}")

    lam1 = sweep.eigenvalues[0, 0]
    return {
        "lambda1_first": {"re": float(lam1.real), "im": float(lam1.imag)},
        "encounters": [e.kind for e in sweep.encounters],
        "phi0_max": c0,
        "min_re_lambda": min_re,
        "max_im_excess": im_excess,
        "points": len(sweep.values),
    }
