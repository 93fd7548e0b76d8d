# src/vortexlab/commands/cmd_icfind.py

"""
Command module for 'ic-find': the critical current at which lambda_1 turns
complex, optionally repeated on a refined grid as a self-consistency check.
"""

import logging

from vortexlab.spectral import find_Ic

COMMAND_NAME = "ic-find"
COMMAND_HELP = "Critical current I_c by bisection on [ic_low, ic_high] -> ic_history.csv"


def execute(ctx):
    cfg = ctx.cfg
    bracket = (cfg.ic_low, cfg.ic_high)
    result = find_Ic(
        cfg.params,
        bracket,
        cfg.nx,
        cfg.ny,
        rel_width=cfg.ic_rel_width,
        im_tol_rel=cfg.im_tol_rel,
        method=cfg.eig_method,
        dense_limit=cfg.dense_limit,
    )
    rows = [(I, lam.real, lam.imag, cfg.nx, cfg.ny) for I, lam in result.history]
    summary = {"I_c": result.value, "lower": result.lower, "upper": result.upper}

    if cfg.ic_two_grid:
        nx2, ny2 = 2 * cfg.nx - 1, 2 * cfg.ny - 1
        margin = 0.1 * (cfg.ic_high - cfg.ic_low)
        fine = find_Ic(
            cfg.params,
            (max(0.0, result.lower - margin), result.upper + margin),
            nx2,
            ny2,
            rel_width=cfg.ic_rel_width * 5.0,
            im_tol_rel=cfg.im_tol_rel,
            method=cfg.eig_method,
            dense_limit=cfg.dense_limit,
        )
        rows += [(I, lam.real, lam.imag, nx2, ny2) for I, lam in fine.history]
        rel = abs(fine.value - result.value) / abs(fine.value)
        summary.update({"I_c_fine": fine.value, "two_grid_rel_diff": rel})
        logging.info(f"Two-grid check: I_c = {result.value:.6f} ({cfg.nx}x{cfg.ny}) vs {fine.value:.6f} ({nx2}x{ny2}), rel diff {rel:.2%}")

    ctx.csv("ic_history.csv", ["I", "re_lambda1", "im_lambda1", "nx", "ny"], rows)
    return summary
