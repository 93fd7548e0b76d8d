# src/vortexlab/commands/cmd_beta.py

"""
Command module for 'beta': the centre-line phase profile of u1 and its
scenario tag.
"""

import numpy as np

from vortexlab.commands.common import complex_summary, eigenfunction_vortices, leading_pairs
from vortexlab.vortex_law import classify_scenario, critical_points, extract_beta

COMMAND_NAME = "beta"
COMMAND_HELP = "Centre-line phase beta(y) of u1 and its scenario tag -> beta.csv"


def execute(ctx):
    cfg = ctx.cfg
    op, pairs = leading_pairs(cfg, k=2)
    grid = op.grid
    u1 = pairs[0].u
    profile = extract_beta(u1, grid)
    scenario = classify_scenario(profile, cfg.prominence)
    maxima, minima = critical_points(profile, cfg.prominence)

    rows = [
        (float(y), float(g), float(b), bool(bad))
        for y, g, b, bad in zip(profile.y, profile.g, profile.beta, profile.unreliable)
    ]
    ctx.csv("beta.csv", ["y", "g", "beta", "unreliable"], rows)

    lower, upper = profile.boundary_slopes()
    return {
        "lambda1": complex_summary(pairs[0].lam),
        "scenario": scenario,
        "beta_min": float(profile.beta.min()),
        "beta_max": float(profile.beta.max()),
        "beta_at_zero": float(profile.value_at(0.0)),
        "slope_lower": lower,
        "slope_upper": upper,
        "interior_maxima_y": [float(profile.y[k]) for k in maxima],
        "interior_minima_y": [float(profile.y[k]) for k in minima],
        "unreliable_samples": int(np.count_nonzero(profile.unreliable)),
        "u1_vortices": eigenfunction_vortices(u1, grid, cfg.vortex_threshold),
    }
