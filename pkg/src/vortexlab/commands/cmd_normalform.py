# src/vortexlab/commands/cmd_normalform.py

"""
Command module for 'normal-form': the cubic coefficient n4 and the Hopf
orbit at one parameter point. Below the critical current (real lambda_1) the
stationary-branch coefficient is reported instead.
"""

import logging

from vortexlab.commands.common import complex_summary, eigenfunction_vortices, leading_pairs, resolve_eps
from vortexlab.errors import ConfigError
from vortexlab.normal_form import compute_normal_form, hopf_orbit, stationary_branch
from vortexlab.spectral import is_near_defective

COMMAND_NAME = "normal-form"
COMMAND_HELP = "Normal-form coefficient n4, gamma and Hopf orbit at (I, h) -> normal_form.json"


def execute(ctx):
    cfg = ctx.cfg
    op, pairs = leading_pairs(cfg, k=2)
    grid = op.grid
    lead = pairs[0]
    summary = {
        "lambda1": complex_summary(lead.lam),
        "near_defective": is_near_defective(pairs, grid),
        "u1_vortices": eigenfunction_vortices(lead.u, grid, cfg.vortex_threshold),
    }

    if lead.lam.imag > 0:
        nf = compute_normal_form(lead, grid, cfg.h)
        summary.update({
            "regime": "hopf",
            "n4": complex_summary(nf.n4),
            "gamma": nf.gamma_ratio,
            "m11": complex_summary(nf.m11),
            "supercritical": nf.supercritical,
        })
        if nf.supercritical:
            try:
                eps = resolve_eps(cfg, lead.lam.real)
            except ConfigError as e:
                logging.warning(f"{e}; no orbit reported")
            else:
                orbit = hopf_orbit(nf, eps)
                summary.update({
                    "eps": eps,
                    "r": orbit.r,
                    "chi": orbit.chi,
                    "period": orbit.period,
                    "r_printed": orbit.r_printed,
                })
        else:
            summary["status"] = "UNSUPPORTED"
        if cfg.dump_fields:
            for name in ("u1", "phi11", "phi12"):
                ctx.field(f"{name}.field", getattr(nf, name), {"h": cfg.h, "I": cfg.I, "name": name})
    else:
        branch = stationary_branch(lead, grid, cfg.h)
        summary.update({"regime": "stationary", "c": complex_summary(branch.c), "supercritical": branch.supercritical})
        if branch.supercritical:
            # psi ~ C eps^(1/2) u1
            summary["amplitude_coefficient"] = branch.amplitude(1.0)
        else:
            summary["status"] = "UNSUPPORTED"
            logging.warning(f"Re c = {branch.c.real:.6g} >= 0: stationary point is UNSUPPORTED")
        if cfg.dump_fields:
            ctx.field("u1.field", lead.u, {"h": cfg.h, "I": cfg.I, "name": "u1"})

    ctx.json("normal_form.json", {"h": cfg.h, "I": cfg.I, "nx": cfg.nx, "ny": cfg.ny, **summary})
    return summary
