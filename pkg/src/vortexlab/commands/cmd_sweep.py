# src/vortexlab/commands/cmd_sweep.py

"""
Command module for 'sweep': tabulates normal-form data or the beta scenario
over one or two parameter axes. Points are independent and run on a joblib
worker pool; a point that fails numerically is recorded with its error
instead of aborting the table.
"""

import itertools
import logging
from typing import Any, Dict

from joblib import Parallel, delayed

from vortexlab.config import RunConfig
from vortexlab.errors import SolverError
from vortexlab.normal_form import compute_normal_form, stationary_branch
from vortexlab.spectral import solve_point
from vortexlab.vortex_law import classify_scenario, extract_beta

COMMAND_NAME = "sweep"
COMMAND_HELP = "Table of n4/gamma (sweep_kind=normal-form) or beta scenarios (sweep_kind=beta) over sweep axes -> sweep.csv"

NF_COLUMNS = ["re_lambda1", "im_lambda1", "regime", "re_n4", "im_n4", "gamma", "status"]
BETA_COLUMNS = ["re_lambda1", "im_lambda1", "scenario", "beta_min", "beta_max", "status"]

NAN = float("nan")


def _point(cfg: RunConfig, changes: Dict[str, float]) -> Dict[str, Any]:
    params = cfg.params.with_(**changes)
    try:
        op, pairs = solve_point(params, cfg.nx, cfg.ny, 2, method=cfg.eig_method, dense_limit=cfg.dense_limit,
                                tol=cfg.eig_tol, maxiter=cfg.eig_maxiter)
        lead = pairs[0]
        row: Dict[str, Any] = {"re_lambda1": lead.lam.real, "im_lambda1": lead.lam.imag}
        if cfg.sweep_kind == "beta":
            profile = extract_beta(lead.u, op.grid)
            row.update({
                "scenario": classify_scenario(profile, cfg.prominence),
                "beta_min": float(profile.beta.min()),
                "beta_max": float(profile.beta.max()),
                "status": "OK",
            })
        elif lead.lam.imag > 0:
            nf = compute_normal_form(lead, op.grid, params.h)
            row.update({
                "regime": "hopf",
                "re_n4": nf.n4.real,
                "im_n4": nf.n4.imag,
                "gamma": nf.gamma_ratio,
                "status": "OK" if nf.supercritical else "UNSUPPORTED",
            })
        else:
            branch = stationary_branch(lead, op.grid, params.h)
            row.update({
                "regime": "stationary",
                "re_n4": branch.c.real,
                "im_n4": branch.c.imag,
                "gamma": NAN,
                "status": "OK" if branch.supercritical else "UNSUPPORTED",
            })
        return row
    except SolverError as e:
        logging.warning(f"Sweep point {changes} failed: {type(e).__name__}: {e}")
        return {"status": type(e).__name__}


def execute(ctx):
    cfg = ctx.cfg
    axes = [(cfg.sweep_param, cfg.sweep_values())]
    if cfg.sweep2_param:
        axes.append((cfg.sweep2_param, cfg.sweep2_values()))
    names = [name for name, _ in axes]
    points = [dict(zip(names, map(float, combo))) for combo in itertools.product(*(vals for _, vals in axes))]
    logging.info(f"Sweeping {cfg.sweep_kind} over {' x '.join(names)}: {len(points)} point(s), workers={cfg.workers}")

    results = Parallel(n_jobs=cfg.workers)(delayed(_point)(cfg, changes) for changes in points)

    columns = BETA_COLUMNS if cfg.sweep_kind == "beta" else NF_COLUMNS
    defaults = {c: NAN for c in columns}
    defaults.update({"regime": "", "scenario": "", "status": ""})
    rows = []
    for changes, result in zip(points, results):
        merged = {**defaults, **result}
        rows.append([changes[n] for n in names] + [merged[c] for c in columns])
    ctx.csv("sweep.csv", names + columns, rows)

    statuses = [r.get("status", "") for r in results]
    summary = {
        "kind": cfg.sweep_kind,
        "axes": names,
        "points": len(points),
        "ok": statuses.count("OK"),
        "unsupported": statuses.count("UNSUPPORTED"),
        "failed": sum(1 for s in statuses if s not in ("OK", "UNSUPPORTED")),
    }
    if cfg.sweep_kind == "beta":
        # Scenario changes along the first axis (for one value of the second)
        tags = [r.get("scenario", "") for r in results]
        stride = len(axes[1][1]) if len(axes) > 1 else 1
        first_line = tags[::stride]
        changes = [
            {"between": [float(axes[0][1][k]), float(axes[0][1][k + 1])], "from": first_line[k], "to": first_line[k + 1]}
            for k in range(len(first_line) - 1)
            if first_line[k] != first_line[k + 1]
        ]
        summary["scenario_changes"] = changes
    return summary
