# src/vortexlab/commands/cmd_validate.py

"""
Command module for 'validate': cross-checks the reduced theory against the
full TDGL simulation.

For each eps in validate_eps (given relative to Re lambda_1) a run starts on
the predicted orbit and is compared with it:
- saturated max|psi| against 2 r max|u1| (15%),
- probe frequency against chi = Im lambda_1 + gamma eps (5%),
- the power-law exponent of the amplitude in eps against 1/2 (+-0.1),
- at the smallest eps, centre-line vortex positions against the motion law
  (RMS at most 2 grid cells in y).

Failures are written to the report and then raised as ValidationMismatch.
"""

import logging
from typing import Any, Dict, List

import numpy as np
from joblib import Parallel, delayed

from vortexlab.commands.common import complex_summary, leading_pairs
from vortexlab.config import RunConfig
from vortexlab.errors import UnsupportedPointError
from vortexlab.normal_form import NormalFormData, compute_normal_form, hopf_orbit, leading_psi
from vortexlab.runner import MISMATCH_KEY
from vortexlab.tdgl import Trajectory, detect_period, run
from vortexlab.vortex_law import PROMINENCE, BetaProfile, extract_beta, roots_at

COMMAND_NAME = "validate"
COMMAND_HELP = "Reduced-vs-full cross-check at several eps (amplitude, frequency, scaling, vortex positions) -> validation.json"

AMPLITUDE_TOL: float = 0.15
FREQUENCY_TOL: float = 0.05
EXPONENT: float = 0.5
EXPONENT_TOL: float = 0.1
RMS_CELLS: float = 2.0
CENTRE_LINE_CELLS: float = 1.0   # |x| within this many cells counts as on the centre line
MIN_PERIODS: float = 8.0          # The settled half must hold enough periods for the autocorrelation


def _settled(traj: Trajectory) -> np.ndarray:
    """Frames in the second half of the run, on the regular stride."""
    mask = traj.times >= 0.5 * traj.times[-1]
    if len(traj.times) > 2 and not np.isclose(traj.times[-1] - traj.times[-2], traj.times[1] - traj.times[0]):
        mask[-1] = False
    return mask


def centre_line_rms(traj: Trajectory, profile: BetaProfile, chi: float, grid, prominence: float = PROMINENCE) -> float:
    """
    RMS y-distance (in grid cells) between simulated centre-line vortices and
    the motion-law roots, after fitting the orbit phase to the probe psi(0, 0, t).
    """
    mask = _settled(traj)
    times = traj.times[mask]
    probe = traj.probe[mask].real
    theta0 = -np.angle(np.sum(probe * np.exp(-1j * chi * times)))
    errors: List[float] = []
    snapshots = [s for s, keep in zip(traj.snapshots, mask) if keep]
    for t, snap in zip(times, snapshots):
        predicted = roots_at(profile, chi, t - theta0 / chi, prominence)
        if predicted.size == 0:
            continue
        for v in snap.vortices:
            if abs(v.x) <= CENTRE_LINE_CELLS * grid.dx:
                errors.append(float(np.min(np.abs(predicted - v.y))) / grid.dy)
    if not errors:
        return float("nan")
    return float(np.sqrt(np.mean(np.square(errors))))


def _run_one(cfg: RunConfig, nf: NormalFormData, eps: float, with_vortices: bool) -> Dict[str, Any]:
    orbit = hopf_orbit(nf, eps)
    t_end = cfg.t_end if cfg.t_end else max(cfg.periods, MIN_PERIODS) * orbit.period
    traj = run(
        cfg.params,
        leading_psi(nf, eps, 0.0),
        t_end,
        gamma=nf.lambda1.real + eps,
        dt=cfg.dt,
        stride=cfg.stride,
        y_probe=0.0,
        vortex_threshold=cfg.vortex_threshold,
    )
    mask = _settled(traj)
    saturated = float(np.mean(traj.max_abs[mask]))
    predicted = 2.0 * orbit.r * float(np.abs(nf.u1).max())
    estimate = detect_period(traj.probe[mask].real, cfg.stride * traj.dt)
    chi_obs = 2.0 * np.pi / estimate.period if estimate.periodic else float("nan")
    row: Dict[str, Any] = {
        "eps": eps,
        "t_end": float(traj.times[-1]),
        "saturated_max_abs": saturated,
        "predicted_max_abs": predicted,
        "amplitude_rel_err": abs(saturated - predicted) / predicted,
        "chi_predicted": orbit.chi,
        "chi_observed": chi_obs,
        "chi_rel_err": abs(chi_obs - orbit.chi) / orbit.chi if estimate.periodic else float("nan"),
        "period_confidence": estimate.confidence,
        "vortex_rms_cells": float("nan"),
    }
    if with_vortices:
        profile = extract_beta(nf.u1, nf.grid)
        row["vortex_rms_cells"] = centre_line_rms(
            traj, profile, chi_obs if estimate.periodic else orbit.chi, nf.grid, cfg.prominence
        )
    logging.info(
        f"eps={eps:.4g}: max|psi| {saturated:.4e} vs {predicted:.4e}, chi {chi_obs:.5g} vs {orbit.chi:.5g}"
    )
    return row


def execute(ctx):
    cfg = ctx.cfg
    op, pairs = leading_pairs(cfg, k=2)
    lead = pairs[0]
    nf = compute_normal_form(lead, op.grid, cfg.h)
    if not nf.supercritical:
        raise UnsupportedPointError(f"Re n4 = {nf.n4.real:.6g} >= 0: nothing to validate at h={cfg.h}, I={cfg.I}")

    eps_values = sorted(e * lead.lam.real for e in cfg.validate_eps)
    rows = Parallel(n_jobs=cfg.workers)(
        delayed(_run_one)(cfg, nf, eps, k == 0) for k, eps in enumerate(eps_values)
    )

    failures: List[str] = []
    for row in rows:
        if not np.isfinite(row["chi_rel_err"]):
            failures.append(f"eps={row['eps']:.4g}: probe not periodic")
        elif row["chi_rel_err"] > FREQUENCY_TOL:
            failures.append(f"eps={row['eps']:.4g}: frequency off by {row['chi_rel_err']:.1%}")
        if row["amplitude_rel_err"] > AMPLITUDE_TOL:
            failures.append(f"eps={row['eps']:.4g}: amplitude off by {row['amplitude_rel_err']:.1%}")

    exponent = float("nan")
    if len(rows) >= 2:
        exponent = float(np.polyfit(np.log(eps_values), np.log([r["saturated_max_abs"] for r in rows]), 1)[0])
        if abs(exponent - EXPONENT) > EXPONENT_TOL:
            failures.append(f"amplitude exponent {exponent:.3f} outside {EXPONENT} +- {EXPONENT_TOL}")
    rms = rows[0]["vortex_rms_cells"]
    if np.isfinite(rms) and rms > RMS_CELLS:
        failures.append(f"centre-line vortex RMS {rms:.2f} cells > {RMS_CELLS}")
    elif not np.isfinite(rms):
        logging.warning("No centre-line vortices in the settled window; vortex position check skipped")

    columns = list(rows[0].keys())
    ctx.csv("validation.csv", columns, [[row[c] for c in columns] for row in rows])
    report = {
        "lambda1": complex_summary(lead.lam),
        "n4": complex_summary(nf.n4),
        "gamma": nf.gamma_ratio,
        "runs": rows,
        "exponent": exponent,
        "failures": failures,
        "passed": not failures,
    }
    ctx.json("validation.json", report)

    summary = {k: report[k] for k in ("lambda1", "n4", "gamma", "exponent", "passed")}
    summary["failures"] = len(failures)
    if failures:
        summary[MISMATCH_KEY] = "; ".join(failures)
    return summary
