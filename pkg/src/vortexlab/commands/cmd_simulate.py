# src/vortexlab/commands/cmd_simulate.py

"""
Command module for 'simulate': a full TDGL run with probe series, vortex
tracks and period estimates.
"""

import logging

import numpy as np

from vortexlab.commands.common import complex_summary, leading_pairs, resolve_eps
from vortexlab.grid import build_grid
from vortexlab.tdgl import detect_period, initial_state, run, track_vortices

COMMAND_NAME = "simulate"
COMMAND_HELP = "Full TDGL run from c (u1 + u1^dagger) or a seeded field -> probe.csv, vortex_tracks.csv, vortex_events.jsonl"

FALLBACK_T_END: float = 10.0   # Used when lambda_1 is real and t_end is not set


def execute(ctx):
    cfg = ctx.cfg
    params = cfg.params
    grid = build_grid(params, cfg.nx, cfg.ny)
    _, pairs = leading_pairs(cfg, k=1)
    lead = pairs[0]
    if cfg.gamma is not None:
        gamma = float(cfg.gamma)
    else:
        gamma = lead.lam.real + resolve_eps(cfg, lead.lam.real)

    if cfg.seed >= 0:
        state = initial_state(params, grid, gamma, scale=cfg.init_scale, seed=cfg.seed)
    else:
        state = initial_state(params, grid, gamma, u1=lead.u, scale=cfg.init_scale)

    if cfg.t_end is not None:
        t_end = cfg.t_end
    elif lead.lam.imag > 0:
        t_end = cfg.periods * 2.0 * np.pi / lead.lam.imag
    else:
        t_end = FALLBACK_T_END
        logging.info(f"lambda_1 is real and t_end is not set; running to t = {t_end}")

    def progress(frame):
        logging.info(f"t={frame.t:.4f} step={frame.step} max|psi|={frame.max_abs:.4e} vortices={len(frame.vortices.vortices)}")

    observers = [progress]
    if cfg.dump_fields:
        def dump(frame):
            ctx.field(f"psi_{frame.step:08d}.field", frame.psi, {"t": frame.t, "step": frame.step})
        observers.append(dump)

    traj = run(
        params,
        state.psi,
        t_end,
        observers,
        gamma=gamma,
        dt=cfg.dt,
        stride=cfg.stride,
        y_probe=cfg.y_probe,
        vortex_threshold=cfg.vortex_threshold,
    )

    rows = [
        (float(t), float(p.real), float(p.imag), float(abs(p)), float(m), int(d))
        for t, p, m, d in zip(traj.times, traj.probe, traj.max_abs, traj.total_degree)
    ]
    ctx.csv("probe.csv", ["t", "re_probe", "im_probe", "abs_probe", "max_abs", "total_degree"], rows)

    full = track_vortices(traj.snapshots, grid)
    track_rows = []
    for track in full.tracks:
        for t, x, y in zip(track.t, track.x, track.y):
            track_rows.append((track.id, track.degree, float(t), float(x), float(y)))
    ctx.csv("vortex_tracks.csv", ["track", "degree", "t", "x", "y"], track_rows)
    ctx.jsonl(
        "vortex_events.jsonl",
        ({"t": e.t, "x": e.x, "y": e.y, "kind": e.kind, "tracks": list(e.tracks)} for e in full.events),
    )
    if cfg.dump_fields:
        ctx.field("psi_final.field", traj.final.psi, {"t": traj.final.t})
        ctx.field("phi_final.field", traj.final.phi, {"t": traj.final.t})

    sample_dt = cfg.stride * traj.dt
    probe = traj.probe
    if len(probe) > 2 and not np.isclose(traj.times[-1] - traj.times[-2], sample_dt):
        probe = probe[:-1]   # last frame is off the stride
    # |psi(0, y_probe)| oscillates at twice the frequency of the complex probe
    complex_period = detect_period(probe.real, sample_dt)
    abs_period = detect_period(np.abs(probe), sample_dt)
    return {
        "lambda1": complex_summary(lead.lam),
        "gamma": gamma,
        "dt": traj.dt,
        "t_end": float(traj.times[-1]),
        "frames": len(traj.times),
        "final_max_abs": float(traj.max_abs[-1]),
        "final_total_degree": int(traj.total_degree[-1]),
        "period_probe": complex_period.period if complex_period.periodic else None,
        "period_probe_confidence": complex_period.confidence,
        "period_abs_probe": abs_period.period if abs_period.periodic else None,
        "period_abs_probe_confidence": abs_period.confidence,
        "vortex_tracks": len(full.tracks),
        "vortex_events": [e.kind for e in full.events],
    }
