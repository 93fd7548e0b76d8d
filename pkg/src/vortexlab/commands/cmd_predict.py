# src/vortexlab/commands/cmd_predict.py

"""
Command module for 'predict': centre-line vortex tracks and events from the
motion law on the Hopf orbit, over a configurable number of periods.
"""

import logging

from vortexlab.commands.common import centre_line_field, complex_summary, leading_pairs, resolve_eps
from vortexlab.errors import UnsupportedPointError
from vortexlab.normal_form import compute_normal_form, hopf_orbit
from vortexlab.vortex_law import classify_scenario, extract_beta, predict_vortices

COMMAND_NAME = "predict"
COMMAND_HELP = "Predicted centre-line vortex tracks and events over `periods` orbit periods -> tracks.csv, events.jsonl"


def execute(ctx):
    cfg = ctx.cfg
    op, pairs = leading_pairs(cfg, k=2)
    grid = op.grid
    lead = pairs[0]
    nf = compute_normal_form(lead, grid, cfg.h)
    if not nf.supercritical:
        raise UnsupportedPointError(f"Re n4 = {nf.n4.real:.6g} >= 0 at h={cfg.h}, I={cfg.I}: no supercritical orbit to predict on")
    eps = resolve_eps(cfg, lead.lam.real)
    orbit = hopf_orbit(nf, eps)
    profile = extract_beta(lead.u, grid)

    t_end = cfg.t_end if cfg.t_end else cfg.periods * orbit.period
    tracks, events = predict_vortices(
        profile,
        orbit.chi,
        (0.0, t_end),
        psi_at=centre_line_field(nf, profile, eps),
        grid=grid,
        n_samples=cfg.time_samples,
        prominence=cfg.prominence,
    )

    rows = []
    for k, track in enumerate(tracks):
        for t, y in zip(track.t, track.y):
            rows.append((k, track.n, track.segment, track.degree, float(t), float(y)))
    ctx.csv("tracks.csv", ["track", "n", "segment", "degree", "t", "y"], rows)
    ctx.jsonl("events.jsonl", ({"t": e.t, "y": e.y, "kind": e.kind, "n": e.n, "tracks": list(e.tracks)} for e in events))

    # Events repeat with period pi / chi
    half_period = orbit.period / 2.0
    first_cycle = [e.kind for e in events if e.t < half_period]
    logging.info(f"Predicted event cycle: {' -> '.join(first_cycle) or 'none'}")
    return {
        "lambda1": complex_summary(lead.lam),
        "n4": complex_summary(nf.n4),
        "eps": eps,
        "r": orbit.r,
        "chi": orbit.chi,
        "period": orbit.period,
        "event_period": half_period,
        "scenario": classify_scenario(profile, cfg.prominence),
        "tracks": len(tracks),
        "events": len(events),
        "event_cycle": first_cycle,
    }
