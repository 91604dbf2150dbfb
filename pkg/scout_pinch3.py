"""Scout: pinch-off film extent — monitor interior gap to the substrate."""
import sys
import time

import numpy as np

from axidewet.config import build_config
from axidewet.presets import build_experiment, preset_defaults
from axidewet.solver import STRUCTURE_PRESERVING, advance, detect_and_split


def gap_to_sphere(nodes):
    return np.hypot(nodes[:, 0], nodes[:, 1]) - 30.0


def trial(polar_lo, polar_hi, n, dt, t_final):
    center = 30.0 * np.deg2rad(0.5 * (polar_lo + polar_hi))
    half = 30.0 * np.deg2rad(0.5 * (polar_hi - polar_lo))
    cfg = build_config(
        {"preset": "pinchoff",
         "film.window_center": str(center),
         "film.window_halfwidth": str(half),
         "mesh.n": str(n), "time.dt": str(dt)},
        preset_defaults=preset_defaults("pinchoff"))
    exp = build_experiment(cfg)
    state = exp.initial_state(n)
    t0 = time.perf_counter()
    min_gap_seen, t_min = np.inf, 0.0
    split_t = None
    while state.t < t_final - 1e-12:
        state = advance(state, dt, exp.model, exp.substrate,
                        STRUCTURE_PRESERVING, eta=exp.eta, sigma=exp.sigma)
        g = gap_to_sphere(state.curve.nodes[1:-1]).min()
        if g < min_gap_seen:
            min_gap_seen, t_min = g, state.t
        out = detect_and_split(state, exp.substrate, 1e-3)
        if isinstance(out, tuple):
            split_t = state.t
            print("  polar %g..%g: SPLIT at t=%.3f parts n=(%d, %d)"
                  % (polar_lo, polar_hi, state.t,
                     out[0].curve.N, out[1].curve.N))
            break
    print("polar %g..%g n=%d dt=%g: t_end=%.2f min_gap=%.4f at t=%.2f "
          "split=%s wall=%.0fs"
          % (polar_lo, polar_hi, n, dt, state.t, min_gap_seen, t_min,
             split_t, time.perf_counter() - t0))
    sys.stdout.flush()


if __name__ == "__main__":
    trial(10.0, 80.0, 128, 0.03125, 17.0)
    trial(10.0, 90.0, 128, 0.03125, 17.0)
    trial(5.0, 75.0, 128, 0.03125, 17.0)
