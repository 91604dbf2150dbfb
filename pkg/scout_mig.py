"""Scout: migration drift direction/ordering and retraction ordering."""
import time

import numpy as np

from axidewet.config import build_config
from axidewet.diagnostics import migration_tracker
from axidewet.presets import build_experiment, preset_defaults
from axidewet.solver import STRUCTURE_PRESERVING, advance


def preset_config(name, **overrides):
    raw = {"preset": name}
    raw.update({k: str(v) for k, v in overrides.items()})
    return build_config(raw, preset_defaults=preset_defaults(name))


def migration_trial(beta, n, dt, t_final):
    cfg = preset_config("migration_steep", **{"gamma.beta": beta})
    exp = build_experiment(cfg)
    state = exp.initial_state(n)
    history = [state]
    t0 = time.perf_counter()
    while state.t < t_final - 1e-12:
        state = advance(state, dt, exp.model, exp.substrate,
                        STRUCTURE_PRESERVING, eta=exp.eta, sigma=exp.sigma)
        history.append(state)
    track = migration_tracker(history)
    mids = np.asarray(track.midpoints)
    steps = np.diff(mids)
    monotone_up = bool(np.all(steps >= 0.0))
    monotone_dn = bool(np.all(steps <= 0.0))
    print("migration beta=%-8s n=%d dt=%g T=%g: mid %0.6f -> %0.6f "
          "drift=%+.3e slope=%+.3e mono(up=%s dn=%s) wall=%.0fs"
          % (beta, n, dt, t_final, mids[0], mids[-1], mids[-1] - mids[0],
             track.slope, monotone_up, monotone_dn,
             time.perf_counter() - t0))
    return mids


def retraction_trial(beta, n, dt, t_final):
    kind = "isotropic" if float(beta) == 0.0 else "fourfold"
    cfg = preset_config("retraction", **{"gamma.kind": kind,
                                         "gamma.beta": beta})
    exp = build_experiment(cfg)
    state = exp.initial_state(n)
    c0 = state.c_r
    t0 = time.perf_counter()
    while state.t < t_final - 1e-12:
        state = advance(state, dt, exp.model, exp.substrate,
                        STRUCTURE_PRESERVING, eta=exp.eta, sigma=exp.sigma)
    print("retraction beta=%-8s n=%d dt=%g T=%g: c_r %0.5f -> %0.5f "
          "retract=%+.5f wall=%.0fs"
          % (beta, n, dt, t_final, c0, state.c_r, c0 - state.c_r,
             time.perf_counter() - t0))
    return c0 - state.c_r


if __name__ == "__main__":
    migration_trial("0.05", 64, 0.05, 10.0)
    migration_trial(str(1.0 / 12.0), 64, 0.05, 10.0)
    print()
    for beta in ("0", "0.05", str(1.0 / 12.0), "0.25"):
        retraction_trial(beta, 64, 0.01, 1.0)
