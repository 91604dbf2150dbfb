"""Scout: why case1 coarse-pair order is low — time-error vs substeps."""
import time

import numpy as np

from axidewet.config import build_config
from axidewet.diagnostics import close_region, manifold_distance
from axidewet.presets import build_experiment, preset_defaults
from axidewet.solver import STRUCTURE_PRESERVING, advance


def preset_config(name, **overrides):
    raw = {"preset": name}
    raw.update({k: str(v) for k, v in overrides.items()})
    return build_config(raw, preset_defaults=preset_defaults(name))


def march(exp, n, dt, t_final):
    state = exp.initial_state(n)
    while state.t < t_final - 1e-12:
        state = advance(state, min(dt, t_final - state.t), exp.model,
                        exp.substrate, STRUCTURE_PRESERVING,
                        eta=exp.eta, sigma=exp.sigma)
    return state


def md_error(a, b, sub):
    return manifold_distance(close_region(a.curve, sub, a.c_l, a.c_r),
                             close_region(b.curve, sub, b.c_l, b.c_r))


def scout(case, beta, coeff, levels, t_final=1.0):
    kind = "isotropic" if beta == 0 else "fourfold"
    cfg = preset_config(case, **{"gamma.kind": kind, "gamma.beta": beta})
    exp = build_experiment(cfg)
    t0 = time.perf_counter()
    states = {}
    for n in levels:
        states[n] = march(exp, n, coeff / n**2, t_final)
        ev = states[n].diagnostics.get("events", ())
        if ev:
            print("  n=%d events: %s" % (n, ev[:6]))
    errs = [md_error(states[a], states[b], exp.substrate)
            for a, b in zip(levels[:-1], levels[1:])]
    orders = [np.log2(errs[i - 1] / errs[i]) for i in range(1, len(errs))]
    print("%s beta=%-5s coeff=%-3g errs=%s orders=%s wall=%.1fs"
          % (case, beta, coeff, ["%.3e" % e for e in errs],
             ["%.2f" % o for o in orders], time.perf_counter() - t0))


if __name__ == "__main__":
    scout("case1", 0.05, 32.0, (32, 64, 128))
    scout("case1", 0.05, 8.0, (32, 64, 128))
    scout("case1", 0.05, 2.0, (32, 64))
