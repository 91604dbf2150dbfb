"""Scout: equilibrium stopping behavior and successive-level Md orders."""
import time

import numpy as np

from axidewet.config import build_config
from axidewet.diagnostics import close_region, contact_angle, manifold_distance
from axidewet.mesh import discrete_energy
from axidewet.presets import build_experiment, preset_defaults
from axidewet.solver import STRUCTURE_PRESERVING, advance


def preset_config(name, **overrides):
    raw = {"preset": name}
    raw.update({k: str(v) for k, v in overrides.items()})
    return build_config(raw, preset_defaults=preset_defaults(name))


def equilibrium_scout(n, dt):
    cfg = preset_config("case1", **{"gamma.kind": "isotropic",
                                    "gamma.beta": "0"})
    exp = build_experiment(cfg)
    state = exp.initial_state(n)
    w_prev = discrete_energy(state.curve, exp.model, exp.substrate,
                             state.c_l, state.c_r, exp.sigma)
    t0 = time.perf_counter()
    for step in range(1, 5001):
        state = advance(state, dt, exp.model, exp.substrate,
                        STRUCTURE_PRESERVING, eta=exp.eta, sigma=exp.sigma)
        w = discrete_energy(state.curve, exp.model, exp.substrate,
                            state.c_l, state.c_r, exp.sigma)
        if abs(w - w_prev) < 1e-8:
            break
        w_prev = w
    wall = time.perf_counter() - t0
    ang = contact_angle(state, exp.substrate, "outer")
    print("equilibrium n=%d dt=%g: stopped step=%d t=%.3f angle=%.4f deg "
          "wall=%.1fs" % (n, dt, step, state.t, ang, wall))


def md_error(state_a, state_b, sub):
    ra = close_region(state_a.curve, sub, state_a.c_l, state_a.c_r)
    rb = close_region(state_b.curve, sub, state_b.c_l, state_b.c_r)
    return manifold_distance(ra, rb)


def march(exp, n, dt, t_final):
    state = exp.initial_state(n)
    while state.t < t_final - 1e-12:
        state = advance(state, min(dt, t_final - state.t), exp.model,
                        exp.substrate, STRUCTURE_PRESERVING,
                        eta=exp.eta, sigma=exp.sigma)
    return state


def order_scout(case, beta, t_final, levels=(32, 64, 128)):
    kind = "isotropic" if beta == 0 else "fourfold"
    cfg = preset_config(case, **{"gamma.kind": kind, "gamma.beta": beta})
    exp = build_experiment(cfg)
    t0 = time.perf_counter()
    states = {n: march(exp, n, 32.0 / n**2, t_final) for n in levels}
    errs = [md_error(states[a], states[b], exp.substrate)
            for a, b in zip(levels[:-1], levels[1:])]
    orders = [np.log2(errs[i - 1] / errs[i]) for i in range(1, len(errs))]
    wall = time.perf_counter() - t0
    print("%s beta=%-6s T=%g errs=%s orders=%s wall=%.1fs"
          % (case, beta, t_final,
             ["%.3e" % e for e in errs], ["%.2f" % o for o in orders], wall))


if __name__ == "__main__":
    equilibrium_scout(128, 0.05)
    order_scout("case1", 0.05, 1.0)
    order_scout("case2", 0.05, 1.0)
