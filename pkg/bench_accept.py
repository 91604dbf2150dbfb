"""Timing scout for the acceptance-suite parameter choices."""
import time

import numpy as np

from axidewet.config import build_config
from axidewet.presets import build_experiment, preset_defaults
from axidewet.solver import STRUCTURE_PRESERVING, advance


def preset_config(name, **overrides):
    raw = {"preset": name}
    raw.update({k: str(v) for k, v in overrides.items()})
    return build_config(raw, preset_defaults=preset_defaults(name))


def march(exp, n, dt, t_final, variant=STRUCTURE_PRESERVING, beta=None):
    state = exp.initial_state(n)
    t0 = time.perf_counter()
    steps = 0
    while state.t < t_final - 1e-12:
        state = advance(state, min(dt, t_final - state.t), exp.model,
                        exp.substrate, variant, eta=exp.eta, sigma=exp.sigma)
        steps += 1
    wall = time.perf_counter() - t0
    return state, steps, wall


def main():
    for case in ("case1", "case2"):
        for n in (32, 64, 128):
            cfg = preset_config(case, **{"gamma.beta": 0.05})
            exp = build_experiment(cfg)
            dt = 32.0 / n**2
            state, steps, wall = march(exp, n, dt, 0.25)
            print("%s N=%-4d dt=%-9.5g steps=%-5d wall=%6.2fs  (%5.1f ms/step)"
                  % (case, n, dt, steps, wall, 1e3 * wall / steps))


if __name__ == "__main__":
    main()
