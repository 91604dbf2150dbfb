"""Scout: pinch-off preset at desk scale via the runner."""
import json
import os
import sys
import time

from axidewet.config import build_config
from axidewet.presets import preset_defaults
from axidewet.runner import run_simulation


def trial(n, dt, t_final, tag):
    raw = {"preset": "pinchoff", "mesh.n": str(n), "time.dt": str(dt),
           "time.t_final": str(t_final),
           "output.dir": "/tmp/pinch_%s" % tag,
           "output.snapshot_stride": "1000000"}
    cfg = build_config(raw, preset_defaults=preset_defaults("pinchoff"))
    t0 = time.perf_counter()
    result = run_simulation(cfg)
    wall = time.perf_counter() - t0
    man = result.manifest
    split = [e for e in man["events"] if e["kind"] == "split"]
    print("n=%d dt=%g T=%g: exit=%d wall=%.0fs events=%s"
          % (n, dt, t_final, result.exit_code,
             wall, [(e["kind"], round(e["t"], 3)) for e in man["events"]]))
    for part in man["final"]:
        print("   part=%-8s mode=%-12s V=%.6f W=%.4f"
              % (part["part"], part["mode"], part["V"], part["W"]))
    if split:
        ev = split[0]
        print("   split at t=%.4f pre_volume=%.8f parts=%s sum=%.8f"
              % (ev["t"], ev["pre_volume"], ev["part_volumes"],
                 sum(ev["part_volumes"])))
    sys.stdout.flush()


if __name__ == "__main__":
    trial(128, 0.03125, 17.0, "a")
    trial(256, 0.02, 17.0, "b")
