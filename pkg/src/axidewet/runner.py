"""Run orchestration and file emission.

Drives the implicit stepper over a fixed horizon (or until an equilibrium
stopping rule), watches for film splits, and writes all run artifacts:
per-part time-series CSVs, profile snapshots, a contact-midpoint series,
a JSON manifest, and surface-of-revolution exports.  All CSV numbers use
round-trip-exact formatting so reruns are byte-identical.
"""

import json
import os
import subprocess
import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import resolved_mapping
from .mesh import discrete_energy, discrete_volume, write_snapshot
from .presets import build_experiment
from .solver import SolverFailure, advance, detect_and_split

__all__ = ["RunResult", "run_simulation", "write_convergence_csv",
           "export_revolved", "OUTPUT_ROOT_ENV"]

OUTPUT_ROOT_ENV = "AXIDEWET_OUTPUT_ROOT"

_FMT = "%.17g"
_SERIES_HEADER = "step,t,W,V,rel_vol_err,c_l,c_r,newton_iters,residual\n"

EQUILIBRIUM_TOL = 1e-8


def resolve_output_dir(cfg):
    """Output directory, honoring the output-root environment override."""
    out = cfg.output_dir
    root = os.environ.get(OUTPUT_ROOT_ENV, "")
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    return out


def _git_describe():
    try:
        head = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if head.returncode == 0:
            return head.stdout.strip()
    except OSError:
        pass
    return "unknown"


class _Part:
    """One connected film component and its open series file."""

    def __init__(self, name, state, out_dir, model, sub, sigma):
        self.name = name
        self.state = state
        self.volume_ref = discrete_volume(state.curve, sub, state.c_l,
                                          state.c_r)
        self.energy = discrete_energy(state.curve, model, sub, state.c_l,
                                      state.c_r, sigma)
        self.volume = self.volume_ref
        self.rows = []
        self.events_seen = len(state.diagnostics.get("events", ()))
        self._path = os.path.join(out_dir, "series%s.csv" % name)
        self._handle = open(self._path, "w", encoding="utf-8")
        self._handle.write(_SERIES_HEADER)

    def record(self, step):
        state = self.state
        rel = 0.0 if self.volume_ref == 0.0 else \
            abs(self.volume - self.volume_ref) / abs(self.volume_ref)
        row = {
            "step": step, "t": state.t, "W": self.energy, "V": self.volume,
            "rel_vol_err": rel, "c_l": state.c_l, "c_r": state.c_r,
            "newton_iters": state.newton_iters,
            "residual": state.residual_norm,
        }
        self.rows.append(row)
        c_l = "" if state.c_l is None else _FMT % state.c_l
        self._handle.write(
            "%d,%s,%s,%s,%s,%s,%s,%d,%s\n"
            % (step, _FMT % state.t, _FMT % self.energy, _FMT % self.volume,
               _FMT % rel, c_l, _FMT % state.c_r, state.newton_iters,
               _FMT % state.residual_norm)
        )

    def refresh(self, model, sub, sigma):
        self.volume = discrete_volume(self.state.curve, sub, self.state.c_l,
                                      self.state.c_r)
        self.energy = discrete_energy(self.state.curve, model, sub,
                                      self.state.c_l, self.state.c_r, sigma)

    def snapshot(self, out_dir, step):
        path = os.path.join(out_dir, "snap_%08d%s.csv" % (step, self.name))
        write_snapshot(path, self.state.curve, self.state.mu)

    def close(self):
        if not self._handle.closed:
            self._handle.flush()
            self._handle.close()


@dataclass
class RunResult:
    """Outcome of one orchestrated run."""

    exit_code: int
    output_dir: str
    manifest: dict
    parts: dict = field(default_factory=dict)
    events: list = field(default_factory=list)

    @property
    def failed(self):
        return self.exit_code != 0


def _collect_events(part, log):
    events = part.state.diagnostics.get("events", ())
    for entry in events[part.events_seen:]:
        log.append({"part": part.name or "main", "kind": entry[0],
                    "t": float(entry[1])})
    part.events_seen = len(events)


def _write_manifest(out_dir, cfg, exp, model, events, exit_code, wall,
                    parts, extra=None):
    if model.stabilizer_mode == "constant":
        stab = {"mode": "constant",
                "value": float(np.squeeze(model.stabilizer(0.0)))}
    else:
        angles, values = model.stabilizer_table
        stab = {
            "mode": model.stabilizer_mode,
            "table_size": int(angles.size),
            "min": float(np.min(values)),
            "max": float(np.max(values)),
        }
    manifest = {
        "version": __version__,
        "variant": cfg.variant,
        "seed": cfg.seed,
        "preset": cfg.preset or None,
        "config": resolved_mapping(cfg),
        "stabilizer": stab,
        "geometry_guesses": list(exp.guesses),
        "events": events,
        "exit_code": exit_code,
        "wall_time_s": wall,
        "git": _git_describe(),
        "final": [
            {
                "part": p.name or "main",
                "t": p.state.t,
                "mode": p.state.mode,
                "n_elements": p.state.curve.N,
                "W": p.energy,
                "V": p.volume,
                "rel_vol_err": p.rows[-1]["rel_vol_err"] if p.rows else 0.0,
            }
            for p in parts
        ],
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _write_midpoint_series(out_dir, parts):
    for part in parts:
        rows = [(r["t"], 0.5 * (r["c_l"] + r["c_r"])) for r in part.rows
                if r["c_l"] is not None]
        if not rows:
            continue
        path = os.path.join(out_dir, "midpoint%s.csv" % part.name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,value\n")
            for t, value in rows:
                fh.write("%s,%s\n" % (_FMT % t, _FMT % value))


def run_simulation(cfg, equilibrium=False):
    """Run a configured simulation, emitting all artifacts.

    With ``equilibrium`` the run continues (up to ``time.max_steps``) until
    the total energy changes by less than 1e-8 over a step; otherwise it
    covers ``time.t_final`` in fixed steps.

    Returns
    -------
    RunResult
        ``exit_code`` 0 on completion, 2 on a solver hard failure (partial
        outputs are flushed either way).  Invalid configurations raise
        ConfigError before any file is touched.
    """
    exp = build_experiment(cfg)
    model, sub = exp.model, exp.substrate
    out_dir = resolve_output_dir(cfg)
    os.makedirs(out_dir, exist_ok=True)
    start_wall = _time.monotonic()

    state = exp.initial_state(cfg.n)
    parts = [_Part("", state, out_dir, model, sub, cfg.sigma)]
    all_parts = list(parts)
    parts[0].refresh(model, sub, cfg.sigma)
    parts[0].record(0)
    parts[0].snapshot(out_dir, 0)
    events = []
    exit_code = 0
    failure = None
    converged = False

    if equilibrium:
        total_steps = cfg.max_steps
    else:
        total_steps = int(np.ceil(cfg.t_final / cfg.dt - 1e-9)) \
            if cfg.t_final > 0.0 else 0

    step = 0
    try:
        while step < total_steps:
            step += 1
            t_target = min(step * cfg.dt, cfg.t_final) \
                if not equilibrium else step * cfg.dt
            energy_before = sum(p.energy for p in parts)
            next_parts = []
            for part in parts:
                dt_step = t_target - part.state.t
                part.state = advance(part.state, dt_step, model, sub,
                                     cfg.variant, eta=cfg.eta,
                                     sigma=cfg.sigma)
                _collect_events(part, events)
                if cfg.pinch_stride and step % cfg.pinch_stride == 0:
                    split = detect_and_split(part.state, sub,
                                             cfg.pinch_threshold)
                else:
                    split = part.state
                if isinstance(split, tuple):
                    part.refresh(model, sub, cfg.sigma)
                    pre_volume = part.volume
                    part.close()
                    children = []
                    for k, child_state in enumerate(split):
                        child = _Part("%s_part%d" % (part.name, k),
                                      child_state, out_dir, model, sub,
                                      cfg.sigma)
                        child.refresh(model, sub, cfg.sigma)
                        child.record(step)
                        child.snapshot(out_dir, step)
                        children.append(child)
                        all_parts.append(child)
                    events.append({
                        "part": part.name or "main", "kind": "split",
                        "t": float(part.state.t),
                        "pre_volume": pre_volume,
                        "part_volumes": [c.volume for c in children],
                    })
                    next_parts.extend(children)
                else:
                    part.refresh(model, sub, cfg.sigma)
                    part.record(step)
                    if step % cfg.snapshot_stride == 0:
                        part.snapshot(out_dir, step)
                    next_parts.append(part)
            parts = next_parts
            if equilibrium:
                energy_after = sum(p.energy for p in parts)
                if abs(energy_after - energy_before) < EQUILIBRIUM_TOL:
                    converged = True
                    break
    except (SolverFailure, ValueError) as exc:
        exit_code = 2
        failure = "%s: %s" % (type(exc).__name__, exc)

    for part in parts:
        if step % cfg.snapshot_stride != 0 or step == 0:
            part.snapshot(out_dir, step)
    for part in all_parts:
        part.close()
    _write_midpoint_series(out_dir, parts)
    wall = _time.monotonic() - start_wall
    extra = {"stopped_at_step": step, "equilibrium_run": equilibrium}
    if equilibrium:
        extra["equilibrium_converged"] = converged
    if failure:
        extra["failure"] = failure
    manifest = _write_manifest(out_dir, cfg, exp, model, events, exit_code,
                               wall, parts, extra=extra)
    return RunResult(
        exit_code=exit_code,
        output_dir=out_dir,
        manifest=manifest,
        parts={p.name or "main": p for p in parts},
        events=events,
    )


def write_convergence_csv(path, table):
    """Write a refinement table as ``h,dt,error,order`` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("h,dt,error,order\n")
        for row in table.rows:
            order = "" if row.order is None else _FMT % row.order
            fh.write("%s,%s,%s,%s\n"
                     % (_FMT % row.h, _FMT % row.dt, _FMT % row.error, order))


def export_revolved(snapshot_path, out_path, n_phi):
    """Revolve a profile snapshot into a triangulated OBJ surface.

    The profile's ``N + 1`` nodes become ``(N + 1) * n_phi`` vertices
    (the azimuthal seam is merged) and each of the ``N * n_phi`` quads is
    split into two triangles.

    Returns
    -------
    (int, int)
        Vertex and triangle counts.

    Raises
    ------
    ValueError
        For ``n_phi < 4`` or a snapshot without ``r``/``z`` columns.
    """
    n_phi = int(n_phi)
    if n_phi < 4:
        raise ValueError("n_phi must be at least 4, got %d" % n_phi)
    data = np.genfromtxt(snapshot_path, delimiter=",", names=True)
    names = data.dtype.names or ()
    if "r" not in names or "z" not in names:
        raise ValueError(
            "snapshot %s lacks r/z columns (found %s)"
            % (snapshot_path, list(names))
        )
    r = np.atleast_1d(data["r"]).astype(float)
    z = np.atleast_1d(data["z"]).astype(float)
    if r.size < 2 or not (np.all(np.isfinite(r)) and np.all(np.isfinite(z))):
        raise ValueError("snapshot %s has no finite profile" % snapshot_path)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("# surface of revolution: %d profile nodes x %d segments\n"
                 % (r.size, n_phi))
        for j in range(r.size):
            for k in range(n_phi):
                fh.write("v %s %s %s\n"
                         % (_FMT % (r[j] * np.cos(phi[k])),
                            _FMT % (r[j] * np.sin(phi[k])),
                            _FMT % z[j]))
        tri = 0
        for j in range(r.size - 1):
            for k in range(n_phi):
                a = j * n_phi + k + 1
                b = j * n_phi + (k + 1) % n_phi + 1
                c = (j + 1) * n_phi + k + 1
                d = (j + 1) * n_phi + (k + 1) % n_phi + 1
                fh.write("f %d %d %d\n" % (a, b, d))
                fh.write("f %d %d %d\n" % (a, d, c))
                tri += 2
    return r.size * n_phi, tri
