"""Command-line interface.

Subcommands: ``run`` (fixed-horizon simulation), ``equilibrium`` (run
until the energy stops changing), ``converge`` (mesh-refinement study),
``stabilizer`` (emit the stabilizing-function table), and ``export-3d``
(revolve a profile snapshot into an OBJ surface).

Exit codes: 0 success, 1 invalid configuration or input, 2 solver hard
failure (partial outputs are flushed first).
"""

import os
import sys

import click
import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .diagnostics import convergence_sweep
from .presets import PRESETS, build_experiment, preset_defaults
from .runner import (
    export_revolved,
    resolve_output_dir,
    run_simulation,
    write_convergence_csv,
)

__all__ = ["main"]


def _load(config_path):
    try:
        return load_config(config_path, preset_lookup=preset_defaults)
    except ConfigError as exc:
        click.echo("error: %s" % exc, err=True)
        sys.exit(1)
    except OSError as exc:
        click.echo("error: cannot read config: %s" % exc, err=True)
        sys.exit(1)


def _finish(result):
    for event in result.events:
        click.echo("event: %(kind)s (part %(part)s, t=%(t).6g)" % event)
    final = result.manifest["final"]
    for entry in final:
        click.echo(
            "part %s: t=%.6g W=%.9g V=%.9g rel_vol_err=%.3e (%s, N=%d)"
            % (entry["part"], entry["t"], entry["W"], entry["V"],
               entry["rel_vol_err"], entry["mode"], entry["n_elements"])
        )
    click.echo("outputs in %s" % result.output_dir)
    if result.failed:
        click.echo("error: %s" % result.manifest.get("failure", "run failed"),
                   err=True)
    sys.exit(result.exit_code)


@click.group()
@click.version_option(version=__version__, prog_name="axidewet")
def main():
    """Axisymmetric solid-state dewetting simulator."""


@main.command()
@click.argument("config_path", type=click.Path())
def run(config_path):
    """Run a fixed-horizon simulation from a config file."""
    _finish(run_simulation(_load(config_path)))


@main.command()
@click.argument("config_path", type=click.Path())
def equilibrium(config_path):
    """Run until the energy change per step drops below 1e-8."""
    _finish(run_simulation(_load(config_path), equilibrium=True))


@main.command()
@click.argument("config_path", type=click.Path())
def converge(config_path):
    """Mesh-refinement study against a fine self-reference."""
    cfg = _load(config_path)
    try:
        exp = build_experiment(cfg)
        coeff = cfg.sweep_dt_coeff
        table = convergence_sweep(
            exp, cfg.sweep_levels, lambda n: coeff / n ** 2, cfg.t_final,
            variant=cfg.variant,
        )
    except ConfigError as exc:
        click.echo("error: %s" % exc, err=True)
        sys.exit(1)
    except ValueError as exc:
        click.echo("error: %s" % exc, err=True)
        sys.exit(1)
    out_dir = resolve_output_dir(cfg)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "convergence.csv")
    write_convergence_csv(path, table)
    click.echo("h,dt,error,order")
    for row in table.rows:
        click.echo("%.6g,%.6g,%.6e,%s"
                   % (row.h, row.dt, row.error,
                      "-" if row.order is None else "%.3f" % row.order))
    if not table.monotone:
        click.echo("warning: errors do not decrease monotonically")
    click.echo("table written to %s" % path)
    sys.exit(0)


@main.command()
@click.argument("config_path", type=click.Path())
def stabilizer(config_path):
    """Emit the stabilizing-function table for the configured energy."""
    cfg = _load(config_path)
    try:
        exp = build_experiment(cfg)
    except ConfigError as exc:
        click.echo("error: %s" % exc, err=True)
        sys.exit(1)
    model = exp.model
    table = model.stabilizer_table
    if table is None:
        angles = np.linspace(-np.pi, np.pi, 721)
        values = np.broadcast_to(
            np.asarray(model.stabilizer(angles), dtype=float), angles.shape
        )
    else:
        angles, values = table
    out_dir = resolve_output_dir(cfg)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "stabilizer.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("theta,value\n")
        for theta, value in zip(angles, values):
            fh.write("%.17g,%.17g\n" % (theta, value))
    click.echo("mode: %s" % model.stabilizer_mode)
    click.echo("range: [%.6g, %.6g]" % (np.min(values), np.max(values)))
    click.echo("table written to %s" % path)
    sys.exit(0)


@main.command("export-3d")
@click.argument("snapshot", type=click.Path())
@click.option("--nphi", default=64, show_default=True,
              help="azimuthal segments (at least 4)")
@click.option("--out", "out_path", default="", help="output OBJ path")
def export_3d(snapshot, nphi, out_path):
    """Revolve a profile snapshot CSV into a triangulated OBJ surface."""
    if not out_path:
        out_path = os.path.splitext(snapshot)[0] + ".obj"
    try:
        n_vertices, n_triangles = export_revolved(snapshot, out_path, nphi)
    except (ValueError, OSError) as exc:
        click.echo("error: %s" % exc, err=True)
        sys.exit(1)
    click.echo("wrote %s (%d vertices, %d triangles)"
               % (out_path, n_vertices, n_triangles))
    sys.exit(0)


@main.command("presets")
def list_presets():
    """List the bundled experiment presets."""
    for name in sorted(PRESETS):
        click.echo("%-18s %s" % (name, PRESETS[name].summary))
    sys.exit(0)


if __name__ == "__main__":
    main()
