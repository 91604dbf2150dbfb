"""Bundled experiment setups: substrates plus initial films.

Each preset packages a substrate, an analytic initial film, and default
configuration values.  Where a source experiment fixes only part of the
geometry (film extent, band placement) the remaining choices are plain
config fields with documented defaults; every such free choice is listed
in the preset's ``guesses`` and recorded in run manifests.
"""

from dataclasses import dataclass

import numpy as np

from .anisotropy import AnisotropyModel
from .config import ConfigError
from .geometry import (
    ArcSubstrate,
    FilletedPolylineSubstrate,
    LineSubstrate,
    SinusoidSubstrate,
)
from .mesh import DiscreteCurve
from .solver import SolverState, _nearest_arclength, _resample_polyline

__all__ = ["Experiment", "PRESETS", "preset_defaults", "build_experiment"]

_DENSE = 4096


@dataclass
class Experiment:
    """A runnable setup: substrate, energy model, and film factory.

    Satisfies the convergence-sweep duck type (``initial_state``,
    ``model``, ``substrate``, ``sigma``, ``eta``).
    """

    substrate: object
    model: object
    sigma: float
    eta: float
    guesses: tuple
    film: object  # callable (substrate, n) -> SolverState

    def initial_state(self, n):
        """Equal-arclength initial film with ``n`` elements."""
        return self.film(self.substrate, int(n))


def _resample(dense_nodes, n):
    out, _, _ = _resample_polyline(np.asarray(dense_nodes, dtype=float), n)
    return out


def _axis_arc_film(sub, n, center, radius, alpha_end, c_r):
    """Axis-mode film: circular arc from the axis down to a contact."""
    alphas = np.linspace(0.0, alpha_end, _DENSE + 1)
    dense = np.asarray(center) + radius * np.column_stack(
        [np.sin(alphas), np.cos(alphas)]
    )
    nodes = _resample(dense, n)
    nodes[-1] = sub.eval(c_r)
    nodes[0] = (0.0, nodes[1, 1])
    curve = DiscreteCurve(nodes, axis_start=True)
    return SolverState(curve=curve, mu=np.zeros(n + 1), c_l=None,
                       c_r=float(c_r))


def _band_film(sub, n, c_lo, c_hi, profile):
    """Two-contact film offset from the substrate along its normal.

    ``profile(t)`` is the normal thickness over ``t in [0, 1]`` and must
    vanish at both ends.
    """
    cs = np.linspace(c_lo, c_hi, _DENSE + 1)
    t = np.linspace(0.0, 1.0, _DENSE + 1)
    base = np.asarray(sub.eval(cs))
    tau, _, _ = sub.frame(cs)
    normal = np.column_stack([-tau[:, 1], tau[:, 0]])
    dense = base + profile(t)[:, None] * normal
    nodes = _resample(dense, n)
    nodes[0] = sub.eval(c_lo)
    nodes[-1] = sub.eval(c_hi)
    return SolverState(curve=DiscreteCurve(nodes), mu=np.zeros(n + 1),
                       c_l=float(c_lo), c_r=float(c_hi))


def _axis_band_film(sub, n, c_edge, profile):
    """Axis-mode film: normal offset over ``c in [0, c_edge]``.

    ``profile(0)`` is the on-axis thickness, ``profile(1) = 0``.
    """
    cs = np.linspace(0.0, c_edge, _DENSE + 1)
    t = np.linspace(0.0, 1.0, _DENSE + 1)
    base = np.asarray(sub.eval(cs))
    tau, _, _ = sub.frame(cs)
    normal = np.column_stack([-tau[:, 1], tau[:, 0]])
    dense = base + profile(t)[:, None] * normal
    dense[0, 0] = 0.0
    nodes = _resample(dense, n)
    nodes[-1] = sub.eval(c_edge)
    nodes[0] = (0.0, nodes[1, 1])
    curve = DiscreteCurve(nodes, axis_start=True)
    return SolverState(curve=curve, mu=np.zeros(n + 1), c_l=None,
                       c_r=float(c_edge))


def _window(cfg, sub, default_center, default_halfwidth):
    center = cfg.film_window_center
    halfwidth = cfg.film_window_halfwidth
    if center is None:
        center = default_center
    if halfwidth is None:
        halfwidth = default_halfwidth
    c_lo, c_hi = center - halfwidth, center + halfwidth
    slack = 1e-9 * max(1.0, sub.c_max - sub.c_min)
    if not (sub.c_min - slack <= c_lo < c_hi <= sub.c_max + slack):
        raise ConfigError(
            "film.window_center",
            "film window [%g, %g] leaves the substrate range [%g, %g]"
            % (c_lo, c_hi, sub.c_min, sub.c_max),
        )
    return float(np.clip(c_lo, sub.c_min, sub.c_max)), \
        float(np.clip(c_hi, sub.c_min, sub.c_max))


def _thickness(cfg, default):
    value = default if cfg.film_thickness is None else cfg.film_thickness
    if value <= 0.0:
        raise ConfigError("film.thickness", "must be positive")
    return float(value)


def _conformal_profile(thickness, span, taper=None):
    """Uniform normal thickness with smooth cosine ramps at both ends.

    The ramps rise from zero at the contacts to the full ``thickness``
    over an arclength ``taper`` (default: twice the thickness, capped at
    45% of the span), keeping the initial curve C^1.
    """
    if taper is None:
        taper = 2.0 * thickness
    frac = float(np.clip(taper / span, 1e-6, 0.45))

    def profile(t):
        t = np.asarray(t, dtype=float)
        up = 0.5 * (1.0 - np.cos(np.pi * np.clip(t / frac, 0.0, 1.0)))
        down = 0.5 * (1.0 - np.cos(
            np.pi * np.clip((1.0 - t) / frac, 0.0, 1.0)))
        return thickness * up * down

    return profile


def _edge_profile(thickness, span, taper=None):
    """Uniform normal thickness ramped to zero at the outer end only."""
    if taper is None:
        taper = 2.0 * thickness
    frac = float(np.clip(taper / span, 1e-6, 0.9))

    def profile(t):
        t = np.asarray(t, dtype=float)
        down = 0.5 * (1.0 - np.cos(
            np.pi * np.clip((1.0 - t) / frac, 0.0, 1.0)))
        return thickness * down

    return profile


# --------------------------------------------------------------------------
# preset builders: cfg -> (substrate, film callable, guesses)


def _hemisphere():
    return ArcSubstrate((0.0, 0.0), 9.0, np.pi / 2.0, -1.0, 0.0,
                        9.0 * np.pi / 2.0)


def _case1(cfg):
    sub = _hemisphere()
    radius = 1.5
    center = np.array([0.0, 9.0])
    cos_a = -radius / (2.0 * 9.0)  # film arc opening: contact on the sphere
    alpha = float(np.arccos(cos_a))
    contact = center + radius * np.array([np.sin(alpha), np.cos(alpha)])
    c_r = 9.0 * float(np.arctan2(contact[0], contact[1]))

    def film(substrate, n):
        return _axis_arc_film(substrate, n, center, radius, alpha, c_r)

    return sub, film, ()


def _case2(cfg):
    sub = _hemisphere()
    default_center = 9.0 * np.pi / 4.0  # polar 45 degrees
    default_halfwidth = 9.0 * np.pi / 12.0  # polar 30..60 degrees
    c_lo, c_hi = _window(cfg, sub, default_center, default_halfwidth)
    thick = _thickness(cfg, 0.5)
    profile = _conformal_profile(thick, c_hi - c_lo)

    def film(substrate, n):
        return _band_film(substrate, n, c_lo, c_hi, profile)

    guesses = (
        "case2: uniform-thickness (%.3g) band spanning polar angles "
        "30..60 degrees with smooth edge tapers; only the thickness is "
        "fixed by the source" % thick,
    )
    return sub, film, guesses


def _case3(cfg):
    sub = ArcSubstrate((0.0, 5.0), 5.0, -np.pi / 2.0, 1.0, 0.0,
                       5.0 * np.pi / 2.0)
    radius = 1.8
    center = np.array([0.0, 0.0])
    cos_a = radius / 10.0  # |film point - (0,5)| = 5 at the contact
    alpha = float(np.arccos(cos_a))
    contact = center + radius * np.array([np.sin(alpha), np.cos(alpha)])
    phi = float(np.arctan2(contact[1] - 5.0, contact[0]))
    c_r = 5.0 * (phi + np.pi / 2.0)

    def film(substrate, n):
        return _axis_arc_film(substrate, n, center, radius, alpha, c_r)

    return sub, film, ()


def _migration(cfg, amplitude, wavenumber, x_end, x_center, halfwidth,
               thickness):
    sub = SinusoidSubstrate(amplitude, wavenumber, 0.0, 0.0, x_end)
    default_center = float(sub._arclength(np.array([x_center]))[0])
    c_lo, c_hi = _window(cfg, sub, default_center, halfwidth)
    thick = _thickness(cfg, thickness)
    profile = _conformal_profile(thick, c_hi - c_lo)

    def film(substrate, n):
        return _band_film(substrate, n, c_lo, c_hi, profile)

    guesses = (
        "migration: film extent/thickness are free in the source; "
        "defaults place a uniform-thickness (%.3g) band centered at "
        "arclength %.6g with halfwidth %.6g" % (thick, default_center,
                                                halfwidth),
    )
    return sub, film, guesses


def _migration_gentle(cfg):
    return _migration(cfg, 0.2, np.pi, 4.0, x_center=0.75, halfwidth=0.35,
                      thickness=0.2)


def _migration_steep(cfg):
    return _migration(cfg, 4.0, 0.25, 8.0 * np.pi, x_center=9.0,
                      halfwidth=1.5, thickness=0.5)


def _pinchoff(cfg):
    sub = ArcSubstrate((0.0, 0.0), 30.0, np.pi / 2.0, -1.0, 0.0,
                       30.0 * np.pi / 2.0)
    default_center = 30.0 * np.deg2rad(35.0)
    default_halfwidth = 30.0 * np.deg2rad(25.0)  # polar 10..60 degrees
    c_lo, c_hi = _window(cfg, sub, default_center, default_halfwidth)
    thick = _thickness(cfg, 0.5)
    profile = _conformal_profile(thick, c_hi - c_lo)

    def film(substrate, n):
        return _band_film(substrate, n, c_lo, c_hi, profile)

    guesses = (
        "pinchoff: uniform-thickness long film spans polar angles 10..60 "
        "degrees; only the 0.5 thickness and radius-30 substrate are "
        "fixed by the source",
    )
    return sub, film, guesses


def _retraction(cfg):
    sub = FilletedPolylineSubstrate(
        [(0.0, 1.0), (4.0, 1.0), (5.0, 0.0), (10.0, 0.0)], 0.5
    )
    # Band draped across the step so the outer edge retracts toward the
    # corner and climbs over it.  It avoids the axis: strongly anisotropic
    # films develop a conical tip there.
    c_lo, c_hi = _window(cfg, sub, 3.85, 2.65)
    thick = _thickness(cfg, 0.5)
    profile = _conformal_profile(thick, c_hi - c_lo)

    def film(substrate, n):
        return _band_film(substrate, n, c_lo, c_hi, profile)

    guesses = (
        "retraction: uniform-thickness (%.3g) band over arclength "
        "[%g, %g] draping the step corner; the film footprint and "
        "thickness are free in the source" % (thick, c_lo, c_hi),
    )
    return sub, film, guesses


@dataclass(frozen=True)
class _Preset:
    name: str
    summary: str
    builder: object
    defaults: tuple  # ((raw config key, raw value string), ...)


PRESETS = {
    p.name: p for p in (
        _Preset(
            "case1",
            "radius-1.5 spherical film capping the radius-9 hemisphere",
            _case1,
            (("gamma.kind", "fourfold"), ("gamma.beta", "0.05"),
             ("mesh.n", "128"), ("time.dt", "0.001953125"),
             ("time.t_final", "2.0")),
        ),
        _Preset(
            "case2",
            "thickness-0.5 toroidal band on the radius-9 hemisphere",
            _case2,
            (("gamma.kind", "fourfold"), ("gamma.beta", "0.05"),
             ("mesh.n", "128"), ("time.dt", "0.001953125"),
             ("time.t_final", "2.0")),
        ),
        _Preset(
            "case3",
            "radius-1.8 spherical film inside the radius-5 bowl",
            _case3,
            (("gamma.kind", "fourfold"), ("gamma.beta", "0.05"),
             ("mesh.n", "128"), ("time.dt", "0.001953125"),
             ("time.t_final", "2.0")),
        ),
        _Preset(
            "migration_gentle",
            "band on the gentle sinusoid z = 0.2 sin(pi r)",
            _migration_gentle,
            (("gamma.kind", "fourfold"), ("gamma.beta", "0.05"),
             ("mesh.n", "128"), ("time.dt", "0.002"),
             ("time.t_final", "10.0")),
        ),
        _Preset(
            "migration_steep",
            "band on the steep sinusoid z = 4 sin(r / 4)",
            _migration_steep,
            (("gamma.kind", "fourfold"), ("gamma.beta", "0.05"),
             ("mesh.n", "128"), ("time.dt", "0.002"),
             ("time.t_final", "10.0")),
        ),
        _Preset(
            "pinchoff",
            "long thin film on the radius-30 sphere, splits in two",
            _pinchoff,
            (("gamma.kind", "isotropic"), ("mesh.n", "256"),
             ("time.dt", "0.02"), ("time.t_final", "16.0"),
             ("output.snapshot_stride", "25")),
        ),
        _Preset(
            "retraction",
            "band draped over the corner of the height-1 stepped substrate",
            _retraction,
            (("gamma.kind", "fourfold"), ("gamma.beta", "0.05"),
             ("mesh.n", "128"), ("time.dt", "0.002"),
             ("time.t_final", "1.0")),
        ),
    )
}


def preset_defaults(name):
    """Raw config defaults for a preset (KeyError if unknown)."""
    return dict(PRESETS[name].defaults)


def _parse_modes(text):
    modes = []
    for item in (p for p in text.split(",") if p.strip()):
        parts = item.split(":")
        if len(parts) != 2:
            raise ConfigError("gamma.modes",
                              "expected 'k:amplitude' pairs, got %r" % item)
        modes.append((int(parts[0]), float(parts[1])))
    return modes


def _build_model(cfg):
    modes = _parse_modes(cfg.gamma_modes) if cfg.gamma_modes else None
    if cfg.gamma_kind == "fourier" and not modes:
        raise ConfigError("gamma.modes", "fourier energy needs modes")
    try:
        return AnisotropyModel(cfg.gamma_kind, beta=cfg.gamma_beta,
                               modes=modes, stabilizer=cfg.gamma_stabilizer)
    except ValueError as exc:
        raise ConfigError("gamma.kind", str(exc)) from exc


def _build_substrate(cfg):
    kind = cfg.substrate_kind
    try:
        if kind == "line":
            return LineSubstrate(cfg.substrate_point, cfg.substrate_direction,
                                 cfg.substrate_c_min, cfg.substrate_c_max)
        if kind == "arc":
            return ArcSubstrate(cfg.substrate_center, cfg.substrate_radius,
                                cfg.substrate_angle0, cfg.substrate_sweep,
                                cfg.substrate_c_min, cfg.substrate_c_max)
        if kind == "sinusoid":
            return SinusoidSubstrate(cfg.substrate_amplitude,
                                     cfg.substrate_wavenumber,
                                     cfg.substrate_offset,
                                     cfg.substrate_x_start,
                                     cfg.substrate_x_end)
        if kind == "filleted":
            return FilletedPolylineSubstrate(cfg.substrate_vertices,
                                             cfg.substrate_fillet_radius)
    except ValueError as exc:
        raise ConfigError("substrate.kind", str(exc)) from exc
    raise ConfigError(
        "substrate.kind",
        "expected line, arc, sinusoid, or filleted, got %r" % (kind,),
    )


def _explicit_film(cfg, sub):
    points = np.asarray(cfg.film_points, dtype=float)
    scan = np.linspace(sub.c_min, sub.c_max, _DENSE)
    samples = np.asarray(sub.eval(scan))

    def project(point):
        start = scan[np.argmin(np.sum((samples - point) ** 2, axis=1))]
        c = _nearest_arclength(sub, point, start)
        gap = float(np.hypot(*(np.asarray(sub.eval(c)) - point)))
        if gap > 1e-6 * max(1.0, sub.c_max - sub.c_min):
            raise ConfigError(
                "film.points",
                "film endpoint (%g, %g) is %.3g away from the substrate"
                % (point[0], point[1], gap),
            )
        return float(c)

    axis_start = abs(points[0, 0]) < 1e-12
    c_l = None if axis_start else project(points[0])
    c_r = project(points[-1])

    def film(substrate, n):
        nodes = _resample(points, n)
        nodes[-1] = substrate.eval(c_r)
        if axis_start:
            nodes[0] = (0.0, nodes[1, 1])
        else:
            nodes[0] = substrate.eval(c_l)
        curve = DiscreteCurve(nodes, axis_start=axis_start)
        return SolverState(curve=curve, mu=np.zeros(n + 1), c_l=c_l,
                           c_r=float(c_r))

    return film


def build_experiment(cfg):
    """Substrate, model, and film factory for a configuration.

    Raises
    ------
    ConfigError
        If neither a preset nor an explicit substrate+film is given, or if
        any part of the geometry specification is invalid.
    """
    model = _build_model(cfg)
    if cfg.preset:
        try:
            preset = PRESETS[cfg.preset]
        except KeyError:
            raise ConfigError("preset",
                              "unknown preset %r" % (cfg.preset,)) from None
        sub, film, guesses = preset.builder(cfg)
        return Experiment(substrate=sub, model=model, sigma=cfg.sigma,
                          eta=cfg.eta, guesses=tuple(guesses), film=film)
    if not cfg.substrate_kind:
        raise ConfigError("substrate.kind",
                          "required when no preset is named")
    if not cfg.film_points:
        raise ConfigError("film.points", "required when no preset is named")
    sub = _build_substrate(cfg)
    film = _explicit_film(cfg, sub)
    return Experiment(substrate=sub, model=model, sigma=cfg.sigma,
                      eta=cfg.eta, guesses=(), film=film)
