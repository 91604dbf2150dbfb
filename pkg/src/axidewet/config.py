"""Run configuration: flat dotted key/value files with typed validation.

A configuration file is plain text, one ``section.key = value`` pair per
line, ``#`` comments allowed.  Every field has a default; the fully
resolved mapping (defaults included) is what run manifests record, so a
manifest is always a complete, replayable description of its run.
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np

__all__ = ["ConfigError", "SimulationConfig", "parse_config_text", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration; carries the offending field name."""

    def __init__(self, field_name, message):
        self.field_name = field_name
        super().__init__("config field '%s': %s" % (field_name, message))


def _to_int(text):
    return int(text, 0)


def _to_float(text):
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not allowed")
    return value


def _to_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError("expected a boolean, got %r" % (text,))


def _to_str(text):
    return text.strip()


def _to_int_list(text):
    items = [p for p in text.replace(";", ",").split(",") if p.strip()]
    return tuple(int(p, 0) for p in items)


def _parse_points(text):
    rows = [p for p in text.split(";") if p.strip()]
    pts = []
    for row in rows:
        parts = row.split(",")
        if len(parts) != 2:
            raise ValueError("each point must be 'r,z', got %r" % (row,))
        pts.append((float(parts[0]), float(parts[1])))
    return tuple(pts)


def _to_points(text):
    pts = _parse_points(text)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    return pts


def _to_point(text):
    pts = _parse_points(text)
    if len(pts) != 1:
        raise ValueError("expected a single 'r,z' point")
    return pts[0]


def _to_stabilizer(text):
    lowered = text.strip().lower()
    if lowered == "auto":
        return "auto"
    return float(text)


def _to_vertices(text):
    return _to_points(text)


@dataclass
class SimulationConfig:
    """Fully resolved simulation configuration."""

    preset: str = ""
    substrate_kind: str = ""
    substrate_point: tuple = (0.0, 0.0)
    substrate_direction: tuple = (1.0, 0.0)
    substrate_center: tuple = (0.0, 0.0)
    substrate_radius: float = 1.0
    substrate_angle0: float = 0.0
    substrate_sweep: float = 1.0
    substrate_amplitude: float = 1.0
    substrate_wavenumber: float = 1.0
    substrate_offset: float = 0.0
    substrate_x_start: float = 0.0
    substrate_x_end: float = 1.0
    substrate_vertices: tuple = ()
    substrate_fillet_radius: float = 0.5
    substrate_c_min: float = 0.0
    substrate_c_max: float = 1.0
    film_points: tuple = ()
    film_window_center: float = None
    film_window_halfwidth: float = None
    film_thickness: float = None
    gamma_kind: str = "isotropic"
    gamma_beta: float = 0.0
    gamma_modes: str = ""
    gamma_stabilizer: object = "auto"
    eta: float = 100.0
    sigma: float = -math.sqrt(3.0) / 2.0
    n: int = 128
    dt: float = 2.0 ** -9
    t_final: float = 2.0
    max_steps: int = 200000
    variant: str = "structure_preserving"
    output_dir: str = "out"
    snapshot_stride: int = 50
    pinch_threshold: float = 1e-3
    pinch_stride: int = 1
    sweep_levels: tuple = (32, 64, 128, 256)
    sweep_dt_coeff: float = 32.0
    seed: int = 0
    # keys the user actually set (for manifests and preset layering)
    explicit: frozenset = field(default_factory=frozenset, repr=False)


_SCHEMA = {
    "preset": ("preset", _to_str),
    "substrate.kind": ("substrate_kind", _to_str),
    "substrate.point": ("substrate_point", _to_point),
    "substrate.direction": ("substrate_direction", _to_point),
    "substrate.center": ("substrate_center", _to_point),
    "substrate.radius": ("substrate_radius", _to_float),
    "substrate.angle0": ("substrate_angle0", _to_float),
    "substrate.sweep": ("substrate_sweep", _to_float),
    "substrate.amplitude": ("substrate_amplitude", _to_float),
    "substrate.wavenumber": ("substrate_wavenumber", _to_float),
    "substrate.offset": ("substrate_offset", _to_float),
    "substrate.x_start": ("substrate_x_start", _to_float),
    "substrate.x_end": ("substrate_x_end", _to_float),
    "substrate.vertices": ("substrate_vertices", _to_vertices),
    "substrate.fillet_radius": ("substrate_fillet_radius", _to_float),
    "substrate.c_min": ("substrate_c_min", _to_float),
    "substrate.c_max": ("substrate_c_max", _to_float),
    "film.points": ("film_points", _to_points),
    "film.window_center": ("film_window_center", _to_float),
    "film.window_halfwidth": ("film_window_halfwidth", _to_float),
    "film.thickness": ("film_thickness", _to_float),
    "gamma.kind": ("gamma_kind", _to_str),
    "gamma.beta": ("gamma_beta", _to_float),
    "gamma.modes": ("gamma_modes", _to_str),
    "gamma.stabilizer": ("gamma_stabilizer", _to_stabilizer),
    "physics.eta": ("eta", _to_float),
    "physics.sigma": ("sigma", _to_float),
    "mesh.n": ("n", _to_int),
    "time.dt": ("dt", _to_float),
    "time.t_final": ("t_final", _to_float),
    "time.max_steps": ("max_steps", _to_int),
    "scheme.variant": ("variant", _to_str),
    "output.dir": ("output_dir", _to_str),
    "output.snapshot_stride": ("snapshot_stride", _to_int),
    "pinch.threshold": ("pinch_threshold", _to_float),
    "pinch.stride": ("pinch_stride", _to_int),
    "sweep.levels": ("sweep_levels", _to_int_list),
    "sweep.dt_coeff": ("sweep_dt_coeff", _to_float),
    "seed": ("seed", _to_int),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in _SCHEMA.items()}


def parse_config_text(text):
    """Parse dotted key/value lines into a raw ``{key: string}`` mapping.

    Raises
    ------
    ConfigError
        On malformed lines or duplicate keys.
    """
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError("line %d" % lineno,
                              "expected 'key = value', got %r" % (stripped,))
        key, value = stripped.split("=", 1)
        key = key.strip()
        if key in raw:
            raise ConfigError(key, "duplicate key (line %d)" % lineno)
        raw[key] = value.strip()
    return raw


def _validate(cfg):
    checks = [
        ("mesh.n", cfg.n >= 8, "must be at least 8"),
        ("time.dt", cfg.dt > 0.0, "must be positive"),
        ("time.t_final", cfg.t_final >= 0.0, "must be nonnegative"),
        ("time.max_steps", cfg.max_steps >= 1, "must be at least 1"),
        ("gamma.beta", cfg.gamma_beta >= 0.0, "must be nonnegative"),
        ("physics.eta", cfg.eta > 0.0, "must be positive"),
        ("output.snapshot_stride", cfg.snapshot_stride >= 1,
         "must be at least 1"),
        ("pinch.threshold", cfg.pinch_threshold > 0.0, "must be positive"),
        ("pinch.stride", cfg.pinch_stride >= 0,
         "must be nonnegative (0 disables)"),
        ("sweep.dt_coeff", cfg.sweep_dt_coeff > 0.0, "must be positive"),
        ("gamma.kind", cfg.gamma_kind in ("isotropic", "fourfold", "fourier"),
         "must be one of isotropic, fourfold, fourier"),
        ("scheme.variant",
         cfg.variant in ("structure_preserving", "energy_stable"),
         "must be structure_preserving or energy_stable"),
    ]
    for key, ok, message in checks:
        if not ok:
            raise ConfigError(key, message)
    if isinstance(cfg.gamma_stabilizer, float) and cfg.gamma_stabilizer < 0.0:
        raise ConfigError("gamma.stabilizer", "must be 'auto' or nonnegative")


def build_config(raw, preset_defaults=None):
    """Typed configuration from a raw key mapping.

    ``preset_defaults`` (key -> raw string) is layered underneath the
    user's keys: an explicit key always wins over a preset default.
    """
    merged = dict(preset_defaults or {})
    merged.update(raw)
    values = {}
    for key, text in merged.items():
        if key not in _SCHEMA:
            raise ConfigError(key, "unknown key")
        attr, converter = _SCHEMA[key]
        try:
            value = converter(text)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, str(exc)) from exc
        values[attr] = value
    cfg = SimulationConfig(**values)
    cfg.explicit = frozenset(_SCHEMA[key][0] for key in raw)
    _validate(cfg)
    return cfg


def load_config(path, preset_lookup=None):
    """Read, layer preset defaults, and validate a configuration file.

    ``preset_lookup`` maps a preset name to its default raw keys; it is
    consulted when the file names a preset.
    """
    with open(path, "r", encoding="utf-8") as handle:
        raw = parse_config_text(handle.read())
    defaults = None
    name = raw.get("preset", "").strip()
    if name and preset_lookup is not None:
        try:
            defaults = preset_lookup(name)
        except KeyError:
            raise ConfigError(
                "preset", "unknown preset %r" % (name,)
            ) from None
    return build_config(raw, preset_defaults=defaults)


def resolved_mapping(cfg):
    """Flat ``key -> value`` mapping of every field, defaults included."""
    out = {}
    for f in fields(SimulationConfig):
        if f.name == "explicit":
            continue
        key = _ATTR_TO_KEY[f.name]
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = list(np.asarray(value, dtype=float).reshape(-1)) \
                if value and isinstance(value[0], tuple) else list(value)
        out[key] = value
    return out
