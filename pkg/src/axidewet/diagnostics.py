"""Quantitative diagnostics for film evolutions.

Provides the measurement layer used by the experiment suite: closed
generating-plane regions for a film/substrate pair, the symmetric-
difference area between two regions ("manifold distance"), mesh-refinement
convergence tables against a fine self-reference, contact-angle readout,
and contact-midpoint migration tracking.
"""

from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Polygon as _ShapelyPolygon

from .mesh import DiscreteCurve
from .solver import (
    DEFAULT_ETA,
    DEFAULT_SIGMA,
    STRUCTURE_PRESERVING,
    SolverState,
    advance,
)

__all__ = [
    "RegionPolygon",
    "ConvergenceRow",
    "ConvergenceTable",
    "MigrationTrack",
    "close_region",
    "manifold_distance",
    "convergence_sweep",
    "contact_angle",
    "migration_tracker",
]

_DEGENERATE_AREA = 1e-12
_SUBSTRATE_SAMPLES_PER_UNIT = 1024
_MAX_SUBSTRATE_SAMPLES = 16384


class RegionPolygon:
    """Closed, simple polygon in the generating (r, z) plane.

    Vertices are stored without repeating the first point; orientation is
    normalized to positive (counter-clockwise).  Construction rejects
    self-intersecting boundaries, except fully degenerate (zero-area)
    traces, which are allowed.

    Parameters
    ----------
    vertices : array_like, shape (M, 2)
        Boundary vertices in order, at least 3.
    """

    def __init__(self, vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
            raise ValueError(
                "polygon needs an (M, 2) vertex array with M >= 3, got %s"
                % (verts.shape,)
            )
        if not np.all(np.isfinite(verts)):
            raise ValueError("polygon vertices must be finite")
        if np.array_equal(verts[0], verts[-1]):
            verts = verts[:-1]
        signed = _shoelace(verts)
        if signed < 0.0:
            verts = verts[::-1]
            signed = -signed
        self._verts = np.ascontiguousarray(verts)
        self._verts.setflags(write=False)
        self._area = signed
        shape = _ShapelyPolygon(self._verts)
        if not shape.is_valid:
            if signed <= _DEGENERATE_AREA and shape.buffer(0.0).area <= _DEGENERATE_AREA:
                shape = None  # degenerate sliver: allowed, no interior
            else:
                raise ValueError(
                    "polygon boundary is self-intersecting (area %.3e)" % signed
                )
        self._shape = shape

    @property
    def vertices(self):
        """Vertex array, positively oriented, first point not repeated."""
        return self._verts

    @property
    def area(self):
        """Enclosed area (shoelace formula, nonnegative)."""
        return self._area

    def __repr__(self):
        return "RegionPolygon(%d vertices, area=%.6g)" % (
            self._verts.shape[0], self._area,
        )


def _shoelace(verts):
    r = verts[:, 0]
    z = verts[:, 1]
    return 0.5 * float(np.sum(r * np.roll(z, -1) - np.roll(r, -1) * z))


def close_region(curve, sub, c_l, c_r):
    """Close a film profile into a generating-plane region polygon.

    The boundary runs along the film from its inner to its outer node,
    then back along the substrate from ``c_r`` to ``c_l``.  With ``c_l``
    None (inner end on the rotation axis) the substrate arc runs back to
    its axis end and the polygon closes with a segment on the axis.

    Returns
    -------
    RegionPolygon

    Raises
    ------
    ValueError
        If the resulting boundary self-intersects.
    """
    if not isinstance(curve, DiscreteCurve):
        raise TypeError("curve must be a DiscreteCurve")
    c_lo = sub.c_min if c_l is None else float(c_l)
    c_hi = float(c_r)
    span = abs(c_hi - c_lo)
    n_sub = int(min(
        _MAX_SUBSTRATE_SAMPLES,
        max(8, np.ceil(span * _SUBSTRATE_SAMPLES_PER_UNIT)),
    ))
    cs = np.linspace(c_hi, c_lo, n_sub + 2)
    # Contact endpoints coincide with film nodes and are dropped; the axis
    # end of the substrate is kept so the region closes along the axis.
    cs = cs[1:] if c_l is None else cs[1:-1]
    strip = np.asarray(sub.eval(cs)) if cs.size else np.zeros((0, 2))
    return RegionPolygon(np.vstack([curve.nodes, strip]))


def _canonical_pair(a, b):
    ka = a.vertices.tobytes()
    kb = b.vertices.tobytes()
    return (a, b) if ka <= kb else (b, a)


def manifold_distance(region_a, region_b):
    """Symmetric-difference area between two plane regions.

    Computes ``|A| + |B| - 2 |A intersect B|`` with shoelace areas and a
    polygon-clipping intersection.  Degenerate regions (area below 1e-12)
    contribute no interior, so the distance falls back to ``|A| + |B|``.
    The operands are ordered canonically first, which makes the result
    exactly symmetric; identical vertex lists give exactly zero.
    """
    first, second = _canonical_pair(region_a, region_b)
    if first.vertices.tobytes() == second.vertices.tobytes():
        return 0.0
    if first._shape is None or second._shape is None:
        inter = 0.0
    else:
        inter = first._shape.intersection(second._shape).area
    return max(first.area + second.area - 2.0 * inter, 0.0)


@dataclass
class ConvergenceRow:
    """One mesh level of a refinement study."""

    n_elements: int
    h: float
    dt: float
    error: float
    order: float = None


def _observed_orders(errors):
    """Observed convergence orders: log2 of successive error ratios.

    The first entry is None; so is any entry whose ratio is undefined
    (a nonpositive error on either side).
    """
    orders = [None]
    for prev, err in zip(errors, errors[1:]):
        if prev > 0.0 and err > 0.0:
            orders.append(float(np.log2(prev / err)))
        else:
            orders.append(None)
    return orders


@dataclass
class ConvergenceTable:
    """Refinement study result: rows plus a monotone-decrease flag."""

    rows: list
    monotone: bool

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)


def _lerp_states(before, after, t_target):
    if after.t <= t_target or (before.c_l is None) != (after.c_l is None):
        return after
    w = (t_target - before.t) / (after.t - before.t)
    nodes = (1.0 - w) * before.curve.nodes + w * after.curve.nodes
    curve = DiscreteCurve(nodes, axis_start=after.curve.axis_start)
    c_l = None if after.c_l is None else (1.0 - w) * before.c_l + w * after.c_l
    c_r = (1.0 - w) * before.c_r + w * after.c_r
    mu = (1.0 - w) * before.mu + w * after.mu
    return SolverState(curve=curve, mu=mu, c_l=c_l, c_r=c_r, t=t_target)


def _march_to(state, dt, t_final, model, sub, variant, eta, sigma):
    """Fixed-step march to ``t_final`` with linear-in-time reconstruction."""
    before = state
    while state.t < t_final - 1e-12:
        before = state
        state = advance(state, dt, model, sub, variant, eta=eta, sigma=sigma)
    if abs(state.t - t_final) <= 1e-12:
        return state
    return _lerp_states(before, state, t_final)


def convergence_sweep(setup, n_values, dt_rule, t_final,
                      variant=STRUCTURE_PRESERVING, reference=None):
    """Refinement study of a preset against a fine self-reference.

    Parameters
    ----------
    setup : object
        Experiment definition with ``initial_state(n) -> SolverState``,
        ``model`` and ``substrate`` attributes (``sigma``/``eta`` optional).
    n_values : sequence of int
        Element counts, at least 3 levels, each double the previous.
    dt_rule : callable
        Maps an element count to the fixed time step for that level.
    t_final : float
        Comparison time; snapshots are reconstructed linearly in time when
        a level's step grid does not hit it exactly.
    variant : str, optional
        Scheme variant used for every run.
    reference : (int, float), optional
        Element count and time step of the reference run; defaults to one
        refinement beyond the finest level (``2 n_max``) with a quarter of
        its step.

    Returns
    -------
    ConvergenceTable
        One row per level with the symmetric-difference-area error against
        the reference and the observed order (log2 ratio of successive
        errors).  ``monotone`` is False when errors fail to decrease.
    """
    n_values = [int(n) for n in n_values]
    if len(n_values) < 3:
        raise ValueError("need at least 3 mesh levels")
    for coarse, fine in zip(n_values, n_values[1:]):
        if fine != 2 * coarse:
            raise ValueError(
                "element counts must double between levels, got %d -> %d"
                % (coarse, fine)
            )
    model = setup.model
    sub = setup.substrate
    sigma = getattr(setup, "sigma", DEFAULT_SIGMA)
    eta = getattr(setup, "eta", DEFAULT_ETA)

    if reference is None:
        reference = (2 * n_values[-1], dt_rule(n_values[-1]) / 4.0)
    n_ref, dt_ref = reference
    ref = _march_to(setup.initial_state(int(n_ref)), float(dt_ref), t_final,
                    model, sub, variant, eta, sigma)
    ref_region = close_region(ref.curve, sub, ref.c_l, ref.c_r)

    dts = [float(dt_rule(n)) for n in n_values]
    errors = []
    for n, dt in zip(n_values, dts):
        end = _march_to(setup.initial_state(n), dt, t_final, model, sub,
                        variant, eta, sigma)
        region = close_region(end.curve, sub, end.c_l, end.c_r)
        errors.append(float(manifold_distance(region, ref_region)))
    orders = _observed_orders(errors)
    rows = [
        ConvergenceRow(n_elements=n, h=1.0 / n, dt=dt, error=err, order=order)
        for n, dt, err, order in zip(n_values, dts, errors, orders)
    ]
    monotone = all(a > b for a, b in zip(errors, errors[1:]))
    return ConvergenceTable(rows=rows, monotone=monotone)


def _wrap_degrees(angle):
    return float(np.rad2deg(angle % (2.0 * np.pi)))


def contact_angle(state, sub, which="outer"):
    """Angle between film and substrate at a contact, in degrees.

    The angle is measured at the contact corner from the inward substrate
    direction to the inward film direction, sweeping through the film
    region, so a film meeting the substrate at its equilibrium inclination
    reads the equilibrium contact angle directly.  Result in [0, 360).

    Parameters
    ----------
    state : SolverState
    sub : substrate
    which : {"outer", "inner"}

    Raises
    ------
    ValueError
        For an inner request on an axis-mode state.
    """
    if which not in ("inner", "outer"):
        raise ValueError("which must be 'inner' or 'outer', got %r" % (which,))
    nodes = state.curve.nodes
    if which == "inner":
        if state.c_l is None:
            raise ValueError("axis-mode state has no inner contact")
        film = nodes[1] - nodes[0]
        sub_dir = np.asarray(sub.tangent(state.c_l))
        swept = np.arctan2(film[1], film[0]) - np.arctan2(sub_dir[1], sub_dir[0])
    else:
        film = nodes[-2] - nodes[-1]
        sub_dir = -np.asarray(sub.tangent(state.c_r))
        swept = np.arctan2(sub_dir[1], sub_dir[0]) - np.arctan2(film[1], film[0])
    return _wrap_degrees(swept)


@dataclass
class MigrationTrack:
    """Contact-midpoint drift statistics over a run."""

    times: np.ndarray
    midpoints: np.ndarray
    slope: float
    sign: int = field(init=False)

    def __post_init__(self):
        self.sign = int(np.sign(self.slope))


def migration_tracker(history):
    """Track the contact-midpoint arclength ``(c_l + c_r)/2`` over time.

    Parameters
    ----------
    history : iterable of SolverState
        Two-contact states in chronological order (at least two distinct
        times).

    Returns
    -------
    MigrationTrack
        Raw series plus the least-squares slope and its sign.
    """
    states = list(history)
    if len(states) < 2:
        raise ValueError("need at least two states to track migration")
    if any(s.c_l is None for s in states):
        raise ValueError("migration tracking requires two-contact states")
    times = np.array([s.t for s in states], dtype=float)
    mids = np.array([0.5 * (s.c_l + s.c_r) for s in states], dtype=float)
    t_center = times - times.mean()
    denom = float(t_center @ t_center)
    if denom == 0.0:
        raise ValueError("need at least two distinct times")
    slope = float(t_center @ (mids - mids.mean()) / denom)
    return MigrationTrack(times=times, midpoints=mids, slope=slope)
