"""Discrete generating curves and the quadrature toolkit built on them.

A film profile is a polyline of ``N + 1`` nodes ``(r_j, z_j)`` over the
uniform reference grid ``rho_j = j / N``.  Everything the time-stepping
scheme integrates — mass-lumped inner products, the time-averaged weighted
normal, swept substrate-cap volumes, contact-line chord vectors, and the
boundary volume correction — lives here, together with the discrete volume
and energy functionals used for reporting and conservation checks.

Quadrature policy: every inner product is evaluated with the per-element
Simpson rule on the reference grid, taking one-sided nodal limits for
element-wise quantities.  Simpson is exact for the cubic-per-element
integrands that appear, which is what turns the conservation statements
into machine-precision identities instead of approximations.
"""

import numpy as np

__all__ = [
    "DiscreteCurve",
    "lumped_inner",
    "weighted_normal",
    "rotated_cap_volume",
    "boundary_vector_G",
    "volume_correction",
    "discrete_volume",
    "discrete_energy",
    "write_snapshot",
]

_AXIS_TOL = 1e-10
_CONTACT_TOL = 1e-10
_CHORD_TINY = 1e-14


def _perp(v):
    """Clockwise quarter turn: (a, b) -> (b, -a), applied on the last axis."""
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


class DiscreteCurve:
    """Polyline film profile with cached per-element geometry.

    Parameters
    ----------
    nodes : array_like, shape (N + 1, 2)
        Node positions ``(r_j, z_j)`` ordered from the inner (axis-side)
        end ``rho = 0`` to the outer contact ``rho = 1``.
    axis_start : bool, optional
        Allow ``r_0 == 0`` for profiles whose inner end sits on the
        rotation axis.  All other nodes must keep strictly positive radius.

    Notes
    -----
    The node array is copied and frozen; derived caches therefore can
    never go stale.  Use :meth:`with_nodes` to build a moved copy.
    """

    def __init__(self, nodes, axis_start=False):
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or nodes.shape[0] < 1:
            raise ValueError(
                "nodes must be an (N + 1, 2) array with at least one node"
            )
        if not np.all(np.isfinite(nodes)):
            raise ValueError("nodes contain non-finite values")
        r = nodes[:, 0]
        if r[0] < (0.0 if axis_start else np.finfo(float).tiny):
            raise ValueError(
                "node 0 has non-positive radius %.3e (set axis_start=True "
                "to allow an on-axis inner end)" % r[0]
            )
        if nodes.shape[0] > 1 and np.any(r[1:] <= 0.0):
            bad = 1 + int(np.argmax(r[1:] <= 0.0))
            raise ValueError(
                "node %d has non-positive radius %.3e" % (bad, r[bad])
            )
        edges = np.diff(nodes, axis=0)
        lengths = np.hypot(edges[:, 0], edges[:, 1])
        if np.any(lengths <= 0.0):
            bad = int(np.argmax(lengths <= 0.0))
            raise ValueError("element %d is degenerate (zero length)" % bad)
        nodes.setflags(write=False)
        self._nodes = nodes
        self.axis_start = bool(axis_start)
        self._edges = edges
        self._lengths = lengths
        with np.errstate(invalid="ignore", divide="ignore"):
            self._tangents = edges / lengths[:, None]
        self._tangents = np.where(
            lengths[:, None] > 0.0, self._tangents, 0.0
        )
        self._thetas = np.arctan2(edges[:, 1], edges[:, 0])

    @property
    def N(self):
        """Element count."""
        return self._nodes.shape[0] - 1

    @property
    def nodes(self):
        """Read-only ``(N + 1, 2)`` node array."""
        return self._nodes

    @property
    def element_lengths(self):
        """Physical element lengths ``|X_j - X_{j-1}|``, shape ``(N,)``."""
        return self._lengths

    @property
    def tangents(self):
        """Unit element tangents, shape ``(N, 2)``."""
        return self._tangents

    @property
    def normals(self):
        """Unit element normals ``(-tangent_z, tangent_r)``, shape ``(N, 2)``."""
        return -_perp(self._tangents)

    @property
    def thetas(self):
        """Element inclination angles ``atan2(dz, dr)``, shape ``(N,)``."""
        return self._thetas

    @property
    def h_rho(self):
        """Reference-grid spacing ``1 / N``."""
        return 1.0 / self.N

    def with_nodes(self, nodes):
        """Return a new curve with the same axis flag and fresh nodes."""
        return DiscreteCurve(nodes, axis_start=self.axis_start)

    def total_length(self):
        """Sum of the element lengths."""
        return float(np.sum(self._lengths))


def _element_samples(field, n_elements):
    """One-sided (left, mid, right) element samples of a field.

    Accepts nodal scalars ``(N+1,)``, nodal vectors ``(N+1, 2)``,
    element-constant scalars ``(N,)``, and element-linear vectors with
    one-sided end values ``(N, 2, 2)`` (axis 1 = left end, right end).
    """
    arr = np.asarray(field, dtype=float)
    if arr.ndim == 1 and arr.shape[0] == n_elements + 1:
        left, right = arr[:-1], arr[1:]
    elif arr.ndim == 2 and arr.shape == (n_elements + 1, 2):
        left, right = arr[:-1], arr[1:]
    elif arr.ndim == 1 and arr.shape[0] == n_elements:
        left = right = arr
    elif arr.ndim == 3 and arr.shape == (n_elements, 2, 2):
        left, right = arr[:, 0], arr[:, 1]
    else:
        raise ValueError(
            "field of shape %s does not conform to a grid with %d elements"
            % (arr.shape, n_elements)
        )
    return left, 0.5 * (left + right), right


def _pointwise(a, b):
    if a.ndim == 2 and b.ndim == 2:
        return np.einsum("ij,ij->i", a, b)
    if a.ndim == 1 and b.ndim == 1:
        return a * b
    raise ValueError(
        "cannot combine a scalar field with a vector field in lumped_inner"
    )


def lumped_inner(v, w, weights=None):
    """Mass-lumped inner product over the uniform reference grid.

    Evaluates ``sum_j (1/(6N)) * [p(rho_{j-1}+) + 4 p(rho_{j-1/2})
    + p(rho_j-)] * weights_j`` where ``p = v . w`` and one-sided limits are
    taken for element-wise fields.  Exact for products that are cubic
    polynomials per element.

    Parameters
    ----------
    v, w : array_like
        Conforming fields; see :func:`_element_samples` for accepted shapes.
    weights : array_like, shape (N,), optional
        Per-element scalar weights (defaults to ones).  Pass the metric
        ``N * element_lengths`` to integrate with respect to arc length.

    Returns
    -------
    float
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1:
            raise ValueError("weights must be a per-element 1-d array")
        n_el = weights.shape[0]
    else:
        n_el = max(v.shape[0], w.shape[0]) - 1
    if n_el == 0:
        return 0.0
    v_l, v_m, v_r = _element_samples(v, n_el)
    w_l, w_m, w_r = _element_samples(w, n_el)
    simpson = (
        _pointwise(v_l, w_l) + 4.0 * _pointwise(v_m, w_m) + _pointwise(v_r, w_r)
    )
    if weights is not None:
        simpson = simpson * weights
    return float(np.sum(simpson) / (6.0 * n_el))


def weighted_normal(old_curve, new_curve):
    """Time-averaged radius-weighted normal field of a curve pair.

    Returns the element-linear vector field (shape ``(N, 2, 2)``, axis 1 =
    one-sided end values) equal to ``-(1/6) * perp(2 r_old dX_old
    + 2 r_new dX_new + r_old dX_new + r_new dX_old)`` where ``dX`` is the
    reference-grid derivative of each curve and ``r`` the nodal radius.
    For ``new_curve == old_curve`` this reduces to the radius-weighted
    outward normal ``r |dX| n`` of the single curve.  Integrating the node
    displacement against this field reproduces the revolved-volume change
    exactly.
    """
    if old_curve.N != new_curve.N:
        raise ValueError(
            "curve pair element counts differ: %d vs %d"
            % (old_curve.N, new_curve.N)
        )
    return _weighted_normal_arrays(old_curve.nodes, new_curve.nodes)


def _weighted_normal_arrays(old_nodes, new_nodes):
    """Array-level core of :func:`weighted_normal` (no validation)."""
    n_el = old_nodes.shape[0] - 1
    if n_el == 0:
        return np.zeros((0, 2, 2))
    d_old = np.diff(old_nodes, axis=0) * n_el
    d_new = np.diff(new_nodes, axis=0) * n_el
    r_old = old_nodes[:, 0]
    r_new = new_nodes[:, 0]
    mix = [
        2.0 * d_old + d_new,  # multiplies r_old samples
        2.0 * d_new + d_old,  # multiplies r_new samples
    ]
    out = np.empty((n_el, 2, 2))
    for side, sl in ((0, slice(None, -1)), (1, slice(1, None))):
        bracket = r_old[sl, None] * mix[0] + r_new[sl, None] * mix[1]
        out[:, side] = -_perp(bracket) / 6.0
    return out


def _chord_rz_moment(p1, p2):
    """Exact integral of ``r z dr`` along the straight segment p1 -> p2."""
    r1, z1 = p1
    r2, z2 = p2
    rm, zm = 0.5 * (r1 + r2), 0.5 * (z1 + z2)
    return (r2 - r1) * (r1 * z1 + 4.0 * rm * zm + r2 * z2) / 6.0


def rotated_cap_volume(sub, c1, c2):
    """Signed volume swept by rotating the region between a substrate arc
    and its chord.

    Computed as ``2 pi * (integral of r z dr along the chord minus the
    substrate first moment of r z r')`` — the flux form of the enclosed
    volume, free of any chord-slope singularity.  Returns 0 when ``c1 == c2``
    and for straight-line substrates, where the chord coincides with the
    arc.
    """
    c1 = float(c1)
    c2 = float(c2)
    if c1 == c2:
        return 0.0
    p1 = np.asarray(sub.eval(c1), dtype=float)
    p2 = np.asarray(sub.eval(c2), dtype=float)
    return float(2.0 * np.pi * (_chord_rz_moment(p1, p2) - sub.moment_rzr(c1, c2)))


def boundary_vector_G(sub, c_old, c_new):
    """Substrate-chord vector weighted by the swept radius moment.

    Returns ``chord * moment_x(c_old, c_new) / |chord|^2`` with
    ``chord = X(c_new) - X(c_old)``; for ``|c_new - c_old| < 1e-12`` the
    analytic limit ``r(c_old) * tangent(c_old)`` is used instead.
    """
    c_old = float(c_old)
    c_new = float(c_new)
    if abs(c_new - c_old) < 1e-12:
        point = np.asarray(sub.eval(c_old), dtype=float)
        tau = np.asarray(sub.tangent(c_old), dtype=float)
        return point[0] * tau
    chord = np.asarray(sub.eval(c_new), dtype=float) - np.asarray(
        sub.eval(c_old), dtype=float
    )
    return chord * (sub.moment_x(c_old, c_new) / float(chord @ chord))


def _boundary_vector_stable(sub, c_old, c_new):
    """Cancellation-safe variant of :func:`boundary_vector_G`.

    For gaps below 1e-5 the direct quotient loses digits to the
    subtraction of nearly equal chord endpoints, so the midpoint form
    ``r(c_mid) * tangent(c_mid)`` (accurate to O(gap^2)) is used instead.
    """
    c_old = float(c_old)
    c_new = float(c_new)
    if abs(c_new - c_old) < 1e-5:
        c_mid = 0.5 * (c_old + c_new)
        point = np.asarray(sub.eval(c_mid), dtype=float)
        tau = np.asarray(sub.tangent(c_mid), dtype=float)
        return point[0] * tau
    return boundary_vector_G(sub, c_old, c_new)


def volume_correction(old_curve, new_curve, sub, h_left, h_right):
    """Boundary-supported correction field restoring exact volume balance.

    Builds the nodal vector field, nonzero only at the two end nodes, whose
    lumped product with the node displacement equals ``h_right - h_left``
    exactly: ``delta_f_N = 3 h_right / (pi h_rho) * u_N / |u_N|^2`` with
    ``u_N = dX_{N-1} + 2 dX_N`` (and the mirrored expression, with opposite
    sign, at node 0).  ``h_left`` / ``h_right`` are the swept substrate-cap
    volumes of the two contact-line moves over the step.

    Parameters
    ----------
    old_curve, new_curve : DiscreteCurve
        The profiles at the two time levels (same N).
    sub : SubstrateCurve
        The substrate the contact lines move on (carried for context; the
        correction itself is built from the node displacement histories).
    h_left, h_right : float
        Swept cap volumes at the inner and outer contact lines.

    Returns
    -------
    ndarray, shape (N + 1, 2)

    Raises
    ------
    ValueError
        If a nonzero cap volume is paired with a vanishing displacement
        denominator (inconsistent state).
    """
    if old_curve.N != new_curve.N:
        raise ValueError(
            "curve pair element counts differ: %d vs %d"
            % (old_curve.N, new_curve.N)
        )
    return _volume_correction_arrays(
        new_curve.nodes - old_curve.nodes, h_left, h_right
    )


def _volume_correction_arrays(d_nodes, h_left, h_right):
    """Array-level core of :func:`volume_correction` (no curve checks)."""
    n_el = d_nodes.shape[0] - 1
    if n_el < 1:
        if h_left != 0.0 or h_right != 0.0:
            raise ValueError(
                "nonzero swept volume on a degenerate single-node curve"
            )
        return np.zeros((1, 2))
    out = np.zeros((n_el + 1, 2))
    h_rho = 1.0 / n_el
    for h_cap, node, u, sign in (
        (float(h_left), 0, 2.0 * d_nodes[0] + d_nodes[1], -1.0),
        (float(h_right), n_el, d_nodes[n_el - 1] + 2.0 * d_nodes[n_el], 1.0),
    ):
        if h_cap == 0.0:
            continue
        norm_sq = float(u @ u)
        if norm_sq < _CHORD_TINY**2:
            raise ValueError(
                "volume correction at node %d is inconsistent: swept volume "
                "%.3e with vanishing displacement denominator" % (node, h_cap)
            )
        out[node] = sign * (3.0 * h_cap / (np.pi * h_rho)) * u / norm_sq
    return out


def _check_contact(curve, sub, c_l, c_r):
    """Validate boundary attachment; returns the substrate span (lo, hi)."""
    nodes = curve.nodes
    if c_l is None:
        if not sub.starts_on_axis:
            raise ValueError(
                "axis mode requires a substrate that starts on the rotation axis"
            )
        if abs(nodes[0, 0]) > _AXIS_TOL:
            raise ValueError(
                "boundary mismatch: inner node radius %.3e is off the axis"
                % nodes[0, 0]
            )
        c_lo = sub.c_min
    else:
        gap = float(np.hypot(*(nodes[0] - np.asarray(sub.eval(c_l)))))
        if gap > _CONTACT_TOL:
            raise ValueError(
                "boundary mismatch: inner node is %.3e away from the "
                "substrate point at arclength %.6g" % (gap, c_l)
            )
        c_lo = float(c_l)
    gap = float(np.hypot(*(nodes[-1] - np.asarray(sub.eval(c_r)))))
    if gap > _CONTACT_TOL:
        raise ValueError(
            "boundary mismatch: outer node is %.3e away from the "
            "substrate point at arclength %.6g" % (gap, c_r)
        )
    return c_lo, float(c_r)


def discrete_volume(curve, sub, c_l, c_r):
    """Signed revolved volume enclosed between the film and the substrate.

    Equals ``2 pi * (integral of r z dr along the film polyline minus the
    substrate moment of r z r' over the wetted span)``; per-element Simpson
    on the polyline is exact for its quadratic integrand.  Pass
    ``c_l = None`` for profiles whose inner end sits on the rotation axis
    (the wetted span then starts at the substrate's axis end).

    Raises
    ------
    ValueError
        If a boundary node does not coincide with its claimed substrate
        point to 1e-10 (or the axis, in axis mode).
    """
    c_lo, c_hi = _check_contact(curve, sub, c_l, c_r)
    film = _polyline_rz_moment(curve.nodes)
    return float(2.0 * np.pi * (film - sub.moment_rzr(c_lo, c_hi)))


def _polyline_rz_moment(nodes):
    """Exact integral of ``r z dr`` along a polyline (per-chord Simpson)."""
    r, z = nodes[:, 0], nodes[:, 1]
    if r.shape[0] < 2:
        return 0.0
    rm = 0.5 * (r[:-1] + r[1:])
    zm = 0.5 * (z[:-1] + z[1:])
    seg = (r[1:] - r[:-1]) * (r[:-1] * z[:-1] + 4.0 * rm * zm + r[1:] * z[1:])
    return float(np.sum(seg)) / 6.0


def discrete_energy(curve, model, sub, c_l, c_r, sigma):
    """Total interfacial energy of the discrete configuration.

    ``2 pi * sum_j r_mid(j) * gamma(theta_j) * length_j`` for the revolved
    film surface minus ``2 pi sigma * moment_x`` over the wetted substrate
    span.  Boundary preconditions match :func:`discrete_volume`.
    """
    c_lo, c_hi = _check_contact(curve, sub, c_l, c_r)
    if curve.N:
        r_mid = 0.5 * (curve.nodes[:-1, 0] + curve.nodes[1:, 0])
        gam = model.gamma(curve.thetas)[0]
        lateral = float(np.sum(r_mid * gam * curve.element_lengths))
    else:
        lateral = 0.0
    return float(
        2.0 * np.pi * (lateral - float(sigma) * sub.moment_x(c_lo, c_hi))
    )


def write_snapshot(path, curve, mu):
    """Write a profile snapshot CSV with header ``rho,r,z,mu``.

    Floats use the shortest round-trip-exact representation so reruns are
    byte-identical.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (curve.N + 1,):
        raise ValueError(
            "mu has shape %s, expected (%d,)" % (mu.shape, curve.N + 1)
        )
    rho = np.linspace(0.0, 1.0, curve.N + 1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("rho,r,z,mu\n")
        for j in range(curve.N + 1):
            fh.write(
                "%.17g,%.17g,%.17g,%.17g\n"
                % (rho[j], curve.nodes[j, 0], curve.nodes[j, 1], mu[j])
            )
