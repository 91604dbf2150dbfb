"""Independent cross-check routines for the test suite.

Every helper recomputes a target quantity through a route different from
the package implementation (adaptive quadrature, the complementary
``r^2 dz`` volume integral, closed-form solid geometry, brute-force
scans), so that agreement between the two is evidence of correctness
rather than a tautology.
"""

import numpy as np
from scipy.integrate import quad

_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-13, limit=500)


# ---------------------------------------------------------------------------
# substrate moment integrals


def _split_points(sub, c1, c2):
    """Interior breakpoints of composite substrates, for adaptive quadrature."""
    cuts = []
    for attr in ("_breaks",):
        arr = getattr(sub, attr, None)
        if arr is not None:
            arr = np.asarray(arr, dtype=float)
            cuts.extend(arr[(arr > min(c1, c2) + 1e-12) & (arr < max(c1, c2) - 1e-12)])
    return sorted(set(cuts)) or None

def quad_moment_x(sub, c1, c2):
    """Signed integral of the radial coordinate, by adaptive quadrature."""
    val, _ = quad(
        lambda c: float(sub.eval(c)[0]), c1, c2,
        points=_split_points(sub, c1, c2), **_QUAD_OPTS,
    )
    return val


def quad_moment_rzr(sub, c1, c2):
    """Signed integral of ``r * z * dr/dc``, by adaptive quadrature."""

    def g(c):
        r, z = sub.eval(c)
        tau = sub.tangent(c)
        return float(r * z * tau[0])

    val, _ = quad(g, c1, c2, points=_split_points(sub, c1, c2), **_QUAD_OPTS)
    return val


def _dense_simpson(values, spacing):
    w = np.ones(len(values))
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return spacing / 3.0 * float(w @ values)


def dense_moment_x(sub, c1, c2, n=200_001):
    """Signed integral of the radial coordinate, by dense composite Simpson.

    Preferred over adaptive quadrature for sampled substrates, whose
    interpolated integrands have many small curvature kinks.
    """
    cs = np.linspace(c1, c2, n)
    return _dense_simpson(sub.eval(cs)[:, 0], cs[1] - cs[0])


def dense_moment_rzr(sub, c1, c2, n=200_001):
    """Signed integral of ``r * z * dr/dc``, by dense composite Simpson."""
    cs = np.linspace(c1, c2, n)
    pts = sub.eval(cs)
    tau = sub.frame(cs)[0]
    return _dense_simpson(pts[:, 0] * pts[:, 1] * tau[:, 0], cs[1] - cs[0])


# ---------------------------------------------------------------------------
# revolved volumes of polylines and swept regions


def perp(v):
    """Clockwise quarter turn ``(a, b) -> (b, -a)`` along the last axis."""
    v = np.asarray(v, dtype=float)
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def polyline_rz_dr(points):
    """``2 pi * integral of r z dr`` along a polyline (exact per chord)."""
    pts = np.asarray(points, dtype=float)
    r, z = pts[:, 0], pts[:, 1]
    rm = 0.5 * (r[:-1] + r[1:])
    zm = 0.5 * (z[:-1] + z[1:])
    seg = (r[1:] - r[:-1]) * (r[:-1] * z[:-1] + 4.0 * rm * zm + r[1:] * z[1:]) / 6.0
    return 2.0 * np.pi * float(np.sum(seg))


def polyline_r2_dz(points):
    """``-pi * integral of r^2 dz`` along a polyline (exact per chord).

    On a closed loop this equals :func:`polyline_rz_dr` by integration by
    parts, which provides an algebraically independent second route to any
    revolved volume.
    """
    pts = np.asarray(points, dtype=float)
    r, z = pts[:, 0], pts[:, 1]
    seg = (z[1:] - z[:-1]) * (r[:-1] ** 2 + r[:-1] * r[1:] + r[1:] ** 2) / 3.0
    return -np.pi * float(np.sum(seg))


def swept_volume(old_pts, new_pts):
    """Signed revolved volume swept when a polyline moves ``old -> new``.

    Computed as the closed-loop revolved-polygon volume of
    ``new chain, chord to old end, reversed old chain, chord back``.
    """
    old_pts = np.asarray(old_pts, dtype=float)
    new_pts = np.asarray(new_pts, dtype=float)
    loop = np.vstack([new_pts, old_pts[::-1], new_pts[:1]])
    return polyline_r2_dz(loop)


def cap_volume_quadrature(sub, c1, c2):
    """Revolved volume between a substrate chord and the substrate arc.

    Independent route: the loop ``chord from X(c1) to X(c2), arc back``
    is integrated as ``-pi * loop integral of r^2 dz``, with the arc leg
    evaluated by adaptive quadrature.
    """
    p1 = np.asarray(sub.eval(c1), dtype=float)
    p2 = np.asarray(sub.eval(c2), dtype=float)
    chord_part = polyline_r2_dz(np.vstack([p1, p2]))

    def g(c):
        r, _ = sub.eval(c)
        tau = sub.tangent(c)
        return float(r * r * tau[1])

    arc, _ = quad(g, c1, c2, points=_split_points(sub, c1, c2), **_QUAD_OPTS)
    return chord_part + np.pi * arc


def closed_polygon_volume(points):
    """Signed revolved volume of a closed polygon by frustum sums."""
    pts = np.asarray(points, dtype=float)
    return polyline_r2_dz(np.vstack([pts, pts[:1]]))


def film_volume_quadrature(film_nodes, sub, c_lo, c_hi):
    """Revolved volume between a film polyline and the substrate.

    Independent route: the loop ``film chain forward, substrate arc back``
    is integrated as ``-pi * loop integral of r^2 dz`` with the substrate
    leg evaluated by adaptive quadrature (the film boundary nodes must sit
    on the substrate at the given arclengths, or on the axis).
    """
    film_part = polyline_r2_dz(np.asarray(film_nodes, dtype=float))

    def g(c):
        r, _ = sub.eval(c)
        tau = sub.tangent(c)
        return float(r * r * tau[1])

    arc, _ = quad(g, c_lo, c_hi, points=_split_points(sub, c_lo, c_hi), **_QUAD_OPTS)
    return film_part + np.pi * arc


# ---------------------------------------------------------------------------
# closed-form solids


def spherical_cap_volume(radius, height):
    """Volume of a spherical cap of the given sphere radius and cap height."""
    return np.pi * height**2 * (3.0 * radius - height) / 3.0


def spherical_zone_area(radius, height):
    """Lateral area of a spherical zone (band) of the given height."""
    return 2.0 * np.pi * radius * height


# ---------------------------------------------------------------------------
# stabilizer scan


def fourfold(beta):
    """Return ``(gamma, dgamma)`` callables for the four-fold energy family."""

    def gamma(theta):
        return 1.0 + beta * np.cos(4.0 * np.asarray(theta, dtype=float))

    def dgamma(theta):
        return -4.0 * beta * np.sin(4.0 * np.asarray(theta, dtype=float))

    return gamma, dgamma


def stabilizer_required(gamma, dgamma, theta, delta):
    """Smallest stabilizer value enforcing the chord-stability bound.

    For a fixed direction angle ``theta`` and angle gap ``delta`` the
    stability inequality is quadratic in the length ratio ``a``:
    ``a^2 (A0 + s sin^2 delta) - a B1 + C >= 0`` for all ``a > 0``.  The
    minimal ``s`` follows from the discriminant when ``B1 > 0`` and from
    positivity of the leading coefficient otherwise.
    """
    theta = np.asarray(theta, dtype=float)
    delta = np.asarray(delta, dtype=float)
    a0 = gamma(theta) * np.cos(2.0 * delta) + dgamma(theta) * np.sin(2.0 * delta)
    b1 = gamma(theta) * np.cos(delta) + dgamma(theta) * np.sin(delta) + gamma(theta + delta)
    c = gamma(theta)
    s2 = np.sin(delta) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        req = np.where(b1 > 0.0, (b1**2 / (4.0 * c) - a0) / s2, -a0 / s2)
    return req


def stabilizer_scan(gamma, dgamma, n_theta=720, n_delta=721):
    """Brute-force supremum of :func:`stabilizer_required` over a grid."""
    thetas = np.linspace(-np.pi, np.pi, n_theta, endpoint=False)
    deltas = np.linspace(-np.pi, np.pi, n_delta)
    deltas = deltas[np.abs(np.sin(deltas)) > 1e-9]
    req = stabilizer_required(gamma, dgamma, thetas[:, None], deltas[None, :])
    return max(0.0, float(np.max(req)))
