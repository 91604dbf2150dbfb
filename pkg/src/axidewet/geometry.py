"""Axisymmetric substrate curves.

A substrate is the generating curve of a surface of revolution, living in
the half-plane ``(r, z)`` with ``r >= 0`` and parameterized by arc length
``c``.  The parameter increases from the rotation-axis side outward; that
orientation fixes the sign conventions used by the contact-line terms of
the solver.

Every kind implements one interface:

* ``eval(c)``            -- point(s) on the curve,
* ``frame(c)``           -- unit tangent, unit normal, inclination angle,
* ``moment_x(c1, c2)``   -- ``integral of r_hat dc`` (signed),
* ``moment_rzr(c1, c2)`` -- ``integral of r_hat * z_hat * dr_hat/dc dc``,

with closed forms for the analytic kinds (lines, circular arcs, filleted
polylines, and the ``moment_rzr`` of sinusoids) and fixed-order
Gauss-Legendre quadrature otherwise.  The normal convention is
``n = (-dz/dc, dr/dc)``, i.e. the left normal of the tangent.
"""

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = [
    "SubstrateRangeError",
    "SubstrateCurve",
    "LineSubstrate",
    "ArcSubstrate",
    "SinusoidSubstrate",
    "FilletedPolylineSubstrate",
    "SampledSubstrate",
    "arc_reparameterize",
    "substrate_eval",
    "substrate_frame",
    "substrate_moment_x",
    "substrate_moment_rzr",
]

# Fixed Gauss-Legendre rules reused across kinds.
_GL5 = np.polynomial.legendre.leggauss(5)
_GL12 = np.polynomial.legendre.leggauss(12)

# Tolerance for "this end of the substrate touches the rotation axis".
_AXIS_TOL = 1e-12


class SubstrateRangeError(ValueError):
    """Arc-length query outside the substrate's parameter range."""


def _gauss_panel(func, a, b, rule):
    """Integrate ``func`` over ``[a, b]`` with one fixed Gauss panel.

    ``a`` and ``b`` may be arrays of matching shape; ``func`` must accept
    arrays.  Returns the signed integral(s).
    """
    nodes, weights = rule
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[..., None] + half[..., None] * nodes
    return half * (func(pts) @ weights)


class SubstrateCurve:
    """Unit-speed generating curve of an axisymmetric substrate.

    Concrete kinds subclass this and provide ``_eval``, ``_frame`` and the
    two moment integrals.  Scalar queries return 1-D results; array
    queries of shape ``(m,)`` return ``(m, 2)`` points (or ``(m,)``
    angles).
    """

    kind = "abstract"

    def __init__(self, c_min, c_max):
        self.c_min = float(c_min)
        self.c_max = float(c_max)
        if not self.c_max > self.c_min:
            raise ValueError("substrate range must have positive length")
        self._slack = 1e-9 * max(1.0, self.c_max - self.c_min)

    # -- range handling ------------------------------------------------

    def _checked(self, c):
        c = np.asarray(c, dtype=float)
        if np.any(c < self.c_min - self._slack):
            raise SubstrateRangeError(
                "arc length %r below substrate range start %r"
                % (float(np.min(c)), self.c_min)
            )
        if np.any(c > self.c_max + self._slack):
            raise SubstrateRangeError(
                "arc length %r beyond substrate range end %r"
                % (float(np.max(c)), self.c_max)
            )
        return np.clip(c, self.c_min, self.c_max)

    # -- public interface ----------------------------------------------

    def eval(self, c):
        """Point(s) ``(r_hat, z_hat)`` at arc length ``c``."""
        cc = self._checked(c)
        pts = self._eval(np.atleast_1d(cc))
        return pts[0] if np.isscalar(c) or np.ndim(c) == 0 else pts

    def frame(self, c):
        """Unit tangent, unit left normal and inclination angle at ``c``.

        Returns
        -------
        tau : ndarray
            Unit tangent ``(dr/dc, dz/dc)``.
        nrm : ndarray
            Unit normal ``(-dz/dc, dr/dc)``.
        theta : float or ndarray
            Inclination angle ``atan2(dz/dc, dr/dc)``.
        """
        cc = self._checked(c)
        tau, theta = self._frame(np.atleast_1d(cc))
        nrm = np.stack([-tau[:, 1], tau[:, 0]], axis=1)
        if np.isscalar(c) or np.ndim(c) == 0:
            return tau[0], nrm[0], float(theta[0])
        return tau, nrm, theta

    def tangent(self, c):
        """Unit tangent at ``c`` (see ``frame``)."""
        return self.frame(c)[0]

    def theta(self, c):
        """Inclination angle at ``c`` (see ``frame``)."""
        return self.frame(c)[2]

    def moment_x(self, c1, c2):
        """Signed integral of the radial coordinate over ``[c1, c2]``."""
        self._checked(c1)
        self._checked(c2)
        return self._moment_x(float(c1), float(c2))

    def moment_rzr(self, c1, c2):
        """Signed integral of ``r_hat * z_hat * dr_hat/dc`` over ``[c1, c2]``."""
        self._checked(c1)
        self._checked(c2)
        return self._moment_rzr(float(c1), float(c2))

    @property
    def starts_on_axis(self):
        """True when the ``c_min`` end of the curve lies on the rotation axis."""
        return abs(float(self.eval(self.c_min)[0])) < _AXIS_TOL

    # -- kind-specific hooks ---------------------------------------------

    def _eval(self, c):
        raise NotImplementedError

    def _frame(self, c):
        raise NotImplementedError

    def _moment_x(self, c1, c2):
        raise NotImplementedError

    def _moment_rzr(self, c1, c2):
        raise NotImplementedError


class LineSubstrate(SubstrateCurve):
    """Straight substrate ``X(c) = point + c * direction``.

    ``direction`` is normalized at construction, so the parameterization
    is unit speed by construction.
    """

    kind = "flat-line"

    def __init__(self, point, direction, c_min, c_max):
        super().__init__(c_min, c_max)
        self.point = np.asarray(point, dtype=float)
        d = np.asarray(direction, dtype=float)
        norm = np.hypot(d[0], d[1])
        if norm < 1e-14:
            raise ValueError("line direction must be nonzero")
        self.direction = d / norm

    def _eval(self, c):
        return self.point + c[:, None] * self.direction

    def _frame(self, c):
        tau = np.broadcast_to(self.direction, (c.size, 2)).copy()
        theta = np.full(c.size, np.arctan2(self.direction[1], self.direction[0]))
        return tau, theta

    def _moment_x(self, c1, c2):
        px, dx = self.point[0], self.direction[0]
        return px * (c2 - c1) + 0.5 * dx * (c2**2 - c1**2)

    def _moment_rzr(self, c1, c2):
        px, pz = self.point
        dx, dz = self.direction

        def anti(c):
            return px * pz * c + 0.5 * (px * dz + pz * dx) * c**2 + dx * dz * c**3 / 3.0

        return dx * (anti(c2) - anti(c1))


class ArcSubstrate(SubstrateCurve):
    """Circular-arc substrate.

    ``X(c) = center + radius * (cos(phi), sin(phi))`` with
    ``phi(c) = angle0 + sweep * c / radius`` and ``sweep`` in ``{+1, -1}``.
    ``angle0`` is the polar angle of the ``c = 0`` point.
    """

    kind = "circular-arc"

    def __init__(self, center, radius, angle0, sweep, c_min, c_max):
        super().__init__(c_min, c_max)
        if radius <= 0:
            raise ValueError("arc radius must be positive")
        if sweep not in (-1, 1, -1.0, 1.0):
            raise ValueError("sweep must be +1 or -1")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.angle0 = float(angle0)
        self.sweep = float(sweep)

    def _phi(self, c):
        return self.angle0 + self.sweep * c / self.radius

    def _eval(self, c):
        phi = self._phi(c)
        return self.center + self.radius * np.stack(
            [np.cos(phi), np.sin(phi)], axis=-1
        )

    def _frame(self, c):
        phi = self._phi(c)
        tau = self.sweep * np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
        theta = np.arctan2(tau[:, 1], tau[:, 0])
        return tau, theta

    def _moment_x(self, c1, c2):
        phi1, phi2 = self._phi(np.array(c1)), self._phi(np.array(c2))
        return self.center[0] * (c2 - c1) + self.sweep * self.radius**2 * (
            np.sin(phi2) - np.sin(phi1)
        )

    def _moment_rzr(self, c1, c2):
        xc, zc = self.center
        R = self.radius

        def anti(phi):
            return (
                -xc * zc * np.cos(phi)
                + xc * R * (0.5 * phi - 0.25 * np.sin(2 * phi))
                + 0.5 * zc * R * np.sin(phi) ** 2
                + R**2 * np.sin(phi) ** 3 / 3.0
            )

        phi1, phi2 = self._phi(np.array(c1)), self._phi(np.array(c2))
        return -R * (anti(phi2) - anti(phi1))


class SinusoidSubstrate(SubstrateCurve):
    """Sinusoidal substrate ``x -> (x, offset + amplitude * sin(wavenumber * x))``.

    The graph parameterization is converted to arc length with a cumulative
    table plus Newton refinement, so evaluation is unit speed to machine
    precision.  ``c = 0`` corresponds to ``x = x_start``.
    """

    kind = "sinusoid"

    def __init__(self, amplitude, wavenumber, offset, x_start, x_end):
        if x_end <= x_start:
            raise ValueError("x_end must exceed x_start")
        self.amplitude = float(amplitude)
        self.wavenumber = float(wavenumber)
        self.offset = float(offset)
        self.x_start = float(x_start)
        self.x_end = float(x_end)
        span = self.x_end - self.x_start
        n = max(128, int(np.ceil(span * max(abs(self.wavenumber), 1.0) * 8)))
        self._x_table = np.linspace(self.x_start, self.x_end, n + 1)
        seg = _gauss_panel(self._speed, self._x_table[:-1], self._x_table[1:], _GL12)
        self._s_table = np.concatenate([[0.0], np.cumsum(seg)])
        super().__init__(0.0, float(self._s_table[-1]))

    def _speed(self, x):
        return np.hypot(1.0, self.amplitude * self.wavenumber * np.cos(self.wavenumber * x))

    def _arclength(self, x):
        """Arc length from ``x_start`` to ``x`` (array-valued)."""
        j = np.clip(np.searchsorted(self._x_table, x) - 1, 0, len(self._x_table) - 2)
        return self._s_table[j] + _gauss_panel(self._speed, self._x_table[j], x, _GL12)

    def _x_of_c(self, c):
        x = np.interp(c, self._s_table, self._x_table)
        for _ in range(50):
            err = self._arclength(x) - c
            if np.all(np.abs(err) < 1e-13 * np.maximum(1.0, np.abs(c))):
                break
            x = x - err / self._speed(x)
        return x

    def _eval(self, c):
        x = self._x_of_c(c)
        z = self.offset + self.amplitude * np.sin(self.wavenumber * x)
        return np.stack([x, z], axis=-1)

    def _frame(self, c):
        x = self._x_of_c(c)
        slope = self.amplitude * self.wavenumber * np.cos(self.wavenumber * x)
        speed = np.hypot(1.0, slope)
        tau = np.stack([1.0 / speed, slope / speed], axis=-1)
        theta = np.arctan2(slope, 1.0)
        return tau, theta

    def _moment_x(self, c1, c2):
        x1, x2 = self._x_of_c(np.array([c1, c2]))
        panels = max(2, int(np.ceil(abs(self.wavenumber * (x2 - x1)) / 0.4)) + 2)
        edges = np.linspace(x1, x2, panels + 1)
        vals = _gauss_panel(lambda x: x * self._speed(x), edges[:-1], edges[1:], _GL12)
        return float(np.sum(vals))

    def _moment_rzr(self, c1, c2):
        # With x as the radial coordinate, r z dr/dc dc == x f(x) dx.
        x1, x2 = self._x_of_c(np.array([c1, c2]))
        A, k, z0 = self.amplitude, self.wavenumber, self.offset

        def anti(x):
            return 0.5 * z0 * x**2 + A * (np.sin(k * x) / k**2 - x * np.cos(k * x) / k)

        return float(anti(x2) - anti(x1))


class _Piece:
    """One analytic piece of a composite substrate, in piece-local arc length."""

    def __init__(self, curve, length):
        self.curve = curve
        self.length = float(length)


class FilletedPolylineSubstrate(SubstrateCurve):
    """Polyline substrate with tangent circular fillets at interior corners.

    With ``fillet_radius = 0`` the corners are kept sharp; tangent frames
    then raise at (a small neighborhood of) the corners, since the
    direction is undefined there.
    """

    kind = "polyline-with-fillets"

    def __init__(self, vertices, fillet_radius):
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 2:
            raise ValueError("vertices must be an (n, 2) array with n >= 2")
        if fillet_radius < 0:
            raise ValueError("fillet radius must be nonnegative")
        self.fillet_radius = float(fillet_radius)
        self.vertices = vertices

        chords = np.diff(vertices, axis=0)
        lengths = np.hypot(chords[:, 0], chords[:, 1])
        if np.any(lengths < 1e-14):
            raise ValueError("duplicate consecutive vertices")
        units = chords / lengths[:, None]

        pieces = []
        corner_cut = np.zeros(len(vertices))  # trimmed length at each corner
        arcs = []
        for i in range(1, len(vertices) - 1):
            u, v = units[i - 1], units[i]
            cross = u[0] * v[1] - u[1] * v[0]
            dot = float(np.clip(u @ v, -1.0, 1.0))
            turn = np.arctan2(abs(cross), dot)
            if self.fillet_radius == 0.0 or turn < 1e-12:
                arcs.append(None)
                continue
            if turn > np.pi - 1e-9:
                raise ValueError("cannot fillet a 180-degree reversal")
            t = self.fillet_radius * np.tan(0.5 * turn)
            corner_cut[i] = t
            side = 1.0 if cross > 0 else -1.0
            t1 = vertices[i] - t * u
            center = t1 + self.fillet_radius * side * np.array([-u[1], u[0]])
            rel = (t1 - center) / self.fillet_radius
            angle0 = np.arctan2(rel[1], rel[0])
            arcs.append((center, angle0, side, turn * self.fillet_radius))

        offset = 0.0
        self._breaks = [0.0]
        for i in range(len(lengths)):
            seg_len = lengths[i] - corner_cut[i] - corner_cut[i + 1]
            if seg_len < -1e-12:
                raise ValueError("fillet radius too large for segment %d" % i)
            if seg_len > 1e-12:
                start = vertices[i] + corner_cut[i] * units[i]
                pieces.append(
                    _Piece(LineSubstrate(start, units[i], 0.0, seg_len), seg_len)
                )
                offset += seg_len
                self._breaks.append(offset)
            if i < len(arcs) and arcs[i] is not None:
                center, angle0, side, arc_len = arcs[i]
                pieces.append(
                    _Piece(
                        ArcSubstrate(center, self.fillet_radius, angle0, side, 0.0, arc_len),
                        arc_len,
                    )
                )
                offset += arc_len
                self._breaks.append(offset)

        super().__init__(0.0, offset)
        self._pieces = pieces
        self._offsets = np.asarray(self._breaks[:-1])

    def _locate(self, c):
        return np.clip(
            np.searchsorted(self._breaks, c, side="right") - 1, 0, len(self._pieces) - 1
        )

    def _eval(self, c):
        out = np.empty((c.size, 2))
        idx = self._locate(c)
        for j in np.unique(idx):
            sel = idx == j
            local = np.clip(c[sel] - self._offsets[j], 0.0, self._pieces[j].length)
            out[sel] = self._pieces[j].curve._eval(local)
        return out

    def _frame(self, c):
        if self.fillet_radius == 0.0 and len(self._pieces) > 1:
            interior = np.asarray(self._breaks[1:-1])
            if np.any(np.min(np.abs(c[:, None] - interior), axis=1) < 1e-9):
                raise ValueError(
                    "tangent frame requested at a sharp polyline corner; "
                    "construct the substrate with a nonzero fillet radius"
                )
        tau = np.empty((c.size, 2))
        theta = np.empty(c.size)
        idx = self._locate(c)
        for j in np.unique(idx):
            sel = idx == j
            local = np.clip(c[sel] - self._offsets[j], 0.0, self._pieces[j].length)
            tau[sel], theta[sel] = self._pieces[j].curve._frame(local)
        return tau, theta

    def _piece_intervals(self, c1, c2):
        """Yield (piece, a_local, b_local) covering [c1, c2], assuming c1 <= c2."""
        for j, piece in enumerate(self._pieces):
            lo = self._offsets[j]
            hi = lo + piece.length
            a = max(c1, lo)
            b = min(c2, hi)
            if b > a:
                yield piece, a - lo, b - lo

    def _signed_piecewise(self, c1, c2, attr):
        sign = 1.0
        if c2 < c1:
            c1, c2, sign = c2, c1, -1.0
        total = 0.0
        for piece, a, b in self._piece_intervals(c1, c2):
            total += getattr(piece.curve, attr)(a, b)
        return sign * total

    def _moment_x(self, c1, c2):
        return self._signed_piecewise(c1, c2, "_moment_x")

    def _moment_rzr(self, c1, c2):
        return self._signed_piecewise(c1, c2, "_moment_rzr")


class SampledSubstrate(SubstrateCurve):
    """Substrate built from point samples via arc-length reparameterization.

    A monotone C1 interpolant in the chord parameter supplies tangent
    angles; those are re-tabulated in true arc length and the curve is
    recovered by integrating the unit tangent, so the unit-speed invariant
    holds exactly at every query.
    """

    kind = "sampled"

    def __init__(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValueError("samples must be an (n, 2) array")
        if len(points) < 2:
            raise ValueError("need at least two sample points")
        chord = np.hypot(*np.diff(points, axis=0).T)
        if np.any(chord < 1e-14):
            raise ValueError("duplicate consecutive sample points")
        ctilde = np.concatenate([[0.0], np.cumsum(chord)])
        fr = PchipInterpolator(ctilde, points[:, 0])
        fz = PchipInterpolator(ctilde, points[:, 1])
        dfr, dfz = fr.derivative(), fz.derivative()

        # Fine grid in the chord parameter, then convert to true arc length.
        refine = 8
        fine = np.unique(
            np.concatenate(
                [
                    np.linspace(ctilde[i], ctilde[i + 1], refine + 1)
                    for i in range(len(chord))
                ]
            )
        )
        speed = lambda t: np.hypot(dfr(t), dfz(t))
        seg = _gauss_panel(speed, fine[:-1], fine[1:], _GL12)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        theta = np.unwrap(np.arctan2(dfz(fine), dfr(fine)))
        self._theta_of_c = PchipInterpolator(s, theta)
        self._knots = s

        # Anchor positions at the knots by integrating the unit tangent.
        anchors = np.empty((len(s), 2))
        anchors[0] = points[0]
        for i in range(len(s) - 1):
            anchors[i + 1] = anchors[i] + np.array(
                [
                    _gauss_panel(lambda t: np.cos(self._theta_of_c(t)), s[i], s[i + 1], _GL12),
                    _gauss_panel(lambda t: np.sin(self._theta_of_c(t)), s[i], s[i + 1], _GL12),
                ]
            )
        self._anchors = anchors
        super().__init__(0.0, float(s[-1]))

    def _eval(self, c):
        j = np.clip(np.searchsorted(self._knots, c) - 1, 0, len(self._knots) - 2)
        base = self._anchors[j]
        dx = _gauss_panel(lambda t: np.cos(self._theta_of_c(t)), self._knots[j], c, _GL12)
        dz = _gauss_panel(lambda t: np.sin(self._theta_of_c(t)), self._knots[j], c, _GL12)
        return base + np.stack([dx, dz], axis=-1)

    def _frame(self, c):
        theta = self._theta_of_c(c)
        tau = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return tau, np.arctan2(tau[:, 1], tau[:, 0])

    def _quadrature(self, func, c1, c2):
        sign = 1.0
        if c2 < c1:
            c1, c2, sign = c2, c1, -1.0
        cuts = self._knots[(self._knots > c1) & (self._knots < c2)]
        edges = np.concatenate([[c1], cuts, [c2]])
        vals = _gauss_panel(func, edges[:-1], edges[1:], _GL12)
        return sign * float(np.sum(vals))

    def _moment_x(self, c1, c2):
        return self._quadrature(lambda t: self._eval_r(t), c1, c2)

    def _eval_r(self, c):
        flat = np.ravel(c)
        r = self._eval(flat)[:, 0]
        return r.reshape(np.shape(c))

    def _moment_rzr(self, c1, c2):
        def integrand(t):
            flat = np.ravel(t)
            pts = self._eval(flat)
            drdc = np.cos(self._theta_of_c(flat))
            return (pts[:, 0] * pts[:, 1] * drdc).reshape(np.shape(t))

        return self._quadrature(integrand, c1, c2)


def arc_reparameterize(samples):
    """Build a unit-speed :class:`SampledSubstrate` from raw point samples.

    Parameters
    ----------
    samples : array_like, shape (n, 2)
        Curve points, at least two, with no duplicate consecutive entries.

    Returns
    -------
    SampledSubstrate
    """
    return SampledSubstrate(samples)


def substrate_eval(sub, c):
    """Point(s) on the substrate's generating curve at arc length ``c``."""
    return sub.eval(c)


def substrate_frame(sub, c):
    """Unit tangent, unit normal, inclination angle at arc length ``c``."""
    return sub.frame(c)


def substrate_moment_x(sub, c1, c2):
    """Signed integral of the radial coordinate along the substrate."""
    return sub.moment_x(c1, c2)


def substrate_moment_rzr(sub, c1, c2):
    """Signed integral of ``r * z * dr/dc`` along the substrate."""
    return sub.moment_rzr(c1, c2)
