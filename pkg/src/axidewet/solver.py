"""Implicit time stepping for axisymmetric film evolution on a substrate.

Each step solves a coupled weak-form system for the new film profile, the
new chemical potential and the new contact-line arclengths:

* the motion rows balance the normal displacement, integrated against the
  time-averaged radius-weighted normal, with surface diffusion of the
  potential (explicit metric, implicit potential);
* the force rows balance the potential against the stabilized
  surface-energy matrix acting on the new profile (explicit matrix,
  implicit geometry), with contact-line relaxation and substrate-tension
  terms at the boundary.

Two variants are provided: the plain energy-decaying scheme, and a
volume-conserving refinement that augments the weighted normal with a
boundary-supported correction field so the enclosed volume is reproduced
exactly at every step.

Contact nodes carry a single arclength unknown each (positions slaved to
the substrate); profiles whose inner end has reached the rotation axis
instead pin that node's radius to zero and keep the first element chord
horizontal.  Newton's method with a colored finite-difference Jacobian,
step damping and time-step halving drives each step to a residual below
``1e-8`` (then polishes toward machine precision so the conservation
identities hold to roundoff).
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

from .anisotropy import energy_matrices
from .geometry import SubstrateRangeError
from .mesh import (
    DiscreteCurve,
    _boundary_vector_stable,
    _volume_correction_arrays,
    _weighted_normal_arrays,
    discrete_energy,
    discrete_volume,
    rotated_cap_volume,
)

__all__ = [
    "ENERGY_STABLE",
    "STRUCTURE_PRESERVING",
    "DEFAULT_ETA",
    "DEFAULT_SIGMA",
    "NEWTON_TOL",
    "PINCH_DISTANCE",
    "SolverFailure",
    "SolverState",
    "residual",
    "newton_step",
    "advance",
    "mode_switch",
    "detect_and_split",
]

ENERGY_STABLE = "energy_stable"
STRUCTURE_PRESERVING = "structure_preserving"
_VARIANTS = (ENERGY_STABLE, STRUCTURE_PRESERVING)

DEFAULT_ETA = 100.0
DEFAULT_SIGMA = -np.sqrt(3.0) / 2.0

NEWTON_TOL = 1e-8
PINCH_DISTANCE = 1e-3

_POLISH_TOL = 5e-13
_MAX_POLISH = 3
_MAX_NEWTON_ITERS = 60
_MAX_DAMPINGS = 8
_CHORD_REFRESH_RATIO = 0.25

_SPARSITY_CACHE = {}
_MAX_HALVINGS = 6
_FD_STEP = 1e-7
_AXIS_SWITCH_RADIUS = 1e-8


class SolverFailure(RuntimeError):
    """A time step could not be completed despite damping and halving."""


class _NewtonFailure(Exception):
    """Internal: one step attempt failed (retryable with a smaller step)."""


class _NonFiniteResidual(ValueError):
    """Internal: a residual evaluation produced NaN or infinity."""


def _check_variant(variant):
    if variant not in _VARIANTS:
        raise ValueError(
            "unknown scheme variant %r (expected one of %s)" % (variant, _VARIANTS)
        )


@dataclass
class SolverState:
    """Complete simulation state at one time level.

    Parameters
    ----------
    curve : DiscreteCurve
        Film profile.
    mu : ndarray, shape (N + 1,)
        Nodal chemical potential (solver sign convention).
    c_l : float or None
        Inner contact arclength; ``None`` when the inner end sits on the
        rotation axis.
    c_r : float
        Outer contact arclength.
    t : float
        Simulation time.
    newton_iters, residual_norm :
        Statistics of the Newton solve that produced this state.
    diagnostics : dict
        Per-step extras (energy change, relaxation terms, events).
    """

    curve: DiscreteCurve
    mu: np.ndarray
    c_l: float
    c_r: float
    t: float = 0.0
    newton_iters: int = 0
    residual_norm: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        if mu.shape != (self.curve.N + 1,):
            raise ValueError(
                "mu has shape %s, expected (%d,)" % (mu.shape, self.curve.N + 1)
            )
        mu.setflags(write=False)
        self.mu = mu
        if self.c_l is not None:
            self.c_l = float(self.c_l)
        self.c_r = float(self.c_r)

    @property
    def mode(self):
        """``"axis"`` when the inner end is pinned to the rotation axis."""
        return "axis" if self.c_l is None else "two_contacts"


class _StepSystem:
    """One implicit step as a nonlinear system in packed-unknown form.

    Unknown layout (two contacts, ``n`` elements): ``[c_l, c_r,
    r_1, z_1, ..., r_{n-1}, z_{n-1}, mu_0, ..., mu_n]``.  Axis mode drops
    ``c_l``, pins ``r_0 = 0`` and fuses ``z_0 = z_1`` into one unknown:
    ``[c_r, z_axis, r_1, r_2, z_2, ..., r_{n-1}, z_{n-1}, mu_0, ...,
    mu_n]``.  Residual rows pair with unknowns Galerkin-fashion: motion
    rows for every potential hat function, force rows for every admissible
    vector test function (interior hats, the axis-fused vertical hat, and
    one substrate-tangent hat per contact).
    """

    def __init__(self, prev, dt, model, sub, variant, eta, sigma):
        _check_variant(variant)
        curve = prev.curve
        n = curve.N
        if n < 2:
            raise ValueError(
                "film with %d elements is degenerate (need at least 2)" % n
            )
        if curve.total_length() < 1e-12:
            raise ValueError("zero-extent film (degenerate input)")
        self.prev = prev
        self.dt = float(dt)
        self.model = model
        self.sub = sub
        self.variant = variant
        self.eta = float(eta)
        self.sigma = float(sigma)
        self.axis = prev.c_l is None
        self.n = n
        self.h = 1.0 / n

        self.nodes_old = np.asarray(curve.nodes, dtype=float)
        len_old = curve.element_lengths
        r_old = self.nodes_old[:, 0]
        # diffusion/assembly coefficient r_mean / |element| of the old curve
        self.coefA = 0.5 * (r_old[:-1] + r_old[1:]) / len_old
        self.B = energy_matrices(model, curve.thetas)

        self.n_unknown = 3 * n if self.axis else 3 * n + 1
        self.mu_off = self.n_unknown - (n + 1)
        self._build_sparsity()

    # -- packing ----------------------------------------------------------

    def initial_guess(self):
        prev = self.prev
        u = np.empty(self.n_unknown)
        nodes = self.nodes_old
        n = self.n
        if self.axis:
            u[0] = prev.c_r
            u[1] = nodes[0, 1]
            u[2] = nodes[1, 0]
            u[3 : self.mu_off] = nodes[2:n].ravel()
        else:
            u[0] = prev.c_l
            u[1] = prev.c_r
            u[2 : self.mu_off] = nodes[1:n].ravel()
        u[self.mu_off :] = prev.mu
        return u

    def pack(self, candidate):
        if candidate.curve.N != self.n:
            raise ValueError(
                "candidate has %d elements, expected %d" % (candidate.curve.N, self.n)
            )
        if (candidate.c_l is None) != self.axis:
            raise ValueError("candidate boundary mode differs from the base state")
        nodes = candidate.curve.nodes
        n = self.n
        u = np.empty(self.n_unknown)
        if self.axis:
            if abs(nodes[0, 0]) > 1e-8:
                raise ValueError("axis-mode candidate has inner radius off zero")
            if abs(nodes[1, 1] - nodes[0, 1]) > 1e-8:
                raise ValueError(
                    "axis-mode candidate first element is not horizontal"
                )
            u[0] = candidate.c_r
            u[1] = nodes[0, 1]
            u[2] = nodes[1, 0]
            u[3 : self.mu_off] = nodes[2:n].ravel()
        else:
            for c_val, node, label in (
                (candidate.c_l, nodes[0], "inner"),
                (candidate.c_r, nodes[-1], "outer"),
            ):
                gap = float(np.hypot(*(node - np.asarray(self.sub.eval(c_val)))))
                if gap > 1e-8:
                    raise ValueError(
                        "candidate %s boundary node is %.3e away from its "
                        "substrate point" % (label, gap)
                    )
            u[0] = candidate.c_l
            u[1] = candidate.c_r
            u[2 : self.mu_off] = nodes[1:n].ravel()
        u[self.mu_off :] = candidate.mu
        return u

    def unpack(self, u):
        n = self.n
        nodes = np.empty((n + 1, 2))
        if self.axis:
            c_l, c_r = None, float(u[0])
            nodes[0] = (0.0, u[1])
            nodes[1] = (u[2], u[1])
            nodes[2:n] = u[3 : self.mu_off].reshape(n - 2, 2)
        else:
            c_l, c_r = float(u[0]), float(u[1])
            nodes[0] = self.sub.eval(c_l)
            nodes[1:n] = u[2 : self.mu_off].reshape(n - 1, 2)
        nodes[n] = self.sub.eval(c_r)
        mu = u[self.mu_off :]
        return nodes, mu, c_l, c_r

    def state_from(self, u, iters, resid):
        nodes, mu, c_l, c_r = self.unpack(u)
        _project_axis_grazes(nodes)
        curve = DiscreteCurve(nodes, axis_start=self.axis)
        return SolverState(
            curve=curve,
            mu=mu,
            c_l=c_l,
            c_r=c_r,
            t=self.prev.t + self.dt,
            newton_iters=iters,
            residual_norm=resid,
        )

    # -- residual ---------------------------------------------------------

    def residual_u(self, u):
        n, h, dt = self.n, self.h, self.dt
        nodes_new, mu, c_l, c_r = self.unpack(u)
        d_nodes = nodes_new - self.nodes_old
        f_star = _weighted_normal_arrays(self.nodes_old, nodes_new)
        if self.variant == STRUCTURE_PRESERVING:
            h_l = 0.0
            if not self.axis:
                h_l = rotated_cap_volume(self.sub, self.prev.c_l, c_l)
            h_r = rotated_cap_volume(self.sub, self.prev.c_r, c_r)
            if h_l != 0.0 or h_r != 0.0:
                delta = _volume_correction_arrays(d_nodes, h_l, h_r)
                f_star = f_star.copy()
                f_star[:, 0, :] += delta[:-1]
                f_star[:, 1, :] += delta[1:]

        f_mid = 0.5 * (f_star[:, 0] + f_star[:, 1])
        dx_mid = 0.5 * (d_nodes[:-1] + d_nodes[1:])

        # motion rows: lumped displacement flux minus potential diffusion
        g_left = np.einsum("ij,ij->i", d_nodes[:-1], f_star[:, 0])
        g_right = np.einsum("ij,ij->i", d_nodes[1:], f_star[:, 1])
        g_mid = np.einsum("ij,ij->i", dx_mid, f_mid)
        lump = np.zeros(n + 1)
        lump[:-1] += g_left + 2.0 * g_mid
        lump[1:] += 2.0 * g_mid + g_right
        lump *= h / 6.0
        flux = self.coefA * np.diff(mu)
        r_motion = lump / dt
        r_motion[1:] -= flux
        r_motion[:-1] += flux

        # force rows against unconstrained nodal vector hats
        edges_new = np.diff(nodes_new, axis=0)
        len_new = np.hypot(edges_new[:, 0], edges_new[:, 1])
        theta_new = np.arctan2(edges_new[:, 1], edges_new[:, 0])
        gam_new = np.asarray(self.model.gamma(theta_new)[0], dtype=float)

        mu_mid = 0.5 * (mu[:-1] + mu[1:])
        t1 = np.zeros((n + 1, 2))
        t1[:-1] += mu[:-1, None] * f_star[:, 0] + 2.0 * mu_mid[:, None] * f_mid
        t1[1:] += 2.0 * mu_mid[:, None] * f_mid + mu[1:, None] * f_star[:, 1]
        t1 *= h / 6.0

        stretch = 0.5 * gam_new * len_new
        t2 = np.zeros(n + 1)
        t2[:-1] += stretch
        t2[1:] += stretch

        bent = self.coefA[:, None] * np.einsum("eij,ej->ei", self.B, edges_new)
        t3 = np.zeros((n + 1, 2))
        t3[1:] += bent
        t3[:-1] -= bent

        r_force = t1 + t3
        r_force[:, 0] += t2

        # contact rows: force rows projected on the substrate tangent plus
        # relaxation and substrate-tension terms
        d_r = np.asarray(self.sub.tangent(0.5 * (self.prev.c_r + c_r)))
        g_r = _boundary_vector_stable(self.sub, self.prev.c_r, c_r)
        gd_r = float(g_r @ d_r)
        row_right = (
            float(r_force[n] @ d_r)
            + (c_r - self.prev.c_r) / (self.eta * dt) * gd_r
            - self.sigma * gd_r
        )

        if self.axis:
            res = np.concatenate(
                [
                    r_motion,
                    [r_force[0, 1] + r_force[1, 1], r_force[1, 0]],
                    r_force[2:n].ravel(),
                    [row_right],
                ]
            )
        else:
            d_l = np.asarray(self.sub.tangent(0.5 * (self.prev.c_l + c_l)))
            g_l = _boundary_vector_stable(self.sub, self.prev.c_l, c_l)
            gd_l = float(g_l @ d_l)
            row_left = (
                float(r_force[0] @ d_l)
                + (c_l - self.prev.c_l) / (self.eta * dt) * gd_l
                + self.sigma * gd_l
            )
            res = np.concatenate(
                [r_motion, r_force[1:n].ravel(), [row_left, row_right]]
            )
        if not np.all(np.isfinite(res)):
            bad = int(np.argmax(~np.isfinite(res)))
            raise _NonFiniteResidual(
                "non-finite residual at row %d (%s)" % (bad, self._describe_row(bad))
            )
        return res

    def _describe_row(self, row):
        n = self.n
        if row <= n:
            return "motion row of node %d" % row
        if self.axis:
            if row == n + 1:
                return "axis vertical-motion row (nodes 0-1)"
            if row == n + 2:
                return "first interior radius row (node 1)"
            if row == 3 * n - 1:
                return "outer contact row"
            k = row - (n + 3)
            return "force row of node %d, %s" % (2 + k // 2, "rz"[k % 2])
        if row == 3 * n - 1:
            return "inner contact row"
        if row == 3 * n:
            return "outer contact row"
        k = row - (n + 1)
        return "force row of node %d, %s" % (1 + k // 2, "rz"[k % 2])

    # -- jacobian ---------------------------------------------------------

    def _rows_of_node(self, i):
        n = self.n
        rows = [i]
        if self.axis:
            if i == 0:
                rows.append(n + 1)
            elif i == 1:
                rows.extend((n + 1, n + 2))
            elif i == n:
                rows.append(3 * n - 1)
            else:
                base = n + 3 + 2 * (i - 2)
                rows.extend((base, base + 1))
        else:
            if i == 0:
                rows.append(3 * n - 1)
            elif i == n:
                rows.append(3 * n)
            else:
                base = n + 1 + 2 * (i - 1)
                rows.extend((base, base + 1))
        return rows

    def _build_sparsity(self):
        cached = _SPARSITY_CACHE.get((self.axis, self.n))
        if cached is not None:
            self._col_rows, self._color_groups = cached
            return
        n = self.n
        spans = {}
        colors = {}
        if self.axis:
            spans[0] = (n - 2, n)  # c_r
            spans[1] = (0, 3)  # fused axis z
            spans[2] = (0, 3)  # first interior radius
            colors[0] = ("c_r",)
            colors[1] = ("z_ax",)
            colors[2] = ("r1",)
            for j in range(2, n):
                base = 3 + 2 * (j - 2)
                spans[base] = (j - 2, j + 2)
                spans[base + 1] = (j - 2, j + 2)
                colors[base] = ("Xr", j % 5)
                colors[base + 1] = ("Xz", j % 5)
        else:
            spans[0] = (0, 2)  # c_l
            spans[1] = (n - 2, n)  # c_r
            colors[0] = ("c_l",)
            colors[1] = ("c_r",)
            for j in range(1, n):
                base = 2 + 2 * (j - 1)
                spans[base] = (j - 2, j + 2)
                spans[base + 1] = (j - 2, j + 2)
                colors[base] = ("Xr", j % 5)
                colors[base + 1] = ("Xz", j % 5)
        for j in range(n + 1):
            col = self.mu_off + j
            spans[col] = (j - 2, j + 2)
            colors[col] = ("mu", j % 5)

        self._col_rows = {}
        for col, (lo, hi) in spans.items():
            rows = []
            for i in range(max(0, lo), min(n, hi) + 1):
                rows.extend(self._rows_of_node(i))
            self._col_rows[col] = np.unique(rows)

        groups = {}
        for col, key in colors.items():
            groups.setdefault(key, []).append(col)
        self._color_groups = [np.array(sorted(g)) for g in groups.values()]
        _SPARSITY_CACHE[(self.axis, self.n)] = (
            self._col_rows, self._color_groups
        )

    def jacobian(self, u, r0):
        rows_out, cols_out, vals_out = [], [], []
        for cols in self._color_groups:
            steps = _FD_STEP * (1.0 + np.abs(u[cols]))
            du = np.zeros_like(u)
            du[cols] = steps
            sign = 1.0
            try:
                r1 = self.residual_u(u + du)
            except (SubstrateRangeError, _NonFiniteResidual):
                sign = -1.0
                r1 = self.residual_u(u - du)
            for col, step in zip(cols, steps):
                rows = self._col_rows[col]
                vals = (r1[rows] - r0[rows]) / (sign * step)
                rows_out.append(rows)
                cols_out.append(np.full(rows.shape, col))
                vals_out.append(vals)
        data = np.concatenate(vals_out)
        if not np.all(np.isfinite(data)):
            raise _NewtonFailure("non-finite Jacobian entries")
        return csc_matrix(
            (data, (np.concatenate(rows_out), np.concatenate(cols_out))),
            shape=(self.n_unknown, self.n_unknown),
        )


def _project_axis_grazes(nodes):
    """Lift interior radii that landed a rounding error past the axis.

    A converged iterate is accepted on residual norm alone, so a node at
    the pole of a coning cap can come out with a radius a few ulp below
    zero.  Radii within ``1e-8`` of the axis (relative to the curve's
    radial extent) are floored to a tiny positive value; anything further
    negative is left for the curve constructor to reject.
    """
    r = nodes[1:-1, 0]
    bad = r <= 0.0
    if not bad.any():
        return
    scale = max(1.0, float(np.max(nodes[:, 0])))
    graze = bad & (r > -1.0e-8 * scale)
    r[graze] = 1.0e-12 * scale


def _factor(system, u, res):
    """Factored finite-difference Jacobian at the iterate ``u``."""
    try:
        jac = system.jacobian(u, res)
    except (SubstrateRangeError, _NonFiniteResidual) as exc:
        raise _NewtonFailure("Jacobian evaluation failed: %s" % exc)
    try:
        return splu(jac)
    except RuntimeError as exc:
        raise _NewtonFailure(
            "singular Jacobian (factorization failed: %s; matrix inf-norm "
            "%.3e)" % (exc, np.max(np.abs(jac.data)) if jac.nnz else 0.0)
        )


def _damped_step(system, u, res, res_norm, lu):
    """One damped quasi-Newton update with the given factorization."""
    step = lu.solve(-res)
    if not np.all(np.isfinite(step)):
        raise _NewtonFailure("singular Jacobian (non-finite Newton step)")
    lam = 1.0
    for _ in range(_MAX_DAMPINGS + 1):
        try:
            trial = u + lam * step
            res_t = system.residual_u(trial)
            norm_t = float(np.max(np.abs(res_t)))
            if norm_t < res_norm:
                return trial, res_t, norm_t
        except (SubstrateRangeError, _NonFiniteResidual):
            pass
        lam *= 0.5
    raise _NewtonFailure(
        "no residual decrease after %d step halvings (residual %.3e)"
        % (_MAX_DAMPINGS, res_norm)
    )


def _newton_update(system, u, res, res_norm):
    """One damped Newton update; returns (u, residual, norm) or raises."""
    return _damped_step(system, u, res, res_norm, _factor(system, u, res))


def _solve_u(system, tol):
    u = system.initial_guess()
    try:
        res = system.residual_u(u)
    except (SubstrateRangeError, _NonFiniteResidual) as exc:
        raise _NewtonFailure(str(exc))
    res_norm = float(np.max(np.abs(res)))
    # The factorization is reused across iterations while it keeps cutting
    # the residual by at least 1/_CHORD_REFRESH_RATIO per update; a fresh
    # factor costs ~20 residual evaluations, a reused one costs 1.
    lu = None
    lu_fresh = False
    iters = 0
    while res_norm >= tol:
        if iters >= _MAX_NEWTON_ITERS:
            raise _NewtonFailure(
                "Newton stalled at residual %.3e after %d iterations"
                % (res_norm, iters)
            )
        if lu is None:
            lu = _factor(system, u, res)
            lu_fresh = True
        try:
            u2, res2, norm2 = _damped_step(system, u, res, res_norm, lu)
        except _NewtonFailure:
            if lu_fresh:
                raise
            lu = None
            continue
        if norm2 > _CHORD_REFRESH_RATIO * res_norm:
            lu = None
        else:
            lu_fresh = False
        u, res, res_norm = u2, res2, norm2
        iters += 1
    # polish toward machine precision so conservation identities hold
    polish = 0
    while polish < _MAX_POLISH and res_norm > _POLISH_TOL:
        if lu is None:
            try:
                lu = _factor(system, u, res)
            except _NewtonFailure:
                break
            lu_fresh = True
        try:
            u2, res2, norm2 = _damped_step(system, u, res, res_norm, lu)
        except _NewtonFailure:
            if lu_fresh:
                break
            lu = None
            continue
        if norm2 >= res_norm:
            if lu_fresh:
                break
            lu = None
            continue
        u, res, res_norm = u2, res2, norm2
        lu_fresh = False
        polish += 1
    return u, iters, res_norm


def residual(state_m, candidate, dt, model, sub, variant,
             eta=DEFAULT_ETA, sigma=DEFAULT_SIGMA):
    """Stacked weak-form residual of a candidate step.

    Evaluates the full nonlinear system (motion rows, force rows, contact
    rows) for the step ``state_m -> candidate`` over ``dt``.  The candidate
    must satisfy its mode's boundary placement.  Non-finite entries raise
    with the offending row named.

    Returns
    -------
    ndarray
        Length ``3N + 1`` (two contacts) or ``3N`` (axis mode).
    """
    system = _StepSystem(state_m, dt, model, sub, variant, eta, sigma)
    return system.residual_u(system.pack(candidate))


def newton_step(state_m, candidate, dt, model, sub, variant,
                eta=DEFAULT_ETA, sigma=DEFAULT_SIGMA, tol=NEWTON_TOL):
    """One damped Newton update of a candidate step.

    Returns the candidate unchanged when its residual max-norm is already
    below ``tol``; otherwise solves the colored finite-difference Jacobian
    system and applies the largest step halving (up to 8) that decreases
    the residual norm.

    Raises
    ------
    SolverFailure
        If the Jacobian is singular or no damping achieves a decrease.
    """
    system = _StepSystem(state_m, dt, model, sub, variant, eta, sigma)
    u = system.pack(candidate)
    res = system.residual_u(u)
    res_norm = float(np.max(np.abs(res)))
    if res_norm < tol:
        return replace(candidate, residual_norm=res_norm)
    try:
        u2, _, norm2 = _newton_update(system, u, res, res_norm)
    except _NewtonFailure as exc:
        raise SolverFailure("step rejected: %s" % exc)
    return system.state_from(u2, candidate.newton_iters + 1, norm2)


def _attempt_step(state, dt, model, sub, variant, eta, sigma, tol):
    system = _StepSystem(state, dt, model, sub, variant, eta, sigma)
    u, iters, res_norm = _solve_u(system, tol)
    try:
        return system.state_from(u, iters, res_norm)
    except ValueError as exc:  # e.g. an element collapsed or radius crossed 0
        raise _NewtonFailure("converged to an invalid curve: %s" % exc)


def advance(state, dt, model, sub, variant, eta=DEFAULT_ETA,
            sigma=DEFAULT_SIGMA, tol=NEWTON_TOL, allow_mode_switch=True):
    """Advance the state by exactly ``dt``, halving the step on failure.

    Sub-steps start at ``dt``; each Newton failure (or post-step energy
    increase) halves the current sub-step, up to 6 times, and successful
    sub-steps double it again, capped at ``dt``.  When a two-contact solve
    fails with the inner contact within one mesh width of the axis, the
    state is switched to axis mode and the step retried (the hole has
    closed).  The returned state carries per-call diagnostics: energy
    change, minimum contact-relaxation product, sub-step count, events.

    Raises
    ------
    SolverFailure
        When a sub-step fails even at ``dt / 2**6``.
    """
    _check_variant(variant)
    dt = float(dt)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    current = state
    w_cur = discrete_energy(current.curve, model, sub, current.c_l,
                            current.c_r, sigma)
    w_start = w_cur
    remaining = dt
    cur = dt
    substeps = 0
    total_iters = 0
    min_relax = np.inf
    events = list(state.diagnostics.get("events", ()))
    while remaining > 0.0:
        cur = min(cur, remaining)
        try:
            nxt = _attempt_step(current, cur, model, sub, variant, eta,
                                sigma, tol)
            w_new = discrete_energy(nxt.curve, model, sub, nxt.c_l, nxt.c_r,
                                    sigma)
            if w_new - w_cur > 1e-8 * (1.0 + abs(w_cur)):
                raise _NewtonFailure(
                    "energy increased by %.3e" % (w_new - w_cur)
                )
        except _NewtonFailure as exc:
            mean_h = current.curve.total_length() / current.curve.N
            if (
                allow_mode_switch
                and current.c_l is not None
                and sub.starts_on_axis
                and (
                    current.curve.nodes[0, 0] < mean_h
                    or current.c_l - sub.c_min < mean_h
                )
            ):
                current = mode_switch(current, sub, force=True)
                events.append(("mode_switch", current.t))
                cur = min(dt, remaining)
                continue
            if cur <= dt / 2**_MAX_HALVINGS:
                raise SolverFailure(
                    "time step collapsed after %d halvings at t=%.6g: %s"
                    % (_MAX_HALVINGS, current.t, exc)
                )
            cur *= 0.5
            continue
        for c_old, c_new in (
            (current.c_l, nxt.c_l),
            (current.c_r, nxt.c_r),
        ):
            if c_old is not None:
                min_relax = min(
                    min_relax, (c_new - c_old) * sub.moment_x(c_old, c_new)
                )
        remaining -= cur
        substeps += 1
        total_iters += nxt.newton_iters
        current = nxt
        w_cur = w_new
        cur = min(cur * 2.0, dt)
    current.newton_iters = total_iters
    current.diagnostics.update(
        energy_change=w_cur - w_start,
        min_contact_relaxation=(None if not np.isfinite(min_relax)
                                else float(min_relax)),
        substeps=substeps,
        events=events,
    )
    return current


def _nodal_normals(curve):
    elem = curve.normals
    out = np.zeros((curve.N + 1, 2))
    out[:-1] += elem
    out[1:] += elem
    norms = np.hypot(out[:, 0], out[:, 1])
    norms[norms < 1e-14] = 1.0
    return out / norms[:, None]


def _restore_volume(curve, sub, c_l, c_r, v_target):
    """Bump the interior along its normals so the enclosed volume matches."""
    v_now = discrete_volume(curve, sub, c_l, c_r)
    tol = 1e-13 * (1.0 + abs(v_target))
    if abs(v_now - v_target) <= tol:
        return curve
    bump = np.sin(np.pi * np.linspace(0.0, 1.0, curve.N + 1))[:, None]
    bump = bump * _nodal_normals(curve)
    bump[0] = bump[-1] = 0.0
    if curve.axis_start:
        # keep the first element horizontal: node 1 may only move radially
        bump[1, 1] = 0.0
    base = np.array(curve.nodes)

    def volume_at(eps):
        trial = DiscreteCurve(base + eps * bump, axis_start=curve.axis_start)
        return trial, discrete_volume(trial, sub, c_l, c_r)

    eps = 0.0
    trial, v_now = curve, v_now
    for _ in range(20):
        delta = 1e-7 * (1.0 + abs(eps))
        _, v_up = volume_at(eps + delta)
        slope = (v_up - v_now) / delta
        if slope == 0.0:
            raise SolverFailure("volume restoration stalled (flat response)")
        eps -= (v_now - v_target) / slope
        trial, v_now = volume_at(eps)
        if abs(v_now - v_target) <= tol:
            return trial
    raise SolverFailure(
        "volume restoration did not converge (gap %.3e)" % (v_now - v_target)
    )


def mode_switch(state, sub, force=False):
    """Pin the inner end to the rotation axis once the hole has closed.

    Fires when the inner contact radius drops below 1e-8 or the inner
    arclength reaches the substrate's axis end (or unconditionally with
    ``force``); pins ``r_0 = 0``, drops the inner contact unknown, and
    restores the enclosed volume via a normal bump of the interior.  A
    state already in axis mode is returned unchanged; the switch is
    one-way.
    """
    if state.c_l is None:
        return state
    r0 = float(state.curve.nodes[0, 0])
    near_end = state.c_l - sub.c_min <= 1e-8
    if not force and r0 >= _AXIS_SWITCH_RADIUS and not near_end:
        return state
    if not sub.starts_on_axis:
        raise SolverFailure(
            "inner contact reached the substrate end at arclength %.6g, "
            "which is not on the rotation axis" % sub.c_min
        )
    v_target = discrete_volume(state.curve, sub, state.c_l, state.c_r)
    nodes = np.array(state.curve.nodes)
    # pin onto the axis at the neighbour's height: the first element must
    # be horizontal for the axis-mode constraint space (and the energy
    # bound) to apply from the very next step
    nodes[0] = (0.0, nodes[1, 1])
    curve = DiscreteCurve(nodes, axis_start=True)
    curve = _restore_volume(curve, sub, None, state.c_r, v_target)
    return replace(
        state,
        curve=curve,
        c_l=None,
        diagnostics={**state.diagnostics, "mode_switch_t": state.t},
    )


def _resample_polyline(nodes, n_out):
    """Equal-arclength resampling of a polyline, endpoints preserved."""
    seg = np.hypot(*np.diff(nodes, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, s[-1], n_out + 1)
    out = np.column_stack(
        [np.interp(targets, s, nodes[:, 0]), np.interp(targets, s, nodes[:, 1])]
    )
    out[0] = nodes[0]
    out[-1] = nodes[-1]
    return out, s, targets


def _nearest_arclength(sub, point, c_init):
    """Arclength of the substrate point closest to ``point`` (local search)."""
    point = np.asarray(point, dtype=float)
    c = float(np.clip(c_init, sub.c_min, sub.c_max))

    def miss(cc):
        return float((np.asarray(sub.eval(cc)) - point) @ sub.tangent(cc))

    g = miss(c)
    for _ in range(30):
        dc = 1e-6 * (1.0 + abs(c))
        c2 = c + dc if c + dc <= sub.c_max else c - dc
        g2 = miss(c2)
        if g2 == g:
            break
        step = -g * (c2 - c) / (g2 - g)
        step = float(np.clip(step, -1.0, 1.0))
        c = float(np.clip(c + step, sub.c_min, sub.c_max))
        g = miss(c)
        if abs(step) < 1e-12:
            break
    return c


def detect_and_split(state, sub, threshold=PINCH_DISTANCE):
    """Split the film in two when an interior node touches the substrate.

    Returns the state unchanged while every interior node stays farther
    than ``threshold`` from the substrate.  Otherwise the closest node is
    projected onto the substrate (by nearest arclength) and becomes the
    shared new contact point of two independent films; each half is
    resampled to equal arclength and its enclosed volume restored so the
    halves sum to the pre-split volume.

    Raises
    ------
    ValueError
        If a half would have fewer than 8 nodes (refine the mesh).
    """
    curve = state.curve
    n = curve.N
    if n < 3:
        return state
    scan_c = np.linspace(sub.c_min, sub.c_max, 2048)
    scan_pts = np.asarray(sub.eval(scan_c))
    interior = curve.nodes[1:-1]
    d2 = np.sum((interior[:, None, :] - scan_pts[None, :, :]) ** 2, axis=-1)
    nearest_sample = np.argmin(d2, axis=1)
    coarse = np.sqrt(d2[np.arange(interior.shape[0]), nearest_sample])
    # the coarse minimum over samples can overshoot the true distance by up
    # to half a sample spacing, so refine every node within that slack
    gap = (sub.c_max - sub.c_min) / (scan_c.size - 1)
    candidates = np.nonzero(coarse < threshold + gap)[0]
    if candidates.size == 0:
        return state
    k, c_star, dist = -1, 0.0, np.inf
    for idx in candidates:
        node = curve.nodes[1 + idx]
        c_i = _nearest_arclength(sub, node, scan_c[nearest_sample[idx]])
        d_i = float(np.hypot(*(node - np.asarray(sub.eval(c_i)))))
        if d_i < dist:
            k, c_star, dist = 1 + int(idx), c_i, d_i
    if dist >= threshold:
        return state
    if k + 1 < 8 or n - k + 1 < 8:
        raise ValueError(
            "pinch-off split at node %d would leave a film with fewer than "
            "8 nodes; refine the mesh" % k
        )
    v_pre = discrete_volume(curve, sub, state.c_l, state.c_r)
    touch = np.asarray(sub.eval(c_star), dtype=float)

    halves = []
    for nodes_half, mu_half, c_lo, c_hi, axis_start in (
        (
            np.vstack([curve.nodes[:k], touch]),
            state.mu[: k + 1],
            state.c_l,
            c_star,
            curve.axis_start,
        ),
        (
            np.vstack([touch, curve.nodes[k + 1 :]]),
            state.mu[k:],
            c_star,
            state.c_r,
            False,
        ),
    ):
        resampled, s_old, s_new = _resample_polyline(
            nodes_half, nodes_half.shape[0] - 1
        )
        mu_new = np.interp(s_new, s_old, mu_half)
        half_curve = DiscreteCurve(resampled, axis_start=axis_start)
        halves.append([half_curve, mu_new, c_lo, c_hi])

    v_a = discrete_volume(halves[0][0], sub, halves[0][2], halves[0][3])
    v_b = discrete_volume(halves[1][0], sub, halves[1][2], halves[1][3])
    scale = v_pre / (v_a + v_b) if abs(v_a + v_b) > 1e-14 else 1.0
    targets = (scale * v_a, scale * v_b)
    states = []
    for (half_curve, mu_new, c_lo, c_hi), v_target in zip(halves, targets):
        half_curve = _restore_volume(half_curve, sub, c_lo, c_hi, v_target)
        states.append(
            SolverState(
                curve=half_curve,
                mu=mu_new,
                c_l=c_lo,
                c_r=c_hi,
                t=state.t,
                diagnostics={"split_t": state.t},
            )
        )
    return tuple(states)
