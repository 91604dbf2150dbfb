"""Desk-scale acceptance suite for the axisymmetric dewetting simulator.

One test per acceptance criterion, in order: spatial convergence order,
per-step energy decay, exact volume conservation, the per-step volume
identity, the isotropic equilibrium contact angle, the algebraic
matrix/volume identity batch, the chord-stability margin, and the three
qualitative dewetting experiments (pinch-off, migration, retraction).

The heavy conservation runs are shared across tests through module-scoped
fixtures.  Expect the full module to take tens of minutes on one core; the
convergence study dominates.
"""

import numpy as np
import pytest

import oracles
from axidewet.anisotropy import AnisotropyModel, stability_margin
from axidewet.config import build_config
from axidewet.diagnostics import close_region, contact_angle, manifold_distance
from axidewet.geometry import (
    ArcSubstrate,
    FilletedPolylineSubstrate,
    SinusoidSubstrate,
)
from axidewet.mesh import (
    DiscreteCurve,
    discrete_energy,
    discrete_volume,
    lumped_inner,
    rotated_cap_volume,
    weighted_normal,
)
from axidewet.presets import build_experiment, preset_defaults
from axidewet.solver import (
    ENERGY_STABLE,
    STRUCTURE_PRESERVING,
    advance,
    detect_and_split,
)

SEED = 20260814

# Convergence study: time step C * h^2 per case, chosen inside the
# asymptotic range of the first-order-in-time error at N = 32 (the cap's
# shorter arclength needs the smaller constant).
CONVERGENCE_DT_COEFF = {"case1": 8.0, "case2": 32.0}
CONVERGENCE_LEVELS = (32, 64, 128, 256)
CONVERGENCE_BETAS = (0.0, 0.05, 1.0 / 12.0)
MIN_ORDER = 1.7

CONSERVATION_DT = (2.0 ** -7, 2.0 ** -8, 2.0 ** -9)
ENERGY_DECAY_TOL = 1e-10
VOLUME_REL_TOL = 1e-8

STEP_IDENTITY_TOL = 1e-10
IDENTITY_REL_TOL = 1e-10
MATRIX_TOL = 1e-12
MARGIN_TOL = -1e-9

EQUILIBRIUM_ENERGY_TOL = 1e-8
EQUILIBRIUM_ANGLE = 150.0
EQUILIBRIUM_ANGLE_TOL = 1.0

PINCH_WINDOW_DEG = (10.0, 150.0)
PINCH_N = 160
PINCH_DT = 1.0 / 32.0
PINCH_T_MAX = 60.0
PINCH_VOLUME_TOL = 1e-6

MIGRATION_BURN_IN = 2.0
RETRACTION_T = 0.25


def _experiment(preset, **overrides):
    raw = {"preset": preset}
    raw.update({k: str(v) for k, v in overrides.items()})
    cfg = build_config(raw, preset_defaults=preset_defaults(preset))
    return build_experiment(cfg)


def _march(exp, state, dt, t_final, variant=STRUCTURE_PRESERVING):
    while state.t < t_final - 1e-12:
        state = advance(state, min(dt, t_final - state.t), exp.model,
                        exp.substrate, variant, eta=exp.eta, sigma=exp.sigma)
    return state


def _region(exp, state):
    return close_region(state.curve, exp.substrate, state.c_l, state.c_r)


# ---------------------------------------------------------------------------
# 1. spatial convergence order


def test_spatial_convergence_is_second_order():
    failures = []
    for preset, coeff in sorted(CONVERGENCE_DT_COEFF.items()):
        for beta in CONVERGENCE_BETAS:
            exp = _experiment(preset, **{"gamma.kind": "fourfold",
                                         "gamma.beta": beta})
            regions = []
            for n in CONVERGENCE_LEVELS:
                end = _march(exp, exp.initial_state(n), coeff / n**2, 1.0)
                regions.append(_region(exp, end))
            errors = [manifold_distance(a, b)
                      for a, b in zip(regions, regions[1:])]
            orders = [np.log2(a / b) for a, b in zip(errors, errors[1:])]
            for lev, order in zip(CONVERGENCE_LEVELS, orders):
                if order < MIN_ORDER:
                    failures.append("%s beta=%.4f N=%d order=%.2f"
                                    % (preset, beta, lev, order))
    assert not failures, "orders below %.2f: %s" % (MIN_ORDER, failures)


# ---------------------------------------------------------------------------
# 2./3. conservation runs (shared fixture)


@pytest.fixture(scope="module")
def conservation_runs():
    """Energy/volume histories at N = 128, T = 2 for both schemes."""
    out = {}
    for preset in ("case1", "case2"):
        exp = _experiment(preset, **{"gamma.kind": "fourfold",
                                     "gamma.beta": 0.05})
        for variant in (STRUCTURE_PRESERVING, ENERGY_STABLE):
            for dt in CONSERVATION_DT:
                state = exp.initial_state(128)
                w0 = discrete_energy(state.curve, exp.model, exp.substrate,
                                     state.c_l, state.c_r, exp.sigma)
                v0 = discrete_volume(state.curve, exp.substrate, state.c_l,
                                     state.c_r)
                w_prev, dw_max, drift = w0, -np.inf, 0.0
                while state.t < 2.0 - 1e-12:
                    state = advance(state, dt, exp.model, exp.substrate,
                                    variant, eta=exp.eta, sigma=exp.sigma)
                    w = discrete_energy(state.curve, exp.model, exp.substrate,
                                        state.c_l, state.c_r, exp.sigma)
                    v = discrete_volume(state.curve, exp.substrate, state.c_l,
                                        state.c_r)
                    dw_max = max(dw_max, w - w_prev)
                    drift = max(drift, abs(v - v0) / abs(v0))
                    w_prev = w
                out[(preset, variant, dt)] = {
                    "w0": w0, "dw_max": dw_max, "vol_drift": drift,
                }
    return out


def test_energy_decays_monotonically_every_step(conservation_runs):
    bad = []
    for preset in ("case1", "case2"):
        for dt in CONSERVATION_DT:
            rec = conservation_runs[(preset, STRUCTURE_PRESERVING, dt)]
            if rec["dw_max"] > ENERGY_DECAY_TOL * abs(rec["w0"]):
                bad.append("%s dt=%g rise=%.3e" % (preset, dt, rec["dw_max"]))
    assert not bad, "energy rose beyond tolerance: %s" % bad


def test_volume_conservation_exact_vs_energy_stable(conservation_runs):
    bad = []
    for preset in ("case1", "case2"):
        for dt in CONSERVATION_DT:
            sp = conservation_runs[(preset, STRUCTURE_PRESERVING, dt)]
            es = conservation_runs[(preset, ENERGY_STABLE, dt)]
            if sp["vol_drift"] > VOLUME_REL_TOL:
                bad.append("%s dt=%g conserving drift=%.3e"
                           % (preset, dt, sp["vol_drift"]))
            if es["vol_drift"] < 10.0 * sp["vol_drift"]:
                bad.append("%s dt=%g comparison drift=%.3e vs %.3e"
                           % (preset, dt, es["vol_drift"], sp["vol_drift"]))
    assert not bad, "volume drift out of bounds: %s" % bad


# ---------------------------------------------------------------------------
# 4. per-step volume identity of the energy-stable scheme


def test_step_volume_change_equals_contact_cap_volumes():
    rng = np.random.default_rng(SEED)
    presets = ("case2", "migration_gentle", "retraction")
    accepted, worst = 0, 0.0
    while accepted < 100:
        preset = presets[accepted % len(presets)]
        exp = _experiment(
            preset,
            **{
                "gamma.kind": "fourfold",
                "gamma.beta": float(rng.uniform(0.0, 0.08)),
                "physics.eta": float(10.0 ** rng.uniform(0.5, 2.5)),
                "film.thickness": float(rng.uniform(0.25, 0.55)),
            },
        )
        n = int(rng.integers(24, 41))
        old = exp.initial_state(n)
        dt = float(10.0 ** rng.uniform(-3.3, -2.3))
        # shake the film first so the tested step starts from generic data
        old = advance(old, dt, exp.model, exp.substrate, ENERGY_STABLE,
                      eta=exp.eta, sigma=exp.sigma)
        new = advance(old, dt, exp.model, exp.substrate, ENERGY_STABLE,
                      eta=exp.eta, sigma=exp.sigma)
        if new.diagnostics["substeps"] != 1:
            continue  # halved internally: not a single accepted step
        dv = (discrete_volume(new.curve, exp.substrate, new.c_l, new.c_r)
              - discrete_volume(old.curve, exp.substrate, old.c_l, old.c_r))
        caps = rotated_cap_volume(exp.substrate, old.c_r, new.c_r)
        if old.c_l is not None:
            caps -= rotated_cap_volume(exp.substrate, old.c_l, new.c_l)
        worst = max(worst, abs(dv - caps))
        accepted += 1
    assert worst <= STEP_IDENTITY_TOL, (
        "volume identity off by %.3e over 100 steps" % worst
    )


# ---------------------------------------------------------------------------
# 5. isotropic equilibrium contact angle


def test_isotropic_equilibrium_contact_angle():
    exp = _experiment("case1", **{"gamma.kind": "isotropic"})
    state = exp.initial_state(128)
    w_prev = discrete_energy(state.curve, exp.model, exp.substrate,
                             state.c_l, state.c_r, exp.sigma)
    for _ in range(2000):
        state = advance(state, 0.05, exp.model, exp.substrate,
                        STRUCTURE_PRESERVING, eta=exp.eta, sigma=exp.sigma)
        w = discrete_energy(state.curve, exp.model, exp.substrate,
                            state.c_l, state.c_r, exp.sigma)
        if abs(w - w_prev) < EQUILIBRIUM_ENERGY_TOL:
            break
        w_prev = w
    else:
        pytest.fail("no equilibrium within 2000 steps")
    angle = contact_angle(state, exp.substrate)
    assert abs(angle - EQUILIBRIUM_ANGLE) <= EQUILIBRIUM_ANGLE_TOL, (
        "intrinsic angle %.3f deg" % angle
    )


# ---------------------------------------------------------------------------
# 6. matrix / discrete-volume identity batch


def _identity_models():
    auto = AnisotropyModel("fourfold", beta=0.05)
    table = AnisotropyModel("fourfold", beta=0.05,
                            stabilizer=auto.stabilizer_table)
    return [
        AnisotropyModel("isotropic"),
        AnisotropyModel("isotropic", stabilizer=1.5),
        auto,
        AnisotropyModel("fourfold", beta=1.0 / 12.0),
        AnisotropyModel("fourfold", beta=0.25),
        AnisotropyModel("fourier", modes=[(2, 0.08), (3, 0.04), (6, 0.01)]),
        table,
    ]


def _random_pair(rng):
    """Random valid curve pair with an O(1) swept volume."""
    while True:
        n = int(rng.integers(4, 33))
        axis = bool(rng.integers(0, 2))
        r = np.sort(rng.uniform(0.5, 4.0, n + 1))
        if axis:
            r[0] = 0.0
        z = rng.uniform(-1.0, 3.0, n + 1)
        old = DiscreteCurve(np.column_stack([r, z]), axis_start=axis)
        shift = 0.3 * rng.standard_normal((n + 1, 2))
        nodes = old.nodes + shift
        if axis:
            nodes[0, 0] = 0.0
        if np.any(nodes[1:, 0] <= 0.0) or (not axis and nodes[0, 0] <= 0.0):
            continue
        lengths = np.hypot(*np.diff(nodes, axis=0).T)
        if lengths.min() < 1e-3:
            continue
        new = DiscreteCurve(nodes, axis_start=axis)
        swept = oracles.swept_volume(old.nodes, new.nodes)
        if abs(swept) >= 0.1:
            return old, new, swept


def _identity_substrates():
    return [
        ArcSubstrate((0.0, 0.0), 9.0, np.pi / 2, -1, 0.0, 9 * np.pi / 2),
        ArcSubstrate((0.0, 0.0), 30.0, np.pi / 2, -1, 1.0, 45.0),
        SinusoidSubstrate(0.2, np.pi, 0.0, 0.0, 6.0),
        SinusoidSubstrate(4.0, 0.25, 0.0, 0.1, 25.0),
        FilletedPolylineSubstrate(
            [(0.0, 1.0), (4.0, 1.0), (5.0, 0.0), (10.0, 0.0)], 0.5),
    ]


def test_boundary_matrix_and_discrete_volume_identities():
    rng = np.random.default_rng(SEED)

    # (a) the energy matrix maps the tangent to gamma*tangent + gamma'*normal
    thetas = rng.uniform(-np.pi, np.pi, 100_000)
    tau = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    nrm = np.stack([-np.sin(thetas), np.cos(thetas)], axis=1)
    from axidewet.anisotropy import energy_matrices

    for model in _identity_models():
        g, dg, _ = model.gamma(thetas)
        want = g[:, None] * tau + dg[:, None] * nrm
        got = np.einsum("nij,nj->ni", energy_matrices(model, thetas), tau)
        err = np.max(np.abs(got - want))
        assert err <= MATRIX_TOL, (
            "matrix identity off by %.3e for %s" % (err, model.kind)
        )

    # (b) midpoint-weighted normal reproduces the swept revolved volume
    for _ in range(100):
        old, new, swept = _random_pair(rng)
        lhs = 2.0 * np.pi * lumped_inner(new.nodes - old.nodes,
                                         weighted_normal(old, new))
        assert abs(lhs - swept) <= IDENTITY_REL_TOL * abs(swept)

    # (c) contact cap volumes match adaptive quadrature
    subs = _identity_substrates()
    for k in range(100):
        sub = subs[k % len(subs)]
        while True:
            c1, c2 = rng.uniform(sub.c_min, sub.c_max, 2)
            if abs(c2 - c1) >= 0.5:
                break
        got = rotated_cap_volume(sub, c1, c2)
        want = oracles.cap_volume_quadrature(sub, c1, c2)
        # straight-leg windows have an exactly zero cap; floor the scale
        assert abs(got - want) <= IDENTITY_REL_TOL * max(abs(want), 1e-3)


# ---------------------------------------------------------------------------
# 7. chord stability margin and the isotropic stabilizer level


def test_chord_stability_margins_and_isotropic_stabilizer():
    for beta in CONVERGENCE_BETAS:
        model = (AnisotropyModel("isotropic") if beta == 0.0
                 else AnisotropyModel("fourfold", beta=beta))
        worst = stability_margin(model)
        assert worst >= MARGIN_TOL, (
            "beta=%.4f worst normalized margin %.3e" % (beta, worst)
        )
    scan = oracles.stabilizer_scan(
        lambda theta: np.ones_like(np.asarray(theta, dtype=float)),
        lambda theta: np.zeros_like(np.asarray(theta, dtype=float)),
    )
    assert abs(scan - 1.5) <= 0.01, "independent isotropic scan %.4f" % scan
    iso = AnisotropyModel("isotropic")
    assert abs(float(iso.stabilizer(0.0)) - scan) <= 0.02


# ---------------------------------------------------------------------------
# 8. pinch-off of a long film into two components


def test_long_film_pinches_into_two_components():
    lo, hi = PINCH_WINDOW_DEG
    center = 30.0 * np.deg2rad(0.5 * (lo + hi))
    half = 30.0 * np.deg2rad(0.5 * (hi - lo))
    exp = _experiment("pinchoff", **{"film.window_center": center,
                                     "film.window_halfwidth": half})
    state = exp.initial_state(PINCH_N)
    parts = None
    while state.t < PINCH_T_MAX - 1e-12:
        state = advance(state, PINCH_DT, exp.model, exp.substrate,
                        STRUCTURE_PRESERVING, eta=exp.eta, sigma=exp.sigma)
        out = detect_and_split(state, exp.substrate)
        if isinstance(out, tuple):
            parts = out
            break
    assert parts is not None, "film never split by t=%.1f" % PINCH_T_MAX
    pre = discrete_volume(state.curve, exp.substrate, state.c_l, state.c_r)
    vols = [discrete_volume(p.curve, exp.substrate, p.c_l, p.c_r)
            for p in parts]
    assert all(v > 0.0 for v in vols)
    assert abs(sum(vols) - pre) <= PINCH_VOLUME_TOL * abs(pre)
    # end state: one compact island, one thin extended band
    spans = [p.c_r - p.c_l for p in parts]
    gaps = [float(np.max(np.hypot(*p.curve.nodes.T) - 30.0)) for p in parts]
    island = int(np.argmin(spans))
    band = 1 - island
    assert gaps[island] > gaps[band]
    assert spans[band] > 2.0 * spans[island]


# ---------------------------------------------------------------------------
# 9. migration toward lower azimuthal curvature, damped by anisotropy


def _azimuthal_curvature(sub, c):
    point = sub.eval(c)
    tangent = sub.frame(c)[0] if hasattr(sub, "frame") else sub.tangent(c)
    tangent = np.asarray(tangent, dtype=float).reshape(-1)[:2]
    return tangent[1] / point[0]


def test_band_migrates_toward_lower_azimuthal_curvature():
    drifts = {}
    for beta in (0.05, 1.0 / 12.0):
        exp = _experiment("migration_steep", **{"gamma.kind": "fourfold",
                                                "gamma.beta": beta})
        state = exp.initial_state(64)
        mids = [(state.t, 0.5 * (state.c_l + state.c_r))]
        while state.t < 10.0 - 1e-12:
            state = advance(state, 0.05, exp.model, exp.substrate,
                            STRUCTURE_PRESERVING, eta=exp.eta, sigma=exp.sigma)
            mids.append((state.t, 0.5 * (state.c_l + state.c_r)))
        arr = np.array(mids)
        settled = arr[arr[:, 0] >= MIGRATION_BURN_IN]
        steps = np.diff(settled[:, 1])
        assert np.all(steps < 0.0) or np.all(steps > 0.0), (
            "midpoint drift not monotone after burn-in (beta=%.4f)" % beta
        )
        k_start = abs(_azimuthal_curvature(exp.substrate, settled[0, 1]))
        k_end = abs(_azimuthal_curvature(exp.substrate, settled[-1, 1]))
        assert k_end < k_start, "drift did not reduce azimuthal curvature"
        drifts[beta] = abs(settled[-1, 1] - settled[0, 1])
    assert drifts[0.05] > drifts[1.0 / 12.0] > 0.0, (
        "anisotropy did not damp migration: %s" % drifts
    )


# ---------------------------------------------------------------------------
# 10. stronger anisotropy slows edge retraction


def test_stronger_anisotropy_slows_retraction():
    distances = []
    for beta in (0.0, 0.05, 1.0 / 12.0, 0.25):
        exp = _experiment(
            "retraction",
            **{"gamma.kind": ("isotropic" if beta == 0.0 else "fourfold"),
               "gamma.beta": beta},
        )
        state = exp.initial_state(96)
        start = state.c_r
        state = _march(exp, state, 0.001, RETRACTION_T)
        distances.append(start - state.c_r)
    assert all(a > b for a, b in zip(distances, distances[1:])), (
        "retraction distances not decreasing with anisotropy: %s" % distances
    )
