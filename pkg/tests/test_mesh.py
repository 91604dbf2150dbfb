"""Tests for discrete curves, lumped quadrature and volume bookkeeping."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from axidewet.anisotropy import AnisotropyModel
from axidewet.geometry import ArcSubstrate, LineSubstrate, SinusoidSubstrate
from axidewet.mesh import (
    DiscreteCurve,
    _boundary_vector_stable,
    boundary_vector_G,
    discrete_energy,
    discrete_volume,
    lumped_inner,
    rotated_cap_volume,
    volume_correction,
    weighted_normal,
    write_snapshot,
)

import oracles

HEMI = ArcSubstrate((0.0, 0.0), 9.0, np.pi / 2, -1, 0.0, 9 * np.pi / 2)
FLAT = LineSubstrate((0.0, 0.0), (1.0, 0.0), 0.0, 10.0)
TILTED = LineSubstrate((1.0, 0.0), (0.8, 0.6), 0.0, 5.0)
SINUS = SinusoidSubstrate(0.2, np.pi, 0.0, 0.0, 6.0)
ISO = AnisotropyModel("isotropic", stabilizer=0.0)


def _random_curve(rng, n, axis_start=False):
    r = np.sort(rng.uniform(0.5, 4.0, n + 1))
    if axis_start:
        r[0] = 0.0
    z = rng.uniform(-1.0, 3.0, n + 1)
    return DiscreteCurve(np.column_stack([r, z]), axis_start=axis_start)


def _attached_curve(sub, c_lo, c_hi, n, bump, wiggle=0.0, rng=None):
    """Film polyline riding on the substrate with a normal-offset profile."""
    c = np.linspace(c_lo, c_hi, n + 1)
    pts = np.array([sub.eval(ci) for ci in c])
    nrm = np.array([sub.frame(ci)[1] for ci in c])
    prof = bump * np.sin(np.pi * np.linspace(0.0, 1.0, n + 1))
    if wiggle and rng is not None:
        noise = wiggle * rng.standard_normal(n + 1)
        noise[0] = noise[-1] = 0.0
        prof = prof + noise
    axis_start = abs(pts[0, 0]) < 1e-12
    return DiscreteCurve(pts + prof[:, None] * nrm, axis_start=axis_start)


def _dome(radius, n):
    """Spherical dome over the flat substrate, apex on the axis."""
    phi = np.linspace(0.0, np.pi / 2, n + 1)
    nodes = np.column_stack([radius * np.sin(phi), radius * np.cos(phi)])
    return DiscreteCurve(nodes, axis_start=True)


# ---------------------------------------------------------------------------
# DiscreteCurve


def test_curve_caches_match_recompute():
    rng = np.random.default_rng(0)
    curve = _random_curve(rng, 17)
    edges = np.diff(curve.nodes, axis=0)
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    np.testing.assert_allclose(curve.element_lengths, lengths, rtol=0, atol=0)
    np.testing.assert_allclose(
        curve.tangents, edges / lengths[:, None], rtol=0, atol=1e-14
    )
    np.testing.assert_allclose(
        curve.normals,
        np.column_stack([-edges[:, 1], edges[:, 0]]) / lengths[:, None],
        rtol=0,
        atol=1e-14,
    )
    np.testing.assert_allclose(
        curve.thetas, np.arctan2(edges[:, 1], edges[:, 0]), rtol=0, atol=0
    )
    assert curve.h_rho == pytest.approx(1.0 / 17)


def test_curve_nodes_are_frozen():
    curve = _dome(1.0, 4)
    with pytest.raises(ValueError):
        curve.nodes[0, 0] = 5.0


def test_curve_rejects_degenerate_elements():
    with pytest.raises(ValueError, match="degenerate"):
        DiscreteCurve([(1.0, 0.0), (1.0, 0.0), (2.0, 0.0)])


def test_curve_radius_validation():
    with pytest.raises(ValueError, match="radius"):
        DiscreteCurve([(1.0, 0.0), (-0.1, 1.0), (2.0, 0.0)])
    with pytest.raises(ValueError, match="radius"):
        DiscreteCurve([(0.0, 1.0), (1.0, 1.5)])
    curve = DiscreteCurve([(0.0, 1.0), (1.0, 1.5)], axis_start=True)
    assert curve.N == 1


def test_single_node_curve():
    curve = DiscreteCurve([(2.0, 1.0)])
    assert curve.N == 0
    assert curve.total_length() == 0.0


# ---------------------------------------------------------------------------
# lumped_inner


def test_lumped_inner_total_length():
    rng = np.random.default_rng(1)
    curve = _random_curve(rng, 23)
    ones = np.ones(curve.N + 1)
    metric = curve.N * curve.element_lengths
    assert lumped_inner(ones, ones, metric) == pytest.approx(
        curve.total_length(), rel=1e-14
    )


def test_lumped_inner_hat_squared():
    n, h_e = 10, 0.3
    nodes = np.column_stack([1.0 + h_e * np.arange(n + 1), np.zeros(n + 1)])
    curve = DiscreteCurve(nodes)
    hat = np.zeros(n + 1)
    hat[4] = 1.0
    metric = curve.N * curve.element_lengths
    assert lumped_inner(hat, hat, metric) == pytest.approx(2 * h_e / 3, rel=1e-14)


def test_lumped_inner_element_constants():
    rng = np.random.default_rng(2)
    w = rng.uniform(-1, 1, 8)
    ones = np.ones(9)
    assert lumped_inner(ones, w) == pytest.approx(np.sum(w) / 8, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_lumped_inner_bilinear_and_symmetric(a, b):
    rng = np.random.default_rng(7)
    u, v, w = rng.standard_normal((3, 12))
    weights = rng.uniform(0.1, 2.0, 11)
    assert lumped_inner(v, w, weights) == lumped_inner(w, v, weights)
    combo = lumped_inner(a * v + b * u, w, weights)
    parts = a * lumped_inner(v, w, weights) + b * lumped_inner(u, w, weights)
    assert combo == pytest.approx(parts, abs=1e-12 * (1 + abs(parts)))


def test_lumped_inner_positive_definite_and_vector_fields():
    rng = np.random.default_rng(3)
    v = rng.standard_normal((9, 2))
    weights = rng.uniform(0.5, 1.5, 8)
    assert lumped_inner(v, v, weights) > 0.0
    split = sum(
        lumped_inner(v[:, k], v[:, k], weights) for k in range(2)
    )
    assert lumped_inner(v, v, weights) == pytest.approx(split, rel=1e-14)


def test_lumped_inner_shape_errors():
    with pytest.raises(ValueError, match="conform"):
        lumped_inner(np.ones(9), np.ones(7), np.ones(8))
    with pytest.raises(ValueError, match="scalar field with a vector"):
        lumped_inner(np.ones(9), np.ones((9, 2)), np.ones(8))


# ---------------------------------------------------------------------------
# weighted_normal


def test_weighted_normal_static_pair_is_radius_weighted_normal():
    rng = np.random.default_rng(4)
    curve = _random_curve(rng, 14)
    field = weighted_normal(curve, curve)
    assert field.shape == (14, 2, 2)
    grad = np.diff(curve.nodes, axis=0) * curve.N
    speed = np.hypot(grad[:, 0], grad[:, 1])
    for side, r in ((0, curve.nodes[:-1, 0]), (1, curve.nodes[1:, 0])):
        expect = (r * speed)[:, None] * curve.normals
        np.testing.assert_allclose(field[:, side], expect, rtol=1e-13, atol=1e-13)


def test_weighted_normal_single_node_pair():
    single = DiscreteCurve([(1.0, 2.0)])
    field = weighted_normal(single, single)
    assert field.shape == (0, 2, 2)


def test_weighted_normal_mismatch():
    rng = np.random.default_rng(5)
    with pytest.raises(ValueError, match="element counts differ"):
        weighted_normal(_random_curve(rng, 6), _random_curve(rng, 7))


def test_swept_volume_identity_random_pairs():
    rng = np.random.default_rng(6)
    for _ in range(40):
        n = int(rng.integers(2, 30))
        old = _random_curve(rng, n)
        new = old.with_nodes(old.nodes + 0.3 * rng.standard_normal((n + 1, 2)))
        motion = new.nodes - old.nodes
        lhs = 2 * np.pi * lumped_inner(motion, weighted_normal(old, new))
        rhs = oracles.swept_volume(old.nodes, new.nodes)
        assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(rhs)))


def test_swept_volume_identity_shared_endpoints():
    rng = np.random.default_rng(7)
    for _ in range(40):
        n = int(rng.integers(3, 25))
        old = _random_curve(rng, n)
        shift = 0.25 * rng.standard_normal((n + 1, 2))
        shift[0] = shift[-1] = 0.0
        new = old.with_nodes(old.nodes + shift)
        lhs = 2 * np.pi * lumped_inner(new.nodes - old.nodes, weighted_normal(old, new))
        rhs = oracles.closed_polygon_volume(new.nodes) - oracles.closed_polygon_volume(
            old.nodes
        )
        assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(rhs)))


# ---------------------------------------------------------------------------
# rotated_cap_volume


def test_cap_volume_coincident_endpoints():
    for c in (0.0, 1.7, 9.0):
        assert rotated_cap_volume(HEMI, c, c) == 0.0


def test_cap_volume_straight_substrates():
    rng = np.random.default_rng(8)
    for sub in (FLAT, TILTED):
        for _ in range(10):
            c1, c2 = rng.uniform(sub.c_min, sub.c_max, 2)
            assert abs(rotated_cap_volume(sub, c1, c2)) <= 1e-12 * (
                1 + abs(c2 - c1) ** 3
            )


def test_cap_volume_hemisphere_example():
    got = rotated_cap_volume(HEMI, 1.0, 1.5)
    want = oracles.cap_volume_quadrature(HEMI, 1.0, 1.5)
    assert got == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("sub", [HEMI, SINUS], ids=["hemisphere", "sinusoid"])
def test_cap_volume_random_pairs_vs_quadrature(sub):
    rng = np.random.default_rng(9)
    for _ in range(20):
        c1, c2 = rng.uniform(sub.c_min, sub.c_max, 2)
        got = rotated_cap_volume(sub, c1, c2)
        want = oracles.cap_volume_quadrature(sub, c1, c2)
        assert got == pytest.approx(want, abs=1e-10 * (1 + abs(want)))


def test_cap_volume_antisymmetry_and_composition():
    rng = np.random.default_rng(10)
    for _ in range(15):
        c1, c2, c3 = rng.uniform(0.5, HEMI.c_max - 0.5, 3)
        h12 = rotated_cap_volume(HEMI, c1, c2)
        h21 = rotated_cap_volume(HEMI, c2, c1)
        assert h12 == pytest.approx(-h21, abs=1e-12 * (1 + abs(h12)))
        # composing two sweeps overshoots by the revolved chord triangle
        h23 = rotated_cap_volume(HEMI, c2, c3)
        h13 = rotated_cap_volume(HEMI, c1, c3)
        tri = oracles.closed_polygon_volume(
            [HEMI.eval(c1), HEMI.eval(c2), HEMI.eval(c3)]
        )
        assert h12 + h23 - h13 == pytest.approx(tri, abs=1e-11 * (1 + abs(h13)))
    # straight substrate: plain additivity (all terms vanish)
    a, b, c = 1.0, 2.5, 4.0
    assert rotated_cap_volume(TILTED, a, b) + rotated_cap_volume(
        TILTED, b, c
    ) == pytest.approx(rotated_cap_volume(TILTED, a, c), abs=1e-13)


# ---------------------------------------------------------------------------
# boundary_vector_G


def test_boundary_vector_flat_example():
    np.testing.assert_allclose(
        boundary_vector_G(FLAT, 1.0, 2.0), [1.5, 0.0], atol=1e-14
    )


def test_boundary_vector_coincident_limit():
    got = boundary_vector_G(HEMI, 1.0, 1.0)
    point = HEMI.eval(1.0)
    tau = HEMI.tangent(1.0)
    np.testing.assert_allclose(got, point[0] * tau, atol=1e-14)


def test_boundary_vector_small_gap_continuity():
    # the quotient is a sweep average: second-order accurate against the
    # midpoint form, first-order against either endpoint anchor
    gap = 1e-3
    got = boundary_vector_G(HEMI, 1.0, 1.0 + gap)
    mid = HEMI.eval(1.0 + gap / 2)[0] * HEMI.tangent(1.0 + gap / 2)
    anchor = HEMI.eval(1.0)[0] * HEMI.tangent(1.0)
    assert np.hypot(*(got - mid)) <= 1e-6
    assert np.hypot(*(got - anchor)) <= gap


def test_boundary_vector_weights_chord_exactly():
    rng = np.random.default_rng(11)
    for sub in (HEMI, SINUS):
        for _ in range(10):
            c1, c2 = rng.uniform(sub.c_min + 0.1, sub.c_max - 0.1, 2)
            vec = boundary_vector_G(sub, c1, c2)
            chord = sub.eval(c2) - sub.eval(c1)
            assert float(vec @ chord) == pytest.approx(
                sub.moment_x(c1, c2), rel=1e-12
            )


def test_boundary_vector_stable_branches_agree():
    for gap in (2e-5, 1e-5 * 0.999, 1e-6, 1e-9):
        a = _boundary_vector_stable(HEMI, 2.0, 2.0 + gap)
        b = boundary_vector_G(HEMI, 2.0, 2.0 + gap) if gap >= 1e-5 else None
        mid = HEMI.eval(2.0 + gap / 2)[0] * HEMI.tangent(2.0 + gap / 2)
        assert np.hypot(*(a - mid)) <= 1e-8
        if b is not None:
            assert np.hypot(*(a - b)) <= 1e-8


# ---------------------------------------------------------------------------
# volume_correction


def test_volume_correction_zero_caps():
    rng = np.random.default_rng(12)
    old = _random_curve(rng, 9)
    new = old.with_nodes(old.nodes + 0.1 * rng.standard_normal((10, 2)))
    out = volume_correction(old, new, HEMI, 0.0, 0.0)
    assert np.all(out == 0.0)
    # stationary contact lines sweep no volume, hence zero caps upstream
    assert rotated_cap_volume(HEMI, 2.0, 2.0) == 0.0


def test_volume_correction_inconsistent_state():
    curve = _dome(1.0, 6)
    with pytest.raises(ValueError, match="inconsistent"):
        volume_correction(curve, curve, FLAT, 0.0, 1e-3)


def test_volume_correction_lumped_identity():
    rng = np.random.default_rng(13)
    for _ in range(25):
        n = int(rng.integers(2, 40))
        old = _random_curve(rng, n)
        new = old.with_nodes(old.nodes + 0.2 * rng.standard_normal((n + 1, 2)))
        h_l, h_r = rng.uniform(-2, 2, 2)
        delta = volume_correction(old, new, HEMI, h_l, h_r)
        assert np.all(delta[1:-1] == 0.0)
        got = 2 * np.pi * lumped_inner(new.nodes - old.nodes, delta)
        assert got == pytest.approx(h_r - h_l, abs=1e-13 * (1 + abs(h_r - h_l)))


def test_step_volume_balance_identity():
    # moving contacts: the revolved-volume change splits exactly into the
    # swept-normal inner product plus the two substrate cap volumes
    rng = np.random.default_rng(14)
    for sub, lo, hi in ((HEMI, 1.0, 12.0), (SINUS, 0.5, 5.5)):
        for _ in range(8):
            n = int(rng.integers(8, 24))
            c_l, c_r = lo + 0.0, hi + 0.0
            c_l2 = c_l + rng.uniform(-0.3, 0.3)
            c_r2 = c_r + rng.uniform(-0.3, 0.3)
            old = _attached_curve(sub, c_l, c_r, n, bump=0.8, wiggle=0.05, rng=rng)
            new = _attached_curve(sub, c_l2, c_r2, n, bump=0.6, wiggle=0.05, rng=rng)
            v_old = discrete_volume(old, sub, c_l, c_r)
            v_new = discrete_volume(new, sub, c_l2, c_r2)
            swept = 2 * np.pi * lumped_inner(
                new.nodes - old.nodes, weighted_normal(old, new)
            )
            h_l = rotated_cap_volume(sub, c_l, c_l2)
            h_r = rotated_cap_volume(sub, c_r, c_r2)
            scale = 1 + abs(v_old) + abs(v_new)
            assert v_new - v_old == pytest.approx(
                swept + h_r - h_l, abs=1e-12 * scale
            )
            # and the boundary correction exactly cancels the cap terms
            delta = volume_correction(old, new, sub, h_l, h_r)
            corrected = 2 * np.pi * lumped_inner(new.nodes - old.nodes, delta)
            assert swept + corrected == pytest.approx(
                swept + h_r - h_l, abs=1e-12 * scale
            )


def test_step_volume_balance_axis_mode():
    rng = np.random.default_rng(15)
    for _ in range(8):
        n = int(rng.integers(8, 24))
        c_r, c_r2 = 9.0, 9.0 + rng.uniform(-0.3, 0.3)
        old = _attached_curve(HEMI, 0.0, c_r, n, bump=0.7, wiggle=0.04, rng=rng)
        new = _attached_curve(HEMI, 0.0, c_r2, n, bump=0.5, wiggle=0.04, rng=rng)
        v_old = discrete_volume(old, HEMI, None, c_r)
        v_new = discrete_volume(new, HEMI, None, c_r2)
        swept = 2 * np.pi * lumped_inner(
            new.nodes - old.nodes, weighted_normal(old, new)
        )
        h_r = rotated_cap_volume(HEMI, c_r, c_r2)
        scale = 1 + abs(v_old) + abs(v_new)
        assert v_new - v_old == pytest.approx(swept + h_r, abs=1e-12 * scale)


# ---------------------------------------------------------------------------
# discrete_volume / discrete_energy


def test_volume_spherical_dome():
    radius = 1.3
    dome = _dome(radius, 2048)
    got = discrete_volume(dome, FLAT, None, radius)
    assert got == pytest.approx(2 * np.pi * radius**3 / 3, rel=1e-5)


def test_volume_film_on_straight_substrate_is_zero():
    c = np.linspace(0.5, 4.0, 13)
    nodes = np.array([TILTED.eval(ci) for ci in c])
    curve = DiscreteCurve(nodes)
    got = discrete_volume(curve, TILTED, 0.5, 4.0)
    assert abs(got) <= 1e-12


def test_volume_toroidal_band_matches_quadrature():
    rng = np.random.default_rng(16)
    band = _attached_curve(HEMI, 4.0, 11.0, 64, bump=0.9, wiggle=0.06, rng=rng)
    got = discrete_volume(band, HEMI, 4.0, 11.0)
    want = oracles.film_volume_quadrature(band.nodes, HEMI, 4.0, 11.0)
    assert got == pytest.approx(want, rel=1e-10)


def test_volume_axis_mode_matches_quadrature():
    rng = np.random.default_rng(17)
    cap = _attached_curve(HEMI, 0.0, 8.0, 48, bump=0.5, wiggle=0.03, rng=rng)
    assert cap.axis_start
    got = discrete_volume(cap, HEMI, None, 8.0)
    want = oracles.film_volume_quadrature(cap.nodes, HEMI, HEMI.c_min, 8.0)
    assert got == pytest.approx(want, rel=1e-10)


def test_volume_boundary_mismatch_errors():
    dome = _dome(1.0, 16)
    with pytest.raises(ValueError, match="mismatch"):
        discrete_volume(dome, FLAT, None, 1.5)
    with pytest.raises(ValueError, match="mismatch"):
        discrete_volume(dome, FLAT, 0.2, 1.0)
    band = _attached_curve(HEMI, 4.0, 11.0, 8, bump=0.5)
    with pytest.raises(ValueError, match="axis"):
        discrete_volume(band, TILTED, None, 4.0)


def test_energy_cone_lateral_area():
    for n in (1, 7, 64):
        phi = np.linspace(0.0, 1.0, n + 1)
        nodes = np.column_stack([phi, 1.0 - phi])
        cone = DiscreteCurve(nodes, axis_start=True)
        got = discrete_energy(cone, ISO, FLAT, None, 1.0, 0.0)
        assert got == pytest.approx(np.pi * np.sqrt(2), rel=1e-14)


def test_energy_spherical_zone():
    radius = 1.0
    dome = _dome(radius, 2048)
    got = discrete_energy(dome, ISO, FLAT, None, radius, 0.0)
    assert got == pytest.approx(oracles.spherical_zone_area(radius, radius), rel=1e-4)


def test_energy_wetting_term():
    phi = np.linspace(0.0, 1.0, 9)
    cone = DiscreteCurve(np.column_stack([phi, 1.0 - phi]), axis_start=True)
    sigma = -np.sqrt(3) / 2
    got = discrete_energy(cone, ISO, FLAT, None, 1.0, sigma)
    assert got == pytest.approx(np.pi * np.sqrt(2) - 2 * np.pi * sigma * 0.5, rel=1e-13)


def test_energy_anisotropic_dome_vs_quadrature():
    from scipy.integrate import quad

    model = AnisotropyModel("fourfold", beta=1 / 12, stabilizer=0.0)
    radius = 2.0
    dome = _dome(radius, 2048)
    got = discrete_energy(dome, model, FLAT, None, radius, 0.0)

    def g(phi):
        return radius * np.sin(phi) * model.gamma(-phi)[0] * radius

    want, _ = quad(g, 0.0, np.pi / 2, epsabs=1e-13, epsrel=1e-13)
    assert got == pytest.approx(2 * np.pi * want, rel=1e-5)


def test_snapshot_roundtrip(tmp_path):
    rng = np.random.default_rng(18)
    curve = _random_curve(rng, 11)
    mu = rng.standard_normal(12)
    path = tmp_path / "snap.csv"
    write_snapshot(path, curve, mu)
    text = path.read_text().splitlines()
    assert text[0] == "rho,r,z,mu"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 1:3], curve.nodes)
    np.testing.assert_array_equal(data[:, 3], mu)
    np.testing.assert_allclose(data[:, 0], np.linspace(0, 1, 12), atol=0)
