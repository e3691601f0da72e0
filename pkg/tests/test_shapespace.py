"""Gait representations: closure, analytic rates, retiming, reversal."""

import math

import numpy as np
import pytest

from locomech import FourierGait, WaypointGait, gait_eval, reparameterize, reversed_gait


def square_loop():
    # (0,0) -> (1,0) -> (1,1) -> back, one second per edge
    return WaypointGait(
        points=[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
        times=[0.0, 1.0, 2.0, 3.0],
    )


def test_fourier_single_harmonic_rate_at_zero():
    g = FourierGait(1.0, [0.0], sin=[[0.5]])
    r, rdot = gait_eval(g, 0.0)
    assert r[0] == 0.0
    assert abs(rdot[0] - math.pi) < 1e-14


def test_fourier_closure_exact():
    g = FourierGait(2.0, [0.1, -0.2], cos=[[0.3, 0.4]], sin=[[0.5, -0.6]])
    r0, _ = g.evaluate(0.0)
    rT, _ = g.evaluate(g.period)
    assert np.array_equal(r0, rT)


def test_periodicity():
    g = FourierGait(1.0, [0.1], cos=[[0.2], [0.05]], sin=[[0.3], [-0.1]])
    w = square_loop()
    # dyadic times survive the float mod exactly
    for t in (0.0, 0.25, 0.5, 1.25):
        for gait in (g, w):
            a = gait.evaluate(t)
            b = gait.evaluate(t + gait.period)
            assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    rng = np.random.default_rng(0)
    for t in rng.uniform(0, 1, 20):
        a, b = g.evaluate(t), g.evaluate(t + g.period)
        assert np.max(np.abs(a[0] - b[0])) < 1e-12
        assert np.max(np.abs(a[1] - b[1])) < 1e-12


def test_waypoint_interpolation_example():
    r, rdot = gait_eval(square_loop(), 0.5)
    np.testing.assert_allclose(r, [0.5, 0.0], atol=0)
    np.testing.assert_allclose(rdot, [1.0, 0.0], atol=0)


def test_waypoint_closure_exact():
    g = square_loop()
    assert np.array_equal(g.evaluate(0.0)[0], g.evaluate(g.period)[0])
    assert np.array_equal(g.evaluate(g.period)[0], np.array([0.0, 0.0]))


def test_waypoint_knot_sides():
    g = square_loop()
    r_right, v_right = g.evaluate(1.0, side="right")
    r_left, v_left = g.evaluate(1.0, side="left")
    assert np.array_equal(r_right, r_left)
    np.testing.assert_allclose(v_right, [0.0, 1.0], atol=0)
    np.testing.assert_allclose(v_left, [1.0, 0.0], atol=0)
    # t = 0 wraps: the left limit belongs to the closing edge
    _, v0_left = g.evaluate(0.0, side="left")
    np.testing.assert_allclose(v0_left, [-1.0, -1.0], atol=0)
    r0_left, _ = g.evaluate(0.0, side="left")
    assert np.max(np.abs(r0_left)) == 0.0


def test_fourier_ignores_side():
    g = FourierGait(1.0, [0.0], sin=[[0.5]])
    a = g.evaluate(0.25, side="right")
    b = g.evaluate(0.25, side="left")
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_fourier_rate_matches_central_difference():
    g = FourierGait(
        1.7,
        [0.1, -0.3],
        cos=[[0.4, -0.2], [0.1, 0.3]],
        sin=[[-0.5, 0.2], [0.2, -0.1]],
    )
    rng = np.random.default_rng(1)
    ts = rng.uniform(0, g.period, 25)
    errs = []
    for h in (1e-3, 1e-4):
        worst = 0.0
        for t in ts:
            fd = (g.evaluate(t + h)[0] - g.evaluate(t - h)[0]) / (2 * h)
            worst = max(worst, np.max(np.abs(fd - g.evaluate(t)[1])))
        errs.append(worst)
    ratio = errs[0] / errs[1]
    assert errs[1] < 1e-5
    assert 60.0 < ratio < 140.0


def test_waypoint_rate_exact_between_knots():
    g = square_loop()
    h = 1e-3
    for t in (0.3, 1.5, 2.75):
        fd = (g.evaluate(t + h)[0] - g.evaluate(t - h)[0]) / (2 * h)
        assert np.max(np.abs(fd - g.evaluate(t)[1])) < 1e-12


def test_malformed_gaits_rejected():
    with pytest.raises(ValueError):
        FourierGait(0.0, [0.0])
    with pytest.raises(ValueError):
        FourierGait(-1.0, [0.0])
    with pytest.raises(ValueError):
        WaypointGait(points=[[0.0], [1.0]], times=[0.0, 1.0, 0.5])
    with pytest.raises(ValueError):
        WaypointGait(points=[[0.0], [1.0]], times=[0.5, 1.0, 2.0])
    with pytest.raises(ValueError):
        WaypointGait(points=[[0.0], [1.0]], times=[0.0, 1.0])
    with pytest.raises(ValueError):
        square_loop().evaluate(float("inf"))


def test_reparameterize_identity_warp():
    g = square_loop()
    out = reparameterize(g, lambda t: t)
    assert np.array_equal(out.points, g.points)
    assert np.array_equal(out.times, g.times)
    f = FourierGait(1.0, [0.0], sin=[[0.5]])
    out_f = reparameterize(f, lambda t: t, samples=256)
    assert out_f.period == f.period
    for i, t in enumerate(out_f.times[:-1]):
        assert np.max(np.abs(out_f.points[i] - f.evaluate(t)[0])) < 1e-14


def test_reparameterize_uniform_speedup():
    g = square_loop()
    out = reparameterize(g, lambda t: 0.5 * t)
    assert out.period == 1.5
    assert np.array_equal(out.points, g.points)
    # affine warps preserve segment fractions, so interior samples match too
    rng = np.random.default_rng(2)
    for t in rng.uniform(0, g.period, 50):
        a = g.evaluate(t)[0]
        b = out.evaluate(0.5 * t)[0]
        assert np.max(np.abs(a - b)) < 1e-12


def _arclength_samples(gait, fractions):
    """Points at given arc-length fractions of a closed polyline loop."""
    pts = np.vstack([gait.points, gait.points[:1]])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = fractions * cum[-1]
    out = np.empty((len(fractions), pts.shape[1]))
    last = len(seg) - 1
    for i, sarc in enumerate(targets):
        j = min(int(np.searchsorted(cum, sarc, side="right")) - 1, last)
        f = (sarc - cum[j]) / (cum[j + 1] - cum[j])
        out[i] = pts[j] + f * (pts[j + 1] - pts[j])
    return out


def test_reparameterize_cubic_warp_preserves_path():
    # a nonuniform warp changes the pacing but must not move the path:
    # compare the two loops at matched arc-length fractions
    g = square_loop()
    T = g.period

    def warp(t):
        u = t / T
        return T * (3.0 * u * u - 2.0 * u**3)

    out = reparameterize(g, warp)
    assert np.array_equal(out.points, g.points)
    for ti, to in zip(g.times, out.times):
        assert np.max(np.abs(out.evaluate(to)[0] - g.evaluate(ti)[0])) < 1e-12
    fractions = np.linspace(0.0, 1.0, 10_000, endpoint=False)
    a = _arclength_samples(g, fractions)
    b = _arclength_samples(out, fractions)
    assert np.max(np.abs(a - b)) < 1e-12


def test_reparameterize_rejects_bad_warps():
    g = square_loop()
    with pytest.raises(ValueError):
        reparameterize(g, lambda t: t * (3.0 - t))  # folds back past t = 1.5
    with pytest.raises(ValueError):
        reparameterize(g, lambda t: t + 1.0)


def test_reversed_fourier():
    g = FourierGait(1.3, [0.2, -0.1], cos=[[0.3, 0.1]], sin=[[-0.2, 0.4]])
    rev = reversed_gait(g)
    assert rev.period == g.period
    rng = np.random.default_rng(3)
    for t in rng.uniform(0, g.period, 40):
        rf, vf = g.evaluate(g.period - t)
        rb, vb = rev.evaluate(t)
        assert np.max(np.abs(rb - rf)) < 1e-12
        assert np.max(np.abs(vb + vf)) < 1e-11
    back = reversed_gait(rev)
    assert np.array_equal(back.sin, g.sin) and np.array_equal(back.cos, g.cos)


def test_reversed_waypoint():
    g = square_loop()
    rev = reversed_gait(g)
    assert rev.period == g.period
    for t in (0.25, 0.5, 1.5, 2.25):
        rf, _ = g.evaluate(g.period - t)
        rb, _ = rev.evaluate(t)
        assert np.max(np.abs(rb - rf)) < 1e-12
    back = reversed_gait(rev)
    assert np.array_equal(back.points, g.points)
    assert np.array_equal(back.times, g.times)


def test_gait_arrays_are_readonly():
    g = square_loop()
    with pytest.raises(ValueError):
        g.points[0, 0] = 5.0
    f = FourierGait(1.0, [0.0], sin=[[0.5]])
    with pytest.raises(ValueError):
        f.mean[0] = 1.0


def test_dim_property():
    assert square_loop().dim == 2
    assert FourierGait(1.0, [0.0, 0.0, 0.0]).dim == 3
