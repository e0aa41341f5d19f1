import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from pupilarc.errors import FitError, InvalidArgument
from pupilarc.geometry import (FITZGIBBON, TAUBIN, Conic, EllipseParams, eccentricity, fit_ellipse,
                               fit_fitzgibbon, fit_taubin, overlap_ratio, perimeter, point_distances,
                               point_ellipse_distance, ramanujan_perimeter, rasterize, rmse, to_conic)

from conftest import ellipse_points


def quad_perimeter(a, b):
    return 4 * integrate.quad(lambda t: math.sqrt(a * a * math.sin(t) ** 2 + b * b * math.cos(t) ** 2),
                              0, math.pi / 2, epsabs=1e-12, epsrel=1e-12)[0]


def sampled_distance(e, p, n=200_000):
    bnd = e.boundary(n)
    return float(np.min(np.hypot(bnd[:, 0] - p[0], bnd[:, 1] - p[1])))


def test_make_canonicalizes():
    e = EllipseParams.make(0, 0, 3, 5, 0.25)
    assert (e.a, e.b) == (5, 3) and math.isclose(e.theta, 0.25 + math.pi / 2)
    assert EllipseParams.make(0, 0, 5, 3, -0.5).theta == pytest.approx(math.pi - 0.5)
    assert EllipseParams.make(0, 0, 4, 4, 1.0).theta == 0.0
    with pytest.raises(InvalidArgument):
        EllipseParams(0, 0, 3, 5, 0)
    with pytest.raises(InvalidArgument):
        EllipseParams(0, 0, 5, 3, math.pi)


def test_json_roundtrip():
    e = EllipseParams.make(10.5, -3, 8, 6, 1.2)
    f = EllipseParams.from_json(e.to_json())
    assert f.cx == e.cx and math.isclose(f.theta, e.theta) and f.a == e.a


def test_conic_roundtrip_and_sign():
    e = EllipseParams.make(40, 25, 30, 12, 0.7)
    c = to_conic(e)
    assert c.is_ellipse
    back = c.to_params()
    for k in ("cx", "cy", "a", "b", "theta"):
        assert getattr(back, k) == pytest.approx(getattr(e, k), abs=1e-9)
    assert np.allclose(Conic(tuple(-v for v in c.coeffs)).coeffs, c.coeffs, rtol=0, atol=1e-15)
    assert np.allclose(c.evaluate(e.boundary(50)), 0, atol=1e-12)


def test_hyperbola_has_no_params():
    with pytest.raises(FitError):
        Conic((1, 0, -1, 0, 0, -1)).to_params()


@pytest.mark.parametrize("fitter", [fit_taubin, fit_fitzgibbon])
def test_noiseless_fit_is_exact(fitter):
    pts = ellipse_points(100, 60, math.radians(30), 320, 240, 100)
    e = fitter(pts).to_params()
    assert e.cx == pytest.approx(320, abs=1e-6) and e.cy == pytest.approx(240, abs=1e-6)
    assert e.a == pytest.approx(100, abs=1e-6) and e.b == pytest.approx(60, abs=1e-6)
    assert e.theta == pytest.approx(math.radians(30), abs=1e-6)


def test_fit_ellipse_reports_method_and_error():
    pts = ellipse_points(50, 20, 0.3, 0, 0, 60)
    r = fit_ellipse(pts)
    assert r.method == TAUBIN and r.n_points == 60 and r.rmse < 1e-9


def test_fitzgibbon_fallback_on_hyperbolic_data():
    # points on one branch of a hyperbola: Taubin returns a hyperbola, the direct fit an ellipse
    t = np.linspace(-1.5, 1.5, 40)
    pts = np.column_stack([np.cosh(t) * 10, np.sinh(t) * 10])
    r = fit_ellipse(pts)
    assert r.method == FITZGIBBON
    assert r.ellipse.b > 0


@pytest.mark.parametrize("pts", [np.zeros((3, 2)), np.zeros((10, 2)),
                                 np.column_stack([np.arange(10.0), 2 * np.arange(10.0)])])
def test_degenerate_point_sets_raise(pts):
    with pytest.raises(FitError):
        fit_ellipse(pts)


def test_fit_rejects_bad_shape():
    with pytest.raises(InvalidArgument):
        fit_ellipse(np.zeros((10, 3)))


@pytest.mark.parametrize("a,b", [(1, 1), (10, 1), (5, 3), (100, 99.9)])
def test_ramanujan_against_quadrature(a, b):
    assert abs(ramanujan_perimeter(a, b) / quad_perimeter(a, b) - 1) < 1e-4


def test_circle_perimeter_exact():
    assert ramanujan_perimeter(7, 7) == pytest.approx(14 * math.pi, rel=1e-15)


@pytest.mark.parametrize("p", [(0, 0), (0, 5), (7, 0), (30, 40), (-120, 3), (2, -1), (0, 100)])
def test_distance_against_dense_sampling(p):
    e = EllipseParams.make(0, 0, 100, 60, 0)
    assert point_ellipse_distance(e, p) == pytest.approx(sampled_distance(e, p), abs=1e-3)


def test_distance_on_curve_and_circle():
    e = EllipseParams.make(5, -2, 40, 25, 1.1)
    assert np.allclose(point_distances(e, e.boundary(100)), 0, atol=1e-9)
    c = EllipseParams.make(0, 0, 10, 10)
    assert point_ellipse_distance(c, (3, 4)) == pytest.approx(5)
    assert point_ellipse_distance(c, (0, 0)) == pytest.approx(10)


@settings(max_examples=60, deadline=None)
@given(st.floats(2, 100), st.floats(0.1, 1), st.floats(0, math.pi - 1e-9),
       st.floats(-200, 200), st.floats(-200, 200))
def test_distance_never_exceeds_any_boundary_sample(a, ratio, theta, px, py):
    e = EllipseParams.make(0, 0, a, max(a * ratio, 1e-3), theta)
    d = point_ellipse_distance(e, (px, py))
    assert d <= sampled_distance(e, (px, py), 4000) + 1e-9


def test_rmse_of_offset_circle():
    c = EllipseParams.make(0, 0, 10, 10)
    pts = ellipse_points(12, 12, 0, 0, 0, 30)
    assert rmse(c, pts) == pytest.approx(2.0)
    with pytest.raises(InvalidArgument):
        rmse(c, np.zeros((0, 2)))


def test_eccentricity_and_perimeter():
    assert eccentricity(EllipseParams.make(0, 0, 5, 5)) == 0
    assert eccentricity(EllipseParams.make(0, 0, 5, 3)) == pytest.approx(0.8)
    assert perimeter(EllipseParams.make(0, 0, 5, 5)) == pytest.approx(10 * math.pi)


def test_rasterize_pixel_centres():
    m = rasterize(EllipseParams.make(5, 5, 2, 2), 11, 11)
    assert m.sum() == 13  # lattice points with x^2 + y^2 <= 4
    assert m[5, 7] and not m[6, 7]
    assert not rasterize(EllipseParams.make(-50, -50, 2, 2), 10, 10).any()


def test_overlap_ratio_cases():
    e = EllipseParams.make(50, 50, 20, 10, 0.3)
    assert overlap_ratio(e, e, (100, 100)) == 1.0
    far = EllipseParams.make(300, 300, 5, 5)
    assert overlap_ratio(e, far, (100, 100)) == 0.0
    assert overlap_ratio(far, far, (100, 100)) == 0.0
    big = EllipseParams.make(50, 50, 30, 30)
    small = EllipseParams.make(50, 50, 15, 15)
    assert overlap_ratio(big, small, (100, 100)) == pytest.approx(
        rasterize(small, 100, 100).sum() / rasterize(big, 100, 100).sum())


@settings(max_examples=40, deadline=None)
@given(st.floats(20, 80), st.floats(20, 80), st.floats(3, 30), st.floats(0.3, 1), st.floats(0, 3.1))
def test_overlap_symmetric_and_bounded(cx, cy, a, ratio, theta):
    e1 = EllipseParams.make(cx, cy, a, a * ratio, theta)
    e2 = EllipseParams.make(50, 50, 20, 12, 0.5)
    r = overlap_ratio(e1, e2, (100, 100))
    assert 0.0 <= r <= 1.0
    assert r == overlap_ratio(e2, e1, (100, 100))
