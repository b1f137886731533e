import numpy as np
import pytest

from finsler import (
    Chart,
    FermatMetric,
    GridSpec,
    RandersMetric,
    RiemannianMetric,
    ZermeloMetric,
    box_chart,
)
from finsler.geodesic import (
    conjugate_point_scan,
    euler_lagrange_residual,
    integrate_geodesic,
    path_hausdorff,
    projective_change,
    shoot,
)

EYE2 = np.eye(2)


def test_straight_line_residual_zero(plane):
    model = RiemannianMetric(plane, EYE2)
    ts = np.linspace(0, 1, 50)
    pts = np.outer(ts, [1.0, 2.0])
    res = euler_lagrange_residual(model, pts, ts)
    assert np.max(res) < 1e-10


def test_straight_line_residual_zero_constant_wind(plane):
    model = ZermeloMetric(plane, EYE2, np.array([0.5, 0.0]))
    ts = np.linspace(0, 1, 50)
    pts = np.outer(ts, [1.5, 0.3])
    res = euler_lagrange_residual(model, pts, ts)
    assert np.max(res) < 1e-9


def test_circle_arc_residual_nonzero(plane):
    model = RiemannianMetric(plane, EYE2)
    ts = np.linspace(0, np.pi / 2, 60)
    pts = np.stack([np.cos(ts), np.sin(ts)], axis=1)
    res = euler_lagrange_residual(model, pts, ts)
    assert np.min(res) > 0.5  # |x''| = 1 for the unit circle, residual ~ 2


def test_integrate_euclidean_endpoint(plane):
    model = RiemannianMetric(plane, EYE2)
    geo = integrate_geodesic(model, np.zeros(2), np.array([1.0, 0.0]), 2.0)
    assert np.allclose(geo.end, [2.0, 0.0], atol=1e-9)
    assert geo.affine
    assert geo.length == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("downwind", [True, False])
def test_integrate_constant_wind_displacement(plane, downwind):
    w = 0.5
    model = ZermeloMetric(plane, EYE2, np.array([w, 0.0]))
    direction = np.array([1.0, 0.0]) if downwind else np.array([-1.0, 0.0])
    # normalize to unit time cost so the length budget is travel time
    F = float(model.F_values(np.zeros((1, 2)), direction[None, :])[0])
    v = direction / F
    T = 3.0
    geo = integrate_geodesic(model, np.zeros(2), v, T)
    expected = T * (1 + w) if downwind else T * (1 - w)
    assert np.linalg.norm(geo.end) == pytest.approx(expected, rel=1e-2)
    assert geo.affine


def test_integrate_fermat_product_case_straight(plane):
    model = FermatMetric(plane, EYE2, np.zeros(2))
    v = np.array([0.6, 0.8])
    geo = integrate_geodesic(model, np.array([1.0, -1.0]), v, 2.0)
    assert np.allclose(geo.end, [1.0 + 1.2, -1.0 + 1.6], atol=1e-8)


def test_integrate_stops_at_chart_exit(plane):
    model = RiemannianMetric(plane, EYE2)
    geo = integrate_geodesic(model, np.array([9.0, 0.0]), np.array([1.0, 0.0]), 5.0)
    assert geo.exited_chart
    assert geo.length == pytest.approx(1.0, rel=1e-6)
    assert geo.end[0] == pytest.approx(10.0, abs=1e-6)


def test_shoot_euclidean_segment(plane, rng):
    model = RiemannianMetric(plane, EYE2)
    p = np.array([-1.0, 0.5])
    q = np.array([2.0, -1.0])
    geos = shoot(model, p, q, restarts=4, rng=rng)
    assert geos
    best = geos[0]
    assert best.length == pytest.approx(np.linalg.norm(q - p), rel=1e-8)
    assert np.allclose(best.end, q, atol=1e-6)


def test_shoot_cylinder_two_winding_classes(rng):
    circumference = 4.0
    chart = Chart(box=np.array([[0.0, circumference], [-2.0, 2.0]]),
                  periodic=(circumference, None))
    model = RandersMetric(chart, EYE2, np.zeros(2))
    p = np.array([0.0, 0.0])
    q = np.array([1.5, 0.0])
    geos = shoot(model, p, q, restarts=6, rng=rng)
    assert len(geos) >= 2
    lengths = sorted(g.length for g in geos)
    # winding representatives: u and C - u
    assert lengths[0] == pytest.approx(1.5, rel=1e-6)
    assert lengths[1] == pytest.approx(circumference - 1.5, rel=1e-6)


def test_shoot_constant_wind_downwind_time(plane, rng):
    w = 0.5
    model = ZermeloMetric(plane, EYE2, np.array([w, 0.0]))
    d = 2.0
    geos = shoot(model, np.zeros(2), np.array([d, 0.0]), restarts=4, rng=rng)
    assert geos
    assert geos[0].length == pytest.approx(d / (1 + w), rel=1e-6)


def test_projective_change_constant_f_identity(plane, rng):
    model = RandersMetric(plane, EYE2, np.array([0.2, 0.0]))
    shifted, report = projective_change(model, "3.5", pair_count=3, rng=rng)
    assert report.max_hausdorff < 1e-6
    assert report.max_length_error < 1e-10


def test_projective_change_linear_f(plane, rng):
    model = RandersMetric(plane, EYE2, np.array([0.2, 0.1]))
    shifted, report = projective_change(model, "0.15*x0 - 0.1*x1",
                                        pair_count=6, rng=rng)
    assert report.pairs
    assert report.max_hausdorff < 1e-5
    assert report.max_length_error < 1e-8


def test_projective_change_rejects_large_df(plane):
    from finsler import PositivityViolated

    model = RandersMetric(plane, EYE2, np.zeros(2))
    with pytest.raises(PositivityViolated):
        projective_change(model, "5.0*x0", pair_count=1)


def test_conjugate_points_flat_cases(plane, rng):
    model = RiemannianMetric(plane, EYE2)
    geo = integrate_geodesic(model, np.zeros(2), np.array([1.0, 0.3]), 4.0)
    assert conjugate_point_scan(model, geo) == []

    wind = ZermeloMetric(plane, EYE2, np.array([0.5, 0.0]))
    geo_w = integrate_geodesic(wind, np.zeros(2), np.array([1.0, 0.0]), 3.0)
    assert conjugate_point_scan(wind, geo_w) == []


def sphere_chart(radius):
    return Chart(box=np.array([[0.3, np.pi - 0.3], [0.0, 2 * np.pi]]),
                 periodic=(None, 2 * np.pi))


def test_conjugate_point_round_sphere():
    r = 2.0
    chart = sphere_chart(r)
    h = {"type": "expr", "entries": [[f"{r*r}", "0"], ["0", f"{r*r}*sin(x0)**2"]]}
    model = RiemannianMetric(chart, h)
    p = np.array([np.pi / 2, 0.0])
    v = np.array([0.0, 1.0 / r])  # unit-F equatorial direction
    geo = integrate_geodesic(model, p, v, 1.15 * np.pi * r)
    assert geo.affine
    hits = conjugate_point_scan(model, geo)
    assert hits
    assert hits[0] == pytest.approx(np.pi * r, rel=0.02)


def test_path_hausdorff_symmetry():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.0, 0.1], [1.0, 0.1]])
    assert path_hausdorff(a, b) == pytest.approx(0.1)
    assert path_hausdorff(b, a) == pytest.approx(0.1)
