import numpy as np
import pytest

from finsler import (
    GridSpec,
    InvalidCoefficients,
    NotUnitSpeed,
    Region,
    box_chart,
)
from finsler.geodesic import integrate_geodesic
from finsler.stationary import (
    StationaryModel,
    build_stationary,
    cauchy_horizon,
    causal_ladder_report,
    chronological_future_slice,
    chronological_past_slice,
    classify_vector,
    lift,
    lightlike_pregeodesic_residual,
    sample_causal_vectors,
    verify_temporal,
)
from finsler.tensor import verify_spacetime_conditions
from finsler.metrics import TangentSample

EYE2 = np.eye(2)


@pytest.fixture
def product_model():
    return build_stationary(box_chart((-2.0, 2.0), (-2.0, 2.0)), EYE2, np.zeros(2))


@pytest.fixture
def wind_model():
    # constant cross term along +x
    return build_stationary(box_chart((-2.0, 2.0), (-2.0, 2.0)), EYE2,
                            np.array([0.5, 0.0]))


def test_build_product_case(product_model, rng):
    sm = product_model
    V = rng.normal(size=(50, 2))
    P = np.zeros((50, 2))
    F = sm.fermat.F_values(P, V)
    assert np.allclose(F, np.linalg.norm(V, axis=1), rtol=1e-12)
    assert np.allclose(sm.fermat_reverse.F_values(P, V), F, rtol=1e-12)


def test_fermat_assembly_constant_omega(rng):
    w = 0.4
    sm = build_stationary(box_chart((-2.0, 2.0), (-2.0, 2.0)), EYE2,
                          np.array([w, 0.0]))
    V = rng.normal(size=(100, 2))
    P = np.zeros((100, 2))
    expected = np.sqrt(np.einsum("ki,ki->k", V, V) + (w * V[:, 0]) ** 2) + w * V[:, 0]
    assert np.allclose(sm.fermat.F_values(P, V), expected, rtol=1e-12)
    # reverse duality at random samples
    assert np.allclose(sm.fermat_reverse.F_values(P, V),
                       sm.fermat.F_values(P, -V), rtol=1e-12)


def test_invalid_g0_rejected():
    with pytest.raises(InvalidCoefficients):
        build_stationary(box_chart((-1.0, 1.0), (-1.0, 1.0)),
                         np.diag([-1.0, 1.0]), np.zeros(2))


def test_gL_matrix_block_form(wind_model):
    gl = wind_model.gL_matrix(np.zeros((1, 2)))[0]
    assert gl[0, 0] == -1.0
    assert gl[0, 1] == 0.5
    assert np.allclose(gl[1:, 1:], EYE2)
    eig = np.linalg.eigvalsh(gl)
    assert np.sum(eig < 0) == 1


def test_lift_product_line(product_model):
    ts = np.linspace(0.0, 1.5, 40)
    pts = np.outer(ts, [1.0, 0.0])
    vel = np.tile([1.0, 0.0], (40, 1))
    curve = lift(product_model, (ts, pts, vel), sign=+1)
    assert curve.max_nullity <= 1e-12
    assert all(ch == "lightlike" for ch in curve.characters)


def test_lift_constant_wind_unit_line(wind_model):
    # F-unit straight line downwind: F((a,0)) = a*sqrt(1+w^2) + a*w = 1
    w = 0.5
    a = 1.0 / (np.sqrt(1 + w * w) + w)
    ts = np.linspace(0.0, 1.2, 30)
    pts = np.outer(ts, [a, 0.0])
    vel = np.tile([a, 0.0], (30, 1))
    curve = lift(wind_model, (ts, pts, vel), sign=+1)
    assert curve.max_nullity <= 1e-8


def test_lift_geodesic_is_pregeodesic(wind_model):
    metric = wind_model.fermat
    v = np.array([0.3, 0.7])
    F0 = float(metric.F_values(np.zeros((1, 2)), v[None, :])[0])
    geo = integrate_geodesic(metric, np.array([-1.0, -1.0]), v / F0, 1.5)
    curve = lift(wind_model, geo, sign=+1)
    assert curve.max_nullity <= 1e-8
    assert lightlike_pregeodesic_residual(wind_model, curve) <= 1e-6


def test_lift_rejects_non_unit_curve(product_model):
    ts = np.linspace(0.0, 1.0, 10)
    pts = np.outer(ts, [2.0, 0.0])
    vel = np.tile([2.0, 0.0], (10, 1))
    with pytest.raises(NotUnitSpeed):
        lift(product_model, (ts, pts, vel), sign=+1)


def test_backward_lift_is_null(wind_model):
    # unit curve for the reverse metric lifts to a past-directed null curve
    w = 0.5
    a = 1.0 / (np.sqrt(1 + w * w) - w)
    ts = np.linspace(0.0, 1.0, 20)
    pts = np.outer(ts, [a, 0.0])
    vel = np.tile([a, 0.0], (20, 1))
    curve = lift(wind_model, (ts, pts, vel), sign=-1)
    assert curve.max_nullity <= 1e-8
    assert np.all(curve.points[1:, 0] < 0)


def test_classify_vector_basic(product_model):
    sm = product_model
    p = np.zeros(2)
    assert classify_vector(sm, p, np.array([1.0, 0.0, 0.0])).kind == "timelike"
    assert classify_vector(sm, p, np.array([1.0, 1.0, 0.0])).kind == "lightlike"
    assert classify_vector(sm, p, np.array([0.0, 0.4, 0.0])).kind == "none"
    assert classify_vector(sm, p, np.zeros(3)).kind == "null"
    # coherence: timelike => g_L < 0 and dt > 0
    cls = classify_vector(sm, p, np.array([2.0, 0.5, -0.5]))
    assert cls.kind == "timelike" and cls.gL < 0 and cls.dt_positive


def test_classify_vector_coherence_random(wind_model, rng):
    sm = wind_model
    for _ in range(200):
        v = rng.normal(size=3)
        cls = classify_vector(sm, np.zeros(2), v)
        if cls.kind == "timelike":
            assert cls.gL < 0 and cls.dt_positive
        elif cls.kind == "lightlike":
            assert abs(cls.gL) <= 1e-6 * (np.linalg.norm(v) ** 2 + 1e-30)


def test_cone_model_passes_spacetime_conditions(wind_model):
    cone = wind_model.cone_model()
    samples = []
    p = np.array([0.0, 0.3, -0.2])
    for vx in [np.array([0.5, 0.0]), np.array([-0.3, 0.2]), np.array([0.0, -0.6])]:
        Fx = float(wind_model.fermat.F_values(p[None, 1:], vx[None, :])[0])
        samples.append(TangentSample(p, np.concatenate([[Fx * 1.5], vx])))   # interior
        samples.append(TangentSample(p, np.concatenate([[Fx * 0.5], vx])))   # outside
    report = verify_spacetime_conditions(cone, samples, boundary_tol=1e-4)
    assert report.passed
    # one positive direction (the cone axis), space_dim negative ones
    assert report.expected_signature == (1, 2, 0)


def test_future_slice_product_is_euclidean_ball(product_model):
    grid = GridSpec.from_chart(product_model.chart, (81, 81))
    t0 = 1.0
    sl = chronological_future_slice(product_model, np.zeros(2), t0, grid)
    pts = grid.points().reshape(grid.shape + (2,))
    exact = np.linalg.norm(pts, axis=-1) < t0
    # mismatch confined to a 2-cell band around the sphere
    cell = float(np.max(grid.spacing))
    mismatch = sl.mask ^ exact
    assert np.all(np.abs(np.linalg.norm(pts, axis=-1)[mismatch] - t0) <= 2 * cell)


def test_future_slice_shrinks_to_point(product_model):
    grid = GridSpec.from_chart(product_model.chart, (41, 41))
    sl = chronological_future_slice(product_model, np.zeros(2), 1e-6, grid)
    assert sl.mask.sum() <= 1


def test_wind_form_matches_navigation_metric(rng):
    from finsler import ZermeloMetric
    from finsler.stationary import stationary_from_wind

    chart = box_chart((-2.0, 2.0), (-2.0, 2.0))
    W = np.array([0.5, 0.0])
    sm = stationary_from_wind(chart, EYE2, W)
    nav = ZermeloMetric(chart, EYE2, W)
    P = rng.uniform(-1.5, 1.5, size=(200, 2))
    V = rng.normal(size=(200, 2))
    assert np.allclose(sm.fermat.F_values(P, V), nav.F_values(P, V), rtol=1e-12)


def test_future_slice_drifts_downwind(rng):
    from finsler.stationary import stationary_from_wind

    chart = box_chart((-2.0, 2.0), (-2.0, 2.0))
    w = 0.5
    sm = stationary_from_wind(chart, EYE2, np.array([w, 0.0]))
    grid = GridSpec.from_chart(chart, (81, 81))
    t0 = 1.0
    sl = chronological_future_slice(sm, np.zeros(2), t0, grid)
    xs = grid.axes()[0]
    mid = grid.shape[1] // 2
    reached = xs[sl.mask[:, mid]]
    # downwind reach t0*(1+w), upwind t0*(1-w)
    assert reached.max() == pytest.approx(t0 * (1 + w), abs=3 * grid.spacing[0])
    assert reached.min() == pytest.approx(-t0 * (1 - w), abs=3 * grid.spacing[0])


def test_past_slice_is_reverse_ball(rng):
    from finsler.stationary import stationary_from_wind

    chart = box_chart((-2.0, 2.0), (-2.0, 2.0))
    w = 0.5
    sm = stationary_from_wind(chart, EYE2, np.array([w, 0.0]))
    grid = GridSpec.from_chart(chart, (61, 61))
    t0 = 0.8
    past = chronological_past_slice(sm, np.zeros(2), t0, grid)
    xs = grid.axes()[0]
    mid = grid.shape[1] // 2
    reached = xs[past.mask[:, mid]]
    # the past ball mirrors the future one: downwind side is now hard to reach
    assert reached.min() == pytest.approx(-t0 * (1 + w), abs=3 * grid.spacing[0])
    assert reached.max() == pytest.approx(t0 * (1 - w), abs=3 * grid.spacing[0])


def test_cauchy_horizon_flat_disk(product_model):
    grid = GridSpec.from_chart(product_model.chart, (81, 81))
    R = 1.0
    horizon = cauchy_horizon(product_model, Region.ball((0.0, 0.0), R), grid)
    cell = float(np.max(grid.spacing))
    assert horizon.apex_value == pytest.approx(R, abs=2 * cell)
    assert np.allclose(grid.node_point(horizon.apex_index), [0.0, 0.0], atol=2 * cell)
    # boundary nodes of the region sit at (almost) zero distance
    pts = grid.points().reshape(grid.shape + (2,))
    ring = (np.linalg.norm(pts, axis=-1) >= R - cell) & horizon.region_mask
    assert np.nanmax(horizon.values[ring]) <= 1.5 * cell


def test_cauchy_horizon_drifts_downwind(rng):
    from finsler.stationary import stationary_from_wind

    chart = box_chart((-2.0, 2.0), (-2.0, 2.0))
    w = 0.5
    sm = stationary_from_wind(chart, EYE2, np.array([w, 0.0]))
    grid = GridSpec.from_chart(chart, (81, 81))
    R = 1.0
    horizon = cauchy_horizon(sm, Region.ball((0.0, 0.0), R), grid)
    assert R / (1 + w) - 0.1 <= horizon.apex_value <= R / (1 - w) + 0.1
    # apex shifts downwind (+x)
    assert grid.node_point(horizon.apex_index)[0] > 0.05


def test_cauchy_horizon_empty_complement(product_model):
    grid = GridSpec.from_chart(product_model.chart, (21, 21))
    from finsler import EmptyComplement
    with pytest.raises(EmptyComplement):
        cauchy_horizon(product_model, Region.ball((0.0, 0.0), 100.0), grid)


def test_horizon_bounded_by_single_source_distances(product_model, rng):
    grid = GridSpec.from_chart(product_model.chart, (41, 41))
    horizon = cauchy_horizon(product_model, Region.ball((0.0, 0.0), 1.0), grid)
    from finsler.distance import distance_field
    pts = grid.points()
    outside = pts[~horizon.region_mask.ravel()]
    for x in outside[rng.choice(len(outside), 5, replace=False)]:
        fld = distance_field(product_model.fermat, x, grid)
        inside = horizon.region_mask & np.isfinite(horizon.values)
        assert np.all(horizon.values[inside] <= fld.values[inside] + 1e-9)


def test_ladder_flat_product_passes(product_model, rng):
    grid = GridSpec.from_chart(product_model.chart, (41, 41))
    report = causal_ladder_report(product_model, grid, budget=0.8, rng=rng,
                                  pair_budget=6, probe_points=2, fan_size=6)
    assert report.finding("causal-simplicity").verdict == "pass"
    assert report.finding("global-hyperbolicity").verdict == "pass"
    assert report.finding("cauchy-slices").verdict == "pass"
    assert report.finding("causal-continuity").verdict == "cited"
    assert all(f.proxy for f in report.findings if f.name != "causal-continuity")


def test_ladder_punctured_chart_fails_simplicity(rng):
    hole = Region.complement(Region.ball((0.0, 0.0), 0.35))
    chart = box_chart((-2.0, 2.0), (-2.0, 2.0), region=hole)
    sm = build_stationary(chart, EYE2, np.zeros(2))
    grid = GridSpec.from_chart(chart, (81, 81))
    report = causal_ladder_report(sm, grid, budget=0.5, rng=rng,
                                  pair_budget=40, probe_points=2, fan_size=4)
    finding = report.finding("causal-simplicity")
    assert finding.verdict == "fail"
    assert finding.witness is not None


def test_ladder_small_chart_fails_completeness(rng):
    sm = build_stationary(box_chart((-0.5, 0.5), (-0.5, 0.5)), EYE2, np.zeros(2))
    grid = GridSpec.from_chart(sm.chart, (41, 41))
    report = causal_ladder_report(sm, grid, budget=2.0, rng=rng,
                                  pair_budget=4, probe_points=2, fan_size=4)
    assert report.finding("cauchy-slices").verdict == "fail"
    assert report.finding("global-hyperbolicity").verdict == "fail"


def test_verify_temporal_coordinate_time(wind_model, rng):
    samples = sample_causal_vectors(wind_model, rng, 200)
    report = verify_temporal(wind_model, "x0", samples)
    assert report.temporal
    assert report.min_value > 0


def test_verify_temporal_space_coordinate_fails(product_model, rng):
    samples = sample_causal_vectors(product_model, rng, 100)
    samples.append((np.zeros(3), np.array([1.0, -1.0, 0.0])))  # counterexample
    report = verify_temporal(product_model, "x1", samples)
    assert not report.temporal


def test_verify_temporal_perturbed_time(product_model, rng):
    # tau = t + eps*f(x) stays temporal for eps below the sampled bound
    samples = [(p, v) for p, v in sample_causal_vectors(product_model, rng, 200,
                                                        lightlike_fraction=0.0)]
    df_bound = 0.3  # |df| of f = 0.3*sin(x1) is <= 0.3
    margins = []
    for p, v in samples:
        Fx = float(product_model.fermat.F_values(p[None, 1:], v[None, 1:])[0])
        margins.append((v[0] - Fx) / df_bound)
    eps = 0.9 * min(margins)
    assert eps > 0
    report = verify_temporal(product_model, f"x0 + {eps}*0.3*sin(x1)", samples)
    assert report.temporal
