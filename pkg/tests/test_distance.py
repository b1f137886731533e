import numpy as np
import pytest

from finsler import (
    Chart,
    FermatMetric,
    GridSpec,
    RandersMetric,
    Region,
    RiemannianMetric,
    Unreachable,
    ZermeloMetric,
    box_chart,
)
from finsler.distance import (
    backtrack_path,
    convexity_check,
    cut_locus_probe,
    distance_field,
    stencil_gap_degrees,
    stencil_offsets,
    symmetrized_distance,
)

EYE2 = np.eye(2)


def make_grid(chart, n):
    return GridSpec.from_chart(chart, (n, n))


def test_stencil_offsets_are_primitive():
    offs = stencil_offsets(2, 3)
    assert len(offs) == 32
    from math import gcd
    assert all(gcd(abs(int(a)), abs(int(b))) == 1 for a, b in offs)
    assert stencil_gap_degrees(offs) < 10.0


def test_euclidean_field_within_two_percent():
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    model = RiemannianMetric(chart, EYE2)
    grid = make_grid(chart, 101)
    fld = distance_field(model, np.zeros(2), grid, "forward", k=3)
    pts = grid.points()
    exact = np.linalg.norm(pts, axis=1).reshape(grid.shape)
    mask = exact > 0
    rel = np.abs(fld.values[mask] - exact[mask]) / exact[mask]
    assert np.max(rel) <= 0.02
    assert fld.values[grid.nearest_node(np.zeros(2))] == 0.0


def test_zermelo_constant_wind_field_downwind_upwind():
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    model = ZermeloMetric(chart, EYE2, np.array([0.5, 0.0]))
    grid = make_grid(chart, 101)
    fld = distance_field(model, np.zeros(2), grid, "forward", k=3)
    d = 0.8
    down = fld.value_at(np.array([d, 0.0]))
    up = fld.value_at(np.array([-d, 0.0]))
    assert down == pytest.approx(d / 1.5, rel=0.02)
    assert up == pytest.approx(d / 0.5, rel=0.02)


def test_fermat_reverse_field_equals_forward_of_reverse_metric():
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    fwd = FermatMetric(chart, EYE2, np.array([0.4, -0.1]))
    grid = make_grid(chart, 41)
    p = np.array([0.2, 0.1])
    rev_field = distance_field(fwd, p, grid, "reverse", k=2)
    dual_field = distance_field(fwd.reverse(), p, grid, "forward", k=2)
    assert np.array_equal(rev_field.values, dual_field.values)


def test_symmetrized_distance_constant_wind():
    chart = box_chart((-2.0, 2.0), (-2.0, 2.0))
    w = 0.5
    model = ZermeloMetric(chart, EYE2, np.array([w, 0.0]))
    grid = make_grid(chart, 81)
    p = np.array([0.0, 0.0])
    q = np.array([1.0, 0.0])
    ds = symmetrized_distance(model, p, q, grid)
    assert ds == pytest.approx(1.0 / (1.0 - w * w), rel=0.02)
    # symmetric by construction
    assert symmetrized_distance(model, q, p, grid) == pytest.approx(ds, rel=0.02)


def test_riemannian_symmetrized_equals_oneway():
    chart = box_chart((-2.0, 2.0), (-2.0, 2.0))
    model = RiemannianMetric(chart, EYE2)
    grid = make_grid(chart, 61)
    p = np.array([-0.5, 0.0])
    q = np.array([0.7, 0.4])
    fld = distance_field(model, p, grid)
    assert symmetrized_distance(model, p, q, grid) == pytest.approx(fld.value_at(q), rel=1e-9)


def test_directed_triangle_inequality_on_nodes(rng):
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    model = ZermeloMetric(chart, EYE2, np.array([0.4, 0.2]))
    grid = make_grid(chart, 41)
    nodes = grid.points()
    cell = float(np.max(grid.spacing))
    for _ in range(20):
        ip, iq, ir = rng.choice(len(nodes), 3, replace=False)
        p, q, r = nodes[ip], nodes[iq], nodes[ir]
        dp = distance_field(model, p, grid, k=2)
        dq = distance_field(model, q, grid, k=2)
        lhs = dp.values[grid.nearest_node(r)]
        rhs = dp.values[grid.nearest_node(q)] + dq.values[grid.nearest_node(r)]
        assert lhs <= rhs + 3 * cell


def test_conic_randers_still_reaches_upwind_via_cheap_boundary_rays():
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    # strong one-form: the excluded cone is narrower than a half-plane, so
    # zigzags along near-null directions still reach upwind nodes cheaply
    model = RandersMetric(chart, EYE2, np.array([1.5, 0.0]))
    grid = make_grid(chart, 31)
    fld = distance_field(model, np.zeros(2), grid)
    assert np.all(np.isfinite(fld.values))
    assert fld.value_at(np.array([-0.9, 0.0])) < 0.9  # cheaper than Euclidean


def test_unreachable_outside_a_strict_cone():
    from finsler import TabulatedMetric

    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))

    def L_func(P, V):
        return V[..., 0] ** 2 - V[..., 1] ** 2

    def margin_func(P, V):
        return np.minimum(V[..., 0], V[..., 0] ** 2 - V[..., 1] ** 2)

    model = TabulatedMetric(chart, L_func, margin_func)
    grid = make_grid(chart, 31)
    fld = distance_field(model, np.zeros(2), grid)
    # only the right-opening cone is reachable; the rest stays +inf
    assert np.isinf(fld.value_at(np.array([-0.5, 0.0])))
    assert np.isfinite(fld.value_at(np.array([0.5, 0.0])))
    with pytest.raises(Unreachable):
        symmetrized_distance(model, np.zeros(2), np.array([-0.5, 0.0]), grid)


def test_convexity_disk_convex(rng):
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    model = RiemannianMetric(chart, EYE2)
    grid = make_grid(chart, 81)
    report = convexity_check(model, Region.ball((0.0, 0.0), 0.8), grid,
                             pair_budget=12, rng=rng)
    assert report.convex
    assert not report.counterexamples


def test_convexity_annulus_not_convex(rng):
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    model = RiemannianMetric(chart, EYE2)
    grid = make_grid(chart, 81)
    annulus = Region(lambda p: (np.linalg.norm(p, axis=-1) > 0.35)
                     & (np.linalg.norm(p, axis=-1) < 0.9),
                     {"type": "annulus"})
    report = convexity_check(model, annulus, grid, pair_budget=40, rng=rng)
    assert not report.convex
    assert report.counterexamples
    p, q, witness = report.counterexamples[0]
    # witness hugs the inner boundary
    assert np.linalg.norm(witness) < 0.45


def test_convexity_halfplane_with_wind(rng):
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    model = ZermeloMetric(chart, EYE2, np.array([0.5, 0.0]))
    grid = make_grid(chart, 81)
    half = Region(lambda p: p[..., 1] > -0.2, {"type": "halfplane"})
    report = convexity_check(model, half, grid, pair_budget=12, rng=rng)
    assert report.convex


def test_backtrack_path_endpoints():
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    model = RiemannianMetric(chart, EYE2)
    grid = make_grid(chart, 41)
    p = np.array([-0.5, -0.5])
    q = np.array([0.5, 0.55])
    fld = distance_field(model, p, grid, return_predecessors=True)
    path = backtrack_path(fld, q)
    assert np.allclose(path[0], grid.node_point(grid.nearest_node(p)))
    assert np.allclose(path[-1], grid.node_point(grid.nearest_node(q)))


def test_cut_locus_plane_empty():
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    model = RiemannianMetric(chart, EYE2)
    grid = make_grid(chart, 61)
    probe = cut_locus_probe(model, np.zeros(2), grid)
    assert not probe.flagged.any()


def cylinder_chart(circumference=4.0, height=4.0):
    return Chart(box=np.array([[0.0, circumference], [-height / 2, height / 2]]),
                 periodic=(circumference, None))


def test_cut_locus_cylinder_antipodal_line():
    chart = cylinder_chart()
    model = RiemannianMetric(chart, EYE2)
    grid = GridSpec.from_chart(chart, (80, 41))
    probe = cut_locus_probe(model, np.zeros(2), grid)
    xs = grid.axes()[0]
    flagged_cols = np.unique(np.nonzero(probe.flagged)[0])
    assert flagged_cols.size > 0
    # all flags near the antipodal column x = 2.0
    assert np.all(np.abs(xs[flagged_cols] - 2.0) <= 2 * grid.spacing[0] + 1e-12)
    # and the antipodal column itself is flagged through most of the height
    col = np.argmin(np.abs(xs - 2.0))
    assert probe.flagged[col].sum() >= grid.shape[1] * 0.6


def test_cut_locus_randers_cylinder_shifts_off_antipode():
    chart = cylinder_chart()
    b = 0.3
    model = RandersMetric(chart, EYE2, np.array([b, 0.0]))
    grid = GridSpec.from_chart(chart, (80, 41))
    probe = cut_locus_probe(model, np.zeros(2), grid)
    # winding-class lengths tie at x = C*(1-b)/2 = 1.4
    xs = grid.axes()[0]
    mid_row = grid.shape[1] // 2
    flagged_x = xs[probe.flagged[:, mid_row]]
    assert flagged_x.size > 0
    assert np.min(np.abs(flagged_x - 1.4)) <= 2 * grid.spacing[0]
    # nothing flagged at the naive antipode
    assert np.all(np.abs(flagged_x - 2.0) > 2 * grid.spacing[0])
