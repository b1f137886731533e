"""Cross-module property checks that tie fields, geodesics and futures together."""

import numpy as np
import pytest

from finsler import Chart, GridSpec, RandersMetric, ZermeloMetric, box_chart
from finsler.distance import cut_locus_probe, distance_field
from finsler.geodesic import shoot
from finsler.stationary import build_stationary, chronological_future_slice
from finsler.suites import _mask_hausdorff_cells

EYE2 = np.eye(2)


def test_shoot_length_consistent_with_field(rng):
    chart = box_chart((-2.0, 2.0), (-2.0, 2.0))
    model = ZermeloMetric(chart, EYE2, np.array([0.4, 0.2]))
    grid = GridSpec.from_chart(chart, (81, 81))
    p = np.array([-0.8, -0.5])
    q = np.array([0.9, 0.7])
    fld = distance_field(model, p, grid)
    d = fld.value_at(q)
    geos = shoot(model, p, q, restarts=3, rng=rng)
    assert geos
    length = geos[0].length
    cell = float(np.max(grid.spacing))
    scale = float(model.F_values(p[None, :], (q - p)[None, :] /
                                 np.linalg.norm(q - p))[0])
    # a true geodesic can never beat the graph value by more than quantization
    assert length >= d - 2 * cell * scale
    # and the located minimizer agrees with the field within 2%
    assert length == pytest.approx(d, rel=0.02)


def test_product_ball_error_monotone_under_refinement():
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    sm = build_stationary(chart, EYE2, np.zeros(2))
    t0 = 0.7
    errors = []
    for n in (51, 101):
        grid = GridSpec.from_chart(chart, (n, n))
        sl = chronological_future_slice(sm, np.zeros(2), t0, grid)
        pts = grid.points().reshape(grid.shape + (2,))
        exact = np.linalg.norm(pts, axis=-1) < t0
        cells = _mask_hausdorff_cells(sl.mask, exact, grid)
        errors.append(cells * float(np.max(grid.spacing)))
    assert errors[1] <= errors[0] + 1e-12


def test_cut_locus_validation_finds_tied_minimizers(rng):
    circumference = 4.0
    chart = Chart(box=np.array([[0.0, circumference], [-2.0, 2.0]]),
                  periodic=(circumference, None))
    model = RandersMetric(chart, EYE2, np.zeros(2))
    grid = GridSpec.from_chart(chart, (80, 41))
    probe = cut_locus_probe(model, np.zeros(2), grid, validate=2, rng=rng)
    assert probe.validated
    for entry in probe.validated:
        assert entry["minimizers"] >= 2
        assert entry["tie_within_1pct"]


def test_mask_csv_region_roundtrip(tmp_path):
    from finsler.modelio import load_region, save_mask_csv

    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    grid = GridSpec.from_chart(chart, (21, 21))
    pts = grid.points().reshape(grid.shape + (2,))
    mask = np.linalg.norm(pts, axis=-1) < 0.5
    save_mask_csv(mask, grid, tmp_path / "disk.csv")
    region = load_region(tmp_path / "disk.csv")
    assert region(np.array([0.0, 0.0]))
    assert not region(np.array([0.9, 0.0]))
    got = region(grid.points()).reshape(grid.shape)
    assert np.array_equal(got, mask)