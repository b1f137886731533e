import numpy as np
import pytest

from finsler import GridSpec, box_chart
from finsler.causalgrid import (
    CausalGrid,
    causal_reachability,
    finsler_separation,
    transitivity_audit,
)
from finsler.stationary import build_stationary, chronological_future_slice

EYE2 = np.eye(2)
CENTER = (20, 20)


@pytest.fixture(scope="module")
def product_sm():
    return build_stationary(box_chart((-1.2, 1.2), (-1.2, 1.2)), EYE2, np.zeros(2))


@pytest.fixture(scope="module")
def spatial_grid(product_sm):
    return GridSpec.from_chart(product_sm.chart, (41, 41))


@pytest.fixture(scope="module")
def cg(product_sm, spatial_grid):
    return CausalGrid(product_sm, spatial_grid, n_levels=4, cells_per_level=5)


def test_time_step_is_cells_over_speed(cg, spatial_grid):
    assert cg.dt == pytest.approx(5 * spatial_grid.spacing[0], rel=1e-9)


def test_J_slice_matches_field_ball(product_sm, spatial_grid, cg):
    reach = causal_reachability(cg, (0, CENTER))
    level = 3
    t0 = level * cg.dt
    sl = chronological_future_slice(product_sm, np.zeros(2), t0, spatial_grid, k=5)
    d = sl.field.values
    cell = float(np.max(spatial_grid.spacing))
    mismatch = reach.J_slice(level) ^ sl.mask
    assert np.all(np.abs(d[mismatch] - t0) <= 2 * cell)


def test_I_subset_J_and_reflexivity(cg):
    reach = causal_reachability(cg, (0, CENTER))
    assert not np.any(reach.I_masks & ~reach.J_masks)
    assert reach.J_masks[0][CENTER]      # p in J+(p)
    assert not reach.I_masks[0][CENTER]  # p not in I+(p)


def test_light_ray_rim_in_J_not_I(cg):
    # the point at exactly light speed along the axis is reached only by
    # chains of null chords
    reach = causal_reachability(cg, (0, CENTER))
    rim = (CENTER[0] + 15, CENTER[1])  # 3 levels * 5 cells
    assert reach.J_slice(3)[rim]
    assert not reach.I_slice(3)[rim]
    inside = (CENTER[0] + 10, CENTER[1])
    assert reach.I_slice(3)[inside]


def test_transitivity_audit_zero(cg):
    reach = causal_reachability(cg, (0, CENTER))
    assert transitivity_audit(cg, reach) == 0


def test_separation_static_pair_exact(product_sm, spatial_grid):
    cg = CausalGrid(product_sm, spatial_grid, n_levels=21, cells_per_level=5)
    T = 20 * cg.dt
    sep = finsler_separation(cg, (0, CENTER), (20, CENTER))
    assert sep == pytest.approx(T, rel=1e-12)


def test_separation_zero_when_not_reachable(cg):
    # spacelike-related target
    far = (CENTER[0] + 20, CENTER[1])
    assert finsler_separation(cg, (0, CENTER), (1, far)) == 0.0
    # past-directed target
    assert finsler_separation(cg, (2, CENTER), (1, CENTER)) == 0.0


def test_separation_on_light_ray_is_zero(cg):
    rim = (CENTER[0] + 15, CENTER[1])
    assert finsler_separation(cg, (0, CENTER), (3, rim)) == pytest.approx(0.0, abs=1e-12)


def test_separation_refinement_never_decreases(product_sm):
    coarse_grid = GridSpec.from_chart(product_sm.chart, (41, 41))
    fine_grid = GridSpec.from_chart(product_sm.chart, (81, 81))
    cg_coarse = CausalGrid(product_sm, coarse_grid, n_levels=11, cells_per_level=5)
    cg_fine = CausalGrid(product_sm, fine_grid, n_levels=21, cells_per_level=5)
    T = 10 * cg_coarse.dt
    assert 20 * cg_fine.dt == pytest.approx(T, rel=1e-9)
    sep_c = finsler_separation(cg_coarse, (0, CENTER), (10, CENTER))
    sep_f = finsler_separation(cg_fine, (0, (40, 40)), (20, (40, 40)))
    assert sep_f >= sep_c - 1e-12
    assert sep_c == pytest.approx(T, rel=0.05)
    assert sep_f == pytest.approx(T, rel=0.05)


def test_separation_moving_pair_improves_with_finer_fan(product_sm, spatial_grid):
    # continuum value sqrt(T^2 - d^2); a finer velocity fan closes the gap
    lo = CausalGrid(product_sm, spatial_grid, n_levels=11, cells_per_level=2)
    hi = CausalGrid(product_sm, spatial_grid, n_levels=11, cells_per_level=5)
    # same total time: dt scales with cells_per_level, so levels differ
    T_lo = 10 * lo.dt
    q_cells = 4
    target = (CENTER[0] + q_cells, CENTER[1])
    d = q_cells * spatial_grid.spacing[0]
    exact = np.sqrt(T_lo**2 - d**2)
    sep_lo = finsler_separation(lo, (0, CENTER), (10, target))
    n_hi = int(round(T_lo / hi.dt))
    sep_hi = finsler_separation(hi, (0, CENTER), (n_hi, target))
    assert sep_lo <= exact + 1e-9
    assert sep_hi <= exact + 1e-9
    assert sep_hi >= sep_lo - 1e-12
    assert sep_hi == pytest.approx(exact, rel=0.05)
