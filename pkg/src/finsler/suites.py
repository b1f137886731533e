"""Named verification suites with analytic oracles.

Each suite checks one family of guarantees at desk scale and returns
machine-readable records: measured value, threshold, comparator, verdict.
The same suites back the `suite` command and the acceptance test module.
All randomness flows from the seed, so a report is a pure function of
(suite, seed, tolerance overrides).
"""

from __future__ import annotations

import time

import numpy as np
from scipy.ndimage import distance_transform_edt

from .causalgrid import CausalGrid, causal_reachability, exhaustive_closure_audit, \
    finsler_separation
from .chart import Chart, GridSpec, Region, box_chart
from .distance import distance_field
from .errors import SchemaError
from .geodesic import conjugate_point_scan, integrate_geodesic, projective_change, shoot
from .metrics import (
    BogoslovskyMetric,
    FermatMetric,
    KosteleckyMetric,
    MatsumotoMetric,
    RandersMetric,
    RiemannianMetric,
    TangentSample,
    ZermeloMetric,
)
from .modelio import dumps_canonical
from .stationary import (
    StationaryModel,
    build_stationary,
    cauchy_horizon,
    chronological_future_slice,
    lift,
    stationary_from_wind,
)
from .tensor import hessian_fd_batch, tensor_batch

EYE2 = np.eye(2)

DEFAULT_TOLERANCES = {
    "hessian_fd_rel": 1e-6,
    "randers_band_rel": 1e-6,
    "wind_field_rel": 0.02,
    "wind_geodesic_rel": 0.01,
    "lift_nullity": 1e-8,
    "future_ball_cells": 2.0,
    "horizon_apex_cells": 2.0,
    "horizon_boundary_cells": 1.0,
    "reach_band_cells": 2.0,
    "homogeneity_rel": 1e-10,
    "identity_rel": 1e-8,
    "projective_hausdorff": 1e-6,
    "projective_length": 1e-8,
    "conjugate_rel": 0.02,
    "separation_rel": 0.05,
}


def record(name, measured, threshold, comparator="<="):
    if comparator == "<=":
        passed = bool(measured <= threshold)
    elif comparator == ">=":
        passed = bool(measured >= threshold)
    elif comparator == "==":
        passed = bool(measured == threshold)
    else:
        raise ValueError(comparator)
    return {"name": name, "measured": measured, "threshold": threshold,
            "comparator": comparator, "passed": passed}


def _admissible_samples(rng, model, chart, count, min_margin=0.1):
    """Random (P, V) with domain margin at least min_margin."""
    P_out = np.empty((0, chart.dim))
    V_out = np.empty((0, chart.dim))
    guard = 0
    while len(P_out) < count and guard < 60:
        guard += 1
        m = 4 * count
        lo = chart.lo + 0.1 * (chart.hi - chart.lo)
        hi = chart.hi - 0.1 * (chart.hi - chart.lo)
        P = lo + (hi - lo) * rng.random((m, chart.dim))
        V = rng.normal(size=(m, chart.dim))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        V *= rng.uniform(0.5, 2.0, size=(m, 1))
        margin = model.margin_values(P, V)
        keep = margin >= min_margin
        P_out = np.vstack([P_out, P[keep]])
        V_out = np.vstack([V_out, V[keep]])
    return P_out[:count], V_out[:count]


def suite_hessian_consistency(rng, tol):
    """Exact vs finite-difference vertical Hessians on admissible samples."""
    chart = box_chart((-3.0, 3.0), (-3.0, 3.0))
    models = {
        "randers": RandersMetric(chart, EYE2, np.array([0.4, -0.2])),
        "zermelo": ZermeloMetric(chart, EYE2, np.array([0.5, 0.25])),
        "fermat": FermatMetric(chart, np.array([[1.4, 0.2], [0.2, 1.0]]),
                               np.array([0.6, -0.3])),
    }
    out = []
    for name, model in models.items():
        P, V = _admissible_samples(rng, model, chart, 1000)
        exact = tensor_batch(model, P, V, mode="exact")
        fd = hessian_fd_batch(model, P, V)
        scale = np.max(np.abs(exact), axis=(-2, -1), keepdims=True)
        err = float(np.max(np.abs(exact - fd) / scale))
        out.append(record(f"hessian-fd-{name}", err, tol["hessian_fd_rel"]))
    return out


def suite_randers_criterion(rng, tol):
    """Sign of alpha+beta against eigenvalue positive-definiteness."""
    chart = box_chart((-3.0, 3.0), (-3.0, 3.0))
    model = RandersMetric(chart, EYE2, np.array([1.3, 0.0]))
    n = 10000
    V = rng.normal(size=(n, 2))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    V *= rng.uniform(0.3, 3.0, size=(n, 1))
    P = rng.uniform(-2.5, 2.5, size=(n, 2))
    margin = model.margin_values(P, V)
    alpha = np.linalg.norm(V, axis=1)
    keep = np.abs(margin) > tol["randers_band_rel"] * alpha
    g = model._exact_tensor(P[keep], V[keep])
    eigs = np.linalg.eigvalsh(g)
    posdef = np.all(eigs > 0, axis=1)
    agreement = float(np.mean(posdef == (margin[keep] > 0)))
    return [record("randers-criterion-agreement", agreement, 1.0, ">="),
            record("randers-criterion-samples", int(np.sum(keep)), 9000, ">=")]


def suite_constant_wind(rng, tol):
    """Navigation under w = 0.5: field values and geodesic displacements."""
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    w = 0.5
    model = ZermeloMetric(chart, EYE2, np.array([w, 0.0]))
    grid = GridSpec.from_chart(chart, (201, 201))
    fld = distance_field(model, np.zeros(2), grid, "forward", k=3)
    out = []
    d = 0.8
    down = fld.value_at(np.array([d, 0.0]))
    up = fld.value_at(np.array([-d, 0.0]))
    out.append(record("wind-field-downwind",
                      abs(down - d / (1 + w)) / (d / (1 + w)), tol["wind_field_rel"]))
    out.append(record("wind-field-upwind",
                      abs(up - d / (1 - w)) / (d / (1 - w)), tol["wind_field_rel"]))
    T = 0.6  # downwind reach T*(1+w) stays inside the chart
    for sign, label in ((1.0, "down"), (-1.0, "up")):
        direction = np.array([sign, 0.0])
        F0 = float(model.F_values(np.zeros((1, 2)), direction[None, :])[0])
        geo = integrate_geodesic(model, np.zeros(2), direction / F0, T)
        expected = T * (1 + w) if sign > 0 else T * (1 - w)
        err = abs(np.linalg.norm(geo.end) - expected) / expected
        out.append(record(f"wind-geodesic-{label}wind", err, tol["wind_geodesic_rel"]))
    return out


def _lift_models():
    chart = box_chart((-2.0, 2.0), (-2.0, 2.0))
    return [
        build_stationary(chart, EYE2, np.array([0.5, 0.0])),
        build_stationary(chart,
                         {"type": "expr",
                          "entries": [["1 + 0.2*sin(x1)", "0"], ["0", "1 + 0.2*cos(x0)"]]},
                         {"type": "expr", "entries": ["0.3*cos(x1)", "0.2*sin(x0)"]}),
    ]


def suite_lift_nullity(rng, tol):
    """Lifted unit-speed geodesics must be null to near rounding."""
    worst = 0.0
    count = 0
    for sm in _lift_models():
        for _ in range(50):
            p = rng.uniform(-0.7, 0.7, size=2)
            d = rng.normal(size=2)
            d /= np.linalg.norm(d)
            F0 = float(sm.fermat.F_values(p[None, :], d[None, :])[0])
            geo = integrate_geodesic(sm.fermat, p, d / F0, 0.8)
            curve = lift(sm, geo, sign=+1)
            worst = max(worst, curve.max_nullity)
            count += 1
    return [record("lift-nullity-max", worst, tol["lift_nullity"]),
            record("lift-count", count, 100, ">=")]


def suite_product_future(rng, tol):
    """Product-case future slice against the analytic ball (Hausdorff)."""
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    sm = build_stationary(chart, EYE2, np.zeros(2))
    grid = GridSpec.from_chart(chart, (201, 201))
    t0 = 0.8
    sl = chronological_future_slice(sm, np.zeros(2), t0, grid)
    pts = grid.points().reshape(grid.shape + (2,))
    exact = np.linalg.norm(pts, axis=-1) < t0
    cell = float(np.max(grid.spacing))
    haus = _mask_hausdorff_cells(sl.mask, exact, grid)
    return [record("product-future-hausdorff-cells", haus, tol["future_ball_cells"])]


def _mask_hausdorff_cells(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    """Hausdorff distance between two node sets, in units of one cell."""
    if not a.any() or not b.any():
        return np.inf
    sampling = grid.spacing
    to_b = distance_transform_edt(~b, sampling=sampling)
    to_a = distance_transform_edt(~a, sampling=sampling)
    h = max(float(np.max(to_b[a])), float(np.max(to_a[b])))
    return h / float(np.max(grid.spacing))


def suite_cauchy_horizon(rng, tol):
    """Flat disk horizon: apex at the center with value R, rim at zero."""
    chart = box_chart((-1.0, 1.0), (-1.0, 1.0))
    sm = build_stationary(chart, EYE2, np.zeros(2))
    grid = GridSpec.from_chart(chart, (201, 201))
    R = 0.7
    horizon = cauchy_horizon(sm, Region.ball((0.0, 0.0), R), grid)
    cell = float(np.max(grid.spacing))
    apex_err = abs(horizon.apex_value - R) / cell
    # inner ring: region nodes with a 4-neighbour in the complement
    ring = horizon.region_mask & _four_neighbor_dilate(~horizon.region_mask)
    ring_max = float(np.nanmax(np.where(ring, horizon.values, 0.0))) / cell
    return [record("horizon-apex-cells", apex_err, tol["horizon_apex_cells"]),
            record("horizon-boundary-cells", ring_max,
                   tol["horizon_boundary_cells"] * 1.0001)]


def _four_neighbor_dilate(mask: np.ndarray) -> np.ndarray:
    out = np.zeros_like(mask)
    for axis in range(mask.ndim):
        for shift in (1, -1):
            rolled = np.roll(mask, shift, axis=axis)
            sl = [slice(None)] * mask.ndim
            sl[axis] = 0 if shift == 1 else -1
            rolled[tuple(sl)] = False
            out |= rolled
    return out


def suite_reachability(rng, tol):
    """Discrete causal closure on a 20 x 41^2 lattice."""
    chart = box_chart((-1.2, 1.2), (-1.2, 1.2))
    sm = build_stationary(chart, EYE2, np.zeros(2))
    spatial = GridSpec.from_chart(chart, (41, 41))
    cg = CausalGrid(sm, spatial, n_levels=20, cells_per_level=5)
    center = (20, 20)
    reach = causal_reachability(cg, (0, center))
    i_in_j = not np.any(reach.I_masks & ~reach.J_masks)
    audit = exhaustive_closure_audit(cg)
    level = 3
    t0 = level * cg.dt
    sl = chronological_future_slice(sm, np.zeros(2), t0, spatial, k=5)
    cell = float(np.max(spatial.spacing))
    mismatch = reach.I_slice(level) ^ sl.mask
    band = float(np.max(np.abs(sl.field.values[mismatch] - t0))) / cell \
        if mismatch.any() else 0.0
    return [record("reach-I-subset-J", int(i_in_j), 1, ">="),
            record("reach-transitivity-violations", audit["violations"], 0),
            record("reach-audited-sources", audit["sources"], spatial.size, ">="),
            record("reach-ball-band-cells", band, tol["reach_band_cells"])]


def _builtin_model_zoo(chart):
    return {
        "riemannian": RiemannianMetric(chart, np.array([[1.5, 0.2], [0.2, 1.0]])),
        "randers": RandersMetric(chart, EYE2, np.array([0.35, -0.2])),
        "zermelo": ZermeloMetric(chart, EYE2, np.array([0.45, 0.3])),
        "matsumoto": MatsumotoMetric(chart, EYE2, np.array([0.25, 0.1])),
        "fermat": FermatMetric(chart, EYE2, np.array([0.7, -0.4])),
        "bogoslovsky": BogoslovskyMetric(chart, np.diag([-1.0, 1.0]),
                                         np.array([1.0, 0.0]), exponent=0.4),
        "kostelecky": KosteleckyMetric(chart, a=np.array([0.3, 0.1]),
                                       b=np.array([0.0, 0.2]), mass=1.1),
    }


def _family_samples(rng, name, model, chart, count):
    if name in ("bogoslovsky", "kostelecky"):
        vx = rng.uniform(-0.55, 0.55, size=(count, 1))
        V = np.hstack([np.ones((count, 1)), vx]) * rng.uniform(0.5, 2.0, (count, 1))
        P = rng.uniform(-2.0, 2.0, size=(count, 2))
        return P, V
    return _admissible_samples(rng, model, chart, count, min_margin=0.05)


def suite_homogeneity(rng, tol):
    """Degree-two scaling and g_v(v,v) = L across every built-in family."""
    chart = box_chart((-3.0, 3.0), (-3.0, 3.0))
    out = []
    lams = np.array([0.5, 2.0, 7.5])
    for name, model in _builtin_model_zoo(chart).items():
        P, V = _family_samples(rng, name, model, chart, 1000)
        L = model.L_values(P, V)
        hom = 0.0
        for lam in lams:
            L2 = model.L_values(P, lam * V)
            hom = max(hom, float(np.max(np.abs(L2 - lam**2 * L)
                                        / np.maximum(lam**2 * np.abs(L), 1e-300))))
        g = tensor_batch(model, P, V, mode="exact")
        quad = np.einsum("kij,ki,kj->k", g, V, V)
        ident = float(np.max(np.abs(quad - L) / np.maximum(np.abs(L), 1e-300)))
        out.append(record(f"homogeneity-{name}", hom, tol["homogeneity_rel"]))
        out.append(record(f"hessian-identity-{name}", ident, tol["identity_rel"]))
    return out


def suite_projective(rng, tol):
    """Exact-differential shift: same paths, lengths differ by f(q) - f(p)."""
    chart = box_chart((-3.0, 3.0), (-3.0, 3.0))
    model = RandersMetric(chart, EYE2, np.array([0.2, 0.1]))
    _, report = projective_change(model, "0.15*x0 - 0.1*x1", pair_count=100,
                                  rng=rng, restarts=1)
    return [record("projective-pairs", len(report.pairs), 100, ">="),
            record("projective-hausdorff", report.max_hausdorff,
                   tol["projective_hausdorff"]),
            record("projective-length-error", report.max_length_error,
                   tol["projective_length"])]


def suite_conjugate_points(rng, tol):
    """Round-sphere first conjugate parameter; flat cases stay clean."""
    r = 2.0
    chart = Chart(box=np.array([[0.3, np.pi - 0.3], [0.0, 2 * np.pi]]),
                  periodic=(None, 2 * np.pi))
    h = {"type": "expr", "entries": [[f"{r*r}", "0"], ["0", f"{r*r}*sin(x0)**2"]]}
    sphere = RiemannianMetric(chart, h)
    geo = integrate_geodesic(sphere, np.array([np.pi / 2, 0.0]),
                             np.array([0.0, 1.0 / r]), 1.15 * np.pi * r)
    hits = conjugate_point_scan(sphere, geo)
    sphere_err = abs(hits[0] - np.pi * r) / (np.pi * r) if hits else np.inf

    plane = box_chart((-10.0, 10.0), (-10.0, 10.0))
    flat = RiemannianMetric(plane, EYE2)
    flat_hits = conjugate_point_scan(
        flat, integrate_geodesic(flat, np.zeros(2), np.array([1.0, 0.4]), 5.0))
    wind = ZermeloMetric(plane, EYE2, np.array([0.5, 0.0]))
    wind_hits = conjugate_point_scan(
        wind, integrate_geodesic(wind, np.zeros(2), np.array([1.0, 0.0]), 4.0))
    return [record("conjugate-sphere-rel-error", sphere_err, tol["conjugate_rel"]),
            record("conjugate-flat-count", len(flat_hits) + len(wind_hits), 0)]


def suite_separation(rng, tol):
    """Static-pair spacetime separation with one refinement step."""
    chart = box_chart((-1.2, 1.2), (-1.2, 1.2))
    sm = build_stationary(chart, EYE2, np.zeros(2))
    coarse = GridSpec.from_chart(chart, (41, 41))
    fine = GridSpec.from_chart(chart, (81, 81))
    cg_c = CausalGrid(sm, coarse, n_levels=11, cells_per_level=5)
    cg_f = CausalGrid(sm, fine, n_levels=21, cells_per_level=5)
    T = 10 * cg_c.dt
    sep_c = finsler_separation(cg_c, (0, (20, 20)), (10, (20, 20)))
    sep_f = finsler_separation(cg_f, (0, (40, 40)), (20, (40, 40)))
    return [record("separation-static-rel-error", abs(sep_c - T) / T,
                   tol["separation_rel"]),
            record("separation-refined-rel-error", abs(sep_f - T) / T,
                   tol["separation_rel"]),
            record("separation-monotone", float(sep_f - sep_c), -1e-12, ">=")]


def suite_determinism(rng, tol, seed=0):
    """Two runs of a suite with one seed must serialize identically."""
    a = run_suite("homogeneity", seed=seed)
    b = run_suite("homogeneity", seed=seed)
    identical = dumps_canonical(a) == dumps_canonical(b)
    c = run_suite("randers-criterion", seed=seed + 1)
    d = run_suite("randers-criterion", seed=seed + 1)
    identical2 = dumps_canonical(c) == dumps_canonical(d)
    return [record("determinism-identical-bytes", int(identical and identical2), 1, ">=")]


SUITES = {
    "hessian-consistency": suite_hessian_consistency,
    "randers-criterion": suite_randers_criterion,
    "constant-wind": suite_constant_wind,
    "lift-nullity": suite_lift_nullity,
    "product-future": suite_product_future,
    "cauchy-horizon": suite_cauchy_horizon,
    "reachability": suite_reachability,
    "homogeneity": suite_homogeneity,
    "projective-change": suite_projective,
    "conjugate-points": suite_conjugate_points,
    "separation": suite_separation,
    "determinism": suite_determinism,
}


def run_suite(name: str, seed: int = 0, tol_overrides: dict | None = None) -> dict:
    """Run one registered suite; the report is deterministic in (name, seed).

    Wall time goes to the caller via the returned 'elapsed' of each run is
    intentionally excluded from the report so identical configurations give
    byte-identical bytes; timing is the caller's concern.
    """
    if name not in SUITES:
        raise SchemaError("/suite", f"unknown suite {name!r}; available: {sorted(SUITES)}")
    tol = dict(DEFAULT_TOLERANCES)
    for key, value in (tol_overrides or {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise SchemaError(f"/tolerances/{key}", "unknown tolerance key")
        tol[key] = float(value)
    rng = np.random.default_rng(seed)
    results = SUITES[name](rng, tol)
    failures = sum(0 if r["passed"] else 1 for r in results)
    return {"suite": name, "seed": seed,
            "tolerances": {k: tol[k] for k in sorted(tol)},
            "results": results, "failures": failures, "passed": failures == 0}


def run_suite_timed(name: str, seed: int = 0, tol_overrides: dict | None = None):
    t0 = time.perf_counter()
    report = run_suite(name, seed, tol_overrides)
    return report, time.perf_counter() - t0
