"""Geodesics of the energy functional: integration, shooting, diagnostics.

The stationarity system is formed from the degree-two Lagrangian L (not F),
so null directions of spacetime families integrate cleanly.  In first-order
form, with M = Hessian_v L = 2 g_v:

    x' = v,      M v' = dL/dx - (d^2 L / dv dx) v.

Vector-slot derivatives come from the family closed forms via homogeneity
(dL/dv = 2 g_v v); position derivatives use central differences of those
exact quantities, which are identically zero for constant-coefficient
models.  Positive-definite families travel minimizers; spacetime families
extremize (causal geodesics are local maximizers) — the solver is the same
stationarity equation either way.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from .errors import JacobianIllConditioned, OutsideDomain, PositivityViolated, StiffnessFailure
from .fields import ExpressionField
from .metrics import MetricModel, RandersMetric, TangentSample
from .tensor import tensor_batch

CONSTANT_SPEED_RTOL = 1e-6
ENDPOINT_RTOL = 1e-7
DEDUPE_ANGLE_DEG = 5.0


@dataclass
class Geodesic:
    """Sampled solution curve of the stationarity system."""

    params: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    length: float
    F0: float
    affine: bool
    exited_chart: bool = False
    extremal_type: str = "minimizer"

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]


def _x_step(x):
    return 1e-5 * (1.0 + np.linalg.norm(x))


def _dLdv(model, x, v):
    g = tensor_batch(model, x[None, :], v[None, :], mode=model.derivative_mode)[0]
    return 2.0 * g @ v, g


def _rhs_factory(model: MetricModel):
    n = model.dim

    def rhs(_t, y):
        x, v = y[:n], y[n:]
        dLdv, g = _dLdv(model, x, v)
        delta = _x_step(x)
        shifts = np.vstack([x + delta * np.eye(n), x - delta * np.eye(n)])
        Vb = np.broadcast_to(v, (2 * n, n))
        # dL/dx and the mixed Hessian share the same shifted evaluations
        g_shift = tensor_batch(model, shifts, Vb, mode=model.derivative_mode)
        dLdv_shift = 2.0 * np.einsum("kij,j->ki", g_shift, v)
        L_shift = np.einsum("ki,i->k", dLdv_shift, v) / 2.0  # L = g_v(v,v)
        dLdx = (L_shift[:n] - L_shift[n:]) / (2.0 * delta)
        mixed = (dLdv_shift[:n] - dLdv_shift[n:]).T / (2.0 * delta)  # [i, k]
        force = dLdx - mixed @ v
        try:
            vdot = np.linalg.solve(2.0 * g, force)
        except np.linalg.LinAlgError as exc:
            raise StiffnessFailure(f"degenerate vertical Hessian at x={x}") from exc
        return np.concatenate([v, vdot])

    return rhs


def integrate_geodesic(model: MetricModel, p, v, length: float,
                       samples: int = 200, rtol: float = 1e-9,
                       atol: float = 1e-9) -> Geodesic:
    """Integrate from (p, v) until the F-length budget or the chart edge.

    The solution is affinely parametrized: F along the velocity stays at its
    initial value (checked to 1e-6 relative and recorded in the affine flag).
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    _, F0 = model.evaluate(TangentSample(p, v))
    if F0 <= 0:
        raise OutsideDomain("initial direction has nonpositive F; cannot meter length")
    T = float(length) / F0
    n = model.dim

    def exit_event(_t, y):
        return model.chart.boundary_distance(y[:n])

    exit_event.terminal = True
    exit_event.direction = -1

    with np.errstate(invalid="ignore", divide="ignore"):
        sol = solve_ivp(_rhs_factory(model), (0.0, T), np.concatenate([p, v]),
                        method="RK45", rtol=rtol, atol=atol, dense_output=True,
                        events=exit_event)
    if sol.status == -1:
        raise StiffnessFailure(f"integration failed: {sol.message}")
    exited = sol.status == 1
    t_end = sol.t[-1]
    ts = np.linspace(0.0, t_end, samples)
    states = sol.sol(ts)
    points = states[:n].T
    velocities = states[n:].T

    F_along = model.F_values(points, velocities)
    affine = bool(np.all(np.isfinite(F_along))
                  and np.max(np.abs(F_along - F0)) <= CONSTANT_SPEED_RTOL * F0)
    kind = "minimizer" if model.positive_definite else "extremal"
    return Geodesic(params=ts, points=points, velocities=velocities,
                    length=F0 * t_end, F0=F0, affine=affine,
                    exited_chart=exited, extremal_type=kind)


def euler_lagrange_residual(model: MetricModel, points, params=None,
                            velocities=None) -> np.ndarray:
    """Residual norms of d/dt(dL/dv) - dL/dx at the interior samples of a
    polyline.  Zero (to tolerance) characterizes affine geodesics of L."""
    pts = np.asarray(points, dtype=float)
    m = len(pts)
    if m < 3:
        raise ValueError("need at least 3 samples")
    ts = np.arange(m, dtype=float) if params is None else np.asarray(params, dtype=float)
    if velocities is None:
        velocities = np.gradient(pts, ts, axis=0)
    vel = np.asarray(velocities, dtype=float)

    if not np.all(model.chart.contains(pts)):
        raise OutsideDomain("polyline leaves the chart")
    margins = model.margin_values(pts, vel)
    if np.any(margins < 0):
        raise OutsideDomain("polyline velocity leaves the metric domain")

    g = tensor_batch(model, pts, vel, mode=model.derivative_mode)
    dLdv = 2.0 * np.einsum("kij,kj->ki", g, vel)
    ddt = np.gradient(dLdv, ts, axis=0)

    n = model.dim
    dLdx = np.empty_like(pts)
    for k in range(m):
        delta = _x_step(pts[k])
        shifts = np.vstack([pts[k] + delta * np.eye(n), pts[k] - delta * np.eye(n)])
        L_shift = model.L_values(shifts, np.broadcast_to(vel[k], (2 * n, n)))
        dLdx[k] = (L_shift[:n] - L_shift[n:]) / (2.0 * delta)

    res = np.linalg.norm(ddt - dLdx, axis=1)
    return res[1:-1]


def _min_image_delta(chart, x, q):
    d = x - q
    for axis in range(chart.dim):
        period = chart.periodic[axis]
        if period is not None:
            d[axis] = (d[axis] + 0.5 * period) % period - 0.5 * period
    return d


def _initial_guesses(model, p, q, restarts, rng, hint=None):
    chart = model.chart
    base = -_min_image_delta(chart, p.copy(), q)
    guesses = [base]
    # winding representatives on periodic axes
    for axis in range(chart.dim):
        period = chart.periodic[axis]
        if period is not None:
            for s in (1.0, -1.0):
                shifted = base.copy()
                shifted[axis] += s * period
                guesses.append(shifted)
    if hint is not None:
        guesses.append(hint)
    norm = np.linalg.norm(base)
    if chart.dim == 2:
        for ang in np.linspace(0, 2 * np.pi, max(restarts, 1), endpoint=False)[1:]:
            c, s = np.cos(ang), np.sin(ang)
            rot = np.array([[c, -s], [s, c]]) @ base
            guesses.append(rot)
    while len(guesses) < restarts + 1:
        d = rng.normal(size=chart.dim)
        guesses.append(norm * d / np.linalg.norm(d))
    return guesses


def shoot(model: MetricModel, p, q, restarts: int = 6,
          rng: Optional[np.random.Generator] = None,
          field_hint=None, samples: int = 200) -> list:
    """Two-point connection by shooting: find initial velocities u with the
    affine-time-1 endpoint at q.  Returns geodesics sorted by F-length,
    deduplicated by initial direction (5 degrees).  An empty list is the
    no-connection finding, not an error."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.allclose(p, q):
        raise ValueError("shoot needs distinct endpoints")
    rng = rng or np.random.default_rng(0)
    n = model.dim
    scale = max(np.linalg.norm(_min_image_delta(model.chart, p.copy(), q)), 1e-12)

    def endpoint(u):
        try:
            sol = solve_ivp(_rhs_factory(model), (0.0, 1.0), np.concatenate([p, u]),
                            method="RK45", rtol=1e-9, atol=1e-9)
        except (StiffnessFailure, FloatingPointError):
            return None
        if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
            return None
        return sol.y[:n, -1]

    def residual(u):
        x_end = endpoint(u)
        if x_end is None:
            return np.full(n, 10.0 * scale)
        return _min_image_delta(model.chart, x_end, q)

    hits = []
    for guess in _initial_guesses(model, p, q, restarts, rng, field_hint):
        if model.margin_values(p[None, :], guess[None, :])[0] <= 0:
            continue
        try:
            with np.errstate(invalid="ignore", divide="ignore"):
                res = least_squares(residual, guess, xtol=1e-12, ftol=1e-12, gtol=None,
                                    diff_step=1e-7, max_nfev=200)
        except (ValueError, FloatingPointError):
            continue
        if np.linalg.norm(res.fun) <= ENDPOINT_RTOL * scale * 10:
            hits.append(res.x)

    # deduplicate by initial direction
    unique = []
    for u in sorted(hits, key=lambda u: float(model.F_values(p[None, :], u[None, :])[0])):
        du = u / np.linalg.norm(u)
        dup = False
        for w in unique:
            dw = w / np.linalg.norm(w)
            cosang = np.clip(du @ dw, -1.0, 1.0)
            if np.degrees(np.arccos(cosang)) < DEDUPE_ANGLE_DEG:
                dup = True
                break
        if not dup:
            unique.append(u)

    out = []
    for u in unique:
        F0 = float(model.F_values(p[None, :], u[None, :])[0])
        out.append(integrate_geodesic(model, p, u, F0, samples=samples))
    return out


def path_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two polylines (vertex sets)."""
    d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1)
    return float(np.sqrt(max(d2.min(axis=1).max(), d2.min(axis=0).max())))


@dataclass
class ProjectivePair:
    p: np.ndarray
    q: np.ndarray
    hausdorff: float
    length_difference: float
    expected_difference: float


@dataclass
class ProjectiveReport:
    pairs: list = field(default_factory=list)

    @property
    def max_hausdorff(self):
        return max((c.hausdorff for c in self.pairs), default=0.0)

    @property
    def max_length_error(self):
        return max((abs(c.length_difference - c.expected_difference)
                    for c in self.pairs), default=0.0)


class _ShiftedOneForm:
    """beta + df, with df taken exactly from a scalar expression field."""

    def __init__(self, beta, f_field):
        self.beta = beta
        self.f_field = f_field
        self.shape = beta.shape

    def __call__(self, points):
        jac = self.f_field.jacobian(points)
        return self.beta(points) + jac.reshape(np.asarray(points).shape)

    def jacobian(self, points):
        raise NotImplementedError("second derivatives of f are not carried")

    def to_json(self):
        return {"type": "shifted", "base": self.beta.to_json()}


def scalar_expression(expr: str, dim: int) -> ExpressionField:
    return ExpressionField(np.asarray(expr, dtype=object), dim)


def projective_change(model: RandersMetric, f, pair_count: int = 10,
                      rng: Optional[np.random.Generator] = None,
                      probe_samples: int = 200, restarts: int = 2):
    """Shift a Randers one-form by an exact differential and compare paths.

    f: a scalar ExpressionField (or expression string) on the chart.
    Returns (shifted_model, ProjectiveReport).  The shifted metric must stay
    positive on sampled admissible directions, else PositivityViolated.
    """
    if not isinstance(model, RandersMetric):
        raise TypeError("projective change is defined for randers models")
    rng = rng or np.random.default_rng(0)
    if isinstance(f, str):
        f = scalar_expression(f, model.dim)

    shifted = RandersMetric(model.chart, model.h, _ShiftedOneForm(model.beta, f),
                            model.derivative_mode)

    lo, hi = model.chart.lo, model.chart.hi
    span = hi - lo
    P = lo + 0.1 * span + 0.8 * span * rng.random((probe_samples, model.dim))
    dirs = rng.normal(size=(probe_samples, model.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    base_ok = model.margin_values(P, dirs) > 0
    new_margin = shifted.margin_values(P, dirs)
    if np.any(base_ok & (new_margin <= 0)):
        bad = P[base_ok & (new_margin <= 0)][0]
        raise PositivityViolated(f"shifted metric nonpositive near {bad}")

    def f_value(x):
        return float(np.asarray(f(np.asarray(x, dtype=float)[None, :])).ravel()[0])

    report = ProjectiveReport()
    for _ in range(pair_count):
        p = lo + 0.2 * span + 0.6 * span * rng.random(model.dim)
        q = lo + 0.2 * span + 0.6 * span * rng.random(model.dim)
        if np.linalg.norm(q - p) < 1e-3 * np.min(span):
            continue
        geos_a = shoot(model, p, q, restarts=restarts, rng=rng)
        geos_b = shoot(shifted, p, q, restarts=restarts, rng=rng)
        if not geos_a or not geos_b:
            continue
        ga, gb = geos_a[0], geos_b[0]
        report.pairs.append(ProjectivePair(
            p=p, q=q,
            hausdorff=path_hausdorff(ga.points, gb.points),
            length_difference=gb.length - ga.length,
            expected_difference=f_value(q) - f_value(p)))
    return shifted, report


def conjugate_point_scan(model: MetricModel, geo: Geodesic, fan_eps: float = 1e-5,
                         scan_samples: int = 400) -> list:
    """Parameters where the endpoint map of the shooting fan degenerates.

    Integrates n perturbed companions of the geodesic and monitors the
    determinant of the finite-difference Jacobian of the endpoint with
    respect to the initial velocity; sign changes mark conjugate points."""
    if not geo.affine:
        raise ValueError("conjugate scan needs an affinely parametrized geodesic")
    p = geo.points[0]
    v0 = geo.velocities[0]
    T = geo.params[-1]
    n = model.dim
    eps = fan_eps * np.linalg.norm(v0)

    def trajectory(u):
        sol = solve_ivp(_rhs_factory(model), (0.0, T), np.concatenate([p, u]),
                        method="RK45", rtol=1e-10, atol=1e-11, dense_output=True)
        if sol.status != 0:
            raise StiffnessFailure(f"fan trajectory failed: {sol.message}")
        return sol

    base = trajectory(v0)
    fans = [trajectory(v0 + eps * np.eye(n)[j]) for j in range(n)]

    ts = np.linspace(T / scan_samples, T, scan_samples)
    x_base = base.sol(ts)[:n]
    J = np.empty((scan_samples, n, n))
    for j, fan in enumerate(fans):
        J[:, :, j] = (fan.sol(ts)[:n] - x_base).T / eps

    dets = np.linalg.det(J)
    # scale out the t^n growth of the trivial (flat) Jacobian
    dets = dets / np.maximum(ts, 1e-300) ** n

    conds = np.linalg.cond(J[scan_samples // 2])
    if not np.isfinite(conds) or conds > 1e12:
        warnings.warn("endpoint Jacobian ill conditioned; conjugate parameters "
                      "may be unreliable", JacobianIllConditioned)

    hits = []
    for k in range(1, scan_samples):
        a, b = dets[k - 1], dets[k]
        if np.isnan(a) or np.isnan(b):
            continue
        if a == 0.0:
            hits.append(ts[k - 1])
        elif a * b < 0:
            # linear interpolation of the crossing
            t_star = ts[k - 1] + (ts[k] - ts[k - 1]) * a / (a - b)
            hits.append(float(t_star))
    return hits
