"""Metric families: construction, evaluation, and conic-domain classification.

Each family provides a batched kernel for the degree-one value F (so the
degree-two value is L = F**2), a domain margin whose sign classifies a
direction as admissible/boundary/outside, and, where available, a closed
form for the vertical Hessian used by the tensor module.

Shapes: points P and vectors V broadcast as (..., n); kernels return (...)
scalars or (..., n, n) matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .chart import Chart
from .errors import InvariantViolation, OutsideDomain, ZeroVector
from .fields import ConstantField, GridField, as_field

# |margin| below this fraction of the margin's natural scale counts as the
# conic boundary; exact zero is measure-zero in floating point.
BOUNDARY_BAND_REL = 1e-9


@dataclass(frozen=True)
class TangentSample:
    """A base point on the chart plus a tangent vector."""

    point: np.ndarray
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=float))


@dataclass(frozen=True)
class DomainVerdict:
    """Conic-domain classification with the family's signed margin."""

    classification: str  # "interior" | "boundary" | "outside"
    margin: float
    scale: float
    degenerate: bool = False


def _dot(mat, u, w):
    return np.einsum("...ij,...i,...j->...", mat, u, w)


def _mv(mat, u):
    return np.einsum("...ij,...j->...i", mat, u)


def _outer(u, w):
    return u[..., :, None] * w[..., None, :]


class MetricModel:
    """Base class for all metric families; immutable after construction."""

    family = "base"
    positive_definite = True  # spatial (norm-like) family vs spacetime family

    def __init__(self, chart: Chart, derivative_mode: str = "exact"):
        if derivative_mode not in ("exact", "fd"):
            raise ValueError("derivative_mode must be 'exact' or 'fd'")
        self.chart = chart
        self.derivative_mode = derivative_mode

    @property
    def dim(self) -> int:
        return self.chart.dim

    # -- kernels supplied by subclasses -------------------------------------
    def _F(self, P, V):
        raise NotImplementedError

    def _margin(self, P, V):
        """Signed domain margin; +inf for families defined on all of TM\\0."""
        return np.full(np.asarray(V).shape[:-1], np.inf)

    def _margin_scale(self, P, V):
        V = np.asarray(V, dtype=float)
        return np.maximum(np.einsum("...i,...i->...", V, V), 1e-300)

    def _exact_tensor(self, P, V):
        return None

    def _degenerate_flag(self, P, V):
        return np.zeros(np.asarray(V).shape[:-1], dtype=bool)

    def reverse(self) -> "MetricModel":
        raise NotImplementedError(f"{self.family} has no reverse-metric construction")

    # -- batched public surface ----------------------------------------------
    def F_values(self, P, V):
        """F on admissible directions, NaN outside the closed domain."""
        P = np.asarray(P, dtype=float)
        V = np.asarray(V, dtype=float)
        margin = self._margin(P, V)
        band = BOUNDARY_BAND_REL * self._margin_scale(P, V)
        with np.errstate(invalid="ignore", divide="ignore"):
            F = self._F(P, V)
        out = np.where(margin >= -band, F, np.nan)
        zero = np.einsum("...i,...i->...", V, V) == 0.0
        return np.where(zero, 0.0, out)

    def L_values(self, P, V):
        F = self.F_values(P, V)
        return F * F

    def cost_values(self, P, V):
        """F with +inf on inadmissible directions; zero vectors cost 0."""
        F = self.F_values(P, V)
        return np.where(np.isfinite(F) & (F >= 0), F, np.inf)

    def margin_values(self, P, V):
        return self._margin(np.asarray(P, dtype=float), np.asarray(V, dtype=float))

    # -- single-sample operations ---------------------------------------------
    def _check_sample(self, s: TangentSample):
        v = s.vector
        if not np.any(v != 0.0):
            raise ZeroVector("metric evaluation at the zero vector")
        if not bool(self.chart.contains(s.point)):
            raise OutsideDomain(f"base point {s.point} outside the chart")

    def evaluate(self, s: TangentSample):
        """Return (L, F) at a sample; raises OutsideDomain / ZeroVector."""
        self._check_sample(s)
        P = s.point[None, :]
        V = s.vector[None, :]
        margin = float(self._margin(P, V)[0])
        band = BOUNDARY_BAND_REL * float(self._margin_scale(P, V)[0])
        if margin < -band:
            raise OutsideDomain(
                f"vector outside the {self.family} domain (margin {margin:.3g})")
        with np.errstate(invalid="ignore", divide="ignore"):
            F = float(self._F(P, V)[0])
        if abs(margin) <= band and self.positive_definite is False:
            F = 0.0  # boundary extension of spacetime families
        L = F * F
        return L, F

    def classify_domain(self, s: TangentSample) -> DomainVerdict:
        self._check_sample(s)
        P = s.point[None, :]
        V = s.vector[None, :]
        margin = float(self._margin(P, V)[0])
        scale = float(self._margin_scale(P, V)[0])
        band = BOUNDARY_BAND_REL * scale
        if margin > band:
            cls = "interior"
        elif margin < -band:
            cls = "outside"
        else:
            cls = "boundary"
        deg = bool(self._degenerate_flag(P, V)[0])
        return DomainVerdict(cls, margin, scale, deg)

    def check_homogeneity(self, s: TangentSample, scales) -> float:
        """Max relative residual of |L(lam*v) - lam^2 L(v)| over the scales."""
        self._check_sample(s)
        scales = np.asarray(scales, dtype=float)
        if np.any(scales <= 0):
            raise ValueError("homogeneity scales must be positive")
        L0, _ = self.evaluate(s)
        worst = 0.0
        for lam in scales:
            L1, _ = self.evaluate(TangentSample(s.point, lam * s.vector))
            denom = max(abs(lam * lam * L0), 1e-300)
            worst = max(worst, abs(L1 - lam * lam * L0) / denom)
        return worst


class AlphaBetaMetric(MetricModel):
    """Shared machinery for F = alpha * phi(beta/alpha) families."""

    def _ab_data(self, P):
        """Return (h, b): Riemannian matrix field values and one-form values."""
        raise NotImplementedError

    def _phi(self, s):
        """Return (phi, phi', phi'') at s = beta/alpha."""
        raise NotImplementedError

    def _alpha_beta(self, P, V):
        h, b = self._ab_data(P)
        a2 = _dot(h, V, V)
        alpha = np.sqrt(np.maximum(a2, 0.0))
        beta = np.einsum("...i,...i->...", b, V)
        return h, b, alpha, beta

    def _F(self, P, V):
        _, _, alpha, beta = self._alpha_beta(P, V)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(alpha > 0, beta / np.where(alpha > 0, alpha, 1.0), 0.0)
            phi, _, _ = self._phi(s)
        return alpha * phi

    def _margin_scale(self, P, V):
        _, _, alpha, _ = self._alpha_beta(P, V)
        return np.maximum(alpha, 1e-300)

    def _exact_tensor(self, P, V):
        h, b, alpha, beta = self._alpha_beta(P, V)
        alpha = np.maximum(alpha, 1e-300)
        s = beta / alpha
        phi, dphi, d2phi = self._phi(s)
        ell = _mv(h, V) / alpha[..., None]
        F = alpha * phi
        coeff = phi - s * dphi
        dF = coeff[..., None] * ell + dphi[..., None] * b
        m = b - s[..., None] * ell
        d2F = (coeff / alpha)[..., None, None] * (h - _outer(ell, ell)) \
            + (d2phi / alpha)[..., None, None] * _outer(m, m)
        return _outer(dF, dF) + F[..., None, None] * d2F


class RiemannianMetric(MetricModel):
    """F(v) = sqrt(h(v, v)) for a positive-definite h."""

    family = "riemannian"

    def __init__(self, chart, h, derivative_mode="exact"):
        super().__init__(chart, derivative_mode)
        self.h = as_field(h, chart.dim, (chart.dim, chart.dim), "/params/h")

    def _F(self, P, V):
        return np.sqrt(np.maximum(_dot(self.h(P), V, V), 0.0))

    def _exact_tensor(self, P, V):
        h = self.h(P)
        return np.broadcast_to(h, np.asarray(V).shape + (self.dim,)).copy() \
            if h.ndim == 2 else h

    def reverse(self):
        return self


class RandersMetric(AlphaBetaMetric):
    """F = sqrt(h(v,v)) + beta(v); admissible where alpha + beta > 0."""

    family = "randers"

    def __init__(self, chart, h, beta, derivative_mode="exact"):
        super().__init__(chart, derivative_mode)
        self.h = as_field(h, chart.dim, (chart.dim, chart.dim), "/params/h")
        self.beta = as_field(beta, chart.dim, (chart.dim,), "/params/beta")

    def _ab_data(self, P):
        return self.h(P), self.beta(P)

    def _phi(self, s):
        return 1.0 + s, np.ones_like(s), np.zeros_like(s)

    def _margin(self, P, V):
        _, _, alpha, beta = self._alpha_beta(P, V)
        return alpha + beta

    def reverse(self):
        neg = ConstantField(-self.beta.value) if isinstance(self.beta, ConstantField) \
            else _NegatedField(self.beta)
        return RandersMetric(self.chart, self.h, neg, self.derivative_mode)


class MatsumotoMetric(AlphaBetaMetric):
    """Slope metric F = alpha^2 / (alpha - beta) on the branch alpha > 2*beta."""

    family = "matsumoto"

    def __init__(self, chart, h, beta, derivative_mode="exact"):
        super().__init__(chart, derivative_mode)
        self.h = as_field(h, chart.dim, (chart.dim, chart.dim), "/params/h")
        self.beta = as_field(beta, chart.dim, (chart.dim,), "/params/beta")

    def _ab_data(self, P):
        return self.h(P), self.beta(P)

    def _phi(self, s):
        d = 1.0 - s
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / d, 1.0 / d**2, 2.0 / d**3

    def _margin(self, P, V):
        _, _, alpha, beta = self._alpha_beta(P, V)
        margin = (alpha - beta) * (alpha - 2.0 * beta)
        # restrict to the slope branch: alpha > beta, else both factors flip sign
        return np.where(alpha - beta > 0, margin, -np.abs(margin) - np.abs(beta - alpha))

    def _margin_scale(self, P, V):
        _, _, alpha, _ = self._alpha_beta(P, V)
        return np.maximum(alpha * alpha, 1e-300)


class ZermeloMetric(AlphaBetaMetric):
    """Time-optimal navigation under a wind W with g(W, W) < 1."""

    family = "zermelo"

    def __init__(self, chart, g, W, derivative_mode="exact"):
        super().__init__(chart, derivative_mode)
        self.g = as_field(g, chart.dim, (chart.dim, chart.dim), "/params/g")
        self.W = as_field(W, chart.dim, (chart.dim,), "/params/W")

    def _wind_data(self, P):
        G = self.g(P)
        Wv = self.W(P)
        lam = 1.0 - _dot(G, Wv, Wv)
        if np.any(lam <= 0):
            raise InvariantViolation("wind speed reaches or exceeds 1 (g(W,W) >= 1)",
                                     sample=np.asarray(P)[np.argmin(lam)] if np.ndim(P) > 1 else P)
        return G, Wv, lam

    def _F(self, P, V):
        G, Wv, lam = self._wind_data(P)
        gvw = _dot(G, V, Wv)
        gvv = _dot(G, V, V)
        return (-gvw + np.sqrt(gvw**2 + gvv * lam)) / lam

    def _ab_data(self, P):
        # translated-ball form: the navigation metric is of Randers type
        G, Wv, lam = self._wind_data(P)
        Wf = _mv(G, Wv)
        h = G / lam[..., None, None] + _outer(Wf, Wf) / (lam**2)[..., None, None]
        b = -Wf / lam[..., None]
        return h, b

    def _phi(self, s):
        return 1.0 + s, np.ones_like(s), np.zeros_like(s)

    def reverse(self):
        return ZermeloMetric(self.chart, self.g, _NegatedField(self.W),
                             self.derivative_mode)


class FermatMetric(AlphaBetaMetric):
    """F = sqrt(g0(v,v) + omega(v)^2) + sign*omega(v), sign = +1 forward.

    Always a classical Randers metric: with h = g0 + omega (x) omega the
    h-norm of omega is strictly below 1 whenever g0 is positive definite.
    """

    family = "fermat"

    def __init__(self, chart, g0, omega, orientation="forward", derivative_mode="exact"):
        super().__init__(chart, derivative_mode)
        if orientation not in ("forward", "reverse"):
            raise ValueError("orientation must be 'forward' or 'reverse'")
        self.g0 = as_field(g0, chart.dim, (chart.dim, chart.dim), "/params/g0")
        self.omega = as_field(omega, chart.dim, (chart.dim,), "/params/omega")
        self.orientation = orientation
        self.sign = 1.0 if orientation == "forward" else -1.0

    def _ab_data(self, P):
        G0 = self.g0(P)
        om = self.omega(P)
        return G0 + _outer(om, om), self.sign * om

    def _phi(self, s):
        return 1.0 + s, np.ones_like(s), np.zeros_like(s)

    def _margin(self, P, V):
        # alpha dominates |beta| strictly for nonzero v: automatic interior
        return np.full(np.asarray(V).shape[:-1], np.inf)

    def reverse(self):
        flip = "reverse" if self.orientation == "forward" else "forward"
        return FermatMetric(self.chart, self.g0, self.omega, flip, self.derivative_mode)


class BogoslovskyMetric(MetricModel):
    """F = (-g0(v,v))^((1-b)/2) * omega(v)^b on the cone where both factors
    are positive; g0 Lorentzian, exponent b in (0, 1)."""

    family = "bogoslovsky"
    positive_definite = False

    def __init__(self, chart, g0, omega, exponent, derivative_mode="exact"):
        super().__init__(chart, derivative_mode)
        if not 0.0 < float(exponent) < 1.0:
            raise ValueError("exponent must lie in (0, 1)")
        self.g0 = as_field(g0, chart.dim, (chart.dim, chart.dim), "/params/g0")
        self.omega = as_field(omega, chart.dim, (chart.dim,), "/params/omega")
        self.exponent = float(exponent)

    def _parts(self, P, V):
        q = -_dot(self.g0(P), V, V)
        w = np.einsum("...i,...i->...", self.omega(P), V)
        return q, w

    def _F(self, P, V):
        q, w = self._parts(P, V)
        bb = self.exponent
        with np.errstate(invalid="ignore"):
            return np.where((q > 0) & (w > 0),
                            np.maximum(q, 0.0) ** (0.5 * (1 - bb)) * np.maximum(w, 0.0) ** bb,
                            np.where((q >= 0) & (w >= 0), 0.0, np.nan))

    def _margin(self, P, V):
        q, w = self._parts(P, V)
        return np.minimum(q, w)

    def _margin_scale(self, P, V):
        q, w = self._parts(P, V)
        vn = np.einsum("...i,...i->...", V, V)
        return np.maximum(np.maximum(np.abs(q), np.abs(w)), 1e-12 * vn + 1e-300)

    def _exact_tensor(self, P, V):
        G0 = self.g0(P)
        om = self.omega(P)
        if G0.ndim == 2:
            G0 = np.broadcast_to(G0, np.asarray(V).shape + (self.dim,))
        if om.ndim == 1:
            om = np.broadcast_to(om, np.asarray(V).shape)
        q, w = self._parts(P, V)
        bb = self.exponent
        L = q ** (1 - bb) * w ** (2 * bb)
        dq = -2.0 * _mv(G0, V)
        u = (1 - bb) * dq / q[..., None] + 2 * bb * om / w[..., None]
        d2 = _outer(u, u) \
            + (1 - bb) * (-2.0) * G0 / q[..., None, None] \
            - (1 - bb) * _outer(dq, dq) / (q**2)[..., None, None] \
            - 2 * bb * _outer(om, om) / (w**2)[..., None, None]
        return 0.5 * L[..., None, None] * d2


class KosteleckyMetric(MetricModel):
    """Lorentz-violation dispersion metric over a constant Minkowski background.

    F = m*sqrt(-g0(v,v)) + g0(v,a) + branch*sqrt(g0(v,b)^2 - g0(b,b)*g0(v,v)),
    restricted to the future timelike component (v^0 > 0).
    """

    family = "kostelecky"
    positive_definite = False

    def __init__(self, chart, a, b, mass=1.0, branch=+1, derivative_mode="exact"):
        super().__init__(chart, derivative_mode)
        n = chart.dim
        self.g0 = np.diag([-1.0] + [1.0] * (n - 1))
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.a.shape != (n,) or self.b.shape != (n,):
            raise ValueError("a and b must be constant vectors of chart dimension")
        self.mass = float(mass)
        self.branch = float(np.sign(branch) or 1.0)

    def _parts(self, V):
        V = np.asarray(V, dtype=float)
        q = -np.einsum("ij,...i,...j->...", self.g0, V, V)
        va = np.einsum("ij,...i,j->...", self.g0, V, self.a)
        vb = np.einsum("ij,...i,j->...", self.g0, V, self.b)
        bb = float(self.b @ self.g0 @ self.b)
        r = vb**2 - bb * (-q)
        return q, va, vb, bb, r

    def _F(self, P, V):
        q, va, _, _, r = self._parts(V)
        with np.errstate(invalid="ignore"):
            root_q = np.sqrt(np.maximum(q, 0.0))
            root_r = np.sqrt(np.maximum(r, 0.0))
            F = self.mass * root_q + va + self.branch * root_r
        return np.where(q >= 0, F, np.nan)

    def _margin(self, P, V):
        V = np.asarray(V, dtype=float)
        q, _, _, _, _ = self._parts(V)
        future = V[..., 0] > 0
        # past component excluded: report a nonpositive margin there
        vn = np.einsum("...i,...i->...", V, V)
        return np.where(future, q, -np.maximum(np.abs(q), 1e-12 * vn))

    def _degenerate_flag(self, P, V):
        q, va, _, _, _ = self._parts(V)
        expr = self.mass * np.sqrt(np.maximum(q, 0.0)) + va
        vn = np.einsum("...i,...i->...", np.asarray(V, dtype=float), np.asarray(V, dtype=float))
        return np.abs(expr) <= 1e-6 * np.sqrt(np.maximum(vn, 1e-300))

    def _exact_tensor(self, P, V):
        V = np.asarray(V, dtype=float)
        q, va, vb, bb, r = self._parts(V)
        G0 = np.broadcast_to(self.g0, V.shape + (self.dim,))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            root_q = np.sqrt(np.maximum(q, 1e-300))
            dq = -2.0 * _mv(G0, V)
            d_rootq = dq / (2.0 * root_q[..., None])
            d2_rootq = -G0 / root_q[..., None, None] \
                - _outer(dq, dq) / (4.0 * (root_q**3)[..., None, None])
            Bf = self.g0 @ self.b
            Bf = np.broadcast_to(Bf, V.shape)
            F = self.mass * root_q + va
            dF = self.mass * d_rootq + np.broadcast_to(self.g0 @ self.a, V.shape)
            d2F = self.mass * d2_rootq
            if bb != 0.0 or np.any(np.abs(vb) > 0):
                root_r = np.sqrt(np.maximum(r, 1e-300))
                dr = 2.0 * vb[..., None] * Bf - 2.0 * bb * _mv(G0, V)
                d2r = 2.0 * _outer(Bf, Bf) - 2.0 * bb * G0
                F = F + self.branch * root_r
                dF = dF + self.branch * dr / (2.0 * root_r[..., None])
                d2F = d2F + self.branch * (d2r / (2.0 * root_r[..., None, None])
                                           - _outer(dr, dr) / (4.0 * (root_r**3)[..., None, None]))
            return _outer(dF, dF) + F[..., None, None] * d2F


class TabulatedMetric(MetricModel):
    """L supplied directly as a callable or an interpolated direction table.

    The callable signature is L(P, V) -> (...); admissibility defaults to
    L >= 0 and finite.  Derivatives are always finite-difference: tables
    smooth over cells, so Hessians of interpolants are only indicative.
    """

    family = "tabulated"

    def __init__(self, chart, L_func: Callable, margin_func: Optional[Callable] = None,
                 positive_definite: bool = True):
        super().__init__(chart, derivative_mode="fd")
        self._L_func = L_func
        self._margin_func = margin_func
        self.positive_definite = positive_definite

    @classmethod
    def from_direction_table(cls, chart, axes, L_values, **kw):
        """Table of L over a rectangular grid in velocity space (position
        independent); multilinear interpolation in between."""
        table = GridField(axes, L_values)

        def L_func(P, V):
            return table(np.asarray(V, dtype=float))

        return cls(chart, L_func, **kw)

    def _L_raw(self, P, V):
        return np.asarray(self._L_func(np.asarray(P, dtype=float),
                                       np.asarray(V, dtype=float)), dtype=float)

    def _F(self, P, V):
        L = self._L_raw(P, V)
        with np.errstate(invalid="ignore"):
            return np.sqrt(np.maximum(L, 0.0)) * np.where(L >= 0, 1.0, np.nan)

    def _margin(self, P, V):
        if self._margin_func is not None:
            return np.asarray(self._margin_func(np.asarray(P, dtype=float),
                                                np.asarray(V, dtype=float)), dtype=float)
        L = self._L_raw(P, V)
        return np.where(np.isfinite(L), L, -np.inf)

    def L_values(self, P, V):
        # report the raw table value (may violate homogeneity; that is the point)
        return self._L_raw(P, V)

    def evaluate(self, s: TangentSample):
        self._check_sample(s)
        verdict = self.classify_domain(s)
        if verdict.classification == "outside":
            raise OutsideDomain("vector outside the tabulated domain")
        L = float(self._L_raw(s.point[None, :], s.vector[None, :])[0])
        return L, float(np.sqrt(max(L, 0.0)))


class _NegatedField:
    """View of a covector/vector field with flipped sign."""

    def __init__(self, base):
        self.base = base
        self.shape = base.shape

    def __call__(self, points):
        return -self.base(points)

    def jacobian(self, points):
        return -self.base.jacobian(points)

    def to_json(self):
        spec = self.base.to_json()
        if spec["type"] == "constant":
            return {"type": "constant", "value": (-np.asarray(spec["value"])).tolist()}
        if spec["type"] == "expr":
            def neg(a):
                return [neg(x) for x in a] if isinstance(a, list) else f"-({a})"
            return {"type": "expr", "entries": neg(spec["entries"])}
        spec = dict(spec)
        spec["values"] = (-np.asarray(spec["values"])).tolist()
        return spec


# -- module-level operation wrappers ------------------------------------------

def evaluate(model: MetricModel, s: TangentSample):
    """(L, F) at a tangent sample."""
    return model.evaluate(s)


def classify_domain(model: MetricModel, s: TangentSample) -> DomainVerdict:
    return model.classify_domain(s)


def check_homogeneity(model: MetricModel, s: TangentSample, scales) -> float:
    return model.check_homogeneity(s, scales)
