"""Fundamental tensors: vertical Hessians, signatures, cone diagnostics.

The fundamental tensor at a direction v is the Hessian of L/2 in the
vector slot.  Exact mode uses the family closed forms; finite-difference
mode uses central second differences with one Richardson refinement, step
max(1e-4, 1e-4*|v|).  Signatures come from a symmetric eigendecomposition
with a relative zero tolerance of 1e-9.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation, OutsideDomain
from .metrics import BOUNDARY_BAND_REL, MetricModel, TangentSample

ZERO_EIG_REL = 1e-9
# eigenvalues within this factor of the zero tolerance get the near-degenerate flag
NEAR_DEGENERATE_FACTOR = 10.0
HESSIAN_IDENTITY_RTOL = 1e-6


@dataclass(frozen=True)
class FundamentalTensor:
    """Vertical Hessian of L/2 at one sample, with its signature."""

    sample: TangentSample
    matrix: np.ndarray
    n_plus: int
    n_minus: int
    n_zero: int
    zero_tol: float
    near_degenerate: bool = False

    @property
    def signature(self):
        return (self.n_plus, self.n_minus, self.n_zero)


def signature_of(matrix, zero_rel: float = ZERO_EIG_REL):
    """(n_plus, n_minus, n_zero, zero_tol, near_degenerate) of a symmetric matrix."""
    eig = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    scale = float(np.max(np.abs(eig))) if eig.size else 0.0
    tol = zero_rel * max(scale, 1e-300)
    n_zero = int(np.sum(np.abs(eig) <= tol))
    n_plus = int(np.sum(eig > tol))
    n_minus = int(np.sum(eig < -tol))
    near = bool(np.any((np.abs(eig) > tol) & (np.abs(eig) <= NEAR_DEGENERATE_FACTOR * tol)))
    return n_plus, n_minus, n_zero, tol, near


def fd_step(V):
    V = np.asarray(V, dtype=float)
    vnorm = np.sqrt(np.einsum("...i,...i->...", V, V))
    return np.maximum(1e-4, 1e-4 * vnorm)


def hessian_fd_batch(model: MetricModel, P, V, richardson: bool = True):
    """Central-difference Hessians of L/2 in the vector slot, batched.

    One Richardson level combines steps h and h/2 to cancel the leading
    O(h^2) truncation term.
    """
    P = np.asarray(P, dtype=float)
    V = np.asarray(V, dtype=float)
    n = V.shape[-1]
    h = fd_step(V)

    def second_diff(step):
        L = lambda W: model.L_values(P, W)
        out = np.empty(V.shape[:-1] + (n, n))
        eye = np.eye(n)
        L0 = L(V)
        for i in range(n):
            ei = eye[i] * step[..., None]
            out[..., i, i] = (L(V + 2 * ei) - 2 * L0 + L(V - 2 * ei)) / (4 * step**2)
            for j in range(i + 1, n):
                ej = eye[j] * step[..., None]
                mixed = (L(V + ei + ej) - L(V + ei - ej)
                         - L(V - ei + ej) + L(V - ei - ej)) / (4 * step**2)
                out[..., i, j] = mixed
                out[..., j, i] = mixed
        return out

    if richardson:
        coarse = second_diff(h)
        fine = second_diff(0.5 * h)
        hess = (4.0 * fine - coarse) / 3.0
    else:
        hess = second_diff(h)
    return 0.5 * hess


def tensor_batch(model: MetricModel, P, V, mode: str | None = None):
    """Fundamental tensors for a batch of samples, shape (..., n, n)."""
    mode = mode or model.derivative_mode
    if mode == "exact":
        exact = model._exact_tensor(np.asarray(P, dtype=float), np.asarray(V, dtype=float))
        if exact is not None:
            return exact
    return hessian_fd_batch(model, P, V)


def fundamental_tensor(model: MetricModel, s: TangentSample,
                       mode: str | None = None) -> FundamentalTensor:
    """Fundamental tensor at one sample; asserts g_v(v, v) = L(v).

    Near-degenerate spectra are flagged on the result, not raised: a zero
    eigenvalue is a finding for cone diagnostics, not a failure.
    """
    model._check_sample(s)
    verdict = model.classify_domain(s)
    if verdict.classification == "outside":
        raise OutsideDomain(f"sample outside the {model.family} domain")
    P = s.point[None, :]
    V = s.vector[None, :]
    g = np.asarray(tensor_batch(model, P, V, mode))[0]
    g = 0.5 * (g + g.T)
    L, _ = model.evaluate(s)
    quad = float(s.vector @ g @ s.vector)
    scale = max(abs(L), float(np.max(np.abs(g))) * float(s.vector @ s.vector), 1e-300)
    if verdict.classification == "interior" and abs(quad - L) > HESSIAN_IDENTITY_RTOL * scale:
        raise InvariantViolation(
            f"homogeneity identity g_v(v,v)=L(v) violated: {quad!r} vs {L!r}", sample=s)
    n_plus, n_minus, n_zero, tol, near = signature_of(g)
    return FundamentalTensor(s, g, n_plus, n_minus, n_zero, tol, near)


@dataclass
class ConeCheckRecord:
    """Cone-structure diagnostics at one base point."""

    point: np.ndarray
    convexity_violations: int = 0
    boundary_L_max: float = np.nan
    interior_signatures_ok: bool = True
    boundary_signatures_ok: bool = True
    bad_samples: list = field(default_factory=list)


@dataclass
class SpacetimeConditionReport:
    records: list
    expected_signature: tuple
    passed: bool


def _boundary_direction(model, p, v_in, v_out, iters=60):
    """Bisect between an admissible and an inadmissible direction."""
    lo, hi = v_in.copy(), v_out.copy()
    P = p[None, :]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if model.margin_values(P, mid[None, :])[0] >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def verify_spacetime_conditions(model: MetricModel, samples, boundary_tol=1e-5):
    """Probe the cone-structure conditions on a set of tangent samples.

    samples: iterable of TangentSample, mixing interior and near-boundary
    directions at each base point.  Violations are findings in the report,
    never exceptions.  The expected interior/boundary signature has index
    n-1: one positive eigenvalue (the cone direction, since g_v(v,v) = L > 0)
    and n-1 negative ones, as in the classical case L = -g(v,v).
    """
    n = model.dim
    expected = (1, n - 1, 0)
    by_point = {}
    for s in samples:
        by_point.setdefault(tuple(np.round(s.point, 12)), []).append(s)

    records = []
    for key, group in by_point.items():
        p = np.asarray(key, dtype=float)
        P = p[None, :]
        rec = ConeCheckRecord(point=p)
        vecs = [s.vector for s in group]
        margins = [float(model.margin_values(P, v[None, :])[0]) for v in vecs]
        interior = [v for v, m in zip(vecs, margins) if m > 0]
        exterior = [v for v, m in zip(vecs, margins) if m < 0]

        # (i) fiberwise convexity probed by midpoints of admissible pairs
        for i in range(len(interior)):
            for j in range(i + 1, len(interior)):
                mid = 0.5 * (interior[i] + interior[j])
                if model.margin_values(P, mid[None, :])[0] < 0:
                    rec.convexity_violations += 1
                    rec.bad_samples.append(("convexity", interior[i], interior[j]))

        # (ii)+(iii) L -> 0 along directions approaching the cone boundary
        worst_boundary_L = 0.0
        for v_in in interior:
            for v_out in exterior:
                vb = _boundary_direction(model, p, np.asarray(v_in), np.asarray(v_out))
                Lb = float(model.L_values(P, vb[None, :])[0])
                if np.isfinite(Lb):
                    scale = max(float(model.L_values(P, np.asarray(v_in)[None, :])[0]), 1e-300)
                    worst_boundary_L = max(worst_boundary_L, abs(Lb) / scale)
                # (iv) on the boundary, under the smooth closed-form extension
                try:
                    g = np.asarray(tensor_batch(model, P, vb[None, :]))[0]
                    sig = signature_of(g)[:3]
                    if sig != expected:
                        rec.boundary_signatures_ok = False
                        rec.bad_samples.append(("boundary-signature", vb, sig))
                except (FloatingPointError, np.linalg.LinAlgError):
                    rec.boundary_signatures_ok = False
        rec.boundary_L_max = worst_boundary_L if (interior and exterior) else np.nan

        # (iv) interior signatures
        for v in interior:
            g = np.asarray(tensor_batch(model, P, np.asarray(v)[None, :]))[0]
            sig = signature_of(g)[:3]
            if sig != expected:
                rec.interior_signatures_ok = False
                rec.bad_samples.append(("interior-signature", np.asarray(v), sig))
        records.append(rec)

    passed = all(r.convexity_violations == 0 and r.interior_signatures_ok
                 and r.boundary_signatures_ok
                 and (np.isnan(r.boundary_L_max) or r.boundary_L_max < boundary_tol)
                 for r in records)
    return SpacetimeConditionReport(records=records, expected_signature=expected,
                                    passed=passed)
