"""From space to spacetime: lifts, causal characters, temporal functions.

A stationary spacetime over a plane: unit-speed travel-time geodesics lift
to lightlike spacetime curves, spacetime vectors classify by comparing the
time component against the travel-time cost of the spatial part, and a
candidate time function verifies as temporal on sampled causal vectors.
"""

import numpy as np

from finsler import (
    box_chart,
    build_stationary,
    classify_vector,
    integrate_geodesic,
    lift,
    sample_causal_vectors,
    verify_temporal,
)

rng = np.random.default_rng(3)
chart = box_chart((-2.0, 2.0), (-2.0, 2.0))
sm = build_stationary(
    chart,
    {"type": "expr", "entries": [["1 + 0.2*sin(x1)", "0"], ["0", "1 + 0.2*cos(x0)"]]},
    {"type": "expr", "entries": ["0.3*cos(x1)", "0.2*sin(x0)"]})

print("== Lightlike lift of a travel-time geodesic ==")
p = np.array([-0.5, 0.3])
d = np.array([1.0, 0.4])
F0 = float(sm.fermat.F_values(p[None, :], d[None, :])[0])
geo = integrate_geodesic(sm.fermat, p, d / F0, 1.0)
curve = lift(sm, geo, sign=+1)
print(f"samples on the lift: {len(curve.params)}")
print(f"max |g_L(gamma', gamma')| along the lift: {curve.max_nullity:.3e}")
print(f"every sample lightlike: {all(c == 'lightlike' for c in curve.characters)}")

print("\n== Causal characters of spacetime vectors ==")
x = np.zeros(2)
for v in [np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.9, 0.0]),
          np.array([0.2, 1.0, 0.0])]:
    cls = classify_vector(sm, x, v)
    print(f"(vt, vx) = {v}: {cls.kind:9s}  time margin {cls.time_margin:+.4f}  "
          f"g_L = {cls.gL:+.4f}")

print("\n== Verifying temporal functions on sampled causal vectors ==")
samples = sample_causal_vectors(sm, rng, 400)
for tau in ("x0", "x1", "x0 + 0.05*sin(x1)"):
    report = verify_temporal(sm, tau, samples)
    word = "temporal" if report.temporal else "NOT temporal"
    print(f"tau = {tau:20s} min d(tau)(v) = {report.min_value:+.5f}  -> {word}")
