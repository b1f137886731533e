"""Tour of the metric families: values, domains, and fundamental tensors.

Walks through each built-in family on a small chart, evaluates the
degree-one value F and its square L, classifies directions against the
conic domain, and inspects signatures of the vertical Hessian.
"""

import numpy as np

from finsler import (
    BogoslovskyMetric,
    KosteleckyMetric,
    MatsumotoMetric,
    RandersMetric,
    RiemannianMetric,
    TangentSample,
    ZermeloMetric,
    box_chart,
    classify_domain,
    evaluate,
    fundamental_tensor,
)

chart = box_chart((-3.0, 3.0), (-3.0, 3.0))
EYE = np.eye(2)
origin = np.zeros(2)

print("== Riemannian baseline ==")
flat = RiemannianMetric(chart, EYE)
L, F = evaluate(flat, TangentSample(origin, (3.0, 4.0)))
print(f"F((3,4)) = {F:.6f} (plain Euclidean norm), L = {L:.6f}")

print("\n== Randers: norm plus a one-form ==")
randers = RandersMetric(chart, EYE, np.array([0.4, 0.0]))
for v in [(1.0, 0.0), (-1.0, 0.0)]:
    _, F = evaluate(randers, TangentSample(origin, v))
    print(f"F({v}) = {F:.6f}")
print("the one-form breaks symmetry: +x costs 1.4, -x costs 0.6")

print("\n== Zermelo navigation: time-optimal travel under a wind ==")
wind = ZermeloMetric(chart, EYE, np.array([0.5, 0.0]))
for v in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0)]:
    _, F = evaluate(wind, TangentSample(origin, v))
    print(f"time-cost of unit step {v}: {F:.6f}")
print("downwind 1/(1+w) = 2/3, upwind 1/(1-w) = 2, crosswind between")

print("\n== Matsumoto slope metric: going up is slower ==")
slope = MatsumotoMetric(chart, EYE, np.array([0.3, 0.0]))
for v in [(1.0, 0.0), (-1.0, 0.0)]:
    verdict = classify_domain(slope, TangentSample(origin, v))
    print(f"direction {v}: {verdict.classification} (margin {verdict.margin:+.4f})")
steep = MatsumotoMetric(chart, EYE, np.array([0.6, 0.0]))
verdict = classify_domain(steep, TangentSample(origin, (1.0, 0.0)))
print(f"steeper slope, straight up: {verdict.classification} "
      f"(margin {verdict.margin:+.4f}) -- the domain is properly conic")

print("\n== Fundamental tensors and signatures ==")
ft = fundamental_tensor(randers, TangentSample(origin, (1.0, 0.2)))
print(f"randers tensor signature {ft.signature} (positive definite)")

g0 = np.diag([-1.0, 1.0])
gvsr = BogoslovskyMetric(chart, g0, np.array([1.0, 0.0]), exponent=0.4)
ft = fundamental_tensor(gvsr, TangentSample(origin, (1.0, 0.3)))
print(f"anisotropic-relativity tensor signature {ft.signature} "
      "(one positive: the cone direction)")

print("\n== Dispersion metric with a degeneracy locus ==")
disp = KosteleckyMetric(chart, a=np.array([0.5, 0.0]), b=np.zeros(2))
for vx in (0.4, np.sqrt(0.75)):
    s = TangentSample(origin, np.array([1.0, vx]))
    verdict = classify_domain(disp, s)
    ft = fundamental_tensor(disp, s)
    print(f"v = (1, {vx:.4f}): degenerate flag {verdict.degenerate}, "
          f"signature {ft.signature}")
print("at vx = sqrt(1 - a0^2) the tensor collapses to rank one")
