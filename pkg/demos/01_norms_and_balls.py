"""Norms, Euclidean sandwiching, ball sampling and Lipschitz estimation.

Every experiment in this package lives on a finite-dimensional normed
space.  This script walks through the two supported norm families, the
tight two-sided comparison with the Euclidean norm, uniform sampling of
balls, and the lattice-based Lipschitz estimator.
"""

import numpy as np

from affinescope.geometry import (
    Ball,
    NormSpec,
    euclid_sandwich,
    from_callable,
    john_scaled,
    lipschitz_estimate,
    norm_eval,
    sample_ball,
)

print("== norm families ==")
l1 = NormSpec("lp", 2, p=1)
linf = NormSpec("lp", 2, p=np.inf)
ell = NormSpec("ellipsoid", 2, matrix=np.array([[2.0, 0.3], [0.3, 1.0]]))
x = np.array([3.0, -4.0])
for spec, label in [(l1, "l1"), (linf, "linf"), (ell, "ellipsoid")]:
    print(f"  ||(3,-4)||_{label} = {norm_eval(spec, x):.4f}")

print("\n== Euclidean sandwich c_low ||x||_2 <= ||x|| <= c_high ||x||_2 ==")
for spec, label in [(l1, "l1, n=2"), (linf, "linf, n=2"), (ell, "ellipsoid")]:
    lo, hi = euclid_sandwich(spec)
    print(f"  {label}: c_low = {lo:.4f}, c_high = {hi:.4f}")

print("\nAfter rescaling to the normalized position (c_low = 1):")
for spec, label in [(l1, "l1"), (linf, "linf"), (ell, "ellipsoid")]:
    lo, hi = euclid_sandwich(john_scaled(spec))
    note = "" if hi <= np.sqrt(2) + 1e-12 else "  (exceeds sqrt(n): reported as-is)"
    print(f"  {label}: ({lo:.4f}, {hi:.4f}){note}")

print("\n== uniform sampling in balls ==")
ball = Ball(np.zeros(2), 1.0, l1)
pts = sample_ball(ball, 50_000, seed=1)
inside = (norm_eval(l1, pts) <= 1.0 + 1e-12).mean()
print(f"  50k samples of the l1 ball: containment rate {inside:.4f}")
print(f"  empirical mean (should be ~0): {pts.mean(axis=0)}")

print("\n== Lipschitz estimation on a lattice ==")
saw = from_callable(lambda p: np.abs(np.mod(p[:, 0], 2.0) - 1.0), [-1], [1], 2**7 + 1)
for spec, label in [(NormSpec("lp", 1, p=2), "euclidean")]:
    print(f"  sawtooth-like tent, {label} metric: Lip = "
          f"{lipschitz_estimate(saw, spec):.6f} (exact value 1)")

g = from_callable(lambda p: p[:, 0] + p[:, 1], [-1, -1], [1, 1], 33)
print(f"  f(x,y) = x + y under l2: Lip = {lipschitz_estimate(g, NormSpec('lp', 2, p=2)):.6f}"
      f" (true sqrt(2) = {np.sqrt(2):.6f})")
print(f"  f(x,y) = x + y under l1: Lip = {lipschitz_estimate(g, NormSpec('lp', 2, p=1)):.6f}"
      f" (true 1)")
