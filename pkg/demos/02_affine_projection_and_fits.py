"""The degree-1 ball projection and the best-affine-fit oracles.

The projection (mean plus first-moment linear part over a Euclidean
ball) is cheap and reproduces affine maps exactly; the fit oracle
minimizes the true L_p error.  The ratio between "projection error" and
"best error" is the quasi-optimality factor that the multiscale theory
runs on.
"""

import numpy as np

from affinescope.affine import (
    affine_projection,
    ball_mean,
    best_affine_fit,
    moment_linear_map,
    op_norm,
    projection_vs_best_ratio,
)
from affinescope.geometry import Ball, NormSpec, from_callable, lipschitz_estimate

euclid1 = NormSpec("lp", 1, p=2)

print("== projection reproduces affine maps ==")
A = np.array([[1.5, -0.5], [0.25, 2.0]])
f = from_callable(lambda p: p @ A.T, [-2, -2], [2, 2], 9)
lam = affine_projection(f, [0.3, -0.1], 0.7)
print(f"  recovered linear part, max entry error: {np.abs(lam.linear - A).max():.2e}")

print("\n== the tent: mean 1/2, zero linear part ==")
tent = from_callable(lambda p: 1.0 - np.abs(np.mod(p[:, 0] + 1.0, 2.0) - 1.0), [-2], [2], 257)
print(f"  mean over [-1,1]: {ball_mean(tent, [0.0], 1.0)[0]:.6f}")
print(f"  first-moment part: {moment_linear_map(tent, [0.0], 1.0)[0, 0]:.2e}")

print("\n== best fits at several exponents ==")
absf = from_callable(lambda p: np.abs(p[:, 0]), [-1.5], [1.5], 513)
ball = Ball(np.zeros(1), 1.0, euclid1)
for p in (1, 2, np.inf):
    rep = best_affine_fit(absf, ball, p, 2048)
    print(f"  |x| on [-1,1], p={p}: error {rep.error:.6f}, "
          f"map = {rep.map.intercept[0]:.4f} + {rep.map.linear[0,0]:.4f} x")
print("  (the p=inf error of |x| is exactly 1/2, achieved by the constant 1/2)")

print("\n== quasi-optimality ==")
rng = np.random.default_rng(7)
f2 = from_callable(lambda p: np.cos(3 * p[:, 0]) + 0.2 * np.abs(p[:, 0]), [-1.5], [1.5], 513)
for p in (1, 2, 4):
    r = projection_vs_best_ratio(f2, ball, p, 1024)
    print(f"  p={p}: ||f - proj f|| / best error = {r:.4f}")
print("  (p=2 is exactly 1: the projection is the L_2 minimizer)")

print("\n== the linear part is Lipschitz-bounded ==")
vals = rng.normal(size=(9, 9, 1))
from affinescope.geometry import GridFunction

g = GridFunction([-1.5, -1.5], [1.5, 1.5], vals)
for X, label in [(NormSpec("lp", 2, p=1), "l1"), (NormSpec("lp", 2, p=2), "l2"),
                 (NormSpec("lp", 2, p=np.inf), "linf")]:
    T = moment_linear_map(g, [0.0, 0.0], 1.0)
    print(f"  X={label}: ||T||_{{X->R}} = {op_norm(T, X, (1, 2)):.4f} "
          f"<= Lip = {lipschitz_estimate(g, X):.4f}")
