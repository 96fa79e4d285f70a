"""Dyadic bumps, Fourier multipliers and the seminorms they compute.

Everything here runs on periodized grids with angular frequencies
2*pi*k/L, so symbol values on lattice plane waves are exact.
"""

import numpy as np

from affinescope.geometry import from_callable
from affinescope.harmonic import (
    MultiplierSpec,
    SpectralField,
    apply_multiplier,
    beta_identity_check,
    bump_eval,
    lp_randomized_square_function,
    riesz_Hsp,
    sobolev_W1,
    sobolev_Wsp,
)


def bump(x, width=1.0):
    r = np.clip(np.abs(x / width), 0, 1)
    out = np.zeros_like(r)
    out[r < 1] = np.exp(1 - 1 / (1 - r[r < 1] ** 2))
    return out


print("== the dyadic bump family ==")
x = np.exp(np.linspace(np.log(2.0**-6), np.log(2.0**6), 2000))
total = sum(bump_eval("psi", j, x) for j in range(-8, 9))
print(f"  sum of psi_j over j: max deviation from 1 = {np.abs(total - 1).max():.2e}")
psi0 = bump_eval("psi", 0, x)
om0 = bump_eval("omega", 0, x)
print(f"  omega_0 psi_0 = psi_0: max deviation = {np.abs(om0 * psi0 - psi0).max():.2e}")
print(f"  theta_0(pi/2) = {bump_eval('theta', 0, np.pi / 2):.6f} (= 4/pi^2)")

print("\n== multipliers on a compactly supported bump ==")
f = from_callable(lambda p: bump(p[:, 0]), [-8], [8], 513)
fld = SpectralField.from_grid(f)
heat = apply_multiplier(fld, MultiplierSpec("heat", {"t": 0.5}))
frac = apply_multiplier(fld, MultiplierSpec("frac_laplacian", {"s": 1.0}))
print(f"  ||f||_2 = {fld.lp_norm(2):.5f}")
print(f"  heat semigroup (t=0.5) contracts: ||e^(tL) f||_2 = {heat.lp_norm(2):.5f}")
print(f"  ||(-Laplace)^(1/2) f||_2 = {frac.lp_norm(2):.5f}")

print("\n== seminorms ==")
print(f"  W_1,2 = {sobolev_W1(f, 2):.5f}")
for s in (0.25, 0.5, 0.75):
    w = sobolev_Wsp(f, s, 2)
    h = riesz_Hsp(f, s, 2)
    print(f"  s={s}: Gagliardo W = {w:.5f}, Riesz potential H = {h:.5f}, W/H = {w / h:.3f}")

print("\n== the subordination identity behind the directional multiplier ==")
for theta, alpha in [(0.5, 0.0), (0.5, 3.0), (0.3, 7.0)]:
    lhs, rhs = beta_identity_check(theta, alpha)
    print(f"  theta={theta}, alpha={alpha}: (1+a)^-t = {lhs:.8f}, integral = {rhs:.8f}")

print("\n== randomized square function ==")
out = lp_randomized_square_function(f, 2, J=10, trials="all")
print(f"  J={out['J']} bands, all {out['trials']} sign patterns: "
      f"E||sum eps_j T_j f||^2 / ||f||^2 = {out['ratio']:.4f} (<= 1 for scalar p=2)")
