"""affinescope: a numerical laboratory for quantitative affine approximation.

Measures how well vector-valued Lipschitz functions on finite-dimensional
normed balls are approximated by affine maps: projection operators and
best-fit oracles, multiscale defect (square-function) integrals, spectral
seminorms that control them, explicit sawtooth counterexamples, searches
for good sub-balls, and brute-force martingale estimates of the Banach
space constants entering the bounds.
"""

__version__ = "0.1.0"

from . import affine, banach, dorronsoro, geometry, harmonic, moduli, quadrature, runner
from .affine import AffineMap, FitReport, affine_projection, ball_mean, best_affine_fit, op_norm
from .geometry import Ball, GridFunction, NormSpec, euclid_sandwich, lipschitz_estimate, norm_eval

__all__ = [
    "affine",
    "banach",
    "dorronsoro",
    "geometry",
    "harmonic",
    "moduli",
    "quadrature",
    "runner",
    "AffineMap",
    "FitReport",
    "Ball",
    "GridFunction",
    "NormSpec",
    "affine_projection",
    "ball_mean",
    "best_affine_fit",
    "op_norm",
    "euclid_sandwich",
    "lipschitz_estimate",
    "norm_eval",
    "__version__",
]
