"""Spectral multipliers and seminorms on periodic grids.

Boxes are treated as tori; the frequency lattice carries angular
frequencies 2*pi*k/L so that symbol values on lattice plane waves are
exact rationals times powers of 2*pi.  Provided symbols: fractional
Laplacian ||xi||^s, Riesz transforms i xi_j / ||xi||, the heat semigroup
exp(-t ||xi||^2), the directional power |xi_1|^a / ||xi||^a, and a family
of one-dimensional dyadic bump multipliers.

The bump family:

    phi(x)   = exp(-1/((|x|-1/2)(2-|x|)))   on 1/2 < |x| < 2, else 0
    psi_k(x) = phi(2^k x) / sum_j phi(2^j x)     (partition of unity)
    omega_k  = psi_{k-1} + psi_k + psi_{k+1}     (omega_k psi_k = psi_k)
    theta_k(x) = sin^4(2^k x) / (2^k x)^2        (long-tailed pseudo-bump)

The lacunary sum in psi_k has at most three nonzero terms at any x != 0
and is summed exactly.  Symbols that are 0/0 at the zero frequency
(riesz, m_a, psi/omega) are set to 0 there: every consistent extension
used by the seminorms annihilates constants.

Seminorms: first-order Sobolev (sum of L_p norms of the partials by
centered differences), the fractional Gagliardo double sum with a
closed-form near-diagonal correction, and the Riesz-potential seminorm
||(-Delta)^{s/2} f||_p computed spectrally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .geometry import GridFunction, target_norm, unit_ball_volume
from .quadrature import _unit_directions

__all__ = [
    "bump_eval",
    "SpectralField",
    "MultiplierSpec",
    "apply_multiplier",
    "sobolev_W1",
    "sobolev_Wsp",
    "riesz_Hsp",
    "beta_identity_check",
    "lp_randomized_square_function",
]


# ---------------------------------------------------------------------------
# bump functions
# ---------------------------------------------------------------------------


def _phi(x: np.ndarray) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    inside = (x > 0.5) & (x < 2.0)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / ((xi - 0.5) * (2.0 - xi)))
    return out


def _psi(k: int, x: np.ndarray) -> np.ndarray:
    """phi(2^k x) normalized by the lacunary sum (exact: <= 3 nonzero terms)."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.zeros_like(ax)
    nz = ax > 0
    if not nz.any():
        return out
    a = ax[nz]
    j0 = np.floor(-np.log2(a)).astype(int)
    den = np.zeros_like(a)
    for dj in (-1, 0, 1, 2):
        den += _phi(a * np.exp2(j0 + dj))
    num = _phi(a * 2.0**k)
    out[nz] = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return out


def _theta(k: int, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = x * 2.0**k
    out = np.zeros_like(y)
    nz = y != 0
    out[nz] = np.sin(y[nz]) ** 4 / y[nz] ** 2
    return out


def bump_eval(kind: str, k: int, x) -> np.ndarray | float:
    """Evaluate one of the bump families at x (scalar or array).

    psi and omega require x != 0 (the normalizing sum vanishes there);
    theta_k(0) is 0 by continuity.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if kind in ("psi", "omega") and np.any(x == 0):
        raise ValueError(f"{kind} is undefined at x = 0")
    if kind == "phi":
        out = _phi(x * 2.0**k) if k else _phi(x)
    elif kind == "psi":
        out = _psi(k, x)
    elif kind == "omega":
        out = _psi(k - 1, x) + _psi(k, x) + _psi(k + 1, x)
    elif kind == "theta":
        out = _theta(k, x)
    else:
        raise ValueError(f"unknown bump kind {kind!r}")
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# spectral fields
# ---------------------------------------------------------------------------


@dataclass
class SpectralField:
    """Fourier coefficients of an R^m-valued function on the torus box.

    ``coeffs`` has shape (res_1, ..., res_n, m); axis frequencies are the
    angular 2*pi*k/L_i lattice (numpy fft ordering).
    """

    lo: np.ndarray
    hi: np.ndarray
    coeffs: np.ndarray
    q: float = 2.0

    def __post_init__(self):
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != len(self.lo) + 1:
            raise ValueError("coeffs shape must be (*resolution, m)")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def m(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def resolution(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def lengths(self) -> np.ndarray:
        return self.hi - self.lo

    def freq_axes(self) -> list[np.ndarray]:
        return [
            2 * np.pi * np.fft.fftfreq(r, d=L / r)
            for r, L in zip(self.resolution, self.lengths)
        ]

    def freq_norm(self) -> np.ndarray:
        grids = np.meshgrid(*self.freq_axes(), indexing="ij")
        return np.sqrt(sum(g * g for g in grids))

    def values(self) -> np.ndarray:
        return np.fft.ifftn(self.coeffs, axes=tuple(range(self.dim)))

    @staticmethod
    def from_values(lo, hi, values, q: float = 2.0) -> "SpectralField":
        values = np.asarray(values)
        if values.ndim == len(np.atleast_1d(np.asarray(lo, dtype=float))):
            values = values[..., None]
        n = values.ndim - 1
        coeffs = np.fft.fftn(values, axes=tuple(range(n)))
        return SpectralField(lo, hi, coeffs, q=q)

    @staticmethod
    def from_grid(f: GridFunction) -> "SpectralField":
        # closed-box lattices duplicate the periodic endpoint; drop it
        sl = tuple(slice(0, r - 1) for r in f.resolution)
        return SpectralField.from_values(f.lo, f.hi, f.values[sl], q=f.q)

    def to_grid(self) -> GridFunction:
        out = self.values().real
        for ax in range(self.dim):
            first = np.take(out, [0], axis=ax)
            out = np.concatenate([out, first], axis=ax)
        return GridFunction(self.lo, self.hi, out, q=self.q)

    def lp_norm(self, p: float) -> float:
        """L_p norm over the torus (uniform cells; exact for band-limited fields)."""
        mags = target_norm(np.abs(self.values()), self.q)
        if np.isinf(p):
            return float(mags.max())
        cell = float(np.prod(self.lengths / np.array(self.resolution)))
        return float((cell * (mags**p).sum()) ** (1.0 / p))


@dataclass(frozen=True)
class MultiplierSpec:
    """A pointwise Fourier symbol: family plus parameters.

    Families: frac_laplacian(s), riesz(axis), heat(t), m_a(a), and
    bump(kind, k, axis) applying a 1-D bump to one axis frequency.
    """

    family: str
    params: tuple = ()

    def __init__(self, family: str, params: dict | tuple = ()):
        object.__setattr__(self, "family", family)
        if isinstance(params, dict):
            params = tuple(sorted(params.items()))
        object.__setattr__(self, "params", tuple(params))
        prm = self.pdict
        if family == "frac_laplacian":
            if not prm.get("s", 0.0) >= 0:
                raise ValueError("frac_laplacian needs s >= 0")
        elif family == "riesz":
            if "axis" not in prm:
                raise ValueError("riesz needs an axis")
        elif family == "heat":
            if not prm.get("t", -1.0) >= 0:
                raise ValueError("heat needs t >= 0")
        elif family == "m_a":
            if not 0 < prm.get("a", 0) <= 2:
                raise ValueError("m_a needs a in (0, 2]")
        elif family == "bump":
            if prm.get("kind") not in ("psi", "omega", "theta"):
                raise ValueError("bump kind must be psi, omega or theta")
        else:
            raise ValueError(f"unknown multiplier family {family!r}")

    @property
    def pdict(self) -> dict:
        return dict(self.params)

    def to_json(self) -> dict:
        return {"family": self.family, "params": self.pdict}

    @staticmethod
    def from_json(d: dict) -> "MultiplierSpec":
        return MultiplierSpec(d["family"], dict(d.get("params", {})))

    def symbol(self, fld: SpectralField) -> np.ndarray:
        fam, prm = self.family, self.pdict
        if fam == "frac_laplacian":
            s = float(prm["s"])
            r = fld.freq_norm()
            if s == 0:
                return np.ones_like(r)
            sym = np.zeros_like(r)
            nz = r > 0
            sym[nz] = r[nz] ** s
            return sym
        if fam == "riesz":
            axis = int(prm["axis"])
            grids = np.meshgrid(*fld.freq_axes(), indexing="ij")
            r = np.sqrt(sum(g * g for g in grids))
            sym = np.zeros_like(r, dtype=complex)
            nz = r > 0
            sym[nz] = 1j * grids[axis][nz] / r[nz]
            return sym
        if fam == "heat":
            t = float(prm["t"])
            r = fld.freq_norm()
            return np.exp(-t * r * r)
        if fam == "m_a":
            a = float(prm["a"])
            grids = np.meshgrid(*fld.freq_axes(), indexing="ij")
            r2 = sum(g * g for g in grids)
            sym = np.zeros_like(r2)
            nz = r2 > 0
            sym[nz] = np.abs(grids[0][nz]) ** a / r2[nz] ** (a / 2.0)
            return sym
        kind, k, axis = prm["kind"], int(prm.get("k", 0)), int(prm.get("axis", 0))
        grids = np.meshgrid(*fld.freq_axes(), indexing="ij")
        flat = grids[axis].ravel()
        if kind == "theta":
            sym = _theta(k, flat)
        else:
            sym = np.zeros_like(flat)
            nz = flat != 0
            if kind == "psi":
                sym[nz] = _psi(k, flat[nz])
            else:
                sym[nz] = _psi(k - 1, flat[nz]) + _psi(k, flat[nz]) + _psi(k + 1, flat[nz])
        return sym.reshape(grids[axis].shape)


def apply_multiplier(fld: SpectralField, spec: MultiplierSpec) -> SpectralField:
    """Coefficient-wise product with the symbol on the frequency lattice."""
    sym = spec.symbol(fld)
    return SpectralField(fld.lo, fld.hi, fld.coeffs * sym[..., None], q=fld.q)


# ---------------------------------------------------------------------------
# seminorms
# ---------------------------------------------------------------------------


def _trapezoid_weights(f: GridFunction) -> np.ndarray:
    w = np.ones(f.resolution)
    for ax, (r, h) in enumerate(zip(f.resolution, f.steps)):
        wa = np.full(r, h)
        wa[0] = wa[-1] = h / 2
        shape = [1] * f.dim
        shape[ax] = r
        w = w * wa.reshape(shape)
    return w


def _partials(f: GridFunction) -> list[np.ndarray]:
    axes = f.axes
    return [np.gradient(f.values, axes[ax], axis=ax, edge_order=2) for ax in range(f.dim)]


def sobolev_W1(f: GridFunction, p: float) -> float:
    """First-order Sobolev seminorm: sum_j ||df/dx_j||_{L_p(box)}.

    Partials by centered differences (second-order one-sided at the
    boundary), L_p by trapezoidal lattice quadrature.
    """
    if np.isinf(p):
        raise ValueError("p must be finite")
    w = _trapezoid_weights(f)
    total = 0.0
    for d in _partials(f):
        mags = target_norm(d, f.q)
        total += float((w * mags**p).sum() ** (1.0 / p))
    return total


def _sphere_directional_factor(jac: np.ndarray, q: float, p: float) -> np.ndarray:
    """int_{S^{n-1}} ||J d||_q^p dsigma(d) for a batch of Jacobians (N, m, n)."""
    n = jac.shape[-1]
    if n == 1:
        return 2.0 * target_norm(jac[..., 0], q) ** p
    if n == 2:
        t = (np.arange(64) + 0.5) * (2 * np.pi / 64)
        d = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        d = np.asarray(_unit_directions(n, 256, 99))
    vals = target_norm(np.einsum("Nmn,dn->Ndm", jac, d), q) ** p
    surface = n * unit_ball_volume(n)
    return vals.mean(axis=1) * surface


def sobolev_Wsp(f: GridFunction, s: float, p: float) -> float:
    """Fractional Gagliardo seminorm by a double lattice sum.

    Pairs closer than the lattice step are replaced by the local-slope
    integral over the excluded ball, closed-form in the radius:
    int_{||h||<delta} ||J h||^p / ||h||^{n+ps} dh
      = [int_{S^{n-1}} ||J d||^p dsigma] * delta^{p(1-s)} / (p(1-s)).
    Without the correction the s -> 1 divergence is underestimated.
    """
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    if np.isinf(p):
        raise ValueError("p must be finite")
    n = f.dim
    pts = f.lattice_points()
    vals = f.values.reshape(-1, f.m)
    w = _trapezoid_weights(f).ravel()
    delta = float(f.steps.min())
    total = 0.0
    chunk = max(1, int(2e7) // max(len(pts), 1))
    for start in range(0, len(pts), chunk):
        sl = slice(start, start + chunk)
        d = np.linalg.norm(pts[sl, None, :] - pts[None, :, :], axis=-1)
        num = target_norm(vals[sl, None, :] - vals[None, :, :], f.q) ** p
        mask = d >= delta * (1 - 1e-12)
        ratio = np.where(mask, num, 0.0) / np.where(mask, d, 1.0) ** (n + p * s)
        total += float((w[sl, None] * w[None, :] * ratio).sum())
    jac = np.stack(_partials(f), axis=-1).reshape(-1, f.m, n)
    sph = _sphere_directional_factor(jac, f.q, p)
    total += float((w * sph).sum()) * delta ** (p * (1 - s)) / (p * (1 - s))
    return total ** (1.0 / p)


def support_margin_ok(f: GridFunction, tol: float = 1e-12) -> bool:
    """True when the variation of f keeps a quarter-box margin from every face.

    f must agree with its corner value outside the central half of the box;
    the constant part is exempt (it incurs no wraparound).
    """
    corner = f.values[(0,) * f.dim]
    mags = target_norm(f.values - corner, f.q)
    if mags.max() == 0:
        return True
    idx = np.argwhere(mags > tol * float(mags.max()))
    res = np.array(f.resolution)
    lo_gap = idx.min(axis=0)
    hi_gap = res - 1 - idx.max(axis=0)
    quarter = (res - 1) / 4 - 1e-9
    return bool(np.all(lo_gap >= quarter) and np.all(hi_gap >= quarter))


def riesz_Hsp(f: GridFunction, s: float, p: float) -> float:
    """Riesz-potential seminorm ||(-Delta)^{s/2} f||_{L_p} on the periodized box.

    Requires supp(f) inside the central half of the box (quarter-box margin
    per face) so torus wraparound stays below test tolerances.
    """
    if not support_margin_ok(f):
        raise ValueError("support margin violation: need a quarter-box margin per face")
    fld = SpectralField.from_grid(f)
    out = apply_multiplier(fld, MultiplierSpec("frac_laplacian", {"s": s}))
    return out.lp_norm(p)


# ---------------------------------------------------------------------------
# identities and the randomized square function
# ---------------------------------------------------------------------------


def beta_identity_check(theta: float, alpha: float) -> tuple[float, float]:
    """Both sides of (1+alpha)^{-theta} = sin(pi theta)/pi *
    int_0^1 ds / (s^{1-theta} (1-s)^theta (1+alpha s)).

    The right side uses adaptive quadrature with the algebraic endpoint
    weight s^{theta-1} (1-s)^{-theta} handled exactly by the integrator.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0,1)")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    lhs = (1.0 + alpha) ** (-theta)
    val, err = quad(
        lambda u: 1.0 / (1.0 + alpha * u),
        0.0,
        1.0,
        weight="alg",
        wvar=(theta - 1.0, -theta),
        epsabs=1e-13,
        epsrel=1e-13,
        limit=200,
    )
    if not np.isfinite(val) or err > 1e-6:
        raise RuntimeError(f"quadrature did not converge (err={err:.2e})")
    rhs = np.sin(np.pi * theta) / np.pi * val
    return float(lhs), float(rhs)


def lp_randomized_square_function(
    f: GridFunction,
    p: float,
    J: int,
    trials: int | str = 64,
    seed: int = 0,
    j_start: int | None = None,
) -> dict:
    """Average over random signs of ||sum_j eps_j T_{theta_j} f||_{L_p}^p.

    Bands are theta_{j_start}, ..., theta_{j_start + J - 1}; by default the
    finest band sits at the Nyquist frequency of the field.  ``trials`` may
    be "all" to enumerate every sign pattern (J <= 12).  Returns the
    empirical mean of the p-th power and its ratio to ||f||_{L_p}^p.
    """
    if f.dim != 1:
        raise ValueError("the randomized square function is 1-D only")
    fld = SpectralField.from_grid(f)
    if j_start is None:
        xi_max = float(np.abs(fld.freq_axes()[0]).max())
        j_start = -int(np.ceil(np.log2(max(xi_max, 1e-12))))
    bands = []
    for j in range(j_start, j_start + J):
        sym = MultiplierSpec("bump", {"kind": "theta", "k": j, "axis": 0}).symbol(fld)
        bands.append(fld.coeffs * sym[..., None])
    bands = np.stack(bands)  # (J, res, m)

    if trials == "all":
        if J > 12:
            raise ValueError("full enumeration limited to J <= 12")
        signs = np.array(
            [[1.0 if (t >> j) & 1 else -1.0 for j in range(J)] for t in range(1 << J)]
        )
    else:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 2)))
        signs = rng.choice([-1.0, 1.0], size=(int(trials), J))

    norm_f = fld.lp_norm(p)
    acc = 0.0
    for eps in signs:
        mixed = SpectralField(fld.lo, fld.hi, np.tensordot(eps, bands, axes=(0, 0)), q=f.q)
        acc += mixed.lp_norm(p) ** p
    mean_power = acc / len(signs)
    ratio = mean_power / norm_f**p if norm_f > 0 else 0.0
    return {
        "mean_power": mean_power,
        "ratio": ratio,
        "J": J,
        "j_start": j_start,
        "trials": len(signs),
    }
