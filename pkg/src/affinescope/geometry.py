"""Norms, balls, grid-sampled functions and Lipschitz estimation.

The domain side of every computation in this package is an n-dimensional
normed space realized either as an l_p space or as an ellipsoid norm
``x -> ||A x||_2`` with A symmetric positive definite.  Both families have
analytically known comparison constants against the Euclidean norm, which
is what the rest of the package relies on (sampling, containment checks,
John-style normalization).  Vector-valued functions are carried on regular
lattices over axis-aligned boxes with multilinear off-lattice evaluation.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator

__all__ = [
    "NormSpec",
    "Ball",
    "GridFunction",
    "norm_eval",
    "euclid_sandwich",
    "john_scaled",
    "sample_ball",
    "lipschitz_estimate",
    "target_norm",
    "unit_ball_volume",
]

_GRID_MAGIC = b"AFSC1"


def unit_ball_volume(n: int) -> float:
    """Volume of the Euclidean unit ball in R^n."""
    from scipy.special import gammaln

    return float(np.exp(n / 2 * np.log(np.pi) - gammaln(n / 2 + 1)))


@dataclass(frozen=True)
class NormSpec:
    """A finite-dimensional norm: l_p family or SPD-ellipsoid norm.

    ``kind`` is "lp" (with exponent ``p`` in [1, inf]) or "ellipsoid"
    (with an SPD ``matrix`` A, norm ||A x||_2).  ``scale`` multiplies the
    norm; it is used by :func:`john_scaled` to move a norm into the
    normalized position where the lower Euclidean comparison constant is 1.
    """

    kind: str
    dim: int
    p: float = 2.0
    matrix: np.ndarray | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("lp", "ellipsoid"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind == "lp":
            if not self.p >= 1:
                raise ValueError("lp exponent must satisfy p >= 1")
        else:
            A = np.asarray(self.matrix, dtype=float)
            if A.shape != (self.dim, self.dim):
                raise ValueError("ellipsoid matrix shape mismatch")
            if not np.allclose(A, A.T, atol=1e-12):
                raise ValueError("ellipsoid matrix must be symmetric")
            if np.linalg.eigvalsh(A).min() <= 0:
                raise ValueError("ellipsoid matrix must be positive definite")
            object.__setattr__(self, "matrix", A)

    def to_json(self) -> dict:
        if self.kind == "lp":
            p = "inf" if np.isinf(self.p) else self.p
            d = {"kind": "lp", "p": p, "dim": self.dim}
        else:
            d = {"kind": "ellipsoid", "matrix": self.matrix.tolist(), "dim": self.dim}
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d

    @staticmethod
    def from_json(d: dict) -> "NormSpec":
        scale = float(d.get("scale", 1.0))
        if d["kind"] == "lp":
            p = d["p"]
            p = np.inf if p in ("inf", "Infinity", None) else float(p)
            return NormSpec("lp", int(d["dim"]), p=p, scale=scale)
        return NormSpec(
            "ellipsoid", int(d["dim"]), matrix=np.asarray(d["matrix"], float), scale=scale
        )


def lp(p: float, dim: int) -> NormSpec:
    return NormSpec("lp", dim, p=p)


def ellipsoid(matrix: np.ndarray) -> NormSpec:
    A = np.asarray(matrix, dtype=float)
    return NormSpec("ellipsoid", A.shape[0], matrix=A)


def norm_eval(spec: NormSpec, x: np.ndarray) -> np.ndarray:
    """Evaluate ||x|| under ``spec``.  ``x`` has shape (..., dim).

    Exact closed forms for both families; p = inf is an exact max-norm.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.dim:
        raise ValueError(f"dimension mismatch: got {x.shape[-1]}, norm has dim {spec.dim}")
    if spec.kind == "lp":
        if np.isinf(spec.p):
            v = np.abs(x).max(axis=-1)
        elif spec.p == 1:
            v = np.abs(x).sum(axis=-1)
        elif spec.p == 2:
            v = np.sqrt((x * x).sum(axis=-1))
        else:
            v = (np.abs(x) ** spec.p).sum(axis=-1) ** (1.0 / spec.p)
    else:
        v = np.sqrt(((x @ spec.matrix.T) ** 2).sum(axis=-1))
    return spec.scale * v


def euclid_sandwich(spec: NormSpec) -> tuple[float, float]:
    """Tight constants (c_low, c_high) with c_low ||x||_2 <= ||x|| <= c_high ||x||_2.

    For l_p with p <= 2: (1, n^{1/p - 1/2}); for p >= 2: (n^{1/p - 1/2}, 1);
    for an ellipsoid norm the extreme singular values of its matrix.
    """
    n = spec.dim
    if spec.kind == "lp":
        if np.isinf(spec.p):
            lo, hi = n ** (-0.5), 1.0
        elif spec.p <= 2:
            lo, hi = 1.0, n ** (1.0 / spec.p - 0.5)
        else:
            lo, hi = n ** (1.0 / spec.p - 0.5), 1.0
    else:
        sv = np.linalg.svd(spec.matrix, compute_uv=False)
        lo, hi = float(sv[-1]), float(sv[0])
    return spec.scale * lo, spec.scale * hi


def john_scaled(spec: NormSpec) -> NormSpec:
    """Rescale the norm so its Euclidean sandwich has c_low = 1.

    For the l_p family the rescaled c_high is at most sqrt(n); eccentric
    ellipsoid norms can exceed sqrt(n), in which case the actual constants
    are simply what :func:`euclid_sandwich` reports on the result.
    """
    lo, _ = euclid_sandwich(spec)
    return replace(spec, scale=spec.scale / lo)


@dataclass(frozen=True)
class Ball:
    """A ball ``center + radius * B`` in the metric of ``norm``."""

    center: np.ndarray
    radius: float
    norm: NormSpec

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if c.shape != (self.norm.dim,):
            raise ValueError("center dimension mismatch")

    def contains(self, pts: np.ndarray, slack: float = 1e-12) -> np.ndarray:
        return norm_eval(self.norm, np.asarray(pts) - self.center) <= self.radius + slack


def _task_rng(seed: int, task: int = 0) -> np.random.Generator:
    # per-task streams derived from (seed, task) so parallel == serial
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), int(task))))


def sample_ball(ball: Ball, count: int, seed: int, task: int = 0) -> np.ndarray:
    """``count`` points uniform in ``ball``, deterministic given (seed, task).

    Euclidean balls use radial-direction sampling.  Other norms use
    rejection from the bounding Euclidean ball given by the sandwich
    constants; an acceptance rate below 1e-6 aborts with a diagnostic.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = _task_rng(seed, task)
    n = ball.norm.dim
    spec = ball.norm
    is_euclid = spec.kind == "lp" and spec.p == 2

    def euclid_points(k, radius):
        g = rng.normal(size=(k, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = radius * rng.random(k) ** (1.0 / n)
        return g * r[:, None]

    if is_euclid:
        pts = euclid_points(count, ball.radius / spec.scale)
        return ball.center + pts

    c_low, _ = euclid_sandwich(spec)
    bound = ball.radius / c_low  # ||x|| <= r implies ||x||_2 <= r / c_low
    out = np.empty((count, n))
    got, drawn = 0, 0
    while got < count:
        k = max(count - got, 64) * 2
        cand = euclid_points(k, bound)
        keep = cand[norm_eval(spec, cand) <= ball.radius]
        take = min(len(keep), count - got)
        out[got : got + take] = keep[:take]
        got += take
        drawn += k
        if drawn > 1e4 and got / drawn < 1e-6:
            raise RuntimeError(
                f"ball rejection sampling acceptance rate {got/drawn:.2e} < 1e-6: "
                "degenerate norm (sandwich constants far apart)"
            )
    return ball.center + out


@dataclass
class GridFunction:
    """A function sampled on a regular lattice over a box, valued in R^m.

    ``values`` has shape (res_1, ..., res_n, m) over the closed box
    [lo_1, hi_1] x ... x [lo_n, hi_n] with ``res_i`` points per axis
    (endpoints included).  ``target`` = (m, q) fixes the l_q^m norm on
    values.  Off-lattice evaluation is multilinear; callers must supply a
    margin so that any queried ball stays inside the box.
    """

    lo: np.ndarray
    hi: np.ndarray
    values: np.ndarray
    q: float = 2.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.lo)
        if self.values.ndim == n:  # scalar field: add target axis
            self.values = self.values[..., None]
        if self.values.ndim != n + 1:
            raise ValueError("values shape must be (*resolution, m)")
        if any(r < 2 for r in self.values.shape[:-1]):
            raise ValueError("resolution must be >= 2 per axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        if not self.q >= 1:
            raise ValueError("target exponent q must be >= 1")
        self._interp = None

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def m(self) -> int:
        return self.values.shape[-1]

    @property
    def resolution(self) -> tuple[int, ...]:
        return self.values.shape[:-1]

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.linspace(self.lo[i], self.hi[i], self.values.shape[i]) for i in range(self.dim)
        )

    @property
    def steps(self) -> np.ndarray:
        return (self.hi - self.lo) / (np.array(self.values.shape[:-1]) - 1)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        """Multilinear interpolation at points of shape (..., n)."""
        if self._interp is None:
            self._interp = RegularGridInterpolator(
                self.axes, self.values, method="linear", bounds_error=True
            )
        pts = np.asarray(pts, dtype=float)
        squeeze = pts.ndim == 1
        if squeeze:
            pts = pts[None, :]
        out = self._interp(pts)
        return out[0] if squeeze else out

    def lattice_points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def dilate(self, lam: float) -> "GridFunction":
        """The function x -> f(lam * x), represented exactly on box / lam."""
        return GridFunction(self.lo / lam, self.hi / lam, self.values.copy(), q=self.q)

    # -- serialization ----------------------------------------------------

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(_GRID_MAGIC)
        n, m = self.dim, self.m
        qcode = -1.0 if np.isinf(self.q) else float(self.q)
        buf.write(struct.pack("<IId", n, m, qcode))
        for i in range(n):
            buf.write(struct.pack("<ddI", self.lo[i], self.hi[i], self.values.shape[i]))
        buf.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        return buf.getvalue()

    @staticmethod
    def from_bytes(data: bytes) -> "GridFunction":
        buf = io.BytesIO(data)
        if buf.read(5) != _GRID_MAGIC:
            raise ValueError("bad magic: not an AFSC1 container")
        n, m, qcode = struct.unpack("<IId", buf.read(16))
        lo, hi, res = np.zeros(n), np.zeros(n), []
        for i in range(n):
            lo[i], hi[i], r = struct.unpack("<ddI", buf.read(20))
            res.append(r)
        count = int(np.prod(res)) * m
        vals = np.frombuffer(buf.read(8 * count), dtype="<f8").reshape(*res, m)
        q = np.inf if qcode < 0 else qcode
        return GridFunction(lo, hi, vals.copy(), q=q)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @staticmethod
    def load(path) -> "GridFunction":
        with open(path, "rb") as fh:
            return GridFunction.from_bytes(fh.read())

    def to_csv(self, path) -> None:
        """Text alternative: header with geometry, then one lattice row per line."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["AFSC1-csv", self.dim, self.m, "inf" if np.isinf(self.q) else self.q])
            for i in range(self.dim):
                w.writerow(["axis", self.lo[i], self.hi[i], self.values.shape[i]])
            w.writerow([f"x{i}" for i in range(self.dim)] + [f"v{j}" for j in range(self.m)])
            pts = self.lattice_points()
            vals = self.values.reshape(-1, self.m)
            for p, v in zip(pts, vals):
                w.writerow([repr(float(c)) for c in p] + [repr(float(c)) for c in v])

    @staticmethod
    def from_csv(path) -> "GridFunction":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        tag, n, m, q = rows[0]
        if tag != "AFSC1-csv":
            raise ValueError("not an AFSC1 csv container")
        n, m = int(n), int(m)
        q = np.inf if q == "inf" else float(q)
        lo, hi, res = np.zeros(n), np.zeros(n), []
        for i in range(n):
            _, a, b, r = rows[1 + i]
            lo[i], hi[i] = float(a), float(b)
            res.append(int(r))
        data = rows[2 + n :]
        vals = np.array([[float(c) for c in row[n:]] for row in data]).reshape(*res, m)
        return GridFunction(lo, hi, vals, q=q)


def target_norm(values: np.ndarray, q: float) -> np.ndarray:
    """l_q norm over the last axis (q = inf exact max-norm)."""
    if np.isinf(q):
        return np.abs(values).max(axis=-1)
    if q == 1:
        return np.abs(values).sum(axis=-1)
    if q == 2:
        return np.sqrt((values * values).sum(axis=-1))
    return (np.abs(values) ** q).sum(axis=-1) ** (1.0 / q)


def from_callable(
    fn, lo, hi, resolution, m: int | None = None, q: float = 2.0, meta: dict | None = None
) -> GridFunction:
    """Sample a vectorized callable onto a lattice.  ``fn`` maps (..., n) -> (..., m)."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    n = len(lo)
    res = [resolution] * n if np.isscalar(resolution) else list(resolution)
    axes = [np.linspace(lo[i], hi[i], res[i]) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=-1)
    vals = np.asarray(fn(pts), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    g = GridFunction(lo, hi, vals.reshape(*res, vals.shape[-1]), q=q)
    if meta:
        g.meta.update(meta)
    return g


def _row_dual_norm(g: np.ndarray, spec: NormSpec) -> np.ndarray:
    """sup of |g . w| over the unit ball of spec, for rows g (..., n): the
    dual-norm evaluation, closed form for every supported family."""
    if spec.kind == "ellipsoid":
        return np.sqrt((np.linalg.solve(spec.matrix, g[..., None])[..., 0] ** 2).sum(-1)) / spec.scale
    p = spec.p
    if p == 1:
        v = np.abs(g).max(axis=-1)
    elif np.isinf(p):
        v = np.abs(g).sum(axis=-1)
    elif p == 2:
        v = np.sqrt((g * g).sum(axis=-1))
    else:
        pd = p / (p - 1.0)
        v = (np.abs(g) ** pd).sum(axis=-1) ** (1.0 / pd)
    return v / spec.scale


def _gradient_sup(f: GridFunction, spec: NormSpec) -> float:
    """Exact Lipschitz constant of the multilinear interpolant for n <= 2
    scalar-per-channel targets: per-cell corner gradients, dual norm of the
    worst channel combination.  Returns 0 when not applicable."""
    h = f.steps
    if f.dim == 1:
        g = np.diff(f.values, axis=0) / h[0]
        return float(_row_dual_norm(target_norm(g, f.q)[..., None], spec).max())
    if f.dim == 2 and f.m == 1:
        gx = np.diff(f.values[..., 0], axis=0) / h[0]  # (R-1, C)
        gy = np.diff(f.values[..., 0], axis=1) / h[1]  # (R, C-1)
        best = 0.0
        for cx in (0, 1):
            for cy in (0, 1):
                J = np.stack(
                    [gx[:, cy : gx.shape[1] - 1 + cy], gy[cx : gy.shape[0] - 1 + cx, :]],
                    axis=-1,
                )
                best = max(best, float(_row_dual_norm(J, spec).max()))
        return best
    return 0.0


def lipschitz_estimate(f: GridFunction, spec: NormSpec, seed: int = 0, far_pairs: int = 2000) -> float:
    """Lower bound on the Lipschitz constant of ``f`` w.r.t. the ``spec`` metric.

    Maximizes ||f(x)-f(y)||_{l_q} / ||x-y|| over all adjacent-lattice pairs
    (axis and diagonal) plus a seeded random sample of far pairs; for n <= 2
    the per-cell corner gradients of the interpolant are scanned as well,
    which makes the value exact for the piecewise-multilinear interpolant.
    Never decreases under grid refinement.
    """
    if spec.dim != f.dim:
        raise ValueError("norm/function dimension mismatch")
    best = 0.0
    steps = f.steps
    # all forward lattice offsets in {0,1}^n: axis neighbors plus diagonals
    # (diagonals matter: axis steps alone miss mixed-slope cells)
    offsets = [off for off in np.ndindex(*(2,) * f.dim) if any(off)]
    for off in offsets:
        shifted = f.values[tuple(slice(1, None) if o else slice(None) for o in off)]
        base = f.values[tuple(slice(None, -1) if o else slice(None) for o in off)]
        num = target_norm(shifted - base, f.q)
        den = float(norm_eval(spec, steps * np.array(off)))
        if den > 0:
            best = max(best, float(num.max()) / den)
    best = max(best, _gradient_sup(f, spec))
    # random far pairs catch large-scale violations that axis steps miss
    pts = f.lattice_points()
    vals = f.values.reshape(-1, f.m)
    rng = _task_rng(seed, 1)
    k = min(far_pairs, len(pts) * (len(pts) - 1) // 2)
    if k > 0:
        i = rng.integers(0, len(pts), size=k)
        j = rng.integers(0, len(pts), size=k)
        mask = i != j
        i, j = i[mask], j[mask]
        num = target_norm(vals[i] - vals[j], f.q)
        den = norm_eval(spec, pts[i] - pts[j])
        ok = den > 0
        if ok.any():
            best = max(best, float((num[ok] / den[ok]).max()))
    return best
