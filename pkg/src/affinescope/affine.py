"""Degree-1 projection operators on balls and best-affine-fit oracles.

Three objects are computed over a Euclidean ball ``x + u B^n``:

* ``ball_mean``: the average of f over the ball,
* ``moment_linear_map``: the linear map whose matrix is
  ``(n+2)/u * (1/V_n) int <z, .> f(x + u z) dz`` (the first-moment linear
  part; its operator norm never exceeds the Lipschitz constant of f),
* ``affine_projection``: mean plus first-moment part, which is the
  orthogonal projection of f onto affine maps in L_2 of the ball.

Independently of these, :func:`best_affine_fit` minimizes the L_p error
over all affine maps on a ball of any supported norm (least squares at
p = 2, iteratively reweighted least squares for other finite p, and a
subgradient/minimax path for p = inf).  The projection operators and the
fit oracle deliberately do not share a code path so each can be used to
check the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .geometry import Ball, GridFunction, NormSpec, norm_eval, sample_ball, target_norm
from .quadrature import DEFAULT_NODE_BUDGET, ball_rule, dense_ball_cover

__all__ = [
    "AffineMap",
    "FitReport",
    "ball_mean",
    "moment_linear_map",
    "affine_projection",
    "best_affine_fit",
    "op_norm",
    "projection_vs_best_ratio",
    "lp_operator_ratio",
    "fit_nodes",
]


@dataclass
class AffineMap:
    """z -> intercept + linear @ z, with intercept in R^m and linear m x n."""

    intercept: np.ndarray
    linear: np.ndarray

    def __post_init__(self):
        self.intercept = np.atleast_1d(np.asarray(self.intercept, dtype=float))
        self.linear = np.atleast_2d(np.asarray(self.linear, dtype=float))
        if not (np.all(np.isfinite(self.intercept)) and np.all(np.isfinite(self.linear))):
            raise ValueError("affine map entries must be finite")

    @property
    def m(self) -> int:
        return len(self.intercept)

    @property
    def n(self) -> int:
        return self.linear.shape[1]

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return pts @ self.linear.T + self.intercept

    def precompose_dilation(self, lam: float) -> "AffineMap":
        """The affine map z -> self(lam * z)."""
        return AffineMap(self.intercept.copy(), lam * self.linear)

    def to_json(self) -> dict:
        return {"intercept": self.intercept.tolist(), "linear": self.linear.tolist()}

    @staticmethod
    def from_json(d: dict) -> "AffineMap":
        return AffineMap(np.asarray(d["intercept"]), np.asarray(d["linear"]))


@dataclass
class FitReport:
    map: AffineMap
    p: float
    error: float
    iterations: int
    gap: float

    def to_json(self) -> dict:
        return {
            "p": "inf" if np.isinf(self.p) else self.p,
            "error": self.error,
            "intercept": self.map.intercept.tolist(),
            "linear": self.map.linear.tolist(),
            "iterations": self.iterations,
            "gap": self.gap,
        }


# ---------------------------------------------------------------------------
# projection operators on Euclidean balls
# ---------------------------------------------------------------------------


def _ball_values(f: GridFunction, center, u: float, nodes: np.ndarray) -> np.ndarray:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    pts = center + u * nodes
    return f(pts)


def ball_mean(f: GridFunction, center, u: float, node_budget: int = DEFAULT_NODE_BUDGET) -> np.ndarray:
    """Mean of f over the Euclidean ball center + u B^n (fixed quadrature)."""
    rule = ball_rule(f.dim, node_budget)
    return rule.average(_ball_values(f, center, u, rule.nodes))


def moment_linear_map(
    f: GridFunction, center, u: float, node_budget: int = DEFAULT_NODE_BUDGET
) -> np.ndarray:
    """Matrix of the first-moment linear map of f on center + u B^n.

    Returns the m x n matrix T with T w = (n+2)/(V_n u) int_{B^n} <z, w>
    f(center + u z) dz.  For affine f this recovers the linear part exactly
    because the quadrature has exact moments of degree <= 2.
    """
    rule = ball_rule(f.dim, node_budget)
    vals = _ball_values(f, center, u, rule.nodes)
    n = f.dim
    return (n + 2) / u * np.einsum("i,ij,ia->aj", rule.weights, rule.nodes, vals)


def affine_projection(
    f: GridFunction, center, u: float, node_budget: int = DEFAULT_NODE_BUDGET
) -> AffineMap:
    """L_2(ball)-orthogonal projection of f onto affine maps, in absolute coordinates."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    mean = ball_mean(f, center, u, node_budget)
    T = moment_linear_map(f, center, u, node_budget)
    return AffineMap(mean - T @ center, T)


# ---------------------------------------------------------------------------
# best affine fit
# ---------------------------------------------------------------------------


def fit_nodes(
    ball: Ball, p: float, node_budget: int = DEFAULT_NODE_BUDGET, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluation points and normalized weights for an L_p fit over ``ball``.

    Finite p on Euclidean/ellipsoid balls maps the exact-moment rule onto
    the ball; other l_p balls use seeded rejection sampling.  p = inf uses a
    dense near-uniform cover (sup estimation wants coverage, not moments).
    """
    spec = ball.norm
    n = spec.dim
    euclid_like = spec.kind == "ellipsoid" or (spec.kind == "lp" and spec.p == 2)
    if euclid_like:
        if np.isinf(p):
            base = dense_ball_cover(n, node_budget)
            w = np.full(len(base), 1.0 / len(base))
        else:
            rule = ball_rule(n, node_budget)
            base, w = rule.nodes, rule.weights
        r = ball.radius / spec.scale
        if spec.kind == "ellipsoid":
            pts = ball.center + r * np.linalg.solve(spec.matrix, base.T).T
        else:
            pts = ball.center + r * base
        return pts, w
    count = node_budget if not np.isinf(p) else 2 * node_budget
    pts = sample_ball(ball, count, seed)
    return pts, np.full(len(pts), 1.0 / len(pts))


def _lp_error(resid: np.ndarray, weights: np.ndarray, p: float, q: float) -> float:
    mags = target_norm(resid, q)
    if np.isinf(p):
        return float(mags.max())
    return float((weights * mags**p).sum() ** (1.0 / p))


def _design(pts: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((len(pts), 1)), pts])


def _solve_ls(phi: np.ndarray, vals: np.ndarray, row_w: np.ndarray) -> np.ndarray:
    sw = np.sqrt(row_w)[:, None]
    coef, *_ = np.linalg.lstsq(sw * phi, sw * vals, rcond=None)
    return coef  # (n+1, m)


def _irls(phi, vals, weights, p, q, delta, max_iter=200, rtol=1e-8):
    """Iteratively reweighted LS for min sum_i w_i ||f_i - Lambda(x_i)||_q^p."""
    coef = _solve_ls(phi, vals, weights)
    best = coef.copy()
    err = _lp_error(vals - phi @ coef, weights, p, q)
    best_err, gap, it = err, np.inf, 0
    for it in range(1, max_iter + 1):
        resid = vals - phi @ coef
        mags = np.maximum(target_norm(resid, q), delta)
        new = np.empty_like(coef)
        if np.isinf(q):
            # weight rides on the max coordinate of each residual
            hot = np.abs(resid).argmax(axis=1)
            for a in range(vals.shape[1]):
                wa = weights * mags ** (p - 2) * (np.where(hot == a, 1.0, 1e-8))
                new[:, a] = _solve_ls(phi, vals[:, a : a + 1], wa)[:, 0]
        elif q == 2:
            w = weights * mags ** (p - 2)
            new = _solve_ls(phi, vals, w)
        else:
            cm = np.maximum(np.abs(resid), delta)
            for a in range(vals.shape[1]):
                wa = weights * mags ** (p - q) * cm[:, a] ** (q - 2)
                new[:, a] = _solve_ls(phi, vals[:, a : a + 1], wa)[:, 0]
        coef = 0.5 * (coef + new)  # damping stabilizes p < 2 and q != 2
        err_new = _lp_error(vals - phi @ coef, weights, p, q)
        gap = abs(err - err_new) / max(err, 1e-300)
        err = err_new
        if err < best_err:
            best_err, best = err, coef.copy()
        if gap < rtol:
            break
    return best, best_err, it, gap


def _subgrad_q(r: np.ndarray, q: float) -> np.ndarray:
    nrm = target_norm(r, q)
    if nrm == 0:
        return np.zeros_like(r)
    if np.isinf(q):
        g = np.zeros_like(r)
        a = np.abs(r).argmax()
        g[a] = np.sign(r[a])
        return g
    if q == 1:
        return np.sign(r)
    return np.sign(r) * (np.abs(r) / nrm) ** (q - 1.0)


def _lawson(phi, vals, q, coef0, iters=80):
    """Lawson's iteration toward the minimax fit: weighted least squares with
    weights repeatedly tilted by the residual magnitudes."""
    w = np.full(len(phi), 1.0 / len(phi))
    best, best_val = coef0.copy(), float(target_norm(vals - phi @ coef0, q).max())
    coef = coef0
    for _ in range(iters):
        coef = _solve_ls(phi, vals, w)
        mags = target_norm(vals - phi @ coef, q)
        val = float(mags.max())
        if val < best_val:
            best_val, best = val, coef.copy()
        w = w * np.maximum(mags, 1e-300)
        total = w.sum()
        if total <= 0 or not np.isfinite(total):
            break
        w /= total
    return best, best_val


def _minimax(phi, vals, q, coef0, iters=400):
    """Subgradient descent on max_i ||f_i - Lambda(x_i)||_q."""
    coef = coef0.copy()
    best, best_val = coef.copy(), np.inf

    def maxres(c):
        return float(target_norm(vals - phi @ c, q).max())

    val = maxres(coef)
    if val < best_val:
        best_val, best = val, coef.copy()
    for k in range(iters):
        resid = vals - phi @ coef
        i = int(target_norm(resid, q).argmax())
        g = -np.outer(phi[i], _subgrad_q(resid[i], q))  # gradient of the active term
        gn2 = (g * g).sum()
        if gn2 == 0:
            break
        step = 0.3 * (val - 0.995 * best_val + 1e-15) / gn2
        coef = coef - step * g
        val = maxres(coef)
        if val < best_val:
            best_val, best = val, coef.copy()
    return best, best_val


def _chebyshev_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Exact minimax affine fit of scalar data y over 1-D sites x.

    Minimizes the width of an enclosing slab max(y - b x) - min(y - b x),
    a convex piecewise-linear function of the slope b.
    """

    def width(b):
        s = y - b * x
        return s.max() - s.min()

    span = (y.max() - y.min()) / max(x.max() - x.min(), 1e-300)
    scale = max(abs(span), 1.0)
    res = minimize_scalar(width, bounds=(-4 * scale, 4 * scale), method="bounded",
                          options={"xatol": 1e-14})
    b = float(res.x)
    s = y - b * x
    a = 0.5 * float(s.max() + s.min())
    return a, b, 0.5 * float(s.max() - s.min())


def best_affine_fit(
    f: GridFunction,
    ball: Ball,
    p: float,
    node_budget: int = DEFAULT_NODE_BUDGET,
    seed: int = 0,
) -> FitReport:
    """Best affine L_p(ball) approximation of f, normalized ball measure.

    p = 2 is exact weighted least squares over the quadrature nodes; finite
    p != 2 runs IRLS from the least-squares start with a residual floor of
    1e-10 times the data range; p = inf runs subgradient descent on the max
    residual from the least-squares start with a final polish (exact slab
    width minimization for scalar 1-D data, Nelder-Mead otherwise).  The
    affine projection is always evaluated as a competitor, so the reported
    error never exceeds the projection error.
    """
    pts, weights = fit_nodes(ball, p, node_budget, seed)
    vals = f(pts)
    phi = _design(pts)
    q = f.q
    delta = 1e-10 * max(np.ptp(vals), 1.0)

    coef_ls = _solve_ls(phi, vals, weights)
    candidates = [coef_ls]
    iters, gap = 0, 0.0

    if np.isinf(p):
        # optimize on a strided subset (sup estimation keeps the full set for
        # the final error); stride-of-2^k subsets keep dyadic kinks covered
        stride = max(1, len(pts) // 1024)
        sub = slice(None, None, stride)
        coef_lw, _ = _lawson(phi[sub], vals[sub], q, coef_ls)
        candidates.append(coef_lw)
        coef_sg, _ = _minimax(phi[sub], vals[sub], q, coef_lw, iters=150)
        candidates.append(coef_sg)
        if f.dim == 1 and f.m == 1:
            # exact polish: minimal enclosing slab over the sites
            a, b, _ = _chebyshev_line(pts[:, 0], vals[:, 0])
            candidates.append(np.array([[a], [b]]))
        else:
            flat0 = coef_sg.ravel()
            res = minimize(
                lambda c: float(target_norm(vals[sub] - phi[sub] @ c.reshape(coef_sg.shape), q).max()),
                flat0,
                method="Nelder-Mead",
                options={"maxiter": 40 * flat0.size, "fatol": 1e-11, "xatol": 1e-11},
            )
            candidates.append(res.x.reshape(coef_sg.shape))
            iters = int(res.nit)
    elif p != 2 or q != 2:
        coef_ir, _, iters, gap = _irls(phi, vals, weights, p, q, delta)
        candidates.append(coef_ir)

    errs = [_lp_error(vals - phi @ c, weights, p, q) for c in candidates]
    k = int(np.argmin(errs))
    coef = candidates[k]
    return FitReport(
        map=AffineMap(coef[0], coef[1:].T),
        p=p,
        error=errs[k],
        iterations=iters,
        gap=gap,
    )


# ---------------------------------------------------------------------------
# operator norms
# ---------------------------------------------------------------------------


def op_norm(
    linear: np.ndarray | AffineMap,
    domain: NormSpec,
    target: tuple[int, float],
    samples: int = 4096,
    seed: int = 0,
    info: dict | None = None,
) -> float:
    """Norm of the linear part as an operator (R^n, domain) -> l_q^m.

    Exact via singular values for Euclidean-to-Euclidean (and ellipsoid
    domains, which reduce to it), exact via extreme points for l_1 and
    small-dimension l_inf domains; otherwise a certified lower bound from
    seeded sphere sampling plus local ascent, with the sampling density
    recorded in ``info``.
    """
    T = linear.linear if isinstance(linear, AffineMap) else np.atleast_2d(np.asarray(linear, float))
    m, q = target
    if T.shape[0] != m:
        raise ValueError("target dimension mismatch")
    n = domain.dim
    if T.shape[1] != n:
        raise ValueError("domain dimension mismatch")
    s = domain.scale

    if domain.kind == "ellipsoid":
        # reduce to a Euclidean domain: the unit sphere of ||A.||_2 is A^{-1} S
        T = np.linalg.solve(domain.matrix.T, T.T).T
        domain = NormSpec("lp", n, p=2.0, scale=domain.scale)
    domain_p = domain.p

    if domain_p == 2 and q == 2:
        if info is not None:
            info.update(method="svd")
        return float(np.linalg.svd(T, compute_uv=False)[0]) / s
    if domain_p == 1:
        if info is not None:
            info.update(method="l1-vertices")
        return float(target_norm(T.T, q).max()) / s
    if np.isinf(domain_p) and n <= 16:
        signs = np.array(
            [[1.0 if (k >> j) & 1 else -1.0 for j in range(n)] for k in range(1 << (n - 1))]
        )
        if info is not None:
            info.update(method="linf-vertices")
        return float(target_norm(signs @ T.T, q).max()) / s

    rng = np.random.default_rng(seed)
    d = rng.normal(size=(samples, n))
    x = d / norm_eval(domain, d)[:, None]
    vals = target_norm(x @ T.T, q)
    order = np.argsort(vals)[::-1][:8]
    best = float(vals[order[0]])
    # local ascent from the top sampled directions
    for idx in order:
        w = x[idx].copy()
        step = 0.1
        cur = float(target_norm(T @ w, q))
        for _ in range(200):
            g_dir = rng.normal(size=n)
            cand = w + step * g_dir
            cand /= float(norm_eval(domain, cand))
            v = float(target_norm(T @ cand, q))
            if v > cur:
                w, cur = cand, v
            else:
                step *= 0.7
                if step < 1e-9:
                    break
        best = max(best, cur)
    if info is not None:
        info.update(method="sphere-sampling", samples=samples)
    return best


def lp_operator_ratio(
    values: np.ndarray, q: float, p: float, rule=None, n: int | None = None
) -> float:
    """Ratio ||T_1 g||_{L_p(B^n)} / ||g||_{L_p(B^n)} on the node measure.

    ``values`` are samples of g at the unit-ball rule nodes.  The output
    function w -> T_1 g(w) is evaluated at the same nodes, so the ratio is
    exactly the discrete-measure operator ratio used in the quasi-optimality
    chain.
    """
    if rule is None:
        if n is None:
            raise ValueError("pass rule or n")
        rule = ball_rule(n)
    n = rule.dim
    T = (n + 2) * np.einsum("i,ij,ia->aj", rule.weights, rule.nodes, values)
    out = rule.nodes @ T.T
    num = _lp_error(out, rule.weights, p, q)
    den = _lp_error(values, rule.weights, p, q)
    if den == 0:
        return 0.0 if num == 0 else np.inf
    return num / den


def projection_vs_best_ratio(
    f: GridFunction,
    ball: Ball,
    p: float,
    node_budget: int = DEFAULT_NODE_BUDGET,
    tol: float = 1e-9,
) -> float:
    """||f - P^1 f||_{L_p(ball)} / best affine L_p error on a Euclidean ball.

    Conventions: 1 if both vanish (affine input), inf if only the
    denominator vanishes.
    """
    spec = ball.norm
    if not (spec.kind == "lp" and spec.p == 2):
        raise ValueError("projection ratio is defined over Euclidean balls")
    u = ball.radius / spec.scale
    proj = affine_projection(f, ball.center, u, node_budget)
    pts, w = fit_nodes(ball, p, node_budget)
    resid = f(pts) - proj(pts)
    num = _lp_error(resid, w, p, f.q)
    den = best_affine_fit(f, ball, p, node_budget).error
    scale = max(float(np.abs(f.values).max()), 1.0)
    if den <= tol * scale:
        return 1.0 if num <= tol * scale else np.inf
    return num / den
