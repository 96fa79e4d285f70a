"""Brute-force martingale estimates of Banach-space constants.

Everything runs on dyadic (binary-tree) martingales with values in R^m
under an l_q norm: the node at depth j is the exact average of its two
children, and expectations are exact uniform averages over the 2^k
leaves.  The unconditionality constant is estimated as the supremum of
the sign-transform ratio

    ( E || M_0 + sum_j eps_j (M_j - M_{j-1}) ||^p / E || M_k ||^p )^{1/p}

over explicit sign patterns and martingale families; all estimates are
lower-bound witnesses (the general supremum over filtrations is not
computable).  Sign patterns are enumerated exhaustively up to depth 14
and sampled with seeds beyond.

The explicit l_p construction ``riesz_product_martingale`` takes values
in the function space on the k-dimensional sign cube: the depth-j node of
the prefix epsilon is 2^j times the indicator of sign vectors agreeing
with that prefix (a truncated product of (1 + eps_l delta_l) factors),
represented in R^{2^k} with the counting-measure-normalized l_p norm
folded into the values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import target_norm

__all__ = [
    "DyadicMartingale",
    "ConstantEstimate",
    "umd_ratio",
    "beta_lower_bound",
    "riesz_product_martingale",
    "cotype_constant",
    "random_martingale",
    "nested_random_family",
]

MAX_ENUM_DEPTH = 14


@dataclass
class DyadicMartingale:
    """Values on a depth-k binary tree; ``levels[j]`` has shape (2^j, m)."""

    levels: list[np.ndarray]
    q: float = 2.0

    def __post_init__(self):
        self.levels = [np.atleast_2d(np.asarray(a, dtype=float)) for a in self.levels]
        for j, a in enumerate(self.levels):
            if a.shape[0] != 1 << j:
                raise ValueError(f"level {j} must hold 2^{j} nodes")
            if a.shape[1] != self.levels[0].shape[1]:
                raise ValueError("all levels must share the target dimension")

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def m(self) -> int:
        return self.levels[0].shape[1]

    def martingale_defect(self) -> float:
        """Max deviation of any node from the average of its children (0 exactly
        for a true martingale)."""
        worst = 0.0
        for j in range(self.depth):
            kids = self.levels[j + 1].reshape(-1, 2, self.m).mean(axis=1)
            worst = max(worst, float(np.abs(kids - self.levels[j]).max()))
        return worst

    @staticmethod
    def from_leaves(leaves: np.ndarray, q: float = 2.0) -> "DyadicMartingale":
        leaves = np.atleast_2d(np.asarray(leaves, dtype=float))
        k = int(np.log2(len(leaves)))
        if 1 << k != len(leaves):
            raise ValueError("leaf count must be a power of two")
        levels = [leaves]
        cur = leaves
        for _ in range(k):
            cur = cur.reshape(-1, 2, cur.shape[1]).mean(axis=1)
            levels.append(cur)
        return DyadicMartingale(levels[::-1], q=q)

    def zero_extend(self, extra: int, pad_to_m: int | None = None) -> "DyadicMartingale":
        """Deeper martingale with vanishing new differences (same ratios),
        optionally padded with zero target coordinates (isometric embedding)."""
        levels = [a.copy() for a in self.levels]
        for _ in range(extra):
            levels.append(np.repeat(levels[-1], 2, axis=0))
        if pad_to_m is not None and pad_to_m > self.m:
            pad = pad_to_m - self.m
            levels = [np.pad(a, ((0, 0), (0, pad))) for a in levels]
        return DyadicMartingale(levels, q=self.q)

    def leaf_differences(self) -> tuple[np.ndarray, np.ndarray]:
        """(M_0 broadcast over leaves, array of dM_j per leaf, shape (k, 2^k, m))."""
        k, m = self.depth, self.m
        leaves = 1 << k
        idx = np.arange(leaves)
        diffs = np.empty((k, leaves, m))
        for j in range(1, k + 1):
            cur = self.levels[j][idx >> (k - j)]
            prev = self.levels[j - 1][idx >> (k - j + 1)]
            diffs[j - 1] = cur - prev
        base = np.broadcast_to(self.levels[0], (leaves, m))
        return base, diffs


@dataclass
class ConstantEstimate:
    """A certified lower bound for a supremum-type constant, with witness."""

    kind: str
    value: float
    p_or_q: float
    depth: int
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "p_or_q": self.p_or_q,
            "value": self.value,
            "depth": self.depth,
            "witness": self.witness,
        }


def umd_ratio(mart: DyadicMartingale, signs, p: float) -> float:
    """Sign-transform ratio for one sign pattern, exact over the leaves."""
    signs = np.asarray(signs, dtype=float)
    if signs.shape != (mart.depth,):
        raise ValueError("need one sign per tree level")
    base, diffs = mart.leaf_differences()
    transformed = base + np.tensordot(signs, diffs, axes=(0, 0))
    num = float((target_norm(transformed, mart.q) ** p).mean())
    leaves_k = mart.levels[-1]
    den = float((target_norm(leaves_k, mart.q) ** p).mean())
    if den == 0:
        return 1.0
    return (num / den) ** (1.0 / p)


def _all_sign_patterns(k: int) -> np.ndarray:
    bits = (np.arange(1 << k)[:, None] >> np.arange(k)[None, :]) & 1
    return 2.0 * bits - 1.0


def _sup_over_signs(mart: DyadicMartingale, p: float, patterns: np.ndarray):
    base, diffs = mart.leaf_differences()
    den = float((target_norm(mart.levels[-1], mart.q) ** p).mean())
    if den == 0:
        return 1.0, np.ones(mart.depth)
    best_val, best_pat = -np.inf, None
    chunk = max(1, int(4e6) // max(diffs.shape[1] * mart.m, 1))
    for start in range(0, len(patterns), chunk):
        sl = patterns[start : start + chunk]
        transformed = base[None] + np.einsum("sj,jlm->slm", sl, diffs)
        nums = (target_norm(transformed, mart.q) ** p).mean(axis=1)
        i = int(nums.argmax())
        if nums[i] > best_val:
            best_val, best_pat = float(nums[i]), sl[i]
    return (best_val / den) ** (1.0 / p), best_pat


def beta_lower_bound(
    family: list[DyadicMartingale],
    p: float,
    sample_patterns: int = 4096,
    seed: int = 0,
) -> ConstantEstimate:
    """Supremum of the sign-transform ratio over the family and all sign
    patterns (exhaustive up to depth 14, seeded sampling beyond)."""
    best = ConstantEstimate("beta_p", 0.0, p, 0)
    for idx, mart in enumerate(family):
        k = mart.depth
        if k <= MAX_ENUM_DEPTH:
            patterns = _all_sign_patterns(k)
        else:
            rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, idx)))
            patterns = rng.choice([-1.0, 1.0], size=(sample_patterns, k))
        val, pat = _sup_over_signs(mart, p, patterns)
        if val > best.value:
            best = ConstantEstimate(
                "beta_p",
                float(val),
                p,
                k,
                witness={"martingale": idx, "signs": [int(s) for s in np.atleast_1d(pat)]},
            )
    return best


def riesz_product_martingale(k: int, p: float) -> DyadicMartingale:
    """The matching-prefix indicator martingale in L_p of the sign cube.

    Node (depth j, prefix e) is the vector over delta in {-1,1}^k equal to
    2^j on matching prefixes and 0 elsewhere.  Values carry the factor
    2^{-k/p} so that the plain l_p norm of a value vector equals its
    L_p norm under the uniform probability measure on the cube.
    """
    if k > 10:
        raise ValueError("k <= 10 (values live in R^{2^k})")
    if not p >= 1:
        raise ValueError("p must be >= 1")
    leaves = 1 << k
    scale = 2.0 ** (-k / p)
    levels = []
    for j in range(k + 1):
        nodes = np.zeros((1 << j, leaves))
        d = np.arange(leaves)
        anc = d >> (k - j)
        nodes[anc, d] = 2.0**j
        levels.append(scale * nodes)
    return DyadicMartingale(levels, q=p)


def cotype_constant(vectors, q_norm: float, q: float) -> ConstantEstimate:
    """(sum ||x_j||^q)^{1/q} / E || sum eps_j x_j || by exact sign enumeration.

    A lower-bound witness for the cotype-q constant of l_{q_norm}^m.
    """
    x = np.atleast_2d(np.asarray(vectors, dtype=float))
    N = len(x)
    if N > 16:
        raise ValueError("at most 16 vectors (2^N enumeration)")
    norms = target_norm(x, q_norm)
    if not norms.any():
        raise ValueError("all vectors vanish")
    lhs = float((norms**q).sum() ** (1.0 / q))
    signs = _all_sign_patterns(N)
    avg = float(target_norm(signs @ x, q_norm).mean())
    return ConstantEstimate(
        "cotype_q", lhs / avg, q, N, witness={"vectors": x.tolist(), "mean_norm": avg}
    )


def random_martingale(depth: int, m: int, q: float, seed: int) -> DyadicMartingale:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 5)))
    return DyadicMartingale.from_leaves(rng.normal(size=(1 << depth, m)), q=q)


def nested_random_family(
    depth: int, m: int, q: float, count: int, seed: int
) -> list[DyadicMartingale]:
    """Random martingales of the given depth, plus zero-split extensions of
    the same seeds at every smaller depth.  Using these families makes the
    beta estimate non-decreasing in depth by construction."""
    out = []
    for d in range(2, depth + 1):
        for c in range(count):
            base = random_martingale(d, m, q, seed * 1000 + c)
            out.append(base.zero_extend(depth - d))
    return out
