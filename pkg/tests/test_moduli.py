import numpy as np
import pytest

from affinescope.affine import affine_projection
from affinescope.geometry import Ball, NormSpec, from_callable, lipschitz_estimate, norm_eval
from affinescope.moduli import (
    FindBallParams,
    ModulusQuery,
    SawtoothSpec,
    TensorSpec,
    certify_upper_bound,
    cutoff_extend,
    find_affine_ball,
    lp_controls_sup,
    mixed_block_norm,
    sawtooth,
    sawtooth_grid,
    sawtooth_stack,
    search_modulus,
    tensor_stack,
    transfer_threshold,
)


def chebyshev_line_error(x, y):
    """Independent exact minimax-line oracle for scalar 1-D data:
    half the minimal vertical width of an enclosing slab."""
    from scipy.optimize import minimize_scalar

    def width(b):
        s = y - b * x
        return s.max() - s.min()

    res = minimize_scalar(width, bounds=(-5, 5), method="bounded", options={"xatol": 1e-14})
    return 0.5 * width(res.x)


# -- sawtooth ----------------------------------------------------------------


def test_sawtooth_values():
    assert sawtooth(0.0) == 0.0
    assert sawtooth(1.0) == 1.0
    assert sawtooth(0.5) == 0.5
    assert sawtooth(-3.0) == 1.0
    assert sawtooth(4.25) == 0.25


def test_sawtooth_stack_single_band():
    v = sawtooth_stack(SawtoothSpec(1, 2.0), [0.5])
    assert v.shape == (1, 1)
    assert v[0, 0] == pytest.approx(0.5)  # tent(1)/2


def test_sawtooth_stack_zero_at_even():
    for m, p in [(1, 2), (3, 2), (4, 1.5)]:
        assert np.abs(sawtooth_stack(SawtoothSpec(m, p), [0.0, 2.0, -4.0])).max() == 0.0


@pytest.mark.parametrize("m,p", [(2, 2.0), (3, 1.5)])
def test_sawtooth_stack_is_1_lipschitz(m, p):
    # brute-force pair scan on a dense grid
    x = np.linspace(-1, 1, 2**12 + 1)
    v = sawtooth_stack(SawtoothSpec(m, p), x)
    i = np.arange(0, len(x) - 1)
    num = (np.abs(v[i + 1] - v[i]) ** p).sum(axis=1) ** (1 / p)
    ratios = num / (x[1] - x[0])
    assert ratios.max() == pytest.approx(1.0, abs=1e-6)
    rng = np.random.default_rng(0)
    a, b = rng.integers(0, len(x), size=(2, 4000))
    keep = a != b
    far = (np.abs(v[a[keep]] - v[b[keep]]) ** p).sum(axis=1) ** (1 / p)
    assert (far / np.abs(x[a[keep]] - x[b[keep]])).max() <= 1.0 + 1e-9


def test_sawtooth_grid_metadata():
    g = sawtooth_grid(SawtoothSpec(2, 2.0))
    assert g.meta["lipschitz"] == 1.0
    assert g.q == 2.0
    x = np.array([[0.3], [0.7]])
    assert np.abs(g(x) - sawtooth_stack(SawtoothSpec(2, 2.0), x[:, 0])).max() < 1e-12


# -- tensor stack ------------------------------------------------------------


def test_tensor_reduces_to_sawtooth_n1():
    spec = TensorSpec(1, 0.5, 0.5, 2.0, m=3)
    x = np.linspace(-1, 1, 33)
    got = tensor_stack(spec, x[:, None])
    want = sawtooth_stack(SawtoothSpec(3, 2.0), x)
    assert np.abs(got - want).max() == 0.0


def test_tensor_second_block_scaling():
    # pick K/eps so the block scale is exactly 2
    eps = 0.5
    K = eps * np.log(2.0) ** (1 / 2.0)
    spec = TensorSpec(2, K, eps, 2.0, m=2)
    assert spec.scales[1] == pytest.approx(2.0, rel=1e-12)
    x = np.array([[0.3, 0.1]])
    got = tensor_stack(spec, x)
    inner = sawtooth_stack(SawtoothSpec(2, 2.0), np.array([0.2]))  # f(2 * 0.1) / 2
    assert np.abs(got[0, 2:] - inner[0] / 2.0).max() < 1e-12


def test_tensor_lipschitz_into_mixed_norm():
    eps = 0.5
    K = eps * np.log(2.0) ** (1 / 2.0)
    spec = TensorSpec(2, K, eps, 2.0, m=2)
    ax = np.linspace(-1, 1, 201)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    vals = tensor_stack(spec, pts)
    rng = np.random.default_rng(1)
    a, b = rng.integers(0, len(pts), size=(2, 20000))
    keep = a != b
    num = mixed_block_norm(vals[a[keep]] - vals[b[keep]], 2, 2.0)
    den = np.linalg.norm(pts[a[keep]] - pts[b[keep]], axis=1)
    assert (num / den).max() <= 1.0 + 1e-6


def test_tensor_overflow_guard():
    with pytest.raises(OverflowError):
        TensorSpec(30, 3.0, 0.1, 2.0)


# -- dyadic interval error table ---------------------------------------------


def test_certify_m1_baseline():
    # single band over [-1,1]: best sup fit of tent(2x)/2 is the constant 1/4
    table = certify_upper_bound(SawtoothSpec(1, 2.0), np.inf, 0)
    assert table["eta"] == pytest.approx(0.25, abs=1e-4)
    assert table["rows"] == []  # no qualifying interval at m=1


def test_certify_eta_matches_independent_oracle():
    x = np.linspace(-1, 1, 4097)
    oracle = chebyshev_line_error(x, sawtooth_stack(SawtoothSpec(1, 2.0), x)[:, 0])
    table = certify_upper_bound(SawtoothSpec(1, 2.0), np.inf, 0)
    assert table["eta"] == pytest.approx(oracle, abs=1e-6)


@pytest.mark.parametrize("q", [2.0, np.inf])
def test_certify_m3_no_violations(q):
    table = certify_upper_bound(SawtoothSpec(3, 2.0), q, 3)
    assert table["violations"] == 0
    assert all(r["level"] <= 1 for r in table["rows"])  # half-length >= 4/8


def test_certify_short_intervals_excluded():
    table = certify_upper_bound(SawtoothSpec(2, 2.0), 2.0, 4)
    assert {r["level"] for r in table["rows"]} == {0}


def test_certify_depth_precondition():
    with pytest.raises(ValueError):
        certify_upper_bound(SawtoothSpec(2, 2.0), 2.0, 5)


# -- modulus search ----------------------------------------------------------


def euclid_norm(n):
    return NormSpec("lp", n, p=2)


def test_search_affine_full_radius():
    f = from_callable(lambda p: 2 * p[:, 0] + 0.5, [-1.5], [1.5], 65)
    res = search_modulus(f, euclid_norm(1), ModulusQuery(0.1, 2, center_samples=4,
                                                         radius_levels=4, node_budget=256))
    assert res.witness is not None
    assert res.witness.ball.radius == 1.0
    assert res.witness.relative_error < 1e-8
    assert res.witness.linear_norm_ok


def test_search_sawtooth_large_radii_fail():
    g = sawtooth_grid(SawtoothSpec(2, 2.0), 513)
    # widen the box a touch so balls near the boundary stay inside
    q = ModulusQuery(0.05, np.inf, r_min=1 / 64, radius_levels=6,
                     center_samples=12, node_budget=1024, seed=2)
    res = search_modulus(g, euclid_norm(1), q)
    # oracle: on any interval of half-length 1/4, the second tooth alone keeps
    # every affine map at sup distance >= its own minimax error
    x = np.linspace(-0.25, 0.25, 2049)
    tooth2 = sawtooth_stack(SawtoothSpec(2, 2.0), x)[:, 1]
    floor = chebyshev_line_error(x, tooth2)
    assert floor > 0.05 * 0.25
    checked = {round(-np.log2(lv["radius"])): lv for lv in res.levels}
    for level, lv in checked.items():
        if lv["radius"] >= 0.25:
            assert lv["min_relative_error"] > 0.05
    if res.witness is not None:
        assert res.witness.ball.radius < 0.25


def test_search_radial_offcenter_witness():
    f = from_callable(lambda p: np.linalg.norm(p, axis=1), [-1.5, -1.5], [1.5, 1.5], 65)
    q = ModulusQuery(0.2, np.inf, r_min=1 / 32, radius_levels=5,
                     center_samples=16, node_budget=512, seed=3)
    res = search_modulus(f, euclid_norm(2), q)
    assert res.witness is not None
    assert norm_eval(euclid_norm(2), res.witness.ball.center) > 0.1
    # re-validate at doubled sampling density
    ball = res.witness.ball
    pts = ball.center + ball.radius * np.random.default_rng(9).normal(size=(8000, 2))
    pts = pts[np.linalg.norm(pts - ball.center, axis=1) <= ball.radius]
    resid = np.abs(f(pts) - res.witness.map(pts))[:, 0]
    assert resid.max() / (ball.radius * res.lipschitz) <= 0.2 * 1.01


def test_search_failures_respect_floor_table():
    # two-sided consistency: the interval floor table implies that below
    # eta * m^(-1/2) / 2 no witness can live at radii >= 8 * 2^(-m)
    # (any such ball contains a qualifying dyadic interval of half its size)
    m = 4
    table = certify_upper_bound(SawtoothSpec(m, 2.0), np.inf, 2)
    eta = table["eta"]
    eps = 0.05
    assert eps < eta * m**-0.5 / 2
    g = sawtooth_grid(SawtoothSpec(m, 2.0), 513)
    res = search_modulus(g, euclid_norm(1),
                         ModulusQuery(eps, np.inf, r_min=1 / 64, radius_levels=6,
                                      center_samples=16, node_budget=2048, seed=8))
    for lv in res.levels:
        if lv["radius"] >= 8 * 2.0**-m:
            assert lv["min_relative_error"] > eps
    if res.witness is not None:
        assert res.witness.ball.radius < 8 * 2.0**-m


def test_search_monotone_in_epsilon():
    g = sawtooth_grid(SawtoothSpec(2, 2.0), 513)
    radii = []
    for eps in (0.4, 0.2, 0.1):
        q = ModulusQuery(eps, 2, r_min=1 / 64, radius_levels=6,
                         center_samples=12, node_budget=512, seed=4)
        res = search_modulus(g, euclid_norm(1), q)
        radii.append(res.witness.ball.radius if res.witness else 0.0)
    assert radii[0] >= radii[1] >= radii[2]


def test_witness_json_schema():
    f = from_callable(lambda p: p[:, 0], [-1.5], [1.5], 33)
    res = search_modulus(f, euclid_norm(1), ModulusQuery(0.3, 2, center_samples=2,
                                                         radius_levels=2, node_budget=128))
    d = res.witness.to_json()
    assert set(d) == {"center", "radius", "norm", "intercept", "linear",
                      "relative_error", "linear_norm_ok"}


# -- L_p controls sup --------------------------------------------------------


def test_transfer_threshold_formula():
    assert transfer_threshold(0.9, 1, 2) == pytest.approx(0.1**1.5, rel=1e-12)
    assert transfer_threshold(0.9, 1, 2) == pytest.approx(0.0316227766, abs=1e-9)


def test_lp_controls_sup_affine_vacuous():
    f = from_callable(lambda p: p[:, 0] - 0.3, [-1.5], [1.5], 65)
    lam = affine_projection(f, [0.0], 1.0, 256)
    ball = Ball(np.zeros(1), 1.0, euclid_norm(1))
    assert lp_controls_sup(f, ball, lam, 0.5, 2, node_budget=256)


def test_lp_controls_sup_randomized_corpus():
    rng = np.random.default_rng(12)
    violations = 0
    for trial in range(50):
        n = 1 + trial % 2
        amp = 10.0 ** rng.uniform(-6, -1)
        A = rng.normal(size=(1, n))
        freq = rng.uniform(1, 4, size=n)

        def fn(pts, A=A, amp=amp, freq=freq):
            return pts @ A.T + amp * np.sin(pts @ freq)[:, None]

        f = from_callable(fn, [-1.5] * n, [1.5] * n, 65 if n == 1 else 33)
        lip = lipschitz_estimate(f, euclid_norm(n), seed=trial)
        f.values /= lip
        f._interp = None
        rho = float(rng.uniform(0.3, 1.0))
        center = rng.uniform(-0.2, 0.2, size=n)
        ball = Ball(center, rho, euclid_norm(n))
        lam = affine_projection(f, center, rho, 512)
        eps = float(rng.uniform(0.05, 0.9))
        ok = lp_controls_sup(f, ball, lam, eps, 2, node_budget=512, seed=trial)
        violations += 0 if ok else 1
    assert violations == 0


# -- cutoff extension --------------------------------------------------------


def test_cutoff_identity_and_support_regions():
    n = 2
    f = from_callable(lambda p: np.linalg.norm(p, axis=1), [-1.5, -1.5], [1.5, 1.5], 65)
    F = cutoff_extend(f, euclid_norm(n), resolution=81)
    pts = F.lattice_points()
    r = np.linalg.norm(pts, axis=1)
    vals = F(pts)[:, 0]
    inner = r <= 1 / np.sqrt(n) + 1e-12
    outer = r >= (1 + 1 / n) / np.sqrt(n)
    assert np.abs(vals[inner] - f(pts[inner])[:, 0]).max() < 1e-12  # f(0) = 0 here
    assert np.abs(vals[outer]).max() == 0.0


def test_cutoff_lipschitz_growth_n1():
    f = from_callable(lambda p: p[:, 0], [-1.5], [1.5], 129)
    F = cutoff_extend(f, euclid_norm(1), resolution=2049)
    x = F.lattice_points()[:, 0]
    v = F.values[:, 0]
    d = np.abs(np.diff(v)) / np.diff(x)
    assert d.max() <= 4.0 * 1.0**1.5 + 1e-9


# -- constructive pipeline ---------------------------------------------------


def test_find_ball_affine_input():
    f = from_callable(lambda p: 1.5 * p[:, 0], [-1.5], [1.5], 65)
    wit = find_affine_ball(f, euclid_norm(1), 0.2, 2,
                           FindBallParams(node_budget=256, extension_resolution=257))
    assert wit.meta["reached_epsilon"]
    assert wit.relative_error < 1e-6
    assert wit.meta["contained"]


def test_find_ball_validates_and_agrees_with_search():
    g = sawtooth_grid(SawtoothSpec(3, 2.0), 513)
    eps, p = 0.05, 2
    wit = find_affine_ball(g, euclid_norm(1), eps, p,
                           FindBallParams(u_levels=6, centers_per_u=48, sub_centers=16,
                                          node_budget=1024, extension_resolution=1025, seed=5))
    assert wit.meta["contained"]
    assert wit.linear_norm_ok
    assert abs(wit.relative_error - wit.meta["validated_error"]) <= 0.01 * max(wit.relative_error, 1e-9) + 5e-4
    res = search_modulus(g, euclid_norm(1),
                         ModulusQuery(eps, p, r_min=1 / 512, radius_levels=10,
                                      center_samples=12, node_budget=1024, seed=6))
    assert res.witness is not None
    lvl_pipe = np.log2(wit.ball.radius)
    lvl_search = np.log2(res.witness.ball.radius)
    assert abs(lvl_pipe - lvl_search) <= 1.0 + 1e-9


def test_find_ball_radial_2d():
    f = from_callable(lambda p: np.linalg.norm(p, axis=1), [-1.5, -1.5], [1.5, 1.5], 65)
    wit = find_affine_ball(f, euclid_norm(2), 0.25, 2,
                           FindBallParams(u_levels=4, centers_per_u=24, sub_centers=24,
                                          node_budget=512, extension_resolution=129, seed=7))
    assert wit.meta["contained"]
    assert wit.relative_error <= 0.25 + 1e-9
    assert abs(wit.relative_error - wit.meta["validated_error"]) <= 0.01 + 5e-3
