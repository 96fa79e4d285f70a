import numpy as np
import pytest

from affinescope.banach import (
    ConstantEstimate,
    DyadicMartingale,
    beta_lower_bound,
    cotype_constant,
    nested_random_family,
    random_martingale,
    riesz_product_martingale,
    umd_ratio,
)


def haar_martingale(leaves, q=2.0):
    return DyadicMartingale.from_leaves(np.asarray(leaves, float)[:, None], q=q)


# -- structure ---------------------------------------------------------------


def test_from_leaves_martingale_property():
    rng = np.random.default_rng(0)
    mart = DyadicMartingale.from_leaves(rng.normal(size=(16, 3)))
    assert mart.martingale_defect() == 0.0


def test_level_shape_validation():
    with pytest.raises(ValueError):
        DyadicMartingale([np.zeros((1, 2)), np.zeros((3, 2))])


def test_zero_extend_preserves_ratios():
    mart = haar_martingale([1.0, -2.0, 0.5, 3.0])
    ext = mart.zero_extend(2)
    assert ext.depth == 4
    assert ext.martingale_defect() == 0.0
    for signs in ([1, -1], [-1, 1]):
        long = list(signs) + [1, -1]
        assert umd_ratio(ext, long, 3) == pytest.approx(umd_ratio(mart, signs, 3), abs=1e-14)


# -- sign-transform ratio ----------------------------------------------------


def test_umd_ratio_all_plus_is_one():
    rng = np.random.default_rng(1)
    mart = DyadicMartingale.from_leaves(rng.normal(size=(32, 2)), q=1.5)
    assert umd_ratio(mart, np.ones(5), 3.0) == pytest.approx(1.0, abs=1e-14)


def test_umd_ratio_hilbert_p2_exact():
    rng = np.random.default_rng(2)
    mart = DyadicMartingale.from_leaves(rng.normal(size=(64, 3)), q=2.0)
    for trial in range(10):
        signs = rng.choice([-1.0, 1.0], size=6)
        assert umd_ratio(mart, signs, 2.0) == pytest.approx(1.0, abs=1e-12)


def test_umd_ratio_depth2_matches_leaf_enumeration():
    # direct 4-leaf computation with signs (+, -) at p = 4
    leaves = np.array([2.0, -1.0, 0.5, 1.5])
    mart = haar_martingale(leaves)
    l1 = mart.levels[1]
    d1 = np.repeat(l1[:, 0], 2) - mart.levels[0][0, 0]
    d2 = leaves - np.repeat(l1[:, 0], 2)
    transformed = mart.levels[0][0, 0] + 1.0 * d1 - 1.0 * d2
    oracle = ((np.abs(transformed) ** 4).mean() / (np.abs(leaves) ** 4).mean()) ** 0.25
    assert umd_ratio(mart, [1.0, -1.0], 4.0) == pytest.approx(oracle, rel=1e-14)


def test_umd_ratio_trivial_martingale():
    mart = haar_martingale([0.0, 0.0, 0.0, 0.0])
    assert umd_ratio(mart, [1, -1], 2.0) == 1.0


# -- beta lower bounds -------------------------------------------------------


def test_beta_hilbert_p2_is_one():
    fam = [random_martingale(d, 3, 2.0, seed=s) for d in (4, 5, 6) for s in (0, 1)]
    est = beta_lower_bound(fam, 2.0)
    assert est.value == pytest.approx(1.0, abs=1e-12)


def test_beta_scalar_p4_burkholder_ceiling_and_growth():
    prev = 0.0
    for depth in (4, 5, 6):
        fam = nested_random_family(depth, 1, 2.0, count=6, seed=3)
        est = beta_lower_bound(fam, 4.0)
        assert est.value <= max(4.0, 4.0 / 3.0) - 1.0 + 1e-9
        assert est.value >= prev - 1e-12
        prev = est.value
    assert prev > 1.0


def test_beta_witness_reevaluates():
    fam = nested_random_family(5, 1, 2.0, count=4, seed=9)
    est = beta_lower_bound(fam, 4.0)
    mart = fam[est.witness["martingale"]]
    again = umd_ratio(mart, np.array(est.witness["signs"], float), 4.0)
    assert again == pytest.approx(est.value, abs=1e-12)


def test_beta_l1_target_above_one():
    fam = [random_martingale(6, 3, 1.0, seed=s) for s in range(4)]
    est = beta_lower_bound(fam, 2.0)
    assert est.value > 1.0 + 1e-3


# -- the explicit l_p martingale ---------------------------------------------


def test_riesz_product_m0_is_unit():
    mart = riesz_product_martingale(5, 1.5)
    # empty product: constant 1, unit L_p(mu) norm
    vals = mart.levels[0][0]
    assert np.ptp(vals) == 0.0
    lp = (np.abs(vals) ** 1.5).sum() ** (1 / 1.5)
    assert lp == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("k", [2, 4, 6])
def test_riesz_product_norm_identity(k, p):
    mart = riesz_product_martingale(k, p)
    from affinescope.geometry import target_norm

    val = np.sqrt((target_norm(mart.levels[-1], mart.q) ** 2).mean())
    assert val == pytest.approx(2.0 ** (k * (p - 1) / p), rel=1e-12)


def test_riesz_product_martingale_property_k4_p3():
    assert riesz_product_martingale(4, 3.0).martingale_defect() == 0.0


def test_riesz_product_trend_in_depth():
    p = 1.5
    prev = 0.0
    for k in (2, 3, 4, 5):
        fam = [riesz_product_martingale(j, p).zero_extend(k - j, pad_to_m=1 << k)
               for j in range(2, k + 1)]
        est = beta_lower_bound(fam, p)
        assert est.value >= prev - 1e-12
        prev = est.value
    assert prev > 1.0


# -- cotype ------------------------------------------------------------------


def test_cotype_l2_basis():
    est = cotype_constant(np.eye(4), 2.0, 2.0)
    assert est.value == pytest.approx(1.0, rel=1e-12)


def test_cotype_single_vector():
    est = cotype_constant(np.array([[0.3, -2.0]]), 3.0, 2.0)
    assert est.value == pytest.approx(1.0, rel=1e-12)


def test_cotype_linf_basis_sqrt3():
    # E max_j |eps_j| = 1 exactly, so the ratio is sqrt(3)
    est = cotype_constant(np.eye(3), np.inf, 2.0)
    assert est.value == pytest.approx(np.sqrt(3.0), rel=1e-12)


def test_cotype_rejects_zero():
    with pytest.raises(ValueError):
        cotype_constant(np.zeros((3, 2)), 2.0, 2.0)


def test_estimate_json():
    est = ConstantEstimate("beta_p", 1.5, 2.0, 4, {"signs": [1, -1]})
    d = est.to_json()
    assert d["kind"] == "beta_p" and d["value"] == 1.5
