"""Separable residual reconstruction, composition, and parameter bookkeeping."""

import numpy as np
import pytest

from lorlut import (
    CpFactors,
    LorLutModel,
    component_curves,
    component_magnitude,
    compose_lut,
    dense_param_count,
    identity_lut,
    reconstruct_residual,
    residual_param_count,
    total_param_count,
)


def loop_reconstruct(factors: CpFactors, scales=None) -> np.ndarray:
    g, r = factors.grid_size, factors.rank
    scales = np.ones(r) if scales is None else np.asarray(scales)
    out = np.zeros((g, g, g, 3))
    for rr in range(r):
        for i in range(g):
            for j in range(g):
                for k in range(g):
                    for ch in range(3):
                        out[i, j, k, ch] += (
                            scales[rr]
                            * factors.cs[rr, ch]
                            * factors.us[rr, i]
                            * factors.vs[rr, j]
                            * factors.ws[rr, k]
                        )
    return out


def random_factors(rng, rank, grid):
    return CpFactors(
        us=rng.normal(size=(rank, grid)),
        vs=rng.normal(size=(rank, grid)),
        ws=rng.normal(size=(rank, grid)),
        cs=rng.normal(size=(rank, 3)),
    )


def test_reconstruct_matches_nested_loops():
    rng = np.random.default_rng(0)
    for _ in range(12):
        g = int(rng.integers(2, 7))
        r = int(rng.integers(1, 5))
        factors = random_factors(rng, r, g)
        got = reconstruct_residual(factors)
        want = loop_reconstruct(factors)
        assert np.abs(got - want).max() <= 1e-12


def test_reconstruct_zero_rank_is_zero():
    factors = CpFactors.zeros(0, 5)
    np.testing.assert_array_equal(reconstruct_residual(factors), np.zeros((5, 5, 5, 3)))


def test_reconstruct_scales_components_independently():
    rng = np.random.default_rng(1)
    factors = random_factors(rng, 3, 4)
    scales = np.array([0.5, -2.0, 0.0])
    got = reconstruct_residual(factors, scales)
    want = loop_reconstruct(factors, scales)
    assert np.abs(got - want).max() <= 1e-12


def test_reconstruct_rejects_wrong_scale_count():
    factors = CpFactors.zeros(2, 4)
    with pytest.raises(ValueError):
        reconstruct_residual(factors, np.ones(3))


def test_compose_identity_model_is_identity():
    model = LorLutModel.identity(9, rank=4)
    np.testing.assert_array_equal(compose_lut(model), identity_lut(9))


def test_compose_adds_scaled_residual_to_fused_base():
    rng = np.random.default_rng(2)
    g = 4
    bases = [rng.random((g, g, g, 3)) for _ in range(2)]
    alphas = np.array([0.7, 0.3])
    factors = random_factors(rng, 2, g)
    model = LorLutModel(grid_size=g, factors=factors, bases=bases, alphas=alphas)
    scales = np.array([1.5, -0.5])
    want = 0.7 * bases[0] + 0.3 * bases[1] + loop_reconstruct(factors, scales)
    np.testing.assert_allclose(compose_lut(model, scales), want, atol=1e-12)


def test_model_validates_shapes():
    factors = CpFactors.zeros(2, 5)
    with pytest.raises(ValueError):
        LorLutModel(grid_size=4, factors=factors)
    with pytest.raises(ValueError):
        LorLutModel(
            grid_size=5, factors=factors, bases=[identity_lut(5)], alphas=np.zeros(0)
        )
    with pytest.raises(ValueError):
        LorLutModel(
            grid_size=5, factors=factors, bases=[identity_lut(4)], alphas=np.ones(1)
        )


def test_factors_validate_shapes_and_values():
    with pytest.raises(ValueError):
        CpFactors(us=np.zeros((2, 4)), vs=np.zeros((2, 5)), ws=np.zeros((2, 4)), cs=np.zeros((2, 3)))
    with pytest.raises(ValueError):
        CpFactors(us=np.zeros((2, 4)), vs=np.zeros((2, 4)), ws=np.zeros((2, 4)), cs=np.zeros((2, 2)))
    bad = np.zeros((1, 4))
    bad[0, 0] = np.inf
    with pytest.raises(ValueError):
        CpFactors(us=bad, vs=np.zeros((1, 4)), ws=np.zeros((1, 4)), cs=np.zeros((1, 3)))


def test_residual_param_count_formula():
    assert residual_param_count(33, 8) == 816
    assert dense_param_count(33) == 107811
    for g in (2, 9, 17, 33):
        for r in (0, 1, 5, 32):
            assert residual_param_count(g, r) == 3 * g * r + 3 * r
    with pytest.raises(ValueError):
        residual_param_count(1, 2)


def test_total_param_count_closed_form():
    for k in (0, 1, 8):
        for r in (0, 4, 8, 32):
            got = total_param_count(33, k, r)
            assert got.total == 10176 + 3366 * r + 107844 * k
            assert got.total == got.weight_predictor + got.residual_predictor + got.basis_luts


def test_total_param_count_rounds_to_reported_millions():
    table = [
        (0, 4, 0.024),
        (0, 8, 0.037),
        (0, 32, 0.118),
        (8, 32, 0.98),
        (8, 0, 0.87),
    ]
    for k, r, want in table:
        millions = total_param_count(33, k, r).total / 1e6
        decimals = len(str(want).split(".")[1])
        assert round(millions, decimals) == want


def test_component_curves_and_magnitude():
    rng = np.random.default_rng(3)
    factors = random_factors(rng, 3, 6)
    curves = component_curves(factors, 1)
    np.testing.assert_array_equal(curves["u"], factors.us[1])
    np.testing.assert_array_equal(curves["c"], factors.cs[1])
    want = (
        np.linalg.norm(factors.cs[1])
        * np.linalg.norm(factors.us[1])
        * np.linalg.norm(factors.vs[1])
        * np.linalg.norm(factors.ws[1])
    )
    assert curves["magnitude"] == pytest.approx(want, rel=1e-12)
    assert component_magnitude(factors, 1) == curves["magnitude"]
    with pytest.raises(IndexError):
        component_curves(factors, 3)
    with pytest.raises(IndexError):
        component_magnitude(factors, -1)
