"""Objective terms: smoothness, residual magnitude, and the weighted total."""

import numpy as np
import pytest

from lorlut import LossWeights, identity_lut, l2_residual, loss_total, tv_loss
from lorlut.losses import tv_grad


def loop_tv(lut: np.ndarray) -> float:
    g = lut.shape[0]
    total = 0.0
    for i in range(g):
        for j in range(g):
            for k in range(g):
                for ch in range(3):
                    if i + 1 < g:
                        total += (lut[i + 1, j, k, ch] - lut[i, j, k, ch]) ** 2
                    if j + 1 < g:
                        total += (lut[i, j + 1, k, ch] - lut[i, j, k, ch]) ** 2
                    if k + 1 < g:
                        total += (lut[i, j, k + 1, ch] - lut[i, j, k, ch]) ** 2
    return total


def test_tv_constant_and_zero_luts():
    assert tv_loss(np.zeros((4, 4, 4, 3))) == 0.0
    assert tv_loss(np.full((4, 4, 4, 3), 0.7)) == 0.0


def test_tv_identity_closed_form():
    # Each axis contributes G^2 (G-1) steps of squared size 1/(G-1)^2 in one
    # channel, so the total is 3 G^2 / (G-1).
    assert abs(tv_loss(identity_lut(33)) - 102.09375) <= 1e-9
    for g in (2, 5, 17):
        want = 3.0 * g * g / (g - 1)
        assert abs(tv_loss(identity_lut(g)) - want) <= 1e-9


def test_tv_matches_loop_oracle():
    rng = np.random.default_rng(0)
    lut = rng.random((5, 5, 5, 3))
    assert abs(tv_loss(lut) - loop_tv(lut)) <= 1e-10


def test_tv_grad_matches_finite_differences():
    # Central differences are exact for a quadratic, up to roundoff.
    rng = np.random.default_rng(1)
    lut = rng.random((3, 3, 3, 3))
    grad = tv_grad(lut)
    h = 1e-6
    for idx in [(0, 0, 0, 0), (1, 2, 0, 1), (2, 2, 2, 2), (1, 1, 1, 0)]:
        up, down = lut.copy(), lut.copy()
        up[idx] += h
        down[idx] -= h
        fd = (tv_loss(up) - tv_loss(down)) / (2.0 * h)
        assert grad[idx] == pytest.approx(fd, rel=1e-6, abs=1e-10)


def test_l2_residual_closed_forms():
    assert l2_residual(np.zeros((4, 4, 4, 3))) == 0.0
    residual = np.zeros((33, 33, 33, 3))
    residual[..., 0] = 0.1
    assert abs(l2_residual(residual) - 0.01 * 33**3) <= 1e-9


def test_l2_residual_matches_loop():
    rng = np.random.default_rng(2)
    residual = rng.normal(size=(4, 4, 4, 3))
    want = sum(v * v for v in residual.ravel())
    assert abs(l2_residual(residual) - want) <= 1e-10


def test_loss_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(l1=-1.0)
    with pytest.raises(ValueError):
        LossWeights(perceptual=0.5)
    with pytest.raises(ValueError):
        LossWeights(tv=float("nan"))
    assert LossWeights().as_tuple() == (1.0, 0.0, 0.0, 1e-3, 1e-3)


def test_loss_total_zero_at_perfect_fit():
    img = np.random.default_rng(3).random((4, 4, 3))
    lut = np.full((3, 3, 3, 3), 0.5)
    total, breakdown = loss_total(img, img, lut, np.zeros_like(lut), LossWeights())
    assert total == 0.0
    assert breakdown["l1"] == 0.0
    assert breakdown["tv"] == 0.0
    assert breakdown["l2"] == 0.0


def test_loss_total_mean_l1():
    img = np.random.default_rng(4).random((5, 7, 3))
    pred = img + 0.1
    weights = LossWeights(l1=1.0, tv=0.0, l2=0.0)
    lut = identity_lut(3)
    total, _ = loss_total(pred, img, lut, np.zeros_like(lut), weights)
    assert total == pytest.approx(0.1, abs=1e-12)


def test_loss_total_composes_tv_oracle_value():
    img = np.random.default_rng(5).random((4, 4, 3))
    lut = identity_lut(33)
    total, _ = loss_total(img, img, lut, np.zeros_like(lut), LossWeights())
    assert abs(total - 0.10209375) <= 1e-9


def test_loss_total_breakdown_composes_bitwise():
    rng = np.random.default_rng(6)
    pred = rng.random((6, 6, 3))
    target = rng.random((6, 6, 3))
    lut = rng.random((4, 4, 4, 3))
    residual = rng.normal(0.0, 0.1, (4, 4, 4, 3))
    weights = LossWeights(l1=0.8, delta_e=0.25, tv=1e-3, l2=2e-3)
    total, b = loss_total(pred, target, lut, residual, weights)
    recomposed = (
        weights.l1 * b["l1"]
        + weights.delta_e * b["delta_e"]
        + weights.tv * b["tv"]
        + weights.l2 * b["l2"]
    )
    assert total == recomposed
    assert b["total"] == total


def test_loss_total_delta_e_term_only_when_weighted():
    rng = np.random.default_rng(7)
    pred = rng.random((4, 4, 3))
    target = rng.random((4, 4, 3))
    lut = identity_lut(3)
    _, without = loss_total(pred, target, lut, np.zeros_like(lut), LossWeights())
    assert without["delta_e"] == 0.0
    weights = LossWeights(delta_e=1.0)
    _, with_term = loss_total(pred, target, lut, np.zeros_like(lut), weights)
    assert with_term["delta_e"] > 0.0


def test_loss_total_rejects_dimension_mismatch():
    lut = identity_lut(3)
    with pytest.raises(ValueError):
        loss_total(
            np.zeros((4, 4, 3)), np.zeros((4, 5, 3)), lut, np.zeros_like(lut), LossWeights()
        )
