"""Global feature extraction and the amortized predictor."""

import numpy as np
import pytest

from lorlut import (
    FEATURE_DIM,
    FitConfig,
    LossWeights,
    apply_lut,
    extract_global_features,
    fit_image_pair,
    identity_lut,
    init_predictor,
    predictor_forward,
    train_amortized,
)
from lorlut.amortized import _split_outputs, predictor_grads
from lorlut.lowrank import compose_lut
from lorlut.optim import _loss_and_grads


def test_feature_vector_length():
    img = np.random.default_rng(0).random((12, 16, 3))
    feats = extract_global_features(img)
    assert feats.shape == (FEATURE_DIM,)
    assert FEATURE_DIM == 3 * 32 + 3 + 3 + 3


def test_features_of_constant_gray():
    img = np.full((10, 10, 3), 0.5)
    feats = extract_global_features(img)
    hists = feats[:96].reshape(3, 32)
    for ch in range(3):
        assert hists[ch, 16] == 1.0
        assert hists[ch].sum() == pytest.approx(1.0)
    means, stds, corrs = feats[96:99], feats[99:102], feats[102:105]
    np.testing.assert_allclose(means, 0.5)
    np.testing.assert_allclose(stds, 0.0)
    np.testing.assert_allclose(corrs, 0.0)


def test_feature_histograms_sum_to_one():
    rng = np.random.default_rng(1)
    img = rng.random((7, 9, 3))
    feats = extract_global_features(img)
    hists = feats[:96].reshape(3, 32)
    np.testing.assert_allclose(hists.sum(axis=1), 1.0, atol=1e-12)


def test_feature_correlations_of_identical_channels():
    rng = np.random.default_rng(2)
    plane = rng.random((8, 8))
    img = np.stack([plane, plane, plane], axis=-1)
    feats = extract_global_features(img)
    np.testing.assert_allclose(feats[102:105], 1.0, atol=1e-12)


def test_untrained_predictor_emits_identity_lut():
    config = FitConfig(rank=4, num_bases=0, grid_size=9)
    rng = np.random.default_rng(3)
    weights = init_predictor(config, hidden=16, rng=rng)
    img = rng.random((10, 10, 3))
    model = predictor_forward(weights, img)
    lut = compose_lut(model)
    np.testing.assert_allclose(lut, identity_lut(9), atol=1e-15)


def test_split_outputs_roundtrip_order():
    grid, rank, num_bases = 4, 2, 3
    out_dim = num_bases + rank * (3 * grid + 3)
    out = np.arange(out_dim, dtype=np.float64)
    alphas, factors = _split_outputs(out, grid, rank, num_bases)
    np.testing.assert_array_equal(alphas, [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(factors.us[0], [3.0, 4.0, 5.0, 6.0])
    np.testing.assert_array_equal(factors.vs[0], [11.0, 12.0, 13.0, 14.0])
    np.testing.assert_array_equal(factors.ws[0], [19.0, 20.0, 21.0, 22.0])
    np.testing.assert_array_equal(factors.cs[1], [30.0, 31.0, 32.0])


def test_predictor_gradients_match_finite_differences():
    config = FitConfig(
        rank=1, num_bases=0, grid_size=3, weights=LossWeights(l1=1.0, tv=1e-3, l2=1e-3)
    )
    rng = np.random.default_rng(4)
    weights = init_predictor(config, hidden=4, rng=rng)
    # Give the head nonzero values so the hidden layer sees gradient flow.
    weights.w2 += rng.normal(0.0, 0.05, weights.w2.shape)
    weights.b2 += rng.normal(0.0, 0.01, weights.b2.shape)
    pair = (rng.random((6, 6, 3)), rng.random((6, 6, 3)))

    def loss_at():
        model = predictor_forward(weights, pair[0])
        total, _, _ = _loss_and_grads(pair[0], pair[1], model, config.weights)
        return total

    _, grads = predictor_grads(weights, pair, config, bases=None)
    step = 1e-5
    checked = 0
    for name in ("w1", "b1", "w2", "b2"):
        arr = getattr(weights, name)
        garr = grads[name]
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = arr[idx]
            arr[idx] = old + step
            up = loss_at()
            arr[idx] = old - step
            down = loss_at()
            arr[idx] = old
            fd = (up - down) / (2.0 * step)
            if abs(fd) > 5e-7:
                rel = abs(garr[idx] - fd) / max(abs(fd), abs(garr[idx]))
                assert rel < 1e-4, f"{name}{idx}: {garr[idx]} vs {fd}"
                checked += 1
    assert checked > 50


def test_training_on_repeated_pair_approaches_direct_fit():
    rng = np.random.default_rng(5)
    img = rng.random((16, 16, 3))
    target = np.clip(img**1.4, 0.0, 1.0)
    config = FitConfig(
        steps=300,
        base_lr=1e-2,
        rank=2,
        grid_size=5,
        rng_seed=0,
        weights=LossWeights(l1=1.0, tv=1e-6, l2=1e-6),
    )
    _, direct_report = fit_image_pair(img, target, config)

    weights, trace = train_amortized([(img, target), (img, target)], config, hidden=16)
    model = predictor_forward(weights, img)
    pred = apply_lut(compose_lut(model), img)
    direct_l1 = 10.0 ** (-direct_report.psnr / 20.0)
    amortized_rmse = float(np.sqrt(np.mean((pred - target) ** 2)))
    assert amortized_rmse < max(10.0 * direct_l1, 0.05)
    assert trace[-1] < trace[0]


def test_training_is_deterministic():
    rng = np.random.default_rng(6)
    pairs = [
        (rng.random((8, 8, 3)), rng.random((8, 8, 3))),
        (rng.random((8, 8, 3)), rng.random((8, 8, 3))),
    ]
    config = FitConfig(steps=20, rank=1, grid_size=3, rng_seed=9)
    w1, t1 = train_amortized(pairs, config, hidden=8)
    w2, t2 = train_amortized(pairs, config, hidden=8)
    assert t1 == t2
    np.testing.assert_array_equal(w1.w1, w2.w1)
    np.testing.assert_array_equal(w1.w2, w2.w2)


def test_training_requires_two_pairs():
    img = np.zeros((4, 4, 3))
    config = FitConfig(steps=5, rank=1, grid_size=3)
    with pytest.raises(ValueError):
        train_amortized([(img, img)], config)


def test_predictor_with_bases_sets_alpha_weights():
    config = FitConfig(rank=0, num_bases=2, grid_size=5)
    rng = np.random.default_rng(7)
    weights = init_predictor(config, hidden=8, rng=rng)
    weights.b2[:] = [0.25, 0.75]
    bases = [identity_lut(5), np.clip(identity_lut(5) * 0.5, 0.0, 1.0)]
    img = rng.random((6, 6, 3))
    model = predictor_forward(weights, img, bases=bases)
    np.testing.assert_allclose(model.alphas, [0.25, 0.75])
    assert model.num_bases == 2
