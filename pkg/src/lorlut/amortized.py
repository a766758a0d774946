"""Amortized prediction: global image features to fusion weights and factors.

A training-free 105-dimensional descriptor (per-channel histograms and first
and second order statistics) feeds a one-hidden-layer network whose output is
split into the trainable set of a model.  An untrained predictor emits the
identity model: zero color coefficients cancel the random axis curves held in
the head bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lowrank import CpFactors, LorLutModel
from .optim import (
    FitConfig,
    _check_image,
    _loss_and_grads,
    adamw_step,
    init_adamw_state,
)

_HIST_BINS = 32
FEATURE_DIM = 3 * _HIST_BINS + 9


def extract_global_features(img: np.ndarray) -> np.ndarray:
    """105-vector: 32-bin histograms per channel, means, stds, correlations.

    Histograms are normalized to sum to 1; correlations of a zero-variance
    channel are defined as 0.
    """
    img = _check_image(img, "image")
    if img.shape[0] * img.shape[1] == 0:
        raise ValueError("empty image")
    flat = np.clip(img, 0.0, 1.0).reshape(-1, 3)
    n = flat.shape[0]

    parts = []
    for ch in range(3):
        counts, _ = np.histogram(flat[:, ch], bins=_HIST_BINS, range=(0.0, 1.0))
        parts.append(counts / n)
    means = flat.mean(axis=0)
    stds = flat.std(axis=0)
    parts.append(means)
    parts.append(stds)
    corrs = np.zeros(3)
    centered = flat - means
    for idx, (a, b) in enumerate(((0, 1), (0, 2), (1, 2))):
        denom = stds[a] * stds[b]
        if denom > 0.0:
            corrs[idx] = np.mean(centered[:, a] * centered[:, b]) / denom
    parts.append(corrs)
    return np.concatenate(parts)


@dataclass
class PredictorWeights:
    """One-hidden-layer map from features to (alphas, factors)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    grid_size: int
    rank: int
    num_bases: int

    def __post_init__(self) -> None:
        hidden = self.w1.shape[0]
        out_dim = self.num_bases + self.rank * (3 * self.grid_size + 3)
        if self.w1.shape != (hidden, FEATURE_DIM) or self.b1.shape != (hidden,):
            raise ValueError("hidden layer shape mismatch")
        if self.w2.shape != (out_dim, hidden) or self.b2.shape != (out_dim,):
            raise ValueError("output head shape mismatch")

    def as_params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


def init_predictor(
    config: FitConfig, hidden: int, rng: np.random.Generator
) -> PredictorWeights:
    """Identity-emitting start that still admits gradient flow.

    The head matrix is zero and the bias carries random axis curves with zero
    color coefficients, mirroring the per-image factor start: the predicted
    residual is exactly zero, yet the coefficient rows see a nonzero gradient
    at the first step.  All-zero outputs would be a saddle with no gradient at
    all, since every factor gradient is a product of the other factors.
    """
    k, g, r = config.num_bases, config.grid_size, config.rank
    out_dim = k + r * (3 * g + 3)
    b2 = np.zeros(out_dim)
    if k:
        b2[:k] = 1.0 / k
    b2[k : k + 3 * r * g] = rng.normal(0.0, 1.0 / np.sqrt(g), 3 * r * g)
    return PredictorWeights(
        w1=rng.normal(0.0, 1.0 / np.sqrt(FEATURE_DIM), (hidden, FEATURE_DIM)),
        b1=np.zeros(hidden),
        w2=np.zeros((out_dim, hidden)),
        b2=b2,
        grid_size=config.grid_size,
        rank=config.rank,
        num_bases=config.num_bases,
    )


def _split_outputs(
    out: np.ndarray, grid_size: int, rank: int, num_bases: int
) -> tuple[np.ndarray, CpFactors]:
    k, g, r = num_bases, grid_size, rank
    alphas = out[:k]
    rest = out[k:]
    us = rest[: r * g].reshape(r, g)
    vs = rest[r * g : 2 * r * g].reshape(r, g)
    ws = rest[2 * r * g : 3 * r * g].reshape(r, g)
    cs = rest[3 * r * g :].reshape(r, 3)
    return alphas, CpFactors(us=us, vs=vs, ws=ws, cs=cs)


def predictor_forward(
    weights: PredictorWeights,
    img: np.ndarray,
    bases: list[np.ndarray] | None = None,
) -> LorLutModel:
    """Predict a model for one image."""
    features = extract_global_features(img)
    h = np.tanh(weights.w1 @ features + weights.b1)
    out = weights.w2 @ h + weights.b2
    alphas, factors = _split_outputs(out, weights.grid_size, weights.rank, weights.num_bases)
    return LorLutModel(
        grid_size=weights.grid_size,
        factors=factors,
        bases=list(bases) if bases else [],
        alphas=alphas,
    )


def predictor_grads(
    weights: PredictorWeights,
    pair: tuple[np.ndarray, np.ndarray],
    config: FitConfig,
    bases: list[np.ndarray] | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and weight gradients on one pair, chained through the model."""
    input_img, target = pair
    features = extract_global_features(input_img)
    pre = weights.w1 @ features + weights.b1
    h = np.tanh(pre)
    out = weights.w2 @ h + weights.b2
    alphas, factors = _split_outputs(out, weights.grid_size, weights.rank, weights.num_bases)
    model = LorLutModel(
        grid_size=weights.grid_size,
        factors=factors,
        bases=list(bases) if bases else [],
        alphas=alphas,
    )
    total, _, grads = _loss_and_grads(input_img, target, model, config.weights)

    g_out = np.concatenate(
        [
            grads.alphas,
            grads.us.ravel(),
            grads.vs.ravel(),
            grads.ws.ravel(),
            grads.cs.ravel(),
        ]
    )
    g_h = weights.w2.T @ g_out
    g_pre = g_h * (1.0 - h * h)
    return total, {
        "w1": np.outer(g_pre, features),
        "b1": g_pre,
        "w2": np.outer(g_out, h),
        "b2": g_out,
    }


def train_amortized(
    pairs: list[tuple[np.ndarray, np.ndarray]],
    config: FitConfig,
    hidden: int = 32,
    bases: list[np.ndarray] | None = None,
) -> tuple[PredictorWeights, list[float]]:
    """Train the predictor on (input, target) pairs, full batch per step.

    Deterministic for a fixed seed; returns the weights and the per-step mean
    loss trace.
    """
    if len(pairs) < 2:
        raise ValueError("need at least 2 training pairs")
    pairs = [
        (_check_image(a, "input image"), _check_image(b, "target image"))
        for a, b in pairs
    ]
    for a, b in pairs:
        if a.shape != b.shape:
            raise ValueError("input and target dimensions differ")
    bases = list(bases) if bases is not None else []
    if len(bases) != config.num_bases:
        raise ValueError(f"config expects {config.num_bases} bases, got {len(bases)}")

    rng = np.random.default_rng(config.rng_seed)
    weights = init_predictor(config, hidden, rng)
    params = weights.as_params()
    state = init_adamw_state(params)

    trace: list[float] = []
    for step in range(1, config.steps + 1):
        mean_loss = 0.0
        mean_grads = {k: np.zeros_like(v) for k, v in params.items()}
        for pair in pairs:
            loss, grads = predictor_grads(weights, pair, config, bases)
            mean_loss += loss / len(pairs)
            for key in mean_grads:
                mean_grads[key] += grads[key] / len(pairs)
        if not np.isfinite(mean_loss):
            raise RuntimeError(f"non-finite loss {mean_loss!r} at step {step}")
        trace.append(mean_loss)
        adamw_step(params, mean_grads, state, step, config)
    return weights, trace
