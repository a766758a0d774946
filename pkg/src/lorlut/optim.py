"""Per-image fitting: analytic gradients, AdamW, and the training loop.

Gradients flow from the image loss into the composed LUT by scattering each
pixel's upstream gradient onto its eight enclosing lattice vertices, then from
the lattice into the fusion weights and the separable factors through the
rank-1 structure.  Only trilinear interpolation is differentiated; the
tetrahedral path is evaluation-only.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .color import delta_e00, mean_delta_e00, psnr, srgb_to_lab, ssim
from .losses import LossWeights, loss_total, tv_grad
from .lowrank import CpFactors, LorLutModel, reconstruct_residual
from .luts import apply_lut, sample_trilinear, splat_trilinear

_SCHEDULES = ("cosine", "constant")

# Step for the central-difference gradient of the optional CIEDE2000 term.
_DE00_FD_STEP = 1e-4


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters of a per-image fit.

    Defaults are desk scale: a couple thousand full-batch steps at a learning
    rate high enough to converge on a single image pair.
    """

    steps: int = 2000
    base_lr: float = 5e-3
    schedule: str = "cosine"
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0
    weights: LossWeights = field(default_factory=LossWeights)
    rank: int = 8
    num_bases: int = 0
    grid_size: int = 33
    rng_seed: int = 0
    log_every: int = 50

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not (np.isfinite(self.base_lr) and self.base_lr > 0.0):
            raise ValueError("base_lr must be positive")
        if self.schedule not in _SCHEDULES:
            raise ValueError(f"schedule must be one of {_SCHEDULES}")
        b1, b2 = self.betas
        if not (0.0 < b1 < 1.0 and 0.0 < b2 < 1.0):
            raise ValueError("betas must lie in (0, 1)")
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be non-negative")
        if self.rank < 0 or self.num_bases < 0:
            raise ValueError("rank and num_bases must be non-negative")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


@dataclass
class Gradients:
    """Gradient of the objective with respect to the trainable set."""

    alphas: np.ndarray
    us: np.ndarray
    vs: np.ndarray
    ws: np.ndarray
    cs: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "alphas": self.alphas,
            "us": self.us,
            "vs": self.vs,
            "ws": self.ws,
            "cs": self.cs,
        }


@dataclass
class FitReport:
    """Loss trace and final quality metrics of one fit."""

    steps: int
    duration_s: float
    logged_steps: list[int]
    loss_trace: list[float]
    term_traces: dict[str, list[float]]
    smoothed_trace: list[float]
    final_loss: float
    psnr: float
    ssim: float | None
    mean_de00: float

    def as_json_dict(self) -> dict:
        return {
            "steps": self.steps,
            "duration_s": self.duration_s,
            "logged_steps": list(self.logged_steps),
            "loss_trace": list(self.loss_trace),
            "term_traces": {k: list(v) for k, v in self.term_traces.items()},
            "smoothed_trace": list(self.smoothed_trace),
            "final_loss": self.final_loss,
            "psnr": self.psnr,
            "ssim": self.ssim,
            "mean_de00": self.mean_de00,
        }


def _check_image(img: np.ndarray, name: str) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError(f"non-finite values in {name}")
    return img


def _delta_e00_pixel_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Central-difference gradient of mean_delta_e00 with respect to pred.

    CIEDE2000 is differentiated numerically per pixel and channel; the sRGB
    conversion clamps to [0, 1], so components outside the gamut see a
    flattened (possibly zero) slope.
    """
    lab_target = srgb_to_lab(target)
    n_px = pred.shape[0] * pred.shape[1]
    grad = np.zeros_like(pred)
    for ch in range(3):
        shift = np.zeros_like(pred)
        shift[..., ch] = _DE00_FD_STEP
        de_plus = delta_e00(srgb_to_lab(pred + shift), lab_target)
        de_minus = delta_e00(srgb_to_lab(pred - shift), lab_target)
        grad[..., ch] = (de_plus - de_minus) / (2.0 * _DE00_FD_STEP * n_px)
    return grad


def _loss_and_grads(
    input_img: np.ndarray,
    target: np.ndarray,
    model: LorLutModel,
    weights: LossWeights,
) -> tuple[float, dict[str, float], Gradients]:
    base = model.base_lut()
    residual = reconstruct_residual(model.factors)
    lut_star = base + residual
    if not np.all(np.isfinite(lut_star)):
        # Diverged parameters; report an infinite loss so the caller can stop
        # with the step number instead of tripping input validation below.
        zero = model.factors.rank == 0
        grads = Gradients(
            alphas=np.zeros(len(model.bases)),
            us=np.zeros((0, model.grid_size)) if zero else np.zeros_like(model.factors.us),
            vs=np.zeros((0, model.grid_size)) if zero else np.zeros_like(model.factors.vs),
            ws=np.zeros((0, model.grid_size)) if zero else np.zeros_like(model.factors.ws),
            cs=np.zeros((0, 3)) if zero else np.zeros_like(model.factors.cs),
        )
        return math.inf, {"total": math.inf}, grads
    pred = sample_trilinear(lut_star, input_img)

    total, breakdown = loss_total(pred, target, lut_star, residual, weights)

    # Upstream gradient at each pixel, then its trilinear scatter to L*.
    d_pred = weights.l1 * np.sign(pred - target) / pred.size
    if weights.delta_e > 0.0:
        d_pred = d_pred + weights.delta_e * _delta_e00_pixel_grad(pred, target)
    g_star = splat_trilinear(model.grid_size, input_img, d_pred)
    g_star += weights.tv * tv_grad(lut_star)

    if model.bases:
        d_alphas = np.tensordot(np.stack(model.bases), g_star, axes=4)
    else:
        d_alphas = np.zeros(0)

    g_res = g_star + 2.0 * weights.l2 * residual
    f = model.factors
    if f.rank > 0:
        d_us = np.einsum("ijkc,rc,rj,rk->ri", g_res, f.cs, f.vs, f.ws, optimize=True)
        d_vs = np.einsum("ijkc,rc,ri,rk->rj", g_res, f.cs, f.us, f.ws, optimize=True)
        d_ws = np.einsum("ijkc,rc,ri,rj->rk", g_res, f.cs, f.us, f.vs, optimize=True)
        d_cs = np.einsum("ijkc,ri,rj,rk->rc", g_res, f.us, f.vs, f.ws, optimize=True)
    else:
        g = model.grid_size
        d_us = np.zeros((0, g))
        d_vs = np.zeros((0, g))
        d_ws = np.zeros((0, g))
        d_cs = np.zeros((0, 3))

    grads = Gradients(alphas=d_alphas, us=d_us, vs=d_vs, ws=d_ws, cs=d_cs)
    return total, breakdown, grads


def backward(
    input_img: np.ndarray,
    target: np.ndarray,
    model: LorLutModel,
    weights: LossWeights,
) -> Gradients:
    """Analytic gradient of the objective with respect to alphas and factors."""
    input_img = _check_image(input_img, "input image")
    target = _check_image(target, "target image")
    if input_img.shape != target.shape:
        raise ValueError("input and target dimensions differ")
    _, _, grads = _loss_and_grads(input_img, target, model, weights)
    return grads


def learning_rate_at(config: FitConfig, step: int) -> float:
    """Per-step learning rate; the cosine schedule decays to 0 at the last step."""
    if config.schedule == "constant":
        return config.base_lr
    return config.base_lr * 0.5 * (1.0 + math.cos(math.pi * step / config.steps))


def init_adamw_state(params: dict[str, np.ndarray]) -> dict[str, dict[str, np.ndarray]]:
    return {
        "m": {k: np.zeros_like(v) for k, v in params.items()},
        "v": {k: np.zeros_like(v) for k, v in params.items()},
    }


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: dict[str, dict[str, np.ndarray]],
    step: int,
    config: FitConfig,
) -> tuple[dict[str, np.ndarray], dict[str, dict[str, np.ndarray]]]:
    """One AdamW update (decoupled weight decay, bias-corrected moments).

    Mutates params and state in place and returns them; ``step`` is 1-based.
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    b1, b2 = config.betas
    lr = learning_rate_at(config, step)
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape mismatch for {key}")
        m = state["m"][key]
        v = state["v"][key]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**step)
        v_hat = v / (1.0 - b2**step)
        p -= lr * (m_hat / (np.sqrt(v_hat) + config.eps) + config.weight_decay * p)
    return params, state


def init_factors(config: FitConfig, rng: np.random.Generator) -> CpFactors:
    """Identity-preserving start: random axis curves, zero color coefficients.

    The zero coefficients make the initial residual exactly zero while still
    letting every factor receive a nonzero gradient at the first step.
    """
    g, r = config.grid_size, config.rank
    scale = 1.0 / math.sqrt(g)
    return CpFactors(
        us=rng.normal(0.0, scale, (r, g)),
        vs=rng.normal(0.0, scale, (r, g)),
        ws=rng.normal(0.0, scale, (r, g)),
        cs=np.zeros((r, 3)),
    )


def fit_image_pair(
    input_img: np.ndarray,
    target: np.ndarray,
    config: FitConfig,
    bases: list[np.ndarray] | None = None,
) -> tuple[LorLutModel, FitReport]:
    """Fit fusion weights and residual factors to map input_img onto target.

    Deterministic for a fixed seed and config.  With bases the fusion weights
    start at 1/K; without them the base is the identity LUT.  A non-finite
    loss aborts with the offending step in the message.
    """
    input_img = _check_image(input_img, "input image")
    target = _check_image(target, "target image")
    if input_img.shape != target.shape:
        raise ValueError("input and target dimensions differ")
    bases = list(bases) if bases is not None else []
    if len(bases) != config.num_bases:
        raise ValueError(f"config expects {config.num_bases} bases, got {len(bases)}")

    rng = np.random.default_rng(config.rng_seed)
    factors = init_factors(config, rng)
    k = config.num_bases
    alphas = np.full(k, 1.0 / k) if k else np.zeros(0)
    params = {
        "alphas": alphas,
        "us": factors.us,
        "vs": factors.vs,
        "ws": factors.ws,
        "cs": factors.cs,
    }
    state = init_adamw_state(params)

    logged_steps: list[int] = []
    loss_trace: list[float] = []
    term_traces: dict[str, list[float]] = {"l1": [], "delta_e": [], "tv": [], "l2": []}
    started = time.perf_counter()

    model = _model_from_params(config, params, bases)
    for step in range(1, config.steps + 1):
        total, breakdown, grads = _loss_and_grads(input_img, target, model, config.weights)
        if not np.isfinite(total):
            raise RuntimeError(f"non-finite loss {total!r} at step {step}")
        if step % config.log_every == 0 or step == config.steps:
            logged_steps.append(step)
            loss_trace.append(total)
            for key in term_traces:
                term_traces[key].append(breakdown[key])
        adamw_step(params, grads.as_dict(), state, step, config)
        model = _model_from_params(config, params, bases)

    duration = time.perf_counter() - started
    final_pred = apply_lut_model(model, input_img)
    h, w = input_img.shape[:2]
    report = FitReport(
        steps=config.steps,
        duration_s=duration,
        logged_steps=logged_steps,
        loss_trace=loss_trace,
        term_traces=term_traces,
        smoothed_trace=list(np.minimum.accumulate(loss_trace)),
        final_loss=loss_trace[-1],
        psnr=psnr(final_pred, np.clip(target, 0.0, 1.0)),
        ssim=ssim(final_pred, np.clip(target, 0.0, 1.0)) if min(h, w) >= 11 else None,
        mean_de00=mean_delta_e00(final_pred, target),
    )
    return model, report


def _model_from_params(
    config: FitConfig, params: dict[str, np.ndarray], bases: list[np.ndarray]
) -> LorLutModel:
    return LorLutModel(
        grid_size=config.grid_size,
        factors=CpFactors(
            us=params["us"], vs=params["vs"], ws=params["ws"], cs=params["cs"]
        ),
        bases=bases,
        alphas=params["alphas"],
    )


def apply_lut_model(
    model: LorLutModel,
    image: np.ndarray,
    scales: np.ndarray | None = None,
    kind: str = "trilinear",
) -> np.ndarray:
    """Compose the model at the given scales and run the image through it."""
    from .lowrank import compose_lut

    return apply_lut(compose_lut(model, scales), image, kind=kind)
