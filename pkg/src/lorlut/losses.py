"""Training objective: weighted reconstruction, smoothness, and magnitude terms.

The active terms are a mean-L1 image loss, an optional mean CIEDE2000 loss,
a squared adjacent-difference smoothness penalty on the composed LUT, and a
squared-magnitude penalty on the residual tensor.  The perceptual weight slot
exists for interface parity but is pinned to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .color import mean_delta_e00
from .luts import validate_lut


@dataclass(frozen=True)
class LossWeights:
    """Non-negative term weights (l1, perceptual, delta_e, tv, l2).

    ``perceptual`` must stay 0: the corresponding network-based term is not
    implemented, the field only keeps the weight vector five wide.
    """

    l1: float = 1.0
    perceptual: float = 0.0
    delta_e: float = 0.0
    tv: float = 1e-3
    l2: float = 1e-3

    def __post_init__(self) -> None:
        values = (self.l1, self.perceptual, self.delta_e, self.tv, self.l2)
        if not all(np.isfinite(v) and v >= 0.0 for v in values):
            raise ValueError(f"loss weights must be finite and non-negative: {values}")
        if self.perceptual != 0.0:
            raise ValueError("perceptual loss is not implemented; its weight must be 0")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.l1, self.perceptual, self.delta_e, self.tv, self.l2)


def tv_loss(lut: np.ndarray) -> float:
    """Sum of squared differences between adjacent lattice entries, all 3 axes."""
    lut = validate_lut(lut)
    total = 0.0
    for axis in range(3):
        diff = np.diff(lut, axis=axis)
        total += float(np.sum(diff * diff))
    return total


def tv_grad(lut: np.ndarray) -> np.ndarray:
    """Gradient of tv_loss with respect to every lattice entry."""
    lut = validate_lut(lut)
    grad = np.zeros_like(lut)
    for axis in range(3):
        diff = np.diff(lut, axis=axis)
        lo = [slice(None)] * 4
        hi = [slice(None)] * 4
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        grad[tuple(hi)] += 2.0 * diff
        grad[tuple(lo)] -= 2.0 * diff
    return grad


def l2_residual(residual: np.ndarray) -> float:
    """Sum of squared residual entries over all lattice cells and channels."""
    residual = np.asarray(residual, dtype=np.float64)
    if not np.all(np.isfinite(residual)):
        raise ValueError("non-finite residual entries")
    return float(np.sum(residual * residual))


def loss_total(
    pred: np.ndarray,
    target: np.ndarray,
    lut: np.ndarray,
    residual: np.ndarray,
    weights: LossWeights,
) -> tuple[float, dict[str, float]]:
    """Evaluate the objective; returns (total, per-term breakdown).

    The breakdown holds the raw term values; the total composes them with the
    weights exactly, so callers can reweight offline without re-evaluating.
    The delta_e term is only computed when its weight is positive.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"prediction shape {pred.shape} != target shape {target.shape}")

    term_l1 = float(np.mean(np.abs(pred - target)))
    term_de = mean_delta_e00(pred, target) if weights.delta_e > 0.0 else 0.0
    term_tv = tv_loss(lut)
    term_l2 = l2_residual(residual)
    total = (
        weights.l1 * term_l1
        + weights.delta_e * term_de
        + weights.tv * term_tv
        + weights.l2 * term_l2
    )
    breakdown = {
        "l1": term_l1,
        "delta_e": term_de,
        "tv": term_tv,
        "l2": term_l2,
        "total": total,
    }
    return total, breakdown
